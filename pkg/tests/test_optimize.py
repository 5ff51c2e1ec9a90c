import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ecsbell.coherent import EcsSpec, build_ecs_state
from ecsbell.decoherence import clock_from_r
from ecsbell.errors import OptimizationError, ValidationError
from ecsbell.measures import cv_objective, damped_ecs, objective_for, qubit_displaced_objective
from ecsbell.optimize import (
    SearchConfig, SettingsLayout, _pick_best, grid_maximize, maximize, seed_points, sweep,
)

TARGET = np.array([0.3, -0.2, 0.7, 0.1])


def bowl(settings):
    s = np.asarray(settings)
    params = np.stack([s.real, s.imag], axis=-1).reshape(s.shape[:-1] + (8,))
    full = np.array([0.3, 0.0, -0.2, 0.0, 0.7, 0.0, 0.1, 0.0])
    return -np.sum((params - full) ** 2, axis=-1)


def test_config_validation():
    with pytest.raises(ValidationError):
        SearchConfig(axis_mode="diagonal")
    with pytest.raises(ValidationError):
        SearchConfig(starts=0)
    with pytest.raises(ValidationError):
        SearchConfig(convergence_tol=0)
    assert SearchConfig().to_dict()["starts"] == 64


def test_layout_mapping():
    lay = SettingsLayout("full", symmetric=False)
    assert lay.n_params == 8
    s = lay.to_settings(np.arange(8.0))
    assert_allclose(s, [0 + 1j, 2 + 3j, 4 + 5j, 6 + 7j])
    lay = SettingsLayout("imag", symmetric=True)
    assert lay.n_params == 2
    assert_allclose(lay.to_settings([0.1, 0.3]), [0.1j, -0.1j, 0.3j, -0.3j])
    lay = SettingsLayout("real", symmetric=False, pin_origin=True)
    assert lay.n_params == 2
    assert_allclose(lay.to_settings([[0.2, 0.4]]), [[0, 0, 0.2, 0.4]])


def test_quadratic_bowl():
    cfg = SearchConfig(axis_mode="real", symmetry_constraint=False, starts=4)
    rep = maximize(bowl, cfg)
    assert rep.best_value >= -cfg.convergence_tol
    assert_allclose(rep.best_params, TARGET, atol=1e-6)
    assert rep.starts_converged == 4


def test_best_dominates_seeds_and_reevaluates():
    obj = cv_objective(build_ecs_state(EcsSpec.minus(1.0)))
    cfg = SearchConfig(axis_mode="imag", starts=16, max_iterations=300)
    rep = maximize(obj, cfg)
    assert rep.best_value >= rep.start_values.max()
    assert abs(float(obj(rep.best_settings)) - rep.best_value) <= 1e-12
    assert rep.objective_evaluations > 16


def test_determinism():
    obj = cv_objective(build_ecs_state(EcsSpec.plus(0.8)))
    cfg = SearchConfig(axis_mode="full", starts=8, rng_seed=42, max_iterations=200)
    a, b = maximize(obj, cfg), maximize(obj, cfg)
    assert a.best_value == b.best_value
    assert_array_equal(a.best_params, b.best_params)
    assert a.objective_evaluations == b.objective_evaluations
    c = maximize(obj, SearchConfig(axis_mode="full", starts=8, rng_seed=43, max_iterations=200))
    assert not np.array_equal(seed_points(cfg, 8), seed_points(SearchConfig(rng_seed=43, starts=8), 8))
    assert c.best_value == pytest.approx(a.best_value, abs=1e-3)


def test_vectorized_and_scalar_paths_agree():
    obj = cv_objective(build_ecs_state(EcsSpec.minus(1.0)))
    cfg = SearchConfig(axis_mode="imag", starts=4, max_iterations=50)
    a = maximize(obj, cfg)
    b = maximize(lambda s: obj(s), cfg, vectorized=False)
    assert_allclose(a.best_value, b.best_value, atol=1e-14)


def test_nonfinite_objective_reports_settings():
    def bad(settings):
        v = np.real(np.asarray(settings)[..., 2]).copy()
        v[v > 0.5] = np.nan
        return -(v - 2) ** 2

    with pytest.raises(OptimizationError) as err:
        maximize(bad, SearchConfig(axis_mode="real", symmetry_constraint=False, starts=8))
    assert err.value.settings is not None
    assert np.real(err.value.settings[2]) > 0.5


def test_tie_break_lowest_norm():
    values = np.array([1.0, 1.0 - 1e-13, 0.5])
    params = np.array([[2.0, 0], [0.1, 0], [0, 0]])
    assert _pick_best(values, params) == 1


def test_warm_start_included():
    obj = cv_objective(build_ecs_state(EcsSpec.minus(2.0)))
    found = maximize(obj, SearchConfig(axis_mode="imag", starts=32, seed_box_halfwidth=0.5))
    cfg = SearchConfig(axis_mode="imag", starts=1, max_iterations=1, seed_box_halfwidth=5)
    rep = maximize(obj, cfg, warm_starts=[found.best_params])
    assert rep.start_values[0] == pytest.approx(found.best_value, abs=1e-12)
    assert rep.best_value >= found.best_value - 1e-12


@pytest.mark.parametrize("case", [
    ("plus", 1.0, 0.0, "imag"),
    ("minus", 1.0, 0.0, "real"),
    ("minus", 0.5, 0.2, "imag"),
    ("qubit", 2.0, 0.3, "imag"),
])
def test_no_regression_vs_grid_symmetric(case):
    label, alpha, r, axis = case
    clock = clock_from_r(r)
    if label == "qubit":
        obj = qubit_displaced_objective(alpha, clock)
    else:
        obj = cv_objective(damped_ecs(EcsSpec.from_label(label, alpha), clock))
    lay = SettingsLayout(axis, symmetric=True)
    grid_val, _ = grid_maximize(obj, lay, 1.0, 0.01)
    cfg = SearchConfig(axis_mode=axis, starts=64, seed_box_halfwidth=1.0)
    assert maximize(obj, cfg, lay).best_value >= grid_val - 1e-3


def test_no_regression_vs_dense_4d_grid():
    obj = cv_objective(build_ecs_state(EcsSpec.minus(2.0)))
    lay = SettingsLayout("imag", symmetric=False)
    grid_val, _ = grid_maximize(obj, lay, 0.25, 0.01)
    cfg = SearchConfig(axis_mode="imag", symmetry_constraint=False, starts=64,
                       seed_box_halfwidth=0.5)
    assert maximize(obj, cfg).best_value >= grid_val - 1e-3


@pytest.mark.parametrize("label,alpha,r", [("minus", 1.0, 0.0), ("plus", 1.0, 0.0),
                                           ("minus", 2.0, 0.0), ("minus", 1.0, 0.1)])
def test_symmetry_constraint_soundness(label, alpha, r):
    obj = objective_for("cv-generalized", EcsSpec.from_label(label, alpha), clock_from_r(r))
    vals = [maximize(obj, SearchConfig(axis_mode="imag", symmetry_constraint=sym, starts=64,
                                       seed_box_halfwidth=min(1, 1 / alpha),
                                       max_iterations=3000)).best_value
            for sym in (True, False)]
    assert abs(vals[0] - vals[1]) < 1e-6


def test_sweep_orders_and_tags_errors():
    family = lambda a: cv_objective(build_ecs_state(EcsSpec.minus(a)))
    cfg = SearchConfig(axis_mode="imag", starts=32, seed_box_halfwidth=0.5, max_iterations=500)
    alphas = [0.5, 1.0, 2.0]
    cold = sweep(family, alphas, cfg, warm_start=False)
    pooled = sweep(family, alphas, cfg, warm_start=False, workers=3)
    assert [r.best_value for r in cold] == [r.best_value for r in pooled]
    warm = sweep(family, alphas, cfg)
    assert_allclose([r.best_value for r in warm], [r.best_value for r in cold], atol=1e-9)
    assert np.all(np.diff([r.best_value for r in warm]) >= -1e-3)
    with pytest.raises(ValidationError):
        sweep(family, [], cfg)

    def broken(p):
        return lambda s: np.full(np.shape(s)[:-1], np.inf if p == 2 else 1.0)

    with pytest.raises(OptimizationError) as err:
        sweep(broken, [1, 2, 3], cfg)
    assert err.value.sweep_param == 2


def test_sweep_r_decreases_below_two():
    family = lambda r: objective_for("cv-generalized", EcsSpec.minus(2.0), clock_from_r(r))
    cfg = SearchConfig(axis_mode="imag", starts=16, seed_box_halfwidth=0.5, max_iterations=500)
    vals = [rep.best_value for rep in sweep(family, [0.0, 0.1, 0.2, 0.3], cfg)]
    assert vals[0] > 2.7 and vals[-1] < 2
    assert np.all(np.diff(vals) < 0)
