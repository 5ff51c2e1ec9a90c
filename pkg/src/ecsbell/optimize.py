"""Multi-start steepest ascent over Bell-test measurement settings.

Objectives take a batch of complex settings of shape ``(..., 4)`` ordered
``(a, b, a', b')`` -- first party, second party, first party primed, second
party primed -- and return real values of shape ``(...)``.  A
:class:`SettingsLayout` maps the free real parameters onto that array, which
is where the axis restriction, the origin pinning of the restricted Bell
test, and the symmetry constraint are applied.

The symmetry constraint keeps the settings on ``b = -a, b' = -a'``: the
points left fixed by exchanging the two parties together with a phase-space
inversion.  Both operations leave the entangled coherent states (and their
damped versions) invariant, and on this set the moduli of the two parties'
settings coincide.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import OptimizationError, ValidationError

log = logging.getLogger(__name__)

AXIS_MODES = ("real", "imag", "full")

ARMIJO_C = 1e-4
BACKTRACK = 0.5
LINE_TRIALS = 24


@dataclass(frozen=True)
class SearchConfig:
    axis_mode: str = "full"
    symmetry_constraint: bool = True
    starts: int = 64
    seed_box_halfwidth: float = 1.0
    gradient_step: float = 1e-5
    convergence_tol: float = 1e-12
    max_iterations: int = 2000
    rng_seed: int = 0

    def __post_init__(self):
        if self.axis_mode not in AXIS_MODES:
            raise ValidationError(f"axis_mode must be one of {AXIS_MODES}, got {self.axis_mode!r}")
        if int(self.starts) < 1:
            raise ValidationError("starts must be a positive integer")
        if int(self.max_iterations) < 1:
            raise ValidationError("max_iterations must be a positive integer")
        if not self.convergence_tol > 0:
            raise ValidationError("convergence_tol must be > 0")
        if not (self.gradient_step > 0 and self.seed_box_halfwidth > 0):
            raise ValidationError("gradient_step and seed_box_halfwidth must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SettingsLayout:
    """Map from free real parameters to complex ``(a, b, a', b')`` settings."""

    axis_mode: str = "full"
    symmetric: bool = False
    pin_origin: bool = False  # a = b = 0 (restricted Bell test)

    @classmethod
    def for_config(cls, config: SearchConfig, pin_origin: bool = False) -> "SettingsLayout":
        return cls(config.axis_mode, config.symmetry_constraint, pin_origin)

    @property
    def free_slots(self) -> tuple[int, ...]:
        slots = (2, 3) if self.pin_origin else (0, 1, 2, 3)
        if self.symmetric:
            slots = tuple(s for s in slots if s in (0, 2))
        return slots

    @property
    def per_slot(self) -> int:
        return 2 if self.axis_mode == "full" else 1

    @property
    def n_params(self) -> int:
        return len(self.free_slots) * self.per_slot

    def to_settings(self, params) -> np.ndarray:
        p = np.asarray(params, dtype=float)
        lead = p.shape[:-1]
        if self.axis_mode == "full":
            z = p[..., 0::2] + 1j * p[..., 1::2]
        elif self.axis_mode == "imag":
            z = 1j * p
        else:
            z = p.astype(complex)
        out = np.zeros(lead + (4,), dtype=complex)
        for i, slot in enumerate(self.free_slots):
            out[..., slot] = z[..., i]
        if self.symmetric:
            out[..., 1] = -out[..., 0]
            out[..., 3] = -out[..., 2]
        return out


@dataclass
class OptimizationReport:
    best_value: float
    best_params: np.ndarray
    best_settings: np.ndarray
    iterations_used: int
    starts_converged: int
    objective_evaluations: int
    start_values: np.ndarray = field(repr=False)
    final_values: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "best_value": self.best_value,
            "best_params": [float(v) for v in self.best_params],
            "best_settings": [[float(z.real), float(z.imag)] for z in self.best_settings],
            "iterations_used": self.iterations_used,
            "starts_converged": self.starts_converged,
            "objective_evaluations": self.objective_evaluations,
        }


class _Counter:
    def __init__(self, objective, layout, vectorized):
        self.objective = objective
        self.layout = layout
        self.vectorized = vectorized
        self.count = 0

    def __call__(self, params: np.ndarray) -> np.ndarray:
        settings = self.layout.to_settings(params)
        self.count += int(np.prod(params.shape[:-1]))
        if self.vectorized:
            values = np.asarray(self.objective(settings), dtype=float)
        else:
            flat = settings.reshape(-1, 4)
            values = np.array([float(self.objective(s)) for s in flat]).reshape(settings.shape[:-1])
        bad = ~np.isfinite(values)
        if np.any(bad):
            where = np.argwhere(bad)[0]
            raise OptimizationError(
                f"objective returned {values[tuple(where)]!r}", settings=settings[tuple(where)])
        return values


def seed_points(config: SearchConfig, n_params: int) -> np.ndarray:
    rng = np.random.default_rng(config.rng_seed)
    h = config.seed_box_halfwidth
    return rng.uniform(-h, h, size=(config.starts, n_params))


def _gradient(f: _Counter, x: np.ndarray, step: float) -> np.ndarray:
    n = x.shape[-1]
    h = step * np.maximum(1.0, np.abs(x))  # (starts, n)
    shifts = np.eye(n)[None, :, :] * h[:, :, None]
    probe = np.concatenate([x[:, None, :] + shifts, x[:, None, :] - shifts], axis=1)
    vals = f(probe)
    return (vals[:, :n] - vals[:, n:]) / (2.0 * h)


def maximize(objective: Callable, config: SearchConfig, layout: SettingsLayout | None = None,
             warm_starts: Sequence[np.ndarray] = (), vectorized: bool = True
             ) -> OptimizationReport:
    """Maximize ``objective`` by multi-start steepest ascent.

    Each start follows the central-difference gradient with an Armijo
    backtracking line search; all starts advance together so the objective
    is called on whole batches.  ``warm_starts`` are extra initial parameter
    vectors placed ahead of the pseudo-random seeds.
    """
    layout = layout or SettingsLayout.for_config(config)
    f = _Counter(objective, layout, vectorized)
    n = layout.n_params
    x = seed_points(config, n)
    if len(warm_starts):
        x = np.vstack([np.atleast_2d(np.asarray(w, dtype=float)) for w in warm_starts] + [x])
    fx = f(x)
    start_values = fx.copy()
    active = np.ones(len(x), dtype=bool)
    converged = np.zeros(len(x), dtype=bool)
    step0 = np.full(len(x), 1.0)
    iterations = 0
    scales = BACKTRACK ** np.arange(LINE_TRIALS)

    while iterations < config.max_iterations and np.any(active):
        iterations += 1
        idx = np.flatnonzero(active)
        xa, fa = x[idx], fx[idx]
        g = _gradient(f, xa, config.gradient_step)
        g2 = np.sum(g * g, axis=1)
        flat = g2 <= config.convergence_tol ** 2
        steps = step0[idx, None] * scales[None, :]  # (k, trials)
        trial = xa[:, None, :] + steps[:, :, None] * g[:, None, :]
        ft = f(trial)
        ok = ft >= fa[:, None] + ARMIJO_C * steps * g2[:, None]
        has = np.any(ok, axis=1) & ~flat
        first = np.argmax(ok, axis=1)
        rows = np.flatnonzero(has)
        new_f = ft[rows, first[rows]]
        gain = new_f - fa[rows]
        x[idx[rows]] = trial[rows, first[rows]]
        fx[idx[rows]] = new_f
        # grow the next trial step after an immediate acceptance
        step0[idx[rows]] = steps[rows, first[rows]] * np.where(first[rows] == 0, 2.0, 1.0)
        done = np.zeros(len(idx), dtype=bool)
        done[~has] = True
        done[rows[gain <= config.convergence_tol]] = True
        converged[idx[done]] = True
        active[idx[done]] = False

    best = _pick_best(fx, x)
    best_params = x[best].copy()
    best_value = float(f(best_params[None, :])[0])
    return OptimizationReport(
        best_value=best_value,
        best_params=best_params,
        best_settings=layout.to_settings(best_params),
        iterations_used=iterations,
        starts_converged=int(np.sum(converged)),
        objective_evaluations=f.count,
        start_values=start_values,
        final_values=fx.copy(),
    )


def _pick_best(values: np.ndarray, params: np.ndarray, tie_tol: float = 1e-12) -> int:
    top = np.max(values)
    tied = np.flatnonzero(values >= top - tie_tol)
    norms = np.linalg.norm(params[tied], axis=1)
    return int(tied[np.argmin(norms)])


def sweep(objective_family: Callable, params: Sequence, config: SearchConfig,
          layout: SettingsLayout | None = None, warm_start: bool = True, workers: int = 1,
          vectorized: bool = True) -> list[OptimizationReport]:
    """One :func:`maximize` per sweep parameter, in order.

    With ``warm_start`` each point also starts from the previous optimum,
    which makes the sweep sequential; otherwise points may run on a thread
    pool and are still returned in sweep order.
    """
    params = list(params)
    if not params:
        raise ValidationError("sweep needs at least one parameter value")

    def run(p, warm):
        try:
            return maximize(objective_family(p), config, layout, warm_starts=warm,
                            vectorized=vectorized)
        except OptimizationError as exc:
            raise OptimizationError(f"sweep point {p!r}: {exc}", settings=exc.settings,
                                    sweep_param=p) from exc

    if warm_start:
        reports = []
        warm: tuple = ()
        for p in params:
            rep = run(p, warm)
            log.debug("sweep point %r -> %.10f", p, rep.best_value)
            reports.append(rep)
            warm = (rep.best_params,)
        return reports
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda p: run(p, ()), params))
    return [run(p, ()) for p in params]


def grid_maximize(objective: Callable, layout: SettingsLayout, halfwidth: float,
                  resolution: float, chunk: int = 200_000) -> tuple[float, np.ndarray]:
    """Brute-force maximum on a regular grid over the free parameters."""
    axis = np.arange(-halfwidth, halfwidth + 0.5 * resolution, resolution)
    n = layout.n_params
    total = len(axis) ** n
    best_val, best_x = -math.inf, None
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.stack(np.unravel_index(flat, (len(axis),) * n), axis=-1)
        pts = axis[idx]
        vals = np.asarray(objective(layout.to_settings(pts)), dtype=float)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_x = float(vals[j]), pts[j]
    return best_val, best_x
