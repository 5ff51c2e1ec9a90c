"""Randomized closed-form versus Fock-oracle equivalence suites.

Each suite draws ``cases`` random instances from a seeded generator and
records the largest absolute deviation between the analytic path and the
truncated number-basis computation of the same quantity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fock
from .coherent import CoherentDyad, EcsSpec, build_ecs_state, coherent_overlap, pure_state
from .decoherence import DecoherenceClock, damp_dyad, damp_state
from .parity import chsh_combination, parity_expectation
from .qubit import (bell_mixed_displaced, bmax_closed_form, horodecki_bmax,
                    restricted_parity_observable, rho_minus_matrix)

SUITES = ("overlaps", "parity", "decoherence", "qubit")
DEFAULT_TOL = 1e-8
MAX_AMPLITUDE = 3.0


@dataclass
class SuiteReport:
    suite: str
    cases: int
    seed: int
    tol: float
    max_deviation: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, case: int, deviation: float, detail: str):
        self.max_deviation = max(self.max_deviation, deviation)
        if not deviation <= self.tol:
            self.failures.append((case, deviation, detail))

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.suite:12s} {status} cases={self.cases} seed={self.seed} "
                f"max_deviation={self.max_deviation:.3e} tol={self.tol:.0e}")

    def to_dict(self) -> dict:
        return {"suite": self.suite, "cases": self.cases, "seed": self.seed, "tol": self.tol,
                "max_deviation": self.max_deviation, "passed": self.passed,
                "failures": [{"case": c, "deviation": d, "detail": s}
                             for c, d, s in self.failures]}


def _disk(rng, radius, size=None):
    """Uniform points in the complex disk of the given radius."""
    rad = radius * np.sqrt(rng.uniform(size=size))
    ang = rng.uniform(0, 2 * np.pi, size=size)
    return rad * np.exp(1j * ang)


def _random_ecs(rng) -> EcsSpec:
    while True:
        spec = EcsSpec(complex(_disk(rng, MAX_AMPLITUDE)), float(rng.uniform(0, 2 * np.pi)))
        # stay away from the vanishing |C-> at tiny amplitude
        if abs(spec.alpha) > 0.05:
            return spec


def _random_pure(rng):
    amps1 = _disk(rng, 0.5 * MAX_AMPLITUDE, 2)
    amps2 = _disk(rng, 0.5 * MAX_AMPLITUDE, 2)
    coeffs = rng.normal(size=2) + 1j * rng.normal(size=2)
    return pure_state(coeffs, amps1, amps2), (coeffs, amps1, amps2)


def _fock_parity(rho, a, b, trunc):
    return fock.expectation(rho, (fock.displaced_parity_matrix(a, trunc),
                                  fock.displaced_parity_matrix(b, trunc)))


def _case_overlaps(rng, trunc):
    a, b = _disk(rng, MAX_AMPLITUDE, 2)
    oracle = np.vdot(fock.coherent_ket(b, trunc), fock.coherent_ket(a, trunc))
    return abs(coherent_overlap(b, a) - oracle), f"a={a:.4f} b={b:.4f}"


def _case_parity(rng, trunc):
    spec = _random_ecs(rng)
    state = build_ecs_state(spec)
    rho = fock.from_dyad_sum(state, trunc)
    s = _disk(rng, 1.0, 4)
    dev = abs(parity_expectation(state, s[0], s[1]) - _fock_parity(rho, s[0], s[1], trunc))
    corr = [_fock_parity(rho, x, y, trunc) for x, y in
            ((s[0], s[1]), (s[0], s[3]), (s[2], s[1]), (s[2], s[3]))]
    bell_oracle = corr[0] + corr[1] + corr[2] - corr[3]
    dev = max(dev, abs(chsh_combination(state, *s) - bell_oracle))
    return dev, f"alpha={spec.alpha:.4f} phase={spec.phase:.4f} settings={np.round(s, 4).tolist()}"


def _case_decoherence(rng, trunc):
    state, _ = _random_pure(rng)
    clock = DecoherenceClock.from_r(float(rng.uniform(0, 0.99)))
    dev = 0.0
    for k1, b1 in zip(state.ket1, state.bra1):
        factor, dyad = damp_dyad(CoherentDyad(k1, b1), clock)
        closed = factor * np.outer(fock.coherent_ket(dyad.ket, trunc),
                                   fock.coherent_ket(dyad.bra, trunc).conj())
        image = np.outer(fock.coherent_ket(k1, trunc), fock.coherent_ket(b1, trunc).conj())
        dev = max(dev, float(np.max(np.abs(fock.kraus_damp_single(image, clock, trunc) - closed))))
    damped = damp_state(state, clock)
    rho = fock.kraus_damp(fock.from_dyad_sum(state, trunc), clock, trunc)
    a, b = _disk(rng, 1.0, 2)
    dev = max(dev, abs(parity_expectation(damped, a, b) - _fock_parity(rho, a, b, trunc)))
    dev = max(dev, abs(damped.trace() - rho.trace()))
    return dev, f"r={clock.r:.4f} kets={np.round(state.ket1, 3).tolist()}"


def _case_qubit(rng, trunc):
    alpha = float(rng.uniform(0.3, MAX_AMPLITUDE))
    clock = DecoherenceClock.from_r(float(rng.uniform(0, 0.95)))
    state = damp_state(build_ecs_state(EcsSpec.minus(alpha)), clock)
    rho = fock.from_dyad_sum(state, trunc)
    proj = fock.project_to_qubit_basis(rho, alpha, clock, trunc)
    closed = np.asarray(rho_minus_matrix(alpha, clock))
    dev = float(np.max(np.abs(proj.matrix - closed)))
    dev = max(dev, abs(proj.discarded_weight))
    dev = max(dev, abs(horodecki_bmax(proj.matrix) - bmax_closed_form(alpha, clock)))
    eps = rng.uniform(-1.0, 1.0, 4)
    obs = [fock.restricted_observable(alpha, clock, 1j * e, trunc) for e in eps]
    for e, o in zip(eps, obs):
        dev = max(dev, float(np.max(np.abs(restricted_parity_observable(alpha, clock, e) - o))))
    m = proj.matrix.reshape(2, 2, 2, 2)

    def ave(o1, o2):
        return np.einsum("ikjl,ji,lk->", m, o1, o2).real

    e1, e1p, e2, e2p = obs
    oracle = abs(ave(e1, e2) + ave(e1, e2p) + ave(e1p, e2) - ave(e1p, e2p))
    dev = max(dev, abs(bell_mixed_displaced(alpha, clock, eps) - oracle))
    return dev, f"alpha={alpha:.4f} r={clock.r:.4f} eps={np.round(eps, 4).tolist()}"


_CASES: dict[str, Callable] = {
    "overlaps": _case_overlaps,
    "parity": _case_parity,
    "decoherence": _case_decoherence,
    "qubit": _case_qubit,
}


def run_suite(suite: str, cases: int = 100, seed: int = 0, n_max: int = 64,
              tol: float = DEFAULT_TOL) -> SuiteReport:
    if suite not in _CASES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    if cases < 1:
        raise ValueError("cases must be >= 1")
    trunc = fock.FockTruncation(n_max)
    # independent stream per suite so 'all' and single-suite runs agree
    rng = np.random.default_rng([seed, SUITES.index(suite)])
    report = SuiteReport(suite, cases, seed, tol)
    for i in range(cases):
        dev, detail = _CASES[suite](rng, trunc)
        report.record(i, float(dev), detail)
    return report


def run_checks(suite: str = "all", cases: int = 100, seed: int = 0, n_max: int = 64,
               tol: float = DEFAULT_TOL) -> list[SuiteReport]:
    names = SUITES if suite == "all" else (suite,)
    return [run_suite(name, cases, seed, n_max, tol) for name in names]


def trivial_decoherence_case(n_max: int = 64) -> float:
    """Deviation of the ``r = 0`` channel from the identity on a fixed cat state."""
    trunc = fock.FockTruncation(n_max)
    state = build_ecs_state(EcsSpec.minus(1.0))
    clock = DecoherenceClock.from_r(0.0)
    rho = fock.from_dyad_sum(state, trunc)
    out = fock.kraus_damp(rho, clock, trunc)
    ref = fock.from_dyad_sum(damp_state(state, clock), trunc)
    return float(max(np.max(np.abs(out.weights - ref.weights)),
                     np.max(np.abs(out.left - ref.left)),
                     np.max(np.abs(out.right - ref.right))))


__all__ = ["SUITES", "SuiteReport", "run_checks", "run_suite", "trivial_decoherence_case"]
