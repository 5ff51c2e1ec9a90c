"""Bell-measure objectives in the batched form the optimizer expects.

Every objective maps complex settings ``(..., 4)`` ordered ``(a, b, a', b')``
to ``|B|``.  For the qubit path the settings are the displacements applied
to the state, ``i*eps``, so only their imaginary parts are read.
"""

from __future__ import annotations

import numpy as np

from .coherent import DyadSum, EcsSpec, build_ecs_state
from .decoherence import DecoherenceClock, damp_state
from .parity import chsh_combination
from .qubit import bell_mixed_displaced, bmax_closed_form

MEASURES = ("cv-generalized", "cv-bw-restricted", "qubit-ideal", "qubit-displaced")


def cv_objective(state: DyadSum):
    def objective(settings):
        s = np.asarray(settings, dtype=complex)
        return np.abs(chsh_combination(state, s[..., 0], s[..., 1], s[..., 2], s[..., 3]))
    return objective


def qubit_displaced_objective(alpha: float, clock: DecoherenceClock):
    def objective(settings):
        s = np.asarray(settings, dtype=complex)
        eps = np.stack([s[..., 0].imag, s[..., 2].imag, s[..., 1].imag, s[..., 3].imag], axis=-1)
        return bell_mixed_displaced(alpha, clock, eps)
    return objective


def damped_ecs(spec: EcsSpec, clock: DecoherenceClock) -> DyadSum:
    return damp_state(build_ecs_state(spec), clock)


def objective_for(measure: str, spec: EcsSpec, clock: DecoherenceClock):
    """Objective for one of the optimizable measures."""
    if measure in ("cv-generalized", "cv-bw-restricted"):
        return cv_objective(damped_ecs(spec, clock))
    if measure == "qubit-displaced":
        return qubit_displaced_objective(spec.alpha.real, clock)
    raise ValueError(f"measure {measure!r} has no settings to optimize")


def qubit_ideal(alpha: float, clock: DecoherenceClock) -> float:
    return bmax_closed_form(alpha, clock)
