"""Amplitude damping into a vacuum reservoir, applied to coherent dyads.

A single-mode dyad evolves as ``|a><b| -> <b|a>^(1-t^2) |t a><t b|`` with
``t = exp(-gamma tau / 2)``.  Both modes share one decay rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherent import CoherentDyad, DyadSum, log_overlap
from .errors import ValidationError


@dataclass(frozen=True)
class DecoherenceClock:
    """Consistent triple ``(gamma_tau, t, r)`` with ``t = e^{-gamma_tau/2}``, ``r = sqrt(1-t^2)``."""

    gamma_tau: float
    t: float
    r: float

    @classmethod
    def from_r(cls, r: float) -> "DecoherenceClock":
        r = float(r)
        if not (0.0 <= r < 1.0):
            raise ValidationError(f"r must lie in [0, 1), got {r}")
        t = math.sqrt((1.0 - r) * (1.0 + r))
        return cls(gamma_tau=0.0 - math.log1p(-r * r), t=t, r=r)

    @classmethod
    def from_t(cls, t: float) -> "DecoherenceClock":
        t = float(t)
        if not (0.0 < t <= 1.0):
            raise ValidationError(f"t must lie in (0, 1], got {t}")
        return cls(gamma_tau=0.0 - 2.0 * math.log(t), t=t, r=math.sqrt((1.0 - t) * (1.0 + t)))

    @classmethod
    def from_gamma_tau(cls, gamma_tau: float) -> "DecoherenceClock":
        gamma_tau = float(gamma_tau)
        if not (gamma_tau >= 0.0 and math.isfinite(gamma_tau)):
            raise ValidationError(f"gamma_tau must be finite and >= 0, got {gamma_tau}")
        t = math.exp(-0.5 * gamma_tau)
        # expm1 keeps r accurate for short times
        return cls(gamma_tau=gamma_tau, t=t, r=math.sqrt(-math.expm1(-gamma_tau)))

    @property
    def loss(self) -> float:
        """``1 - t^2``, the photon-loss probability."""
        return self.r * self.r

    def then(self, other: "DecoherenceClock") -> "DecoherenceClock":
        """Clock of two successive evolutions."""
        return DecoherenceClock.from_t(self.t * other.t)


def clock_from_r(r: float) -> DecoherenceClock:
    return DecoherenceClock.from_r(r)


def damp_dyad(dyad: CoherentDyad, clock: DecoherenceClock) -> tuple[complex, CoherentDyad]:
    """Return ``(weight_factor, damped_dyad)`` for one mode."""
    factor = complex(np.exp(clock.loss * log_overlap(dyad.bra, dyad.ket)))
    return factor, CoherentDyad(clock.t * dyad.ket, clock.t * dyad.bra)


def damp_state(state: DyadSum, clock: DecoherenceClock) -> DyadSum:
    """Evolve a two-mode dyad sum through equal amplitude damping on both modes."""
    if clock.r == 0.0:
        return state
    loss, t = clock.loss, clock.t
    factor = np.exp(loss * (log_overlap(state.bra1, state.ket1)
                            + log_overlap(state.bra2, state.ket2)))
    return DyadSum(state.weights * factor, t * state.ket1, t * state.bra1,
                   t * state.ket2, t * state.bra2)
