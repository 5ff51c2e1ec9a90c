"""Displaced parity, Wigner and characteristic functions, and the CV Bell measure.

The displaced parity operator of one mode satisfies
``D(d) Pi D(d)^+ = D(2d) Pi`` and ``Pi |k> = |-k>``, so its coherent matrix
elements are single Gaussian overlaps.  Everything here is vectorized over
the settings so the optimizer can evaluate whole batches at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherent import DyadSum, amplitude, coherent_overlap, displacement_phase, log_overlap
from .errors import ConsistencyError

CIRELSON = 2.0 * math.sqrt(2.0)
IMAG_RESIDUE_TOL = 1e-8


def displaced_parity_element(bra, ket, d):
    """``<bra| D(d) Pi D(d)^+ |ket>`` for single-mode coherent states."""
    bra = np.asarray(bra, dtype=complex)
    ket = np.asarray(ket, dtype=complex)
    d2 = 2.0 * np.asarray(d, dtype=complex)
    out = displacement_phase(d2, -ket) * np.exp(log_overlap(bra, d2 - ket))
    return out[()] if out.ndim == 0 else out


def _mode_factor(bra, ket, d):
    # trailing axis runs over dyad terms, leading axes over settings
    d = np.asarray(d, dtype=complex)[..., None]
    return displaced_parity_element(bra, ket, d)


def parity_expectation_complex(state: DyadSum, a, b) -> np.ndarray:
    """``Tr[rho Pi(a, b)]`` without the reality check, broadcast over ``a``, ``b``."""
    f1 = _mode_factor(state.bra1, state.ket1, a)
    f2 = _mode_factor(state.bra2, state.ket2, b)
    return np.sum(state.weights * f1 * f2, axis=-1)


def _real(values, what):
    values = np.asarray(values)
    resid = np.max(np.abs(values.imag)) if values.size else 0.0
    if resid > IMAG_RESIDUE_TOL:
        raise ConsistencyError(f"{what} has imaginary residue {resid:.3e}")
    return values.real


def parity_expectation(state: DyadSum, a, b):
    """Real expectation ``Tr[rho Pi(a, b)]`` of the two-mode displaced parity."""
    out = _real(parity_expectation_complex(state, a, b), "parity expectation")
    return float(out) if out.ndim == 0 else out


def wigner(state: DyadSum, a, b):
    """Two-mode Wigner function, ``(4/pi^2) Tr[rho Pi(a, b)]``."""
    return 4.0 / math.pi ** 2 * parity_expectation(state, a, b)


def characteristic_function(state: DyadSum, eta, xi):
    """``Tr[rho D1(eta) D2(xi)]``, broadcast over ``eta`` and ``xi``."""
    eta = np.asarray(eta, dtype=complex)[..., None]
    xi = np.asarray(xi, dtype=complex)[..., None]
    f1 = displacement_phase(eta, state.ket1) * coherent_overlap(state.bra1, state.ket1 + eta)
    f2 = displacement_phase(xi, state.ket2) * coherent_overlap(state.bra2, state.ket2 + xi)
    out = np.sum(state.weights * f1 * f2, axis=-1)
    return complex(out) if out.ndim == 0 else out


def wigner_from_characteristic(state: DyadSum, a, b, half_width: float = 8.0,
                               n_grid: int = 161) -> float:
    """Wigner function by direct quadrature of the characteristic function.

    ``W(a, b) = pi^-4 int C(eta, xi) exp(a eta^* - a^* eta) exp(b xi^* - b^* xi)``.
    Each dyad term factorizes over the modes, so the 4-d integral is a sum of
    products of 2-d integrals on a square grid (trapezoid rule).
    """
    a, b = amplitude(a), amplitude(b)
    x = np.linspace(-half_width, half_width, n_grid)
    h = x[1] - x[0]
    eta = (x[:, None] + 1j * x[None, :])[None, :, :]

    def mode_integral(kets, bras, point):
        k = kets[:, None, None]
        c = displacement_phase(eta, k) * coherent_overlap(bras[:, None, None], k + eta)
        kernel = np.exp(point * np.conj(eta) - np.conj(point) * eta)
        return np.sum(c * kernel, axis=(1, 2)) * h * h / math.pi ** 2

    w = np.sum(state.weights * mode_integral(state.ket1, state.bra1, a)
               * mode_integral(state.ket2, state.bra2, b))
    return float(_real(w, "quadrature Wigner value"))


@dataclass(frozen=True)
class PhaseSpaceSettings:
    a: complex
    b: complex
    a_prime: complex
    b_prime: complex

    def __post_init__(self):
        for name in ("a", "b", "a_prime", "b_prime"):
            object.__setattr__(self, name, amplitude(getattr(self, name)))

    def swapped(self) -> "PhaseSpaceSettings":
        return PhaseSpaceSettings(self.b, self.a, self.b_prime, self.a_prime)

    def as_tuple(self):
        return self.a, self.b, self.a_prime, self.b_prime


@dataclass(frozen=True)
class BellResult:
    value: float
    settings: object
    signed: float

    @property
    def violates(self) -> bool:
        return self.value > 2.0


def chsh_combination(state: DyadSum, a, b, a_prime, b_prime):
    """Signed CHSH sum ``E(a,b) + E(a,b') + E(a',b) - E(a',b')`` (vectorized)."""
    return (parity_expectation(state, a, b) + parity_expectation(state, a, b_prime)
            + parity_expectation(state, a_prime, b) - parity_expectation(state, a_prime, b_prime))


def bell_measure(state: DyadSum, settings: PhaseSpaceSettings) -> BellResult:
    """Bell measure ``|B|`` of ``state`` for four phase-space settings."""
    signed = float(chsh_combination(state, *settings.as_tuple()))
    return BellResult(value=abs(signed), settings=settings, signed=signed)


def bw_restricted_bell(state: DyadSum, a_prime, b_prime) -> BellResult:
    """Bell measure with the unprimed settings pinned to the phase-space origin."""
    return bell_measure(state, PhaseSpaceSettings(0, 0, a_prime, b_prime))
