"""The entangled coherent state as a two-qubit system.

Each mode is restricted to the even/odd cat basis
``|e> ~ |ta> + |-ta>``, ``|d> ~ |ta> - |-ta>`` (``t`` the damping factor),
and two-qubit states are 4x4 matrices over ``{ee, ed, de, dd}``.

Two Bell figures of merit live here: the Horodecki maximum under ideal
qubit rotations, and the CHSH value reachable when the rotations are
realized by phase-space displacements ``D(i eps)`` followed by parity
detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .coherent import coherent_overlap
from .decoherence import DecoherenceClock
from .errors import DegenerateStateError, ValidationError
from .parity import displaced_parity_element

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha <= 0.0:
        raise DegenerateStateError(f"the cat basis needs alpha > 0, got {alpha}")
    return alpha


def cat_norms(alpha: float, t: float = 1.0) -> tuple[float, float]:
    """``(N_plus, N_minus) = 2 +/- 2 exp(-2 t^2 alpha^2)``."""
    s = math.exp(-2.0 * (t * alpha) ** 2)
    # -expm1 keeps N_minus accurate for small amplitudes
    return 2.0 + 2.0 * s, -2.0 * math.expm1(-2.0 * (t * alpha) ** 2)


@dataclass(frozen=True)
class CatBasis:
    """Even/odd cat states built on ``|t alpha>`` and ``|-t alpha>``."""

    alpha: float
    t: float = 1.0

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not (0.0 < self.t <= 1.0):
            raise ValidationError(f"t must lie in (0, 1], got {self.t}")

    @property
    def amplitude(self) -> float:
        return self.t * self.alpha

    @property
    def norms(self) -> tuple[float, float]:
        return cat_norms(self.alpha, self.t)

    def components(self):
        """Coherent amplitudes and the coefficient rows of ``|e>`` and ``|d>``."""
        a = self.amplitude
        n_plus, n_minus = self.norms
        if n_minus <= 0.0:
            raise DegenerateStateError("odd cat state vanishes at this amplitude")
        amps = np.array([a, -a], dtype=complex)
        coeffs = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt([[n_plus], [n_minus]])
        return amps, coeffs

    def gram(self) -> np.ndarray:
        """2x2 Gram matrix of ``(|e>, |d>)``; the identity when orthonormal."""
        amps, coeffs = self.components()
        ov = coherent_overlap(amps[:, None], amps[None, :])
        return coeffs.conj() @ ov @ coeffs.T


class QubitDensityMatrix:
    """Validated 4x4 density matrix over ``{ee, ed, de, dd}``."""

    HERMITIAN_TOL = 1e-12
    TRACE_TOL = 1e-12
    EIG_TOL = 1e-10

    def __init__(self, entries, validate: bool = True):
        m = np.array(entries, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError(f"expected a 4x4 matrix, got shape {m.shape}")
        m.setflags(write=False)
        self.entries = m
        if validate:
            self.validate()

    def validate(self):
        m = self.entries
        if not np.all(np.isfinite(m)):
            raise ValidationError("density matrix has non-finite entries")
        if np.max(np.abs(m - m.conj().T)) > self.HERMITIAN_TOL:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > self.TRACE_TOL:
            raise ValidationError(f"density matrix trace {np.trace(m).real!r} != 1")
        if np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))) < -self.EIG_TOL:
            raise ValidationError("density matrix has negative eigenvalues")
        return self

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"QubitDensityMatrix({np.array2string(self.entries.real, precision=4)})"


SINGLET = QubitDensityMatrix(0.5 * np.outer([0, 1, -1, 0], [0, 1, -1, 0]))
MAXIMALLY_MIXED = QubitDensityMatrix(np.eye(4) / 4)


class RhoMinusCoefficients(NamedTuple):
    A: float
    C: float
    D: float
    E: float
    gamma: float
    prefactor: float  # 1 / (4 N_plus N_minus) at t = 1


def rho_minus_coefficients(alpha: float, clock: DecoherenceClock) -> RhoMinusCoefficients:
    alpha = _check_alpha(alpha)
    np_t, nm_t = cat_norms(alpha, clock.t)
    np0, nm0 = cat_norms(alpha, 1.0)
    gamma = math.exp(-4.0 * clock.loss * alpha ** 2)
    return RhoMinusCoefficients(
        A=(1.0 - gamma) * np_t ** 2,
        C=(1.0 + gamma) * np_t * nm_t,
        D=-(1.0 - gamma) * np_t * nm_t,
        E=(1.0 - gamma) * nm_t ** 2,
        gamma=gamma,
        prefactor=1.0 / (4.0 * np0 * nm0),
    )


def rho_minus_matrix(alpha: float, clock: DecoherenceClock) -> QubitDensityMatrix:
    """Damped odd entangled coherent state in the time-dependent cat basis.

    The prefactor uses the initial cat norms; with these the trace is one
    for every damping time.
    """
    A, C, D, E, _, pref = rho_minus_coefficients(alpha, clock)
    m = pref * np.array([
        [A, 0, 0, D],
        [0, C, -C, 0],
        [0, -C, C, 0],
        [D, 0, 0, E],
    ], dtype=complex)
    return QubitDensityMatrix(m)


def correlation_matrix(rho) -> np.ndarray:
    """``T[n, m] = Tr(rho sigma_m (x) sigma_n)``."""
    m = np.asarray(rho, dtype=complex)
    T = np.empty((3, 3))
    for n in range(3):
        for k in range(3):
            T[n, k] = np.trace(m @ np.kron(SIGMA[k], SIGMA[n])).real
    return T


def horodecki_bmax(rho) -> float:
    """Maximal CHSH value ``2 sqrt(M)`` of a two-qubit state under ideal measurements."""
    if not isinstance(rho, QubitDensityMatrix):
        rho = QubitDensityMatrix(rho)
    T = correlation_matrix(rho)
    ev = np.sort(np.linalg.eigvalsh(T @ T.T))
    return 2.0 * math.sqrt(max(ev[1] + ev[2], 0.0))


def tt_eigenvalues_closed_form(alpha: float, clock: DecoherenceClock) -> tuple[float, float, float]:
    """Closed-form eigenvalues of ``T T^+`` for the damped odd ECS.

    Order: ``(C+D)^2/(4 N+^2 N-^2)``, ``(C-D)^2/(4 N+^2 N-^2)``,
    ``(A-2C+E)^2/(16 N+^2 N-^2)``.
    """
    A, C, D, E, _, pref = rho_minus_coefficients(alpha, clock)
    # pref^2 = 1/(16 N+^2 N-^2)
    return (4.0 * pref ** 2 * (C + D) ** 2,
            4.0 * pref ** 2 * (C - D) ** 2,
            pref ** 2 * (A - 2.0 * C + E) ** 2)


def bmax_closed_form(alpha: float, clock: DecoherenceClock) -> float:
    ev = sorted(tt_eigenvalues_closed_form(alpha, clock))
    return 2.0 * math.sqrt(ev[1] + ev[2])


def ideal_rotation(theta: float) -> np.ndarray:
    """``R_x(theta)`` on ``(|e>, |d>)``."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 1j * s], [1j * s, c]])


class ParityProbabilities(NamedTuple):
    """Even-parity matrix elements of the displaced cat basis.

    ``pe = <e'|Pi_e|e'>``, ``pe_tilde = <d'|Pi_e|d'>``, ``ie = <e'|Pi_e|d'>``
    with ``|x'> = D(i eps)|x>``.
    """

    pe: np.ndarray
    pe_tilde: np.ndarray
    ie: np.ndarray

    @property
    def po(self):
        return 1.0 - self.pe

    @property
    def po_tilde(self):
        return 1.0 - self.pe_tilde

    @property
    def io(self):
        """``<d'|Pi_o|e'> = <d'|e'> - <d'|Pi_e|e'> = -conj(ie)``."""
        return -np.conj(self.ie)


def _displacement(eps, axis: str):
    eps = np.asarray(eps, dtype=float)
    if axis in ("imag", "imaginary"):
        return 1j * eps
    if axis == "real":
        return eps.astype(complex)
    raise ValidationError(f"axis must be 'imag' or 'real', got {axis!r}")


def displaced_parity_probs(alpha: float, clock: DecoherenceClock, eps,
                           axis: str = "imag") -> ParityProbabilities:
    """Parity matrix elements of ``D(i eps)|e(t)>``, ``D(i eps)|d(t)>`` (vectorized in eps)."""
    amps, coeffs = CatBasis(_check_alpha(alpha), clock.t).components()
    x = _displacement(eps, axis)
    # <u|D(x)^+ Pi D(x)|v> is the displaced-parity element at -x
    kb = amps[:, None]
    kk = amps[None, :]
    ov = coherent_overlap(kb, kk)
    dp = displaced_parity_element(kb, kk, -x[..., None, None])
    pe_op = 0.5 * (ov + dp)  # Pi_e = (1 + Pi)/2 between coherent components
    e, d = coeffs
    pe = np.einsum("i,...ij,j->...", e, pe_op, e).real
    pe_tilde = np.einsum("i,...ij,j->...", d, pe_op, d).real
    ie = np.einsum("i,...ij,j->...", e, pe_op, d)
    return ParityProbabilities(pe, pe_tilde, ie)


def restricted_parity_observable(alpha: float, clock: DecoherenceClock, eps,
                                 axis: str = "imag") -> np.ndarray:
    """2x2 matrix of ``D^+(i eps) Pi D(i eps)`` in the cat basis, shape ``(..., 2, 2)``."""
    p = displaced_parity_probs(alpha, clock, eps, axis)
    out = np.empty(np.shape(p.pe) + (2, 2), dtype=complex)
    out[..., 0, 0] = 2.0 * p.pe - 1.0
    out[..., 0, 1] = 2.0 * p.ie
    out[..., 1, 0] = 2.0 * np.conj(p.ie)
    out[..., 1, 1] = 2.0 * p.pe_tilde - 1.0
    return out


@dataclass(frozen=True)
class EpsilonSettings:
    e1: float
    e1_prime: float
    e2: float
    e2_prime: float

    def __post_init__(self):
        for name in ("e1", "e1_prime", "e2", "e2_prime"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    def as_tuple(self):
        return self.e1, self.e1_prime, self.e2, self.e2_prime


def _eps_arrays(eps):
    if isinstance(eps, EpsilonSettings):
        return tuple(np.asarray(v) for v in eps.as_tuple())
    arr = np.asarray(eps, dtype=float)
    return arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3]


def _squeeze(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def restricted_average(rho, alpha: float, clock: DecoherenceClock, eps1, eps2,
                       axis: str = "imag"):
    """``Tr{rho D^+ Pi D}`` evaluated inside the four-dimensional cat subspace."""
    o1 = restricted_parity_observable(alpha, clock, eps1, axis)
    o2 = restricted_parity_observable(alpha, clock, eps2, axis)
    m = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    # rho[(i,k),(j,l)] * O1[j,i] * O2[l,k]
    return np.einsum("ikjl,...ji,...lk->...", m, o1, o2).real


def bell_mixed_displaced(alpha: float, clock: DecoherenceClock, eps, axis: str = "imag"):
    """``|B|`` for the damped odd ECS with displacement-realized rotations.

    ``eps`` is an :class:`EpsilonSettings` or an array ``(..., 4)`` ordered
    ``(e1, e1', e2, e2')``.
    """
    rho = rho_minus_matrix(alpha, clock)
    e1, e1p, e2, e2p = _eps_arrays(eps)
    b = (restricted_average(rho, alpha, clock, e1, e2, axis)
         + restricted_average(rho, alpha, clock, e1, e2p, axis)
         + restricted_average(rho, alpha, clock, e1p, e2, axis)
         - restricted_average(rho, alpha, clock, e1p, e2p, axis))
    return _squeeze(np.abs(b))


def bell_pure_displaced(alpha: float, eps, axis: str = "imag"):
    """``|B|`` for the undamped odd ECS from the parity probabilities directly.

    Uses the closed CHSH combination of ``pe``, ``pe_tilde`` and ``ie``
    valid for the singlet-form state ``(|ed> - |de>)/sqrt(2)``.
    """
    clock = DecoherenceClock.from_r(0.0)
    e1, e1p, e2, e2p = _eps_arrays(eps)
    p1, p1p, p2, p2p = (displaced_parity_probs(alpha, clock, e, axis) for e in (e1, e1p, e2, e2p))
    b = ((2 * p1.pe - 1) * (p2.pe_tilde + p2p.pe_tilde - 1)
         + (2 * p1.pe_tilde - 1) * (p2.pe + p2p.pe - 1)
         + (2 * p1p.pe - 1) * (p2.pe_tilde - p2p.pe_tilde)
         + (2 * p1p.pe_tilde - 1) * (p2.pe - p2p.pe)
         + 4 * p1.ie * (p2.ie + p2p.ie) + 4 * p1p.ie * (p2.ie - p2p.ie))
    return _squeeze(np.abs(b.real))

