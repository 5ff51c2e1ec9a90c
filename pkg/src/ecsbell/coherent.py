"""Coherent-state algebra and entangled coherent states.

Every state in the package is a finite weighted sum of two-mode coherent
dyads ``w |k1><b1| (x) |k2><b2|``.  All traces, expectations and channel
actions reduce to Gaussian overlaps of coherent states, which are exact.

Displacements follow the unitary convention ``D(x) = exp(x a^+ - x^* a)`` so
that ``D(x)|k> = exp(i Im(x k^*)) |k + x>``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DegenerateStateError, ValidationError

MERGE_TOL = 1e-14


class DegenerateStateWarning(UserWarning):
    """Issued when a constructor falls back to a product state."""


def amplitude(value) -> complex:
    """Coerce ``value`` to a finite complex amplitude."""
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValidationError(f"amplitude must be finite, got {value!r}")
    return z


def log_overlap(bra, ket):
    """Exponent of the coherent overlap, ``log <bra|ket>`` taken literally.

    Vectorized over numpy inputs.  No branch cut is involved: the value is
    the Gaussian exponent itself.  The real part is written as
    ``-|ket - bra|^2 / 2`` so it is never positive after rounding.
    """
    bra = np.asarray(bra, dtype=complex)
    ket = np.asarray(ket, dtype=complex)
    return -0.5 * np.abs(ket - bra) ** 2 + 1j * (np.conj(bra) * ket).imag


def coherent_overlap(bra, ket):
    """Return ``<bra|ket>`` for coherent states (vectorized)."""
    out = np.exp(log_overlap(bra, ket))
    return out[()] if out.ndim == 0 else out


def displacement_phase(x, ket):
    """Phase picked up by ``D(x)|ket> = phase * |ket + x>``."""
    x = np.asarray(x, dtype=complex)
    ket = np.asarray(ket, dtype=complex)
    return np.exp(1j * np.imag(x * np.conj(ket)))


@dataclass(frozen=True)
class CoherentDyad:
    """Single-mode operator ``|ket><bra|``."""

    ket: complex
    bra: complex

    def __post_init__(self):
        object.__setattr__(self, "ket", amplitude(self.ket))
        object.__setattr__(self, "bra", amplitude(self.bra))

    def isclose(self, other: "CoherentDyad", tol: float = 1e-12) -> bool:
        return abs(self.ket - other.ket) <= tol and abs(self.bra - other.bra) <= tol

    def adjoint(self) -> "CoherentDyad":
        return CoherentDyad(self.bra, self.ket)

    def trace(self) -> complex:
        return complex(coherent_overlap(self.bra, self.ket))


class DyadSum:
    """Weighted sum of two-mode coherent dyads.

    Stored column-wise as numpy arrays; instances are treated as immutable
    (the arrays are flagged read-only).  Terms whose four amplitudes agree
    within ``MERGE_TOL`` are merged on construction.
    """

    __slots__ = ("weights", "ket1", "bra1", "ket2", "bra2")

    def __init__(self, weights, ket1, bra1, ket2, bra2, merge=True):
        cols = [np.atleast_1d(np.asarray(c, dtype=complex)).copy()
                for c in (weights, ket1, bra1, ket2, bra2)]
        n = len(cols[0])
        if any(len(c) != n for c in cols):
            raise ValidationError("dyad-sum columns must have equal length")
        if not all(np.all(np.isfinite(c)) for c in cols):
            raise ValidationError("dyad-sum entries must be finite")
        if merge:
            cols = _merge_terms(*cols)
        for c in cols:
            c.setflags(write=False)
        self.weights, self.ket1, self.bra1, self.ket2, self.bra2 = cols

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[complex, CoherentDyad, CoherentDyad]]):
        rows = [(w, d1.ket, d1.bra, d2.ket, d2.bra) for w, d1, d2 in terms]
        if not rows:
            raise ValidationError("a dyad sum needs at least one term")
        return cls(*zip(*rows))

    @classmethod
    def vacuum(cls) -> "DyadSum":
        return cls([1.0], [0], [0], [0], [0])

    @property
    def terms(self) -> list[tuple[complex, CoherentDyad, CoherentDyad]]:
        return [(complex(w), CoherentDyad(k1, b1), CoherentDyad(k2, b2))
                for w, k1, b1, k2, b2 in zip(self.weights, self.ket1, self.bra1,
                                             self.ket2, self.bra2)]

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return f"DyadSum({len(self)} terms, trace={self.trace():.12g})"

    def term_traces(self) -> np.ndarray:
        return self.weights * np.exp(log_overlap(self.bra1, self.ket1)
                                     + log_overlap(self.bra2, self.ket2))

    def trace(self) -> complex:
        return complex(np.sum(self.term_traces()))

    def scaled(self, factor: complex) -> "DyadSum":
        return DyadSum(self.weights * factor, self.ket1, self.bra1, self.ket2, self.bra2)

    def __add__(self, other: "DyadSum") -> "DyadSum":
        return DyadSum(*(np.concatenate([a, b]) for a, b in zip(self._cols(), other._cols())))

    def _cols(self):
        return self.weights, self.ket1, self.bra1, self.ket2, self.bra2

    def adjoint(self) -> "DyadSum":
        return DyadSum(np.conj(self.weights), self.bra1, self.ket1, self.bra2, self.ket2)

    def is_hermitian(self, tol: float = MERGE_TOL) -> bool:
        """Paired-term Hermiticity: every term has its conjugate partner."""
        for w, k1, b1, k2, b2 in zip(*self._cols()):
            match = ((np.abs(self.ket1 - b1) <= tol) & (np.abs(self.bra1 - k1) <= tol)
                     & (np.abs(self.ket2 - b2) <= tol) & (np.abs(self.bra2 - k2) <= tol))
            idx = np.flatnonzero(match)
            if idx.size != 1 or abs(self.weights[idx[0]] - np.conj(w)) > tol * max(1.0, abs(w)):
                return False
        return True

    def swap_modes(self) -> "DyadSum":
        return DyadSum(self.weights, self.ket2, self.bra2, self.ket1, self.bra1)

    def isclose(self, other: "DyadSum", tol: float = 1e-12) -> bool:
        """Term-wise comparison (order-insensitive)."""
        if len(self) != len(other):
            return False
        used = set()
        for w, k1, b1, k2, b2 in zip(*self._cols()):
            dist = (np.abs(other.weights - w) + np.abs(other.ket1 - k1) + np.abs(other.bra1 - b1)
                    + np.abs(other.ket2 - k2) + np.abs(other.bra2 - b2))
            j = int(np.argmin(dist))
            if dist[j] > tol or j in used:
                return False
            used.add(j)
        return True


def _merge_terms(w, k1, b1, k2, b2):
    keep = []
    weights = w.copy()
    for i in range(len(w)):
        for j in keep:
            if (abs(k1[i] - k1[j]) <= MERGE_TOL and abs(b1[i] - b1[j]) <= MERGE_TOL
                    and abs(k2[i] - k2[j]) <= MERGE_TOL and abs(b2[i] - b2[j]) <= MERGE_TOL):
                weights[j] += weights[i]
                break
        else:
            keep.append(i)
    idx = np.array(keep, dtype=int)
    return weights[idx], k1[idx], b1[idx], k2[idx], b2[idx]


def pure_state(coeffs, amps1, amps2, normalize=True) -> DyadSum:
    """Density operator of ``sum_j c_j |amps1_j>|amps2_j>``."""
    c = np.asarray(coeffs, dtype=complex)
    a1 = np.asarray(amps1, dtype=complex)
    a2 = np.asarray(amps2, dtype=complex)
    i, j = np.meshgrid(np.arange(len(c)), np.arange(len(c)), indexing="ij")
    i, j = i.ravel(), j.ravel()
    rho = DyadSum(c[i] * np.conj(c[j]), a1[i], a1[j], a2[i], a2[j])
    if normalize:
        norm = rho.trace().real
        if norm <= 0 or not math.isfinite(norm):
            raise DegenerateStateError("superposition has zero norm")
        rho = rho.scaled(1.0 / norm)
    return rho


def displace(state: DyadSum, x1, x2) -> DyadSum:
    """Return ``D1(x1) D2(x2) rho D1(x1)^+ D2(x2)^+``."""
    x1, x2 = amplitude(x1), amplitude(x2)
    phase = (displacement_phase(x1, state.ket1) * np.conj(displacement_phase(x1, state.bra1))
             * displacement_phase(x2, state.ket2) * np.conj(displacement_phase(x2, state.bra2)))
    return DyadSum(state.weights * phase, state.ket1 + x1, state.bra1 + x1,
                   state.ket2 + x2, state.bra2 + x2)


@dataclass(frozen=True)
class EcsSpec:
    """``(|a>|-a> + e^{i phase} |-a>|a>)/sqrt(N)``."""

    alpha: complex
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", amplitude(self.alpha))
        if not math.isfinite(self.phase):
            raise ValidationError("phase must be finite")

    @classmethod
    def plus(cls, alpha) -> "EcsSpec":
        return cls(alpha, 0.0)

    @classmethod
    def minus(cls, alpha) -> "EcsSpec":
        return cls(alpha, math.pi)

    @classmethod
    def from_label(cls, label: str, alpha) -> "EcsSpec":
        key = label.strip().lower().replace("_", "-")
        if key in ("plus", "c-plus", "c+", "+"):
            return cls.plus(alpha)
        if key in ("minus", "c-minus", "c-", "-"):
            return cls.minus(alpha)
        raise ValidationError(f"unknown state label {label!r} (expected plus or minus)")

    @property
    def label(self) -> str | None:
        p = self.phase % (2 * math.pi)
        if p == 0.0:
            return "plus"
        if abs(p - math.pi) < 1e-15:
            return "minus"
        return None


def ecs_normalization(spec: EcsSpec) -> float:
    """Norm ``N`` of the unnormalized superposition, ``2 + 2 cos(phase) e^{-4|a|^2}``."""
    a = spec.alpha
    n = 2.0 + 2.0 * math.cos(spec.phase) * math.exp(-4.0 * abs(a) ** 2)
    if n <= 1e-300 or (a == 0 and abs(math.cos(spec.phase) + 1) < 1e-15):
        raise DegenerateStateError(
            f"entangled coherent state with alpha={a} and phase={spec.phase} vanishes")
    return n


def build_ecs_state(spec: EcsSpec) -> DyadSum:
    """Normalized density operator of the entangled coherent state ``spec``."""
    n = ecs_normalization(spec)
    a = spec.alpha
    if a == 0:
        warnings.warn("alpha=0: entangled coherent state reduces to the two-mode vacuum",
                      DegenerateStateWarning, stacklevel=2)
    e = cmath.exp(1j * spec.phase)
    return pure_state([1 / math.sqrt(n), e / math.sqrt(n)], [a, -a], [-a, a], normalize=False)


def two_amplitude_state(beta, gamma, phase: float = 0.0) -> DyadSum:
    """Normalized ``(|b>|g> + e^{i phase}|g>|b>)/sqrt(N)`` for arbitrary amplitudes."""
    beta, gamma = amplitude(beta), amplitude(gamma)
    return pure_state([1.0, cmath.exp(1j * phase)], [beta, gamma], [gamma, beta])


@dataclass(frozen=True)
class CanonicalForm:
    x: complex
    alpha: complex
    global_phase: float


def canonicalize(beta, gamma, phase: float = 0.0) -> CanonicalForm:
    """Local displacement taking ``|b>|g> + e^{i phase}|g>|b>`` to ECS form.

    ``D(x) (x) D(x)`` with ``x = -(beta+gamma)/2`` maps the state onto
    ``e^{i global_phase}(|a>|-a> + e^{i phase}|-a>|a>)`` with ``a = beta + x``.
    The phase collects ``Im(x beta^*) + Im(x gamma^*)`` from the unitary
    displacement rule; ``phase`` itself is carried through unchanged.
    """
    beta, gamma = amplitude(beta), amplitude(gamma)
    if abs(beta - gamma) <= MERGE_TOL:
        raise DegenerateStateError("beta == gamma gives a product state with no ECS form")
    x = -0.5 * (beta + gamma)
    alpha = beta + x
    global_phase = (x * beta.conjugate()).imag + (x * gamma.conjugate()).imag
    return CanonicalForm(x=x, alpha=alpha, global_phase=global_phase)
