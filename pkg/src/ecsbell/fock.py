"""Truncated Fock-basis oracle.

Brute-force counterparts of every closed form in the package.  Nothing here
uses Gaussian overlap algebra: coherent states come from their number-state
series, displacements from the Laguerre matrix elements, damping from the
binomial Kraus operators.

Two-mode operators are kept as weighted sums of Kronecker products
``sum_j w_j A_j (x) B_j`` of single-mode matrices, which keeps n_max = 64
cheap; :meth:`TwoModeFockMatrix.dense` materializes the full matrix when a
spectrum is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import eval_genlaguerre, gammainc, gammaln

from .coherent import DyadSum, amplitude
from .decoherence import DecoherenceClock
from .errors import TruncationError, ValidationError


@dataclass(frozen=True)
class FockTruncation:
    n_max: int = 64
    leakage_tol: float = 1e-12

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValidationError(f"n_max must be a positive integer, got {self.n_max}")

    @property
    def dim(self) -> int:
        return self.n_max + 1


DEFAULT_TRUNCATION = FockTruncation()


def tail_weight(alpha, n_max: int) -> float:
    """Poisson weight ``e^{-|a|^2} sum_{n > n_max} |a|^{2n}/n!`` lost by truncating."""
    lam = abs(complex(alpha)) ** 2
    return 0.0 if lam == 0.0 else float(gammainc(n_max + 1, lam))


def required_n_max(alpha, leakage_tol: float) -> int:
    n = 1
    while tail_weight(alpha, n) >= leakage_tol:
        n += 1
    return n


@dataclass(frozen=True)
class FockVector:
    data: np.ndarray
    tail_weight: float


def coherent_vector(alpha, trunc: FockTruncation = DEFAULT_TRUNCATION) -> FockVector:
    """Number-state expansion of ``|alpha>``, renormalized on the truncated basis."""
    alpha = amplitude(alpha)
    tail = tail_weight(alpha, trunc.n_max)
    if tail >= trunc.leakage_tol:
        need = required_n_max(alpha, trunc.leakage_tol)
        raise TruncationError(
            f"|alpha|={abs(alpha):.3g} leaks {tail:.2e} beyond n_max={trunc.n_max}; "
            f"need n_max >= {need}", required_n_max=need)
    c = np.empty(trunc.dim, dtype=complex)
    c[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, trunc.dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    c /= np.linalg.norm(c)
    return FockVector(c, tail)


def coherent_ket(alpha, trunc: FockTruncation = DEFAULT_TRUNCATION) -> np.ndarray:
    return coherent_vector(alpha, trunc).data


def displacement_matrix(alpha, trunc: FockTruncation = DEFAULT_TRUNCATION,
                        check: bool = True, check_block: int | None = None) -> np.ndarray:
    """``<m|D(alpha)|n>`` from the associated-Laguerre closed form.

    The elements themselves are exact; truncation only spoils ``D^+ D = 1``
    near the top of the basis.  The defect is checked on the lowest
    ``check_block`` states (default a quarter of the basis).
    """
    alpha = amplitude(alpha)
    x = abs(alpha) ** 2
    dim = trunc.dim
    m, n = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    lo, hi = np.minimum(m, n), np.maximum(m, n)
    k = hi - lo
    log_ratio = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1))
    lag = eval_genlaguerre(lo, k, x)
    base = np.where(m >= n, alpha, -np.conj(alpha))
    if alpha == 0:
        powers = (k == 0).astype(complex)
    else:
        powers = np.exp(k * np.log(base.astype(complex)))
    D = np.exp(log_ratio - 0.5 * x) * powers * lag
    if check:
        h = check_block or max(dim // 4, 1)
        defect = np.max(np.abs((D.conj().T @ D)[:h, :h] - np.eye(h)))
        if defect > 1e-8:
            raise TruncationError(
                f"displacement D({alpha:.3g}) not unitary on the lowest {h} states "
                f"(defect {defect:.2e}) at n_max={trunc.n_max}")
    return D


class ParityMatrices(NamedTuple):
    even: np.ndarray
    odd: np.ndarray
    parity: np.ndarray


def parity_matrices(trunc: FockTruncation = DEFAULT_TRUNCATION) -> ParityMatrices:
    n = np.arange(trunc.dim)
    even = np.diag((n % 2 == 0).astype(float))
    odd = np.diag((n % 2 == 1).astype(float))
    return ParityMatrices(even, odd, even - odd)


def displaced_parity_matrix(d, trunc: FockTruncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """``D(d) Pi D(d)^+`` as a truncated matrix."""
    D = displacement_matrix(d, trunc)
    sign = np.where(np.arange(trunc.dim) % 2 == 0, 1.0, -1.0)
    return (D * sign) @ D.conj().T


def kraus_operators(clock: DecoherenceClock, trunc: FockTruncation = DEFAULT_TRUNCATION):
    """Amplitude-damping Kraus operators ``K_k |n> = sqrt(C(n,k)) r^k t^(n-k) |n-k>``."""
    dim = trunc.dim
    t, r = clock.t, clock.r
    ops = []
    for k in range(dim):
        K = np.zeros((dim, dim))
        for n in range(k, dim):
            logc = 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))
            K[n - k, n] = math.exp(logc) * r ** k * t ** (n - k)
        ops.append(K)
        if r == 0.0:
            break
    return ops


def kraus_damp_single(A: np.ndarray, clock: DecoherenceClock,
                      trunc: FockTruncation = DEFAULT_TRUNCATION) -> np.ndarray:
    return sum(K @ A @ K.T for K in kraus_operators(clock, trunc))


@dataclass
class TwoModeFockMatrix:
    """``sum_j weights[j] * left[j] (x) right[j]`` on two truncated modes."""

    weights: np.ndarray
    left: np.ndarray   # (terms, dim, dim)
    right: np.ndarray  # (terms, dim, dim)
    modes: int = field(default=2, init=False)

    @property
    def dim(self) -> int:
        return self.left.shape[-1]

    def trace(self) -> complex:
        return complex(np.sum(self.weights * np.trace(self.left, axis1=1, axis2=2)
                              * np.trace(self.right, axis1=1, axis2=2)))

    def dense(self) -> np.ndarray:
        if self.dim ** 2 > 2500:
            raise ValidationError(f"refusing to materialize a {self.dim ** 2}-dimensional matrix")
        return np.einsum("j,jab,jcd->acbd", self.weights, self.left, self.right).reshape(
            self.dim ** 2, self.dim ** 2)

    def __sub__(self, other: "TwoModeFockMatrix") -> "TwoModeFockMatrix":
        return TwoModeFockMatrix(np.concatenate([self.weights, -other.weights]),
                                 np.concatenate([self.left, other.left]),
                                 np.concatenate([self.right, other.right]))


def product_operator(O1: np.ndarray, O2: np.ndarray) -> TwoModeFockMatrix:
    return TwoModeFockMatrix(np.ones(1, dtype=complex), np.asarray(O1)[None], np.asarray(O2)[None])


def pure_two_mode(psi: np.ndarray) -> TwoModeFockMatrix:
    """Density operator of a two-mode vector given as a ``(dim, dim)`` coefficient matrix."""
    u, s, vh = np.linalg.svd(psi)
    keep = s > 1e-15 * max(s[0], 1e-300)
    u, s, v = u[:, keep], s[keep], vh[keep].T
    i, j = np.meshgrid(np.arange(len(s)), np.arange(len(s)), indexing="ij")
    i, j = i.ravel(), j.ravel()
    left = np.einsum("ai,bi->iab", u[:, i], u[:, j].conj())
    right = np.einsum("ai,bi->iab", v[:, i], v[:, j].conj())
    return TwoModeFockMatrix((s[i] * s[j]).astype(complex), left, right)


def ecs_vector(alpha, phase: float, trunc: FockTruncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """Normalized ``|a>|-a> + e^{i phase}|-a>|a>`` as a coefficient matrix."""
    return superposition([1.0, np.exp(1j * phase)], [alpha, -alpha], [-alpha, alpha], trunc)


def superposition(coeffs, amps1, amps2, trunc: FockTruncation = DEFAULT_TRUNCATION) -> np.ndarray:
    psi = sum(c * np.outer(coherent_ket(a1, trunc), coherent_ket(a2, trunc))
              for c, a1, a2 in zip(coeffs, amps1, amps2))
    return psi / np.linalg.norm(psi)


def from_dyad_sum(state: DyadSum, trunc: FockTruncation = DEFAULT_TRUNCATION) -> TwoModeFockMatrix:
    """Fock image of a coherent dyad sum (no renormalization)."""
    left = np.stack([np.outer(coherent_ket(k, trunc), coherent_ket(b, trunc).conj())
                     for k, b in zip(state.ket1, state.bra1)])
    right = np.stack([np.outer(coherent_ket(k, trunc), coherent_ket(b, trunc).conj())
                      for k, b in zip(state.ket2, state.bra2)])
    return TwoModeFockMatrix(np.array(state.weights), left, right)


def kraus_damp(rho: TwoModeFockMatrix, clock: DecoherenceClock,
               trunc: FockTruncation = DEFAULT_TRUNCATION, trace_tol: float = 1e-10
               ) -> TwoModeFockMatrix:
    """Equal amplitude damping on both modes via Kraus sums on each factor."""
    ops = kraus_operators(clock, trunc)

    def channel(stack):
        return np.stack([sum(K @ A @ K.T for K in ops) for A in stack])

    out = TwoModeFockMatrix(rho.weights.copy(), channel(rho.left), channel(rho.right))
    drift = abs(out.trace() - rho.trace())
    if drift > trace_tol:
        raise TruncationError(f"Kraus evolution changed the trace by {drift:.2e}")
    return out


def expectation(rho, obs) -> complex:
    """``Tr(rho obs)``.

    ``rho`` is a single-mode matrix or a :class:`TwoModeFockMatrix`; for two
    modes ``obs`` may be a :class:`TwoModeFockMatrix` or a pair ``(O1, O2)``.
    """
    if isinstance(rho, TwoModeFockMatrix):
        if isinstance(obs, tuple):
            obs = product_operator(*obs)
        if not isinstance(obs, TwoModeFockMatrix) or obs.dim != rho.dim:
            raise ValidationError("observable does not match the two-mode state dimensions")
        t1 = np.einsum("iab,jba->ij", rho.left, obs.left)
        t2 = np.einsum("iab,jba->ij", rho.right, obs.right)
        return complex(np.einsum("i,j,ij,ij->", rho.weights, obs.weights, t1, t2))
    rho = np.asarray(rho)
    obs = np.asarray(obs)
    if rho.shape != obs.shape or rho.ndim != 2:
        raise ValidationError(f"dimension mismatch: {rho.shape} vs {obs.shape}")
    return complex(np.trace(rho @ obs))


def trace_distance(rho: TwoModeFockMatrix, sigma: TwoModeFockMatrix) -> float:
    diff = (rho - sigma).dense()
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def purity(rho: TwoModeFockMatrix) -> float:
    return expectation(rho, rho).real


def cat_vectors(alpha: float, clock: DecoherenceClock,
                trunc: FockTruncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """Rows ``|e(t)>`` and ``|d(t)>`` built and normalized in the Fock basis."""
    a = clock.t * alpha
    plus, minus = coherent_ket(a, trunc), coherent_ket(-a, trunc)
    e, d = plus + minus, plus - minus
    return np.stack([e / np.linalg.norm(e), d / np.linalg.norm(d)])


class QubitProjection(NamedTuple):
    matrix: np.ndarray
    discarded_weight: float


def project_to_qubit_basis(rho: TwoModeFockMatrix, alpha: float, clock: DecoherenceClock,
                           trunc: FockTruncation = DEFAULT_TRUNCATION) -> QubitProjection:
    """``<X_m|rho|X_n>`` over ``X in {ee, ed, de, dd}`` of the time-dependent cat basis."""
    basis = cat_vectors(alpha, clock, trunc)
    l = np.einsum("xa,jab,yb->jxy", basis.conj(), rho.left, basis)
    r = np.einsum("xa,jab,yb->jxy", basis.conj(), rho.right, basis)
    m = np.einsum("j,jik,jlm->ilkm", rho.weights, l, r).reshape(4, 4)
    return QubitProjection(m, float((rho.trace() - np.trace(m)).real))


def restricted_observable(alpha: float, clock: DecoherenceClock, x,
                          trunc: FockTruncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """2x2 matrix ``<x_m| D(x)^+ Pi D(x) |x_n>`` over the Fock-built cat basis."""
    basis = cat_vectors(alpha, clock, trunc)
    D = displacement_matrix(x, trunc)
    par = parity_matrices(trunc).parity
    op = D.conj().T @ par @ D
    return basis.conj() @ op @ basis.T
