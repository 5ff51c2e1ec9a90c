import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ecsbell import fock
from ecsbell.coherent import EcsSpec, build_ecs_state
from ecsbell.decoherence import clock_from_r, damp_state
from ecsbell.errors import TruncationError, ValidationError
from ecsbell.parity import chsh_combination
from ecsbell.qubit import SINGLET


def test_coherent_vector_examples():
    t32 = fock.FockTruncation(32)
    vac = fock.coherent_vector(0, t32)
    assert vac.data[0] == 1 and np.all(vac.data[1:] == 0) and vac.tail_weight == 0
    ip = np.vdot(fock.coherent_ket(-1, t32), fock.coherent_ket(1, t32))
    assert abs(ip - math.exp(-2)) < 1e-12
    v = fock.coherent_vector(3, fock.FockTruncation(64))
    assert abs(np.linalg.norm(v.data) - 1) < 1e-12
    assert v.tail_weight < 1e-12


def test_tail_weight_against_direct_sum():
    lam = 9.0
    direct = sum(math.exp(n * math.log(lam) - math.lgamma(n + 1) - lam) for n in range(21, 200))
    assert fock.tail_weight(3.0, 20) == pytest.approx(direct, rel=1e-10)


def test_truncation_error_names_required_nmax():
    with pytest.raises(TruncationError) as err:
        fock.coherent_vector(6, fock.FockTruncation(32))
    need = err.value.required_n_max
    assert need > 32
    assert fock.tail_weight(6, need) < 1e-12 <= fock.tail_weight(6, need - 1)
    fock.coherent_vector(6, fock.FockTruncation(need))


def test_truncation_validation():
    with pytest.raises(ValidationError):
        fock.FockTruncation(0)
    with pytest.raises(ValidationError):
        fock.FockTruncation(2.5)


def test_displacement_examples(trunc64):
    assert_allclose(fock.displacement_matrix(0, trunc64), np.eye(trunc64.dim), atol=1e-15)
    a = 0.8 - 1.1j
    D = fock.displacement_matrix(a, trunc64)
    assert_allclose(D[:, 0], fock.coherent_ket(a, trunc64), atol=1e-12)


@pytest.mark.parametrize("a", [0.5, 1.2 + 1.6j, -2j])
def test_displacement_inverse_lower_half(a):
    # the lower-half statement needs headroom above the states it is tested on
    t = fock.FockTruncation(128)
    prod = fock.displacement_matrix(a, t) @ fock.displacement_matrix(-a, t)
    h = 33
    assert np.max(np.abs(prod[:h, :h] - np.eye(h))) < 1e-8


def test_displacement_lower_quarter_default(trunc64):
    D = fock.displacement_matrix(2.0, trunc64)
    h = trunc64.dim // 4
    assert np.max(np.abs((D.conj().T @ D)[:h, :h] - np.eye(h))) < 1e-12


def test_displacement_truncation_error():
    with pytest.raises(TruncationError):
        fock.displacement_matrix(4.0, fock.FockTruncation(16))


def test_displacement_composition_phase(trunc64):
    # D(a) D(b) = exp(i Im(a b*)) D(a + b)
    a, b = 0.3 + 0.2j, -0.1 + 0.4j
    lhs = fock.displacement_matrix(a, trunc64) @ fock.displacement_matrix(b, trunc64)
    rhs = np.exp(1j * (a * np.conj(b)).imag) * fock.displacement_matrix(a + b, trunc64)
    assert np.max(np.abs((lhs - rhs)[:16, :16])) < 1e-12


def test_parity_matrices(trunc64):
    even, odd, par = fock.parity_matrices(trunc64)
    assert_allclose(even + odd, np.eye(trunc64.dim))
    assert_allclose(par, even - odd)
    assert even[0, 0] == 1 and even[1, 1] == 0
    assert_allclose(par @ fock.coherent_ket(1.3j, trunc64), fock.coherent_ket(-1.3j, trunc64),
                    atol=1e-12)
    vac = np.zeros((trunc64.dim, trunc64.dim))
    vac[0, 0] = 1
    assert np.trace(vac @ par) == 1


def test_kraus_identity_and_coherent():
    t = fock.FockTruncation(40)
    rho = fock.from_dyad_sum(build_ecs_state(EcsSpec.minus(1.1)), t)
    same = fock.kraus_damp(rho, clock_from_r(0), t)
    assert_allclose(same.left, rho.left, atol=1e-15)
    clock = clock_from_r(0.6)
    a = 1.5 - 0.5j
    pure = np.outer(fock.coherent_ket(a, t), fock.coherent_ket(a, t).conj())
    target = np.outer(fock.coherent_ket(clock.t * a, t), fock.coherent_ket(clock.t * a, t).conj())
    assert np.max(np.abs(fock.kraus_damp_single(pure, clock, t) - target)) < 1e-9


def test_kraus_completeness(trunc64):
    ops = fock.kraus_operators(clock_from_r(0.7), trunc64)
    total = sum(K.T @ K for K in ops)
    assert_allclose(total, np.eye(trunc64.dim), atol=1e-12)


def test_projection_examples(trunc64):
    rho = fock.from_dyad_sum(build_ecs_state(EcsSpec.minus(1.0)), trunc64)
    proj = fock.project_to_qubit_basis(rho, 1.0, clock_from_r(0), trunc64)
    assert_allclose(proj.matrix, np.asarray(SINGLET), atol=1e-12)
    assert abs(proj.discarded_weight) < 1e-12


def test_projection_reports_out_of_span_weight(trunc64):
    # mix in a two-photon-per-mode component that the cat basis cannot hold
    rho = fock.from_dyad_sum(build_ecs_state(EcsSpec.minus(1.0)), trunc64)
    fock2 = np.zeros((trunc64.dim, trunc64.dim))
    fock2[2, 2] = 1
    noise = fock.product_operator(fock2, fock2)
    mixed = fock.TwoModeFockMatrix(np.concatenate([0.9 * rho.weights, [0.1]]),
                                   np.concatenate([rho.left, noise.left]),
                                   np.concatenate([rho.right, noise.right]))
    proj = fock.project_to_qubit_basis(mixed, 1.0, clock_from_r(0), trunc64)
    assert proj.discarded_weight > 0.05


def test_expectation_examples(trunc64):
    rho = fock.from_dyad_sum(build_ecs_state(EcsSpec.minus(1.4)), trunc64)
    eye = np.eye(trunc64.dim)
    assert fock.expectation(rho, (eye, eye)) == pytest.approx(1.0)
    par = fock.parity_matrices(trunc64).parity
    assert abs(fock.expectation(rho, (par, par)) + 1) < 1e-10
    with pytest.raises(ValidationError):
        fock.expectation(rho, (np.eye(3), np.eye(3)))
    with pytest.raises(ValidationError):
        fock.expectation(np.eye(3), np.eye(4))


def test_expectation_hermitian_is_real():
    rng = np.random.default_rng(2)
    n = 12
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = x @ x.conj().T
    rho /= np.trace(rho)
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = h + h.conj().T
    assert abs(fock.expectation(rho, h).imag) < 1e-12


def test_truncation_convergence():
    state = damp_state(build_ecs_state(EcsSpec.minus(3.0)), clock_from_r(0.2))
    s = (0.05j, -0.05j, -0.15j, 0.15j)
    values = []
    for n in (32, 64):
        # at n_max=32 an amplitude near 3 leaks ~2e-10, above the default tolerance
        t = fock.FockTruncation(n, leakage_tol=1e-9)
        rho = fock.from_dyad_sum(state, t)
        c = [fock.expectation(rho, (fock.displaced_parity_matrix(x, t),
                                    fock.displaced_parity_matrix(y, t))).real
             for x, y in ((s[0], s[1]), (s[0], s[3]), (s[2], s[1]), (s[2], s[3]))]
        values.append(c[0] + c[1] + c[2] - c[3])
    assert abs(values[0] - values[1]) < 1e-9
    assert abs(values[1] - chsh_combination(state, *s)) < 1e-9


def test_dense_guard():
    t = fock.FockTruncation(64)
    rho = fock.from_dyad_sum(build_ecs_state(EcsSpec.minus(1.0)), t)
    with pytest.raises(ValidationError):
        rho.dense()
