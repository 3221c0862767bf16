import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from allpass.certificate import (W_matrix, certificate, certificate_residuals, complete_from_B,
                                 complete_from_BC, complete_from_C, f_identity_residual,
                                 is_allpass, normalize_D, residual_tol)
from allpass.exceptions import (NotAllPassError, NotMinimalError, NotObservableError,
                                NotReachableError, PreconditionError)
from allpass.generate import random_allpass
from allpass.linalg import inertia
from allpass.realization import StateSpace, allpass_defect, grid_distance

from conftest import A3, B3, C3, D3, P3, Q3


def test_mixed2_certificate(mixed2):
    cert = certificate(mixed2)
    np.testing.assert_allclose(cert.P0, P3, atol=1e-12)
    np.testing.assert_allclose(cert.Q0, Q3, atol=1e-12)
    assert max(cert.residuals.values()) < 1e-12
    assert inertia(cert.P0) == (1, 1, 0)  # one pole outside, one inside


def test_delay_certificate(delay):
    cert = certificate(delay)
    assert cert.P0[0, 0] == pytest.approx(-1.0)
    assert cert.Q0[0, 0] == pytest.approx(-1.0)


def test_constant_orthogonal():
    U = np.array([[0.6, -0.8], [0.8, 0.6]])
    v = is_allpass(StateSpace.constant(U))
    assert v and v.certificate.P0.shape == (0, 0)
    v = is_allpass(StateSpace.constant(2 * np.eye(2)))
    assert not v and v.defect == pytest.approx(3.0)


def test_certificate_matches_lyapunov_oracle(rng):
    # stable A: P0 = -sum A^k B B^T A^kT, which scipy computes as a Lyapunov solution
    for _ in range(10):
        s = random_allpass(rng, int(rng.integers(1, 6)), int(rng.integers(1, 4)), region="inside")
        cert = certificate(s)
        oracle = sla.solve_discrete_lyapunov(s.A, -s.B @ s.B.T)
        np.testing.assert_allclose(cert.P0, oracle, atol=1e-8)
        assert inertia(cert.P0).n_minus == s.n  # negative definite: inner function
        np.testing.assert_allclose(cert.P0 @ cert.Q0, np.eye(s.n), atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 5), st.integers(1, 3), st.integers(0, 2))
def test_certificate_properties(seed, n, m, n_zero):
    rng = np.random.default_rng(seed)
    n_zero = min(n_zero, n)
    s = random_allpass(rng, n, m, n_zero=n_zero)
    v = is_allpass(s)
    assert v, v.reason
    # the verdict's certificate lives in the coordinates of v.minimal_sys
    cert = certificate(s)
    P, Q = cert.P0, cert.Q0
    np.testing.assert_array_equal(P, P.T)
    np.testing.assert_array_equal(Q, Q.T)
    tol = residual_tol(s, P, 1e-9)
    assert max(certificate_residuals(s, P, Q).values(), default=0) <= tol
    assert f_identity_residual(s, P) <= tol
    if n:
        assert np.linalg.norm(P @ Q - np.eye(n)) <= 1e-7
    # point 1: A singular iff D singular
    sa = np.linalg.svd(s.A, compute_uv=False).min() if n else 1.0
    sd = np.linalg.svd(s.D, compute_uv=False).min()
    assert (sa <= 1e-8) == (sd <= 1e-8)
    assert (n_zero > 0) == (sd <= 1e-8)


def test_non_allpass_detected(mixed2, rng):
    bad = StateSpace(mixed2.A, mixed2.B, mixed2.C, mixed2.D * 1.01)
    v = is_allpass(bad)
    assert not v and v.reason
    s = StateSpace(np.diag([0.5]), [[1.0]], [[1.0]], [[0.0]])
    assert not is_allpass(s)


def test_certificate_requires_minimal(mixed2):
    A = np.diag([2.0, 0.5, 0.3])
    big = StateSpace(A, np.vstack([mixed2.B, np.zeros((1, 2))]),
                     np.hstack([mixed2.C, np.ones((2, 1))]), mixed2.D)
    with pytest.raises(NotMinimalError):
        certificate(big)
    v = is_allpass(big)  # non-minimal but still all-pass after reduction
    assert v and v.minimal_sys.n == 2


def test_W_matrix_rank(mixed2):
    W = W_matrix(mixed2.A, mixed2.B, np.linalg.inv(P3))
    w = np.linalg.eigvalsh(W)
    assert w.min() > -1e-12
    assert np.sum(w > 1e-9) == 2
    # W = [C | D]^T [C | D]
    F = np.hstack([C3, D3])
    np.testing.assert_allclose(W, F.T @ F, atol=1e-12)


# --- completion --------------------------------------------------------------

def test_complete_from_C_mixed2_q0():
    B, D = complete_from_C(A3, C3, Q3)
    np.testing.assert_allclose(B, B3, atol=1e-9)
    np.testing.assert_allclose(D, D3, atol=1e-9)


def test_complete_from_C_mixed2_q_one_sixth():
    # reference values, known to two decimals
    Q = np.array([[1 / 3, 1 / 6], [1 / 6, -4 / 3]])
    B, D = complete_from_C(A3, C3, Q)
    np.testing.assert_allclose(D, [[1.95, 0.14], [0.14, 0.52]], atol=0.01)
    np.testing.assert_allclose(B, [[2.85, 0.57], [0.14, -0.71]], atol=0.01)
    np.testing.assert_allclose(D, D.T)
    assert np.linalg.eigvalsh(D).min() >= 0
    s = StateSpace(A3, B, C3, D)
    assert allpass_defect(s) < 1e-12
    # a genuinely different function from q = 0
    assert grid_distance(s, StateSpace(A3, B3, C3, D3)) > 0.1


def test_complete_from_B_roundtrip(rng):
    for _ in range(10):
        s = random_allpass(rng, int(rng.integers(1, 6)), int(rng.integers(1, 4)))
        P = certificate(s).P0
        C, D = complete_from_B(s.A, s.B, P)
        np.testing.assert_allclose(D, D.T, atol=1e-12)
        assert np.linalg.eigvalsh(D).min() >= -1e-10
        # same function up to a left orthogonal factor: Q Q^T = I on the circle is
        # not enough, compare Q(z)^T Q(w) which is gauge invariant
        t = StateSpace(s.A, s.B, C, D)
        for z, w in [(1j, 0.3 - 2j), (-1.5, 0.7j)]:
            np.testing.assert_allclose(s(z).T @ s(w), t(z).T @ t(w), atol=1e-8)


def test_complete_from_B_scalar_delay():
    C, D = complete_from_B([[0.0]], [[1.0]], [[-1.0]])
    assert abs(C[0, 0]) == pytest.approx(1.0)
    assert D[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_complete_errors():
    with pytest.raises(NotReachableError):
        complete_from_B(A3, [[1.0], [0.0]], P3)
    with pytest.raises(NotObservableError):
        complete_from_C(A3, [[1.0, 0.0]], Q3)
    with pytest.raises(PreconditionError, match="does not solve"):
        complete_from_C(A3, C3, np.eye(2))
    with pytest.raises(PreconditionError, match="symmetric"):
        complete_from_C(A3, C3, [[1 / 3, 0.1], [0.0, -4 / 3]])


def test_complete_from_BC(mixed2):
    D = complete_from_BC(A3, B3, C3, P3, Q3)
    np.testing.assert_allclose(D, D3, atol=1e-9)
    with pytest.raises(PreconditionError, match="P Q = I"):
        complete_from_BC(A3, B3, C3, P3, Q3 * 1.1)


def test_complete_from_BC_random(rng):
    s = random_allpass(rng, 4, 2)
    c = certificate(s)
    D = complete_from_BC(s.A, s.B, s.C, c.P0, c.Q0)
    np.testing.assert_allclose(D, s.D, atol=1e-8)


def test_normalize_D(rng):
    s = random_allpass(rng, 3, 2)
    t = normalize_D(s)
    np.testing.assert_allclose(t.D, t.D.T, atol=1e-12)
    assert np.linalg.eigvalsh(t.D).min() >= -1e-10
    with pytest.raises(NotAllPassError):
        normalize_D(StateSpace.constant(2 * np.eye(2)))
