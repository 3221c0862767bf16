"""Certificates of the all-pass property and completion of partial data.

For a minimal realization, ``Q(z)`` is all-pass exactly when there is a
symmetric ``P0`` with

    A P0 A^T - P0 = B B^T,   B D^T = A P0 C^T,   D D^T - C P0 C^T = I

and a symmetric ``Q0`` solving the dual set

    A^T Q0 A - Q0 = C^T C,   C^T D = A^T Q0 B,   D^T D - B^T Q0 B = I.

Both are unique and ``P0 Q0 = I``.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .config import DEFAULT_GRID, resolve_tol, scaled_tol
from .exceptions import (DimensionError, NotAllPassError, NotMinimalError,
                         NotObservableError, NotReachableError, PreconditionError)
from .linalg import (_sym_basis, as_matrix, inertia, polar_orthogonal, procrustes,
                     psd_rank_factor, sym_to_vec, symmetrize, vec_to_sym)
from .realization import (StateSpace, allpass_defect, minimal_realization,
                          observability_unobs_subspace, reachability_subspace)

__all__ = [
    "Certificate",
    "AllPassVerdict",
    "certificate",
    "certificate_residuals",
    "f_identity_residual",
    "is_allpass",
    "complete_from_B",
    "complete_from_C",
    "complete_from_BC",
    "normalize_D",
    "W_matrix",
    "residual_tol",
]

_P_KEYS = ("P_stein", "P_cross", "P_feedthrough")
_Q_KEYS = ("Q_stein", "Q_cross", "Q_feedthrough")


@dataclass(frozen=True)
class Certificate:
    P0: np.ndarray
    Q0: np.ndarray
    residuals: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class AllPassVerdict:
    is_allpass: bool
    certificate: Optional[Certificate]
    defect: float
    residuals: Dict[str, float]
    minimal_sys: Optional[StateSpace] = None
    reason: str = ""

    def __bool__(self):
        return self.is_allpass


def residual_tol(sys, X=None, tol=None):
    """Tolerance for equation residuals: ``tol * max(1, ||[A B; C D]||^2 * max(1, ||X||))``."""
    F = sys.system_matrix()
    scale = np.linalg.norm(F, 2) ** 2 if F.size else 1.0
    if X is not None and np.asarray(X).size:
        scale *= max(1.0, np.linalg.norm(X, 2))
    return resolve_tol(tol) * max(1.0, scale)


def certificate_residuals(sys, P=None, Q=None):
    """Frobenius norms of the six defining equations for the given ``P`` and/or ``Q``."""
    A, B, C, D = sys.matrices()
    I = np.eye(sys.m)
    out = {}
    if P is not None:
        out["P_stein"] = float(np.linalg.norm(A @ P @ A.T - P - B @ B.T))
        out["P_cross"] = float(np.linalg.norm(B @ D.T - A @ P @ C.T))
        out["P_feedthrough"] = float(np.linalg.norm(D @ D.T - C @ P @ C.T - I))
    if Q is not None:
        out["Q_stein"] = float(np.linalg.norm(A.T @ Q @ A - Q - C.T @ C))
        out["Q_cross"] = float(np.linalg.norm(C.T @ D - A.T @ Q @ B))
        out["Q_feedthrough"] = float(np.linalg.norm(D.T @ D - B.T @ Q @ B - I))
    return out


def f_identity_residual(sys, P):
    """``||F X F^T - X||`` with ``F = [[A, B], [C, D]]`` and ``X = diag(P, -I)``."""
    F = sys.system_matrix()
    X = np.zeros_like(F)
    n = sys.n
    X[:n, :n] = P
    X[n:, n:] = -np.eye(sys.m)
    return float(np.linalg.norm(F @ X @ F.T - X))


def _solve_stacked(blocks, rhs, n):
    """Least-squares symmetric solution of a stack of linear matrix equations.

    ``blocks`` maps a symmetric matrix to the list of equation left-hand sides
    (already vectorized); ``rhs`` is the matching vector.
    """
    if n == 0:
        return np.zeros((0, 0))
    L = np.column_stack([blocks(E) for E in _sym_basis(n)])
    x, *_ = np.linalg.lstsq(L, rhs, rcond=None)
    return vec_to_sym(x, n)


def _solve_P(sys):
    A, B, C, D = sys.matrices()
    I = np.eye(sys.m)

    def lhs(E):
        return np.concatenate([sym_to_vec(A @ E @ A.T - E), (A @ E @ C.T).ravel(),
                               sym_to_vec(C @ E @ C.T)])

    rhs = np.concatenate([sym_to_vec(B @ B.T), (B @ D.T).ravel(), sym_to_vec(D @ D.T - I)])
    return _solve_stacked(lhs, rhs, sys.n)


def _solve_Q(sys):
    A, B, C, D = sys.matrices()
    I = np.eye(sys.m)

    def lhs(E):
        return np.concatenate([sym_to_vec(A.T @ E @ A - E), (A.T @ E @ B).ravel(),
                               sym_to_vec(B.T @ E @ B)])

    rhs = np.concatenate([sym_to_vec(C.T @ C), (C.T @ D).ravel(), sym_to_vec(D.T @ D - I)])
    return _solve_stacked(lhs, rhs, sys.n)


def certificate(sys, tol=None, check_minimal=True):
    """The unique symmetric pair ``(P0, Q0)`` of a minimal all-pass realization.

    Each triple of equations is stacked into one overdetermined linear system
    in the symmetric unknown and solved by least squares.  The Stein part
    alone is singular for mixed ``A``; the full stack is not.

    Raises
    ------
    NotMinimalError
        If ``check_minimal`` and the realization is not minimal.
    NotAllPassError
        If a residual exceeds the tolerance or ``P0 Q0 != I``.
    """
    if check_minimal:
        _, report = minimal_realization(sys, tol)
        if not report.minimal:
            raise NotMinimalError(
                f"realization has {sys.n} states but McMillan degree {report.mcmillan}")
    P0 = _solve_P(sys)
    Q0 = _solve_Q(sys)
    res = certificate_residuals(sys, P0, Q0)
    n = sys.n
    res["PQ_inverse"] = float(np.linalg.norm(P0 @ Q0 - np.eye(n))) if n else 0.0
    bound_p = residual_tol(sys, P0, tol)
    bound_q = residual_tol(sys, Q0, tol)
    bad = [k for k in _P_KEYS if res[k] > bound_p] + [k for k in _Q_KEYS if res[k] > bound_q]
    if n and res["PQ_inverse"] > resolve_tol(tol) * max(
            1.0, np.linalg.norm(P0, 2) * np.linalg.norm(Q0, 2)) * 10:
        bad.append("PQ_inverse")
    if bad:
        raise NotAllPassError("certificate equations not satisfied: " + ", ".join(
            f"{k}={res[k]:.3e}" for k in bad))
    return Certificate(P0, Q0, res)


def is_allpass(sys, tol=None, grid_size=DEFAULT_GRID):
    """Decide the all-pass property.

    The realization is reduced to a minimal one, the certificate is attempted
    and the result is cross-checked against the unit-circle defect.  Failures
    are reported in the verdict, never raised.
    """
    minimal, _ = minimal_realization(sys, tol)
    defect = allpass_defect(minimal, grid_size)
    try:
        cert = certificate(minimal, tol, check_minimal=False)
        residuals, reason = dict(cert.residuals), ""
    except NotAllPassError as exc:
        cert, reason = None, str(exc)
        residuals = certificate_residuals(minimal, _solve_P(minimal), _solve_Q(minimal))
    bound = residual_tol(minimal, None if cert is None else cert.P0, tol)
    ok = bool(cert is not None and defect <= bound)
    if cert is not None and not ok:
        reason = f"grid defect {defect:.3e} exceeds {bound:.3e}"
    return AllPassVerdict(ok, cert, defect, residuals, minimal, reason)


def W_matrix(A, B, Q):
    """``[[A^T Q A - Q, A^T Q B], [B^T Q A, B^T Q B + I]]``."""
    m = B.shape[1]
    return symmetrize(np.block([[A.T @ Q @ A - Q, A.T @ Q @ B],
                                [B.T @ Q @ A, B.T @ Q @ B + np.eye(m)]]))


def _matrix_pair(A, X, name):
    """Square ``A`` and an ``n x k`` companion; 0-state data must be 2-D already."""
    A = np.asarray(A, dtype=float)
    A = A.reshape(0, 0) if A.size == 0 else as_matrix(A, "A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError("A must be square")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        if n == 0:
            raise DimensionError(f"{name} must be a 2-D array when A is empty")
        X = X.reshape(n, -1)
    if X.shape[0] != n:
        raise DimensionError(f"{name} must have {n} rows, got {X.shape}")
    return A, X


def _sym_input(S, n, name, tol):
    S = np.array(S, dtype=float).reshape(n, n)
    if np.linalg.norm(S - S.T) > scaled_tol(tol, S):
        raise PreconditionError(f"{name} is not symmetric")
    return symmetrize(S)


def _invert(S, name, tol):
    n = S.shape[0]
    if n == 0:
        return S.copy()
    s = np.linalg.svd(S, compute_uv=False)
    if s[-1] <= scaled_tol(tol, S):
        raise PreconditionError(f"{name} is singular")
    return symmetrize(np.linalg.inv(S))


def _verify(sys, P, tol, label):
    res = certificate_residuals(sys, P=P)
    bound = residual_tol(sys, P, tol)
    if max(res.values(), default=0.0) > bound:
        raise NotAllPassError(f"{label}: completed quadruple violates the P-equations {res}")
    verdict = is_allpass(sys, tol)
    if not verdict:
        raise NotAllPassError(f"{label}: completed quadruple is not all-pass ({verdict.reason})")


def complete_from_B(A, B, P, tol=None):
    """Complete a reachable pair (A, B) to an all-pass quadruple.

    ``P`` must solve ``A P A^T - P = B B^T``.  With ``Q = P^{-1}`` the matrix
    ``W = [[A^T Q A - Q, A^T Q B], [B^T Q A, B^T Q B + I]]`` is PSD of rank m;
    its factor ``W = [C | D]^T [C | D]`` gives the completion, and the left
    orthogonal gauge is fixed so that ``D = D^T >= 0``.

    Returns
    -------
    (C, D)
    """
    A, B = _matrix_pair(A, B, "B")
    n, m = B.shape
    if reachability_subspace(A, B, tol).dim != n:
        raise NotReachableError("(A, B) is not reachable")
    P = _sym_input(P, n, "P", tol)
    stein = np.linalg.norm(A @ P @ A.T - P - B @ B.T)
    if stein > resolve_tol(tol) * max(1.0, np.linalg.norm(A, 2) ** 2 * np.linalg.norm(P, 2),
                                      np.linalg.norm(B, 2) ** 2):
        raise PreconditionError(f"P does not solve A P A^T - P = B B^T (residual {stein:.3e})")
    Q = _invert(P, "P", tol)
    F = psd_rank_factor(W_matrix(A, B, Q), m, tol)
    C, D = F[:, :n], F[:, n:]
    U = polar_orthogonal(D.T).T
    C, D = U @ C, symmetrize(U @ D)
    if inertia(np.eye(m) + B.T @ Q @ B, tol).n_minus:
        raise PreconditionError("I + B^T P^{-1} B is not positive semidefinite")
    _verify(StateSpace(A, B, C, D), P, tol, "complete_from_B")
    return C, D


def complete_from_C(A, C, Q, tol=None):
    """Complete an observable pair (A, C); dual of :func:`complete_from_B`.

    Returns
    -------
    (B, D)
        With the right orthogonal gauge fixed so that ``D = D^T >= 0``.
    """
    A, Ct = _matrix_pair(A, np.asarray(C, dtype=float).T, "C^T")
    C = Ct.T
    n, m = A.shape[0], C.shape[0]
    if n - observability_unobs_subspace(A, C, tol).dim != n:
        raise NotObservableError("(A, C) is not observable")
    Q = _sym_input(Q, n, "Q", tol)
    stein = np.linalg.norm(A.T @ Q @ A - Q - C.T @ C)
    if stein > resolve_tol(tol) * max(1.0, np.linalg.norm(A, 2) ** 2 * np.linalg.norm(Q, 2),
                                      np.linalg.norm(C, 2) ** 2):
        raise PreconditionError(f"Q does not solve A^T Q A - Q = C^T C (residual {stein:.3e})")
    P = _invert(Q, "Q", tol)
    F = psd_rank_factor(W_matrix(A.T, C.T, P), m, tol)
    B, D = F[:, :n].T, F[:, n:].T
    U = polar_orthogonal(D)
    B, D = B @ U, symmetrize(D @ U)
    if inertia(np.eye(m) + C @ P @ C.T, tol).n_minus:
        raise PreconditionError("I + C Q^{-1} C^T is not positive semidefinite")
    _verify(StateSpace(A, B, C, D), P, tol, "complete_from_C")
    return B, D


def complete_from_BC(A, B, C, P, Q, tol=None):
    """Find ``D`` making (A, B, C, D) all-pass, given ``P`` and ``Q = P^{-1}``.

    ``W`` built from (A, B, Q) is factored as ``[C0 | D0]^T [C0 | D0]``; the
    orthogonal ``U`` with ``C = U C0`` is found by Procrustes and ``D = U D0``.
    """
    A, B = _matrix_pair(A, B, "B")
    n, m = B.shape
    C = np.array(C, dtype=float).reshape(m, n)
    P = _sym_input(P, n, "P", tol)
    Q = _sym_input(Q, n, "Q", tol)
    t = resolve_tol(tol)
    checks = {
        "A P A^T - P = B B^T": np.linalg.norm(A @ P @ A.T - P - B @ B.T)
        / max(1.0, np.linalg.norm(A, 2) ** 2 * np.linalg.norm(P, 2), np.linalg.norm(B, 2) ** 2),
        "A^T Q A - Q = C^T C": np.linalg.norm(A.T @ Q @ A - Q - C.T @ C)
        / max(1.0, np.linalg.norm(A, 2) ** 2 * np.linalg.norm(Q, 2), np.linalg.norm(C, 2) ** 2),
        "P Q = I": np.linalg.norm(P @ Q - np.eye(n))
        / max(1.0, np.linalg.norm(P, 2) * np.linalg.norm(Q, 2)) if n else 0.0,
    }
    failed = [k for k, v in checks.items() if v > t]
    if failed:
        raise PreconditionError("precondition violated: " + "; ".join(
            f"{k} (relative residual {checks[k]:.3e})" for k in failed))
    F = psd_rank_factor(W_matrix(A, B, Q), m, tol)
    C0, D0 = F[:, :n], F[:, n:]
    U = procrustes(C0, C)
    if np.linalg.norm(U @ C0 - C) > scaled_tol(tol, C, C0) * 10:
        raise PreconditionError("no orthogonal U with C = U C0: C is incompatible with Q")
    D = U @ D0
    _verify(StateSpace(A, B, C, D), P, tol, "complete_from_BC")
    return D


def normalize_D(sys, tol=None):
    """Right-multiply by the orthogonal polar factor so that ``D = D^T >= 0``."""
    verdict = is_allpass(sys, tol)
    if not verdict:
        raise NotAllPassError(f"normalize_D needs an all-pass input ({verdict.reason})")
    U = polar_orthogonal(sys.D)
    return StateSpace(sys.A, sys.B @ U, sys.C, symmetrize(sys.D @ U))
