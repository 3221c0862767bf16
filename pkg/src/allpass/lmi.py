"""Rank-constrained LMIs and their solution families.

For a realization (A, B, C, D) with m inputs,

    M(P) = [[A P A^T - P, A P C^T], [C P A^T, C P C^T + I]]
    N(Q) = [[A^T Q A - Q, A^T Q B], [B^T Q A, B^T Q B + I]]

and the constrained problems ask for ``M(P) >= 0, rank M(P) = m`` (and the
dual in Q).  Solutions come in families indexed by invariant subspaces: for
a nonsingular solution ``P_ns`` and an A^T-invariant ``Y`` with orthogonal
projector ``Pi``,

    P = [(I - Pi) P_ns^{-1} (I - Pi)]^+

is again a solution with kernel ``Y``.  When A is mixed (some eigenvalues
multiply to 1) the nonsingular solutions themselves form families
``(P0^{-1} + Delta)^{-1}`` with ``A^T Delta A = Delta``.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .certificate import certificate as _certificate
from .config import resolve_tol, scaled_tol
from .exceptions import ClmiError, DimensionError, NotInvariantError, PreconditionError
from .linalg import (Subspace, as_matrix, invariant_subspaces, numerical_rank,
                     psd_rank_factor, solve_stein_sym, symmetrize)

log = logging.getLogger(__name__)

__all__ = [
    "M_of",
    "N_of",
    "LmiSolutionP",
    "LmiSolutionQ",
    "ClmiReport",
    "DeltaSpace",
    "check_clmi",
    "delta_space",
    "nonsingular_family_member",
    "solution_from_subspace_P",
    "solution_from_subspace_Q",
    "complementary",
    "riccati_residual_P",
    "riccati_residual_Q",
    "enumerate_solutions",
]


def _pair(A, X, name, rows):
    A = np.asarray(A, dtype=float)
    A = A.reshape(0, 0) if A.size == 0 else as_matrix(A, "A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError("A must be square")
    X = np.asarray(X, dtype=float)
    if n == 0:
        if X.ndim != 2:
            raise DimensionError(f"{name} must be 2-D when A is empty")
        return A, X
    X = X.reshape((-1, n) if rows else (n, -1))
    return A, X


def _square(X, n, name):
    X = np.asarray(X, dtype=float)
    if X.size != n * n:
        raise DimensionError(f"{name} must be {n} x {n}, got shape {X.shape}")
    return X.reshape(n, n)


def M_of(P, A, C):
    """``[[A P A^T - P, A P C^T], [C P A^T, C P C^T + I]]``."""
    A, C = _pair(A, C, "C", rows=True)
    n, m = A.shape[0], C.shape[0]
    P = _square(P, n, "P")
    return symmetrize(np.block([[A @ P @ A.T - P, A @ P @ C.T],
                                [C @ P @ A.T, C @ P @ C.T + np.eye(m)]]))


def N_of(Q, A, B):
    """``[[A^T Q A - Q, A^T Q B], [B^T Q A, B^T Q B + I]]``."""
    A, B = _pair(A, B, "B", rows=False)
    n, m = B.shape
    Q = _square(Q, n, "Q")
    return symmetrize(np.block([[A.T @ Q @ A - Q, A.T @ Q @ B],
                                [B.T @ Q @ A, B.T @ Q @ B + np.eye(m)]]))


@dataclass(frozen=True, eq=False)
class LmiSolutionP:
    """Solution ``P`` with ``M(P) = [G; L] [G^T | L^T]``.

    ``base`` is the nonsingular solution the family member was built from
    (``None`` when unknown) and ``kernel`` the A^T-invariant subspace ``ker P``.
    """

    P: np.ndarray
    kernel: Subspace
    G: np.ndarray
    L: np.ndarray
    base: Optional[np.ndarray] = None

    @property
    def rank(self):
        return self.P.shape[0] - self.kernel.dim


@dataclass(frozen=True, eq=False)
class LmiSolutionQ:
    """Solution ``Q`` with ``N(Q) = [H | J]^T [H | J]``; ``kernel`` is A-invariant."""

    Q: np.ndarray
    kernel: Subspace
    H: np.ndarray
    J: np.ndarray
    base: Optional[np.ndarray] = None

    @property
    def rank(self):
        return self.Q.shape[0] - self.kernel.dim


@dataclass(frozen=True)
class ClmiReport:
    passed: bool
    rank: int
    min_eig: float
    eigenvalues: np.ndarray
    factor: Optional[np.ndarray] = None
    reason: str = ""

    def __bool__(self):
        return self.passed


@dataclass(frozen=True)
class DeltaSpace:
    """Bases of ``{D : A^T D A = D}`` (``basis_p``) and ``{D : A D A^T = D}`` (``basis_q``)."""

    basis_p: List[np.ndarray] = field(default_factory=list)
    basis_q: List[np.ndarray] = field(default_factory=list)


def check_clmi(X, A, other, side="P", tol=None):
    """Test ``M(X) >= 0, rank M(X) = m`` (``side="P"``, ``other = C``) or the
    dual ``N(X)`` condition (``side="Q"``, ``other = B``).

    The rank is counted with the relative threshold ``tol * max(1, max|eig|)``.
    On success the report carries the full-row-rank factor ``F`` with
    ``F^T F = M(X)`` (resp. ``N(X)``).
    """
    if side not in ("P", "Q"):
        raise ValueError("side must be 'P' or 'Q'")
    W = (M_of if side == "P" else N_of)(X, A, other)
    m = W.shape[0] - np.asarray(A).shape[0]
    w = np.linalg.eigvalsh(W)[::-1]
    thr = resolve_tol(tol) * max(1.0, float(np.max(np.abs(w))))
    rank = int(np.sum(w > thr))
    min_eig = float(w[-1])
    if min_eig < -thr:
        return ClmiReport(False, rank, min_eig, w, reason=f"indefinite (min eigenvalue {min_eig:.3e})")
    if rank != m:
        return ClmiReport(False, rank, min_eig, w, reason=f"rank {rank}, expected {m}")
    F = psd_rank_factor(W, m, thr / max(1.0, np.linalg.norm(W, 2)))
    return ClmiReport(True, rank, min_eig, w, F)


def _split_factor(F, n, side):
    if side == "P":
        # M(P) = [G; L][G; L]^T, so [G; L] = F^T
        return F[:, :n].T, F[:, n:].T
    return F[:, :n], F[:, n:]


def delta_space(A, tol=None):
    """Homogeneous Stein solution spaces; both empty exactly when A is unmixed."""
    A = as_matrix(A, "A")
    n = A.shape[0]
    zero = np.zeros((n, n))
    return DeltaSpace(solve_stein_sym(A, zero, transpose_form=True, tol=tol).homogeneous_basis,
                      solve_stein_sym(A, zero, transpose_form=False, tol=tol).homogeneous_basis)


def _cert(sys, cert, tol):
    return _certificate(sys, tol) if cert is None else cert


def nonsingular_family_member(sys, delta, side="P", cert=None, tol=None):
    """``(P0^{-1} + delta)^{-1}`` (``side="P"``) or ``(Q0^{-1} + delta)^{-1}``.

    ``delta`` must solve ``A^T delta A = delta`` (resp. ``A delta A^T = delta``).
    The result is checked against the CLMI with full rank.

    Raises
    ------
    PreconditionError
        If ``delta`` is not in the homogeneous space or the sum is singular.
    ClmiError
        If the result fails the CLMI (numerical breakdown).
    """
    A = sys.A
    n = sys.n
    cert = _cert(sys, cert, tol)
    delta = np.asarray(delta, dtype=float).reshape(n, n)
    if np.linalg.norm(delta - delta.T) > scaled_tol(tol, delta):
        raise PreconditionError("delta is not symmetric")
    delta = symmetrize(delta)
    if side == "P":
        hom, inv0 = A.T @ delta @ A - delta, cert.Q0
    elif side == "Q":
        hom, inv0 = A @ delta @ A.T - delta, cert.P0
    else:
        raise ValueError("side must be 'P' or 'Q'")
    if np.linalg.norm(hom) > scaled_tol(tol, delta) * max(1.0, np.linalg.norm(A, 2) ** 2):
        raise PreconditionError(f"delta is not a homogeneous Stein solution (residual "
                                f"{np.linalg.norm(hom):.3e})")
    S = inv0 + delta
    if n and np.linalg.svd(S, compute_uv=False)[-1] <= scaled_tol(tol, S):
        raise PreconditionError("P0^{-1} + delta is singular; delta is not a valid family member")
    X = symmetrize(np.linalg.inv(S)) if n else S
    other = sys.C if side == "P" else sys.B
    report = check_clmi(X, A, other, side, tol)
    if not report:
        raise ClmiError(f"family member fails the CLMI: {report.reason}")
    return X


def _from_subspace(sys, X_ns, S, side, tol):
    A = sys.A
    n = sys.n
    X_ns = symmetrize(np.asarray(X_ns, dtype=float).reshape(n, n))
    if S.ambient_dim != n:
        raise DimensionError(f"subspace lives in R^{S.ambient_dim}, expected R^{n}")
    Ainv = A.T if side == "P" else A
    if not S.is_invariant(Ainv, tol):
        which = "A^T" if side == "P" else "A"
        raise NotInvariantError(f"subspace is not {which}-invariant "
                                f"(residual {S.invariance_residual(Ainv):.3e})")
    if n and np.linalg.svd(X_ns, compute_uv=False)[-1] <= scaled_tol(tol, X_ns):
        raise PreconditionError("base solution must be nonsingular")
    inv = symmetrize(np.linalg.inv(X_ns)) if n else X_ns
    # [(I - Pi) inv (I - Pi)]^+ evaluated in an orthonormal basis V of S-perp:
    # (I - Pi) inv (I - Pi) = V (V^T inv V) V^T, whose pseudoinverse is
    # V (V^T inv V)^{-1} V^T as long as the compression is nonsingular.
    V = S.perp().basis
    if V.shape[1]:
        core = V.T @ inv @ V
        if np.linalg.svd(core, compute_uv=False)[-1] <= scaled_tol(tol, core):
            raise PreconditionError("compressed inverse is singular on the complement")
        X = symmetrize(V @ np.linalg.solve(core, V.T))
    else:
        X = np.zeros((n, n))
    other = sys.C if side == "P" else sys.B
    report = check_clmi(X, A, other, side, tol)
    if not report:
        raise ClmiError(f"constructed solution fails the CLMI: {report.reason}")
    F1, F2 = _split_factor(report.factor, n, side)
    cls = LmiSolutionP if side == "P" else LmiSolutionQ
    return cls(X, S, F1, F2, X_ns)


def solution_from_subspace_P(sys, P_ns, Y, tol=None):
    """Solution of the P-CLMI with kernel ``Y`` (A^T-invariant), built from the
    nonsingular solution ``P_ns``."""
    return _from_subspace(sys, P_ns, Y, "P", tol)


def solution_from_subspace_Q(sys, Q_ns, X, tol=None):
    """Solution of the Q-CLMI with kernel ``X`` (A-invariant), built from ``Q_ns``."""
    return _from_subspace(sys, Q_ns, X, "Q", tol)


def complementary(sys, sol, cert=None, tol=None):
    """The Q-solution paired with ``sol``: built over ``Q0`` from ``X = ker(P)^perp``.

    Raises
    ------
    PreconditionError
        If ``sol`` does not belong to the family generated by ``P0``.
    """
    cert = _cert(sys, cert, tol)
    n = sys.n
    expected = _from_subspace(sys, cert.P0, sol.kernel, "P", tol).P
    gap = np.linalg.norm(expected - sol.P, 2) if n else 0.0
    if gap > scaled_tol(tol, cert.P0) * 1e3:
        raise PreconditionError(f"solution is not in the P0 family (distance {gap:.3e})")
    q = _from_subspace(sys, cert.Q0, sol.kernel.perp(), "Q", tol)
    rp, rq = numerical_rank(sol.P, tol), numerical_rank(q.Q, tol)
    if rp + rq != n:
        raise PreconditionError(f"complementary ranks {rp} + {rq} != {n}")
    return q


def riccati_residual_P(P, A, C, tol=None):
    """``||A P A^T - A P C^T (I + C P C^T)^{-1} C P A^T - P||_2``."""
    A, C = _pair(A, C, "C", rows=True)
    n, m = A.shape[0], C.shape[0]
    P = np.asarray(P, dtype=float).reshape(n, n)
    mid = np.eye(m) + C @ P @ C.T
    if np.linalg.svd(mid, compute_uv=False)[-1] <= scaled_tol(tol, mid):
        raise PreconditionError("I + C P C^T is singular")
    APC = A @ P @ C.T
    R = A @ P @ A.T - APC @ np.linalg.solve(mid, APC.T) - P
    return float(np.linalg.norm(R, 2)) if n else 0.0


def riccati_residual_Q(Q, A, B, tol=None):
    """``||A^T Q A - A^T Q B (I + B^T Q B)^{-1} B^T Q A - Q||_2``."""
    A, B = _pair(A, B, "B", rows=False)
    return riccati_residual_P(Q, A.T, B.T, tol)


def enumerate_solutions(sys, side="P", max_count=None, delta=None, cert=None, tol=None):
    """One solution per Schur-enumerated invariant subspace.

    The base is ``P0`` (``Q0``) or, with ``delta``, the nonsingular family
    member it defines.  Subspaces whose construction fails numerically are
    skipped with a logged warning.
    """
    cert = _cert(sys, cert, tol)
    if delta is None:
        base = cert.P0 if side == "P" else cert.Q0
    else:
        base = nonsingular_family_member(sys, delta, side, cert, tol)
    Ainv = sys.A.T if side == "P" else sys.A
    out = []
    for S in invariant_subspaces(Ainv, max_count, tol):
        try:
            out.append(_from_subspace(sys, base, S, side, tol))
        except PreconditionError as exc:
            log.warning("skipping subspace of dimension %d: %s", S.dim, exc)
    return out
