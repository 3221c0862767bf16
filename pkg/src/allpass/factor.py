"""All-pass divisors and minimal factorizations ``Q = Q_L Q_R``.

A CLMI solution ``P`` in the family of ``P0`` with factor
``M(P) = [G; L][G; L]^T`` gives the left divisor ``C (zI - A)^{-1} G + L``
of McMillan degree ``rank P``; dually ``N(Q) = [H | J]^T [H | J]`` gives the
right divisor ``H (zI - A)^{-1} B + J``.  A factorization is indexed by an
A-invariant subspace ``X``: the left divisor carries the dynamics of ``A``
restricted to ``X`` and the cofactor those on the quotient.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np

from .certificate import certificate as _certificate
from .config import resolve_tol, scaled_tol
from .exceptions import NotAllPassError, PreconditionError
from .linalg import Subspace, invariant_subspaces, kernel, symmetrize
from .lmi import (LmiSolutionP, LmiSolutionQ, check_clmi, solution_from_subspace_P,
                  solution_from_subspace_Q)
from .realization import (StateSpace, aligned_grid_distance, allpass_defect,
                          default_grid, grid_distance, minimal_realization, series)

log = logging.getLogger(__name__)

__all__ = [
    "Divisor",
    "Factorization",
    "left_divisor",
    "right_divisor",
    "factorize",
    "complementary_pair_check",
    "biproper_left_divisor",
    "biproper_right_divisor",
    "enumerate_divisors",
    "divisor_distance",
]

Source = Union[LmiSolutionP, LmiSolutionQ, np.ndarray]


@dataclass(frozen=True, eq=False)
class Divisor:
    """One side of a factorization.

    ``sys`` is the realization as constructed (typically not minimal),
    ``minimal_sys`` a minimal realization of the same function and
    ``degree`` its McMillan degree.
    """

    side: str
    sys: StateSpace
    minimal_sys: StateSpace
    degree: int
    source: Source
    defect: float = 0.0


@dataclass(frozen=True, eq=False)
class Factorization:
    left: Divisor
    right: Divisor
    subspace: Optional[Subspace] = None
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def product(self):
        return series(self.left.minimal_sys, self.right.minimal_sys)


def _check_allpass(sys, label, tol):
    defect = allpass_defect(sys)
    bound = resolve_tol(tol) * max(1.0, np.linalg.norm(sys.system_matrix(), 2) ** 2) * 1e2
    if defect > bound:
        raise NotAllPassError(f"{label} is not all-pass (grid defect {defect:.3e})")
    return defect


def _sym_sqrt(S, name):
    w, V = np.linalg.eigh(symmetrize(S))
    if w.size and w[0] <= 0:
        raise PreconditionError(f"{name} is not positive definite (min eigenvalue {w[0]:.3e})")
    return (V * np.sqrt(w)) @ V.T


def _solution_P(sys, P, tol):
    if isinstance(P, LmiSolutionP):
        return P
    P = symmetrize(np.asarray(P, dtype=float).reshape(sys.n, sys.n))
    report = check_clmi(P, sys.A, sys.C, "P", tol)
    if not report:
        raise PreconditionError(f"P fails the CLMI: {report.reason}")
    F = report.factor
    return LmiSolutionP(P, kernel(P, tol), F[:, :sys.n].T, F[:, sys.n:].T)


def _solution_Q(sys, Q, tol):
    if isinstance(Q, LmiSolutionQ):
        return Q
    Q = symmetrize(np.asarray(Q, dtype=float).reshape(sys.n, sys.n))
    report = check_clmi(Q, sys.A, sys.B, "Q", tol)
    if not report:
        raise PreconditionError(f"Q fails the CLMI: {report.reason}")
    F = report.factor
    return LmiSolutionQ(Q, kernel(Q, tol), F[:, :sys.n], F[:, sys.n:])


def _divisor(side, raw, source, rank, tol):
    """Reduce ``raw`` by compressing onto the complement of ``ker X``.

    For a left divisor ``ker P`` is A^T-invariant, so ``range P`` is
    A-invariant and holds the reachable states; for a right divisor
    ``ker Q`` is A-invariant and unobservable.  Either way the compression
    onto ``(ker X)^perp`` is exact and avoids recomputing the hidden
    subspace from a Krylov sequence.  Minimality of the result is verified.
    """
    if isinstance(source, (LmiSolutionP, LmiSolutionQ)):
        ker = source.kernel
    else:
        ker = kernel(source, tol)
    V = ker.perp().basis
    reduced = StateSpace(V.T @ raw.A @ V, V.T @ raw.B, raw.C @ V, raw.D)
    report = minimal_realization(reduced, tol)[1]
    if not report.minimal or report.mcmillan != rank:
        raise PreconditionError(
            f"{side} divisor has McMillan degree {report.mcmillan}, expected rank {rank}")
    defect = _check_allpass(reduced, f"{side} divisor", tol)
    return Divisor(side, raw, reduced, rank, source, defect)


def left_divisor(sys, P, tol=None):
    """Left divisor ``C (zI - A)^{-1} G + L`` from a P-CLMI solution.

    ``P`` is an :class:`LmiSolutionP` or a symmetric matrix (then checked and
    factored here).  The degree equals ``rank P``.
    """
    sol = _solution_P(sys, P, tol)
    raw = StateSpace(sys.A, sol.G, sys.C, sol.L)
    return _divisor("left", raw, sol, sol.rank, tol)


def right_divisor(sys, Q, tol=None):
    """Right divisor ``H (zI - A)^{-1} B + J`` from a Q-CLMI solution."""
    sol = _solution_Q(sys, Q, tol)
    raw = StateSpace(sys.A, sys.B, sol.H, sol.J)
    return _divisor("right", raw, sol, sol.rank, tol)


def factorize(sys, X, cert=None, tol=None, zs=None):
    """Minimal factorization ``sys = Q_L Q_R`` indexed by an A-invariant ``X``.

    The pair ``P`` (kernel ``Y = X^perp``, built over ``P0``) and ``Q``
    (kernel ``X``, built over ``Q0``) is complementary.  In the orthonormal
    basis ``[V_Y | V_X]`` the realization is block lower triangular; a second,
    non-orthogonal change of basis removes the coupling of ``Q0`` so that the
    lower-left blocks factor through ``[G_l; L]``:

        [B_2; D] = [G_l; L] D_r,      [A_21; C_1] = [G_l; L] C_r.

    Then ``Q_L = (A_l, G_l, C_2, L)`` and ``Q_R = (A_r, B_1, C_r, D_r)``, of
    degrees ``dim X`` and ``dim Y``.

    Raises
    ------
    NotInvariantError
        If ``X`` is not A-invariant.
    PreconditionError
        If the divisor equations are not solvable or the degrees do not add up.
    """
    cert = _certificate(sys, tol) if cert is None else cert
    n = sys.n
    Y = X.perp()
    psol = solution_from_subspace_P(sys, cert.P0, Y, tol)
    qsol = solution_from_subspace_Q(sys, cert.Q0, X, tol)
    nl, nr = X.dim, Y.dim

    VX, VY = X.basis, Y.basis
    T0 = np.hstack([VY, VX])
    Ab, Bb, Cb = T0.T @ sys.A @ T0, T0.T @ sys.B, sys.C @ T0
    Qb = T0.T @ cert.Q0 @ T0
    A_r, A21b, A_l = Ab[:nr, :nr], Ab[nr:, :nr], Ab[nr:, nr:]
    B1, B2b = Bb[:nr], Bb[nr:]
    C1b, C2 = Cb[:, :nr], Cb[:, nr:]
    Q12, Q22 = Qb[:nr, nr:], Qb[nr:, nr:]
    if nl:
        K = np.linalg.solve(Q22, Q12.T)
    else:
        K = np.zeros((0, nr))
    A21 = A21b + K @ A_r - A_l @ K
    B2 = B2b + K @ B1
    C1 = C1b - C2 @ K

    G, L = psol.G, psol.L
    leak = np.linalg.norm(VY.T @ G) if nr and G.size else 0.0
    if leak > scaled_tol(tol, G) * 1e3:
        raise PreconditionError(f"left factor G does not vanish on ker P (residual {leak:.3e})")
    G_l = VX.T @ G
    GL = np.vstack([G_l, L])
    D_r, *_ = np.linalg.lstsq(GL, np.vstack([B2, sys.D]), rcond=None)
    C_r, *_ = np.linalg.lstsq(GL, np.vstack([A21, C1]), rcond=None)
    res_d = np.linalg.norm(GL @ D_r - np.vstack([B2, sys.D]))
    res_c = np.linalg.norm(GL @ C_r - np.vstack([A21, C1])) if nr else 0.0
    bound = scaled_tol(tol, sys.system_matrix(), cert.Q0) * 1e3
    if max(res_d, res_c) > bound:
        raise PreconditionError(
            f"cofactor equations not solvable (residuals {res_d:.3e}, {res_c:.3e})")

    left_min = StateSpace(A_l, G_l, C2, L)
    right_min = StateSpace(A_r, B1, C_r, D_r)
    degrees = (minimal_realization(left_min, tol)[1].mcmillan,
               minimal_realization(right_min, tol)[1].mcmillan)
    if degrees != (nl, nr) or psol.rank != nl or qsol.rank != nr:
        raise PreconditionError(f"degree additivity violated: {degrees} vs ({nl}, {nr})")

    left = Divisor("left", StateSpace(sys.A, G, sys.C, L), left_min, nl, psol,
                   _check_allpass(left_min, "left divisor", tol))
    right = Divisor("right", right_min, right_min, nr, qsol,
                    _check_allpass(right_min, "right divisor", tol))
    zs = default_grid() if zs is None else zs
    product_gap = grid_distance(series(left_min, right_min), sys, zs)
    if product_gap > bound:
        raise PreconditionError(f"product does not reproduce the input (gap {product_gap:.3e})")
    # the right divisor read off N(Q) agrees with the cofactor up to a left gauge
    from_q = StateSpace(sys.A, sys.B, qsol.H, qsol.J)
    gauge_gap, _ = aligned_grid_distance(from_q, right_min, "left", zs)
    diagnostics = {"product_gap": float(product_gap),
                   "cofactor_residual": float(max(res_d, res_c)),
                   "right_gauge_gap": float(gauge_gap), "leak": float(leak)}
    return Factorization(left, right, X, diagnostics)


def complementary_pair_check(fact, tol=None):
    """``ker P = (ker Q)^perp`` for the sources of the two divisors."""
    P = _source_matrix(fact.left.source)
    Q = _source_matrix(fact.right.source)
    if P is None or Q is None:
        return False
    kp, kq = kernel(P, tol), kernel(Q, tol)
    if kp.ambient_dim != kq.ambient_dim:
        return False
    if kp.dim + kq.dim != kp.ambient_dim:
        return False
    return kp.distance(kq.perp()) <= max(resolve_tol(tol), 1e-8) * 1e2


def _source_matrix(src):
    if isinstance(src, LmiSolutionP):
        return src.P
    if isinstance(src, LmiSolutionQ):
        return src.Q
    return None if src is None else np.asarray(src)


def _require_biproper(sys, tol):
    for name, M in (("A", sys.A), ("D", sys.D)):
        if M.size and np.linalg.svd(M, compute_uv=False)[-1] <= scaled_tol(tol, M):
            raise PreconditionError(f"system is not biproper: {name} is singular")


def biproper_left_divisor(sys, P, tol=None):
    """Closed form ``L = (I + C P C^T)^{1/2}``, ``G = A P C^T L^{-T}``.

    Valid when A and D are nonsingular and ``P`` solves the homogeneous
    Riccati equation.
    """
    _require_biproper(sys, tol)
    P = _source_matrix(P).reshape(sys.n, sys.n)
    L = _sym_sqrt(np.eye(sys.m) + sys.C @ P @ sys.C.T, "I + C P C^T")
    G = np.linalg.solve(L, (sys.A @ P @ sys.C.T).T).T
    rank = sys.n - kernel(P, tol).dim
    return _divisor("left", StateSpace(sys.A, G, sys.C, L), P, rank, tol)


def biproper_right_divisor(sys, Q, tol=None):
    """Closed form ``J = (I + B^T Q B)^{1/2}``, ``H = J^{-T} B^T Q A``."""
    _require_biproper(sys, tol)
    Q = _source_matrix(Q).reshape(sys.n, sys.n)
    J = _sym_sqrt(np.eye(sys.m) + sys.B.T @ Q @ sys.B, "I + B^T Q B")
    H = np.linalg.solve(J.T, sys.B.T @ Q @ sys.A)
    rank = sys.n - kernel(Q, tol).dim
    return _divisor("right", StateSpace(sys.A, sys.B, H, J), Q, rank, tol)


def divisor_distance(a, b, zs=None):
    """Grid distance between two divisors of the same side after gauge alignment.

    Left divisors are defined up to a right orthogonal factor, right divisors
    up to a left one.
    """
    side = "right" if a.side == "left" else "left"
    return aligned_grid_distance(a.minimal_sys, b.minimal_sys, side, zs)[0]


def enumerate_divisors(sys, max_count=None, tol=None, dedupe_tol=1e-6):
    """One factorization per Schur-enumerated A-invariant subspace, deduplicated."""
    cert = _certificate(sys, tol)
    zs = default_grid()
    out = []
    for X in invariant_subspaces(sys.A, max_count, tol):
        try:
            f = factorize(sys, X, cert, tol, zs)
        except PreconditionError as exc:
            log.warning("skipping subspace of dimension %d: %s", X.dim, exc)
            continue
        if any(g.left.degree == f.left.degree
               and divisor_distance(g.left, f.left, zs) <= dedupe_tol
               and divisor_distance(g.right, f.right, zs) <= dedupe_tol for g in out):
            continue
        out.append(f)
    return out
