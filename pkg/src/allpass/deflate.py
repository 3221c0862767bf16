"""Deflation at infinity of all-pass functions with singular ``D``.

Each Silverman step compresses the columns of ``D`` with an orthogonal
``V`` (``D V = [D_1 | 0]``, ``D_1`` of full column rank ``q``) and replaces
the realization of ``Q(z) V diag(I_q, z I_{m-q})`` by

    B' = [B_1 | A B_2],   D' = [D_1 | C B_2]

where ``B V = [B_1 | B_2]``.  After ``k`` steps ``D`` is nonsingular and

    Q(z) = Q_0(z) Qbar_1(z) ... Qbar_k(z),
    Qbar_i(z) = diag(I_{m-p_i}, z^{-1} I_{p_i}) U_i,

with ``U_i = V_{k+1-i}^T`` and ``p_i = m - q_{k+1-i}``.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .config import resolve_tol, scaled_tol
from .exceptions import DimensionError, NotAllPassError, NotReachableError, PreconditionError
from .linalg import as_matrix
from .realization import (StateSpace, default_grid, grid_distance, minimal_realization,
                          series)

log = logging.getLogger(__name__)

__all__ = [
    "DeflationStep",
    "Deflation",
    "silverman_step",
    "deflate_at_infinity",
    "qbar_realization",
    "compose_step",
    "recompose",
    "is_reachable_pbh",
]

CONVENTION = "p_i = m - q_(k+1-i), U_i = V_(k+1-i)^T"


@dataclass(frozen=True, eq=False)
class DeflationStep:
    """Pure-delay factor ``diag(I_{m-p}, z^{-1} I_p) U``."""

    U: np.ndarray
    p: int

    def __post_init__(self):
        U = as_matrix(self.U, "U")
        m = U.shape[0]
        if U.shape != (m, m):
            raise DimensionError("U must be square")
        if np.linalg.norm(U.T @ U - np.eye(m)) > 1e-8 * max(1, m):
            raise PreconditionError("U is not orthogonal")
        if not 1 <= int(self.p) <= m:
            raise PreconditionError(f"p must lie in [1, {m}], got {self.p}")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "p", int(self.p))


@dataclass(frozen=True, eq=False)
class Deflation:
    q0: StateSpace
    steps: List[DeflationStep]
    raw: List[Tuple[np.ndarray, int]] = field(default_factory=list)
    convention: str = CONVENTION
    recomposition_gap: float = 0.0
    warnings: List[str] = field(default_factory=list)


def _compress(D, tol):
    """``V`` and rank ``q`` with ``D V = [D_1 | 0]``; singular values descending."""
    _, s, Vt = np.linalg.svd(D)
    thr = scaled_tol(tol, D)
    return Vt.T, int(np.sum(s > thr)), s, thr


def silverman_step(sys, tol=None):
    """One column-compression step.

    Returns
    -------
    None if ``D`` is nonsingular, else ``(sys', V, q)``.
    """
    V, q, _, _ = _compress(sys.D, tol)
    if q == sys.m:
        return None
    A, B, C, D = sys.matrices()
    BV, DV = B @ V, D @ V
    B1, B2 = BV[:, :q], BV[:, q:]
    D1 = DV[:, :q]
    nxt = StateSpace(A, np.hstack([B1, A @ B2]), C, np.hstack([D1, C @ B2]))
    return nxt, V, q


def qbar_realization(step, m=None):
    """``A = 0_p``, ``B = [0 | I_p] U``, ``C = [0; I_p]``, ``D = diag(I_{m-p}, 0) U``."""
    U, p = step.U, step.p
    m = U.shape[0] if m is None else int(m)
    if U.shape[0] != m:
        raise DimensionError(f"step acts on {U.shape[0]} channels, expected {m}")
    if not 1 <= p <= m:
        raise PreconditionError(f"p must lie in [1, {m}], got {p}")
    E = np.zeros((p, m))
    E[:, m - p:] = np.eye(p)
    D = np.zeros((m, m))
    D[:m - p, :m - p] = np.eye(m - p)
    return StateSpace(np.zeros((p, p)), E @ U, E.T, D @ U)


def recompose(q0, steps):
    """Realization of ``q0 Qbar_1 ... Qbar_k`` (not reduced)."""
    out = q0
    for step in steps:
        out = series(out, qbar_realization(step, q0.m))
    return out


def _steps(raw, m, convention):
    k = len(raw)
    out = []
    for i in range(k):
        V, q = raw[k - 1 - i]
        p = m - q if convention == "m-q" else q
        out.append(DeflationStep(V.T, p))
    return out


def deflate_at_infinity(sys, tol=None, zs=None):
    """Split off pure delays until the remaining factor is biproper.

    Raises
    ------
    NotAllPassError
        If more than ``n`` steps are needed (impossible for all-pass input)
        or the recomposition does not reproduce the input.
    """
    n, m = sys.n, sys.m
    raw, warnings = [], []
    cur = sys
    while True:
        _, q, s, thr = _compress(cur.D, tol)
        if q == m and s[-1] <= 10 * thr:
            warnings.append(f"smallest singular value of D ({s[-1]:.3e}) is within 10x "
                            f"of the rank threshold ({thr:.3e})")
        step = silverman_step(cur, tol)
        if step is None:
            break
        if len(raw) == n:
            raise NotAllPassError(f"no nonsingular D after {n} steps; input is not all-pass")
        cur, V, q = step
        raw.append((V, q))
    q0, _ = minimal_realization(cur, tol)
    for w in warnings:
        log.warning("deflate_at_infinity: %s", w)

    zs = default_grid() if zs is None else zs
    zs = zs[np.abs(zs) > 1e-6]
    scale = scaled_tol(tol, sys.system_matrix()) * 1e3
    # the delayed block count follows m - q; the other reading is tried only
    # as a fallback and recorded if it is the one that reproduces the input
    for convention in ("m-q", "q"):
        try:
            steps = _steps(raw, m, convention)
        except PreconditionError:
            continue
        gap = grid_distance(recompose(q0, steps), sys, zs) if raw else grid_distance(q0, sys, zs)
        if gap <= scale:
            label = CONVENTION if convention == "m-q" else "p_i = q_(k+1-i), U_i = V_(k+1-i)^T"
            return Deflation(q0, steps, raw, label, gap, warnings)
    raise NotAllPassError("recomposition does not reproduce the input")


def is_reachable_pbh(A, B, tol=None):
    """PBH test: ``[lambda I - A | B]`` has full row rank at every eigenvalue."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return True
    B = np.asarray(B, dtype=float).reshape(n, -1)
    thr = scaled_tol(tol, A, B)
    for lam in np.linalg.eigvals(A):
        M = np.hstack([lam * np.eye(n) - A, B])
        if np.linalg.svd(M, compute_uv=False)[-1] <= thr:
            return False
    return True


def compose_step(sys_i, step, tol=None):
    """Reachable realization of ``sys_i(z) Qbar(z)``.

    States are ``(delays, states of sys_i)``::

        A = [[0, 0], [B_2, A_i]],   B = [[0, I_p], [B_1, 0]] U,
        C = [D_2 | C_i],            D = [D_1 | 0] U,

    with ``[B_1 | B_2]``, ``[D_1 | D_2]`` split after column ``m - p``.
    """
    m, n, p = sys_i.m, sys_i.n, step.p
    if step.U.shape[0] != m:
        raise DimensionError("step and system sizes differ")
    if not is_reachable_pbh(sys_i.A, sys_i.B, tol):
        raise NotReachableError("sys_i is not reachable")
    A, B, C, D = sys_i.matrices()
    k = m - p
    B1, B2 = B[:, :k], B[:, k:]
    D1, D2 = D[:, :k], D[:, k:]
    Anew = np.block([[np.zeros((p, p)), np.zeros((p, n))], [B2, A]])
    Bnew = np.block([[np.zeros((p, k)), np.eye(p)], [B1, np.zeros((n, p))]]) @ step.U
    Cnew = np.hstack([D2, C])
    Dnew = np.hstack([D1, np.zeros((m, p))]) @ step.U
    out = StateSpace(Anew, Bnew, Cnew, Dnew)
    if not is_reachable_pbh(out.A, out.B, tol):
        raise NotReachableError("composed realization lost reachability")
    return out
