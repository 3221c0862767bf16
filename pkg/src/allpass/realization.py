"""State-space realizations ``Q(z) = C (zI - A)^{-1} B + D`` of square rational matrices."""

import logging
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_GRID, resolve_tol, scaled_tol
from .exceptions import DimensionError, PoleError
from .linalg import Subspace, as_matrix, procrustes

log = logging.getLogger(__name__)

__all__ = [
    "StateSpace",
    "DegreeReport",
    "evaluate",
    "evaluate_grid",
    "unit_circle",
    "default_grid",
    "reachability_subspace",
    "observability_unobs_subspace",
    "minimal_realization",
    "series",
    "allpass_defect",
    "grid_distance",
    "aligned_grid_distance",
]


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Real quadruple (A, B, C, D) of an m x m function with n states.

    ``n = 0`` is allowed and represents the constant function ``D``.
    Arrays are copied and made read-only.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = as_matrix(self.D, "D")
        m = D.shape[0]
        if D.shape != (m, m) or m < 1:
            raise DimensionError(f"D must be square with m >= 1, got {D.shape}")
        A = np.array(self.A, dtype=float)
        n = 0 if A.size == 0 else as_matrix(A, "A").shape[0]
        A = A.reshape(n, n) if A.size == 0 else as_matrix(A, "A")
        B = np.array(self.B, dtype=float)
        C = np.array(self.C, dtype=float)
        B = B.reshape(n, m) if B.size == 0 else as_matrix(B, "B")
        C = C.reshape(m, n) if C.size == 0 else as_matrix(C, "C")
        if A.shape != (n, n) or B.shape != (n, m) or C.shape != (m, n):
            raise DimensionError(
                f"incompatible shapes A{A.shape} B{B.shape} C{C.shape} D{D.shape}")
        for name, a in zip("ABCD", (A, B, C, D)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.D.shape[0]

    @classmethod
    def constant(cls, D):
        D = as_matrix(D, "D")
        m = D.shape[0]
        return cls(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((m, 0)), D)

    def matrices(self):
        return self.A, self.B, self.C, self.D

    def system_matrix(self):
        """The block matrix ``[[A, B], [C, D]]``."""
        return np.block([[self.A, self.B], [self.C, self.D]])

    def __call__(self, z):
        return evaluate(self, z)

    def __repr__(self):
        return f"StateSpace(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class DegreeReport:
    n_state: int
    n_reachable: int
    n_observable: int
    mcmillan: int
    minimal: bool


def evaluate(sys, z, tol=None):
    """``C (zI - A)^{-1} B + D`` at a complex point ``z``.

    Raises
    ------
    PoleError
        If ``zI - A`` is numerically singular.
    """
    if sys.n == 0:
        return sys.D.astype(complex)
    M = z * np.eye(sys.n) - sys.A
    smin = np.linalg.svd(M, compute_uv=False)[-1]
    if smin <= scaled_tol(tol, sys.A):
        raise PoleError(f"z = {z} is (numerically) a pole")
    return sys.C @ np.linalg.solve(M, sys.B.astype(complex)) + sys.D


def _resolvent_stack(A, zs):
    return np.asarray(zs, dtype=complex)[:, None, None] * np.eye(A.shape[0]) - A


def evaluate_grid(sys, zs, tol=None, check_poles=True):
    """Stack of evaluations, shape ``(len(zs), m, m)``.

    Raises
    ------
    PoleError
        If ``check_poles`` and any point is numerically a pole.
    """
    zs = np.asarray(zs, dtype=complex).ravel()
    if sys.n == 0 or zs.size == 0:
        return np.broadcast_to(sys.D.astype(complex), (zs.size, sys.m, sys.m)).copy()
    M = _resolvent_stack(sys.A, zs)
    if check_poles:
        smin = np.linalg.svd(M, compute_uv=False)[:, -1]
        bad = smin <= scaled_tol(tol, sys.A)
        if bad.any():
            raise PoleError(f"z = {zs[bad][0]} is (numerically) a pole")
    X = np.linalg.solve(M, np.broadcast_to(sys.B.astype(complex), (zs.size, sys.n, sys.m)))
    return sys.C @ X + sys.D


def unit_circle(size=DEFAULT_GRID):
    """``size`` equispaced points ``exp(2 pi i k / size)``."""
    return np.exp(2j * np.pi * np.arange(size) / size)


def default_grid(size=DEFAULT_GRID, n_random=16, seed=0):
    """Unit-circle points plus ``n_random`` points of modulus in [0.5, 2]."""
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.5, 2.0, n_random)
    theta = rng.uniform(0.0, 2.0 * np.pi, n_random)
    return np.concatenate([unit_circle(size), r * np.exp(1j * theta)])


_POLE_GAP = 1e-8


def _safe_points(systems, zs):
    """Grid points that are not near a pole of any of ``systems``."""
    zs = np.asarray(zs, dtype=complex).ravel()
    keep = np.ones(zs.size, dtype=bool)
    for s in systems:
        if s.n and zs.size:
            smin = np.linalg.svd(_resolvent_stack(s.A, zs), compute_uv=False)[:, -1]
            keep &= smin > _POLE_GAP * max(1.0, np.linalg.norm(s.A, 2))
    return zs[keep]


# --- geometry ---------------------------------------------------------------

def _krylov_span(A, B, tol=None):
    """Orthonormal basis of span[B, AB, A^2 B, ...] by block orthogonalization."""
    n = A.shape[0]
    thr = scaled_tol(tol, A, B)
    V = np.zeros((n, 0))
    new = B
    while new.size and V.shape[1] < n:
        new = new - V @ (V.T @ new)
        new = new - V @ (V.T @ new)
        U, s, _ = np.linalg.svd(new, full_matrices=False)
        r = int(np.sum(s > thr))
        if r == 0:
            break
        V = np.hstack([V, U[:, :r]])
        new = A @ U[:, :r]
    return V


def reachability_subspace(A, B, tol=None):
    """Column span of the reachability matrix ``[B, AB, ..., A^{n-1} B]``."""
    A, B = as_matrix(A, "A"), np.asarray(B, dtype=float)
    n = A.shape[0]
    if n == 0:
        return Subspace.zero(0)
    B = B.reshape(n, -1)
    return Subspace(_krylov_span(A, B, tol))


def observability_unobs_subspace(A, C, tol=None):
    """Kernel of the observability matrix ``[C; CA; ...; CA^{n-1}]``."""
    A, C = as_matrix(A, "A"), np.asarray(C, dtype=float)
    n = A.shape[0]
    if n == 0:
        return Subspace.zero(0)
    C = C.reshape(-1, n)
    return Subspace(_krylov_span(A.T, C.T, tol)).perp()


def minimal_realization(sys, tol=None):
    """Two-stage Kalman reduction: restrict to the reachable subspace, then
    project onto the orthogonal complement of the unobservable subspace.

    Returns
    -------
    (StateSpace, DegreeReport)
    """
    A, B, C, D = sys.matrices()
    n = sys.n
    n_obs = n - observability_unobs_subspace(A, C, tol).dim
    R = reachability_subspace(A, B, tol).basis
    Ar, Br, Cr = R.T @ A @ R, R.T @ B, C @ R
    O = observability_unobs_subspace(Ar, Cr, tol).perp().basis
    reduced = StateSpace(O.T @ Ar @ O, O.T @ Br, Cr @ O, D)
    k = reduced.n
    return reduced, DegreeReport(n, R.shape[1], n_obs, k, k == n)


def series(left, right):
    """Realization of ``left(z) @ right(z)``; the right factor's states come first."""
    if left.m != right.m:
        raise DimensionError("series connection needs equal sizes")
    nl, nr = left.n, right.n
    A = np.block([[right.A, np.zeros((nr, nl))], [left.B @ right.C, left.A]])
    B = np.vstack([right.B, left.B @ right.D])
    C = np.hstack([left.D @ right.C, left.C])
    return StateSpace(A, B, C, left.D @ right.D)


# --- grid checks -------------------------------------------------------------

def allpass_defect(sys, grid_size=DEFAULT_GRID):
    """``max ||Q(z) Q(z)^H - I||_2`` over equispaced unit-circle points.

    Points numerically at a pole are skipped with a logged warning.
    """
    zs = unit_circle(grid_size)
    safe = _safe_points([sys], zs)
    if len(safe) < len(zs):
        log.warning("allpass_defect: skipped %d grid points near poles", len(zs) - len(safe))
    if not len(safe):
        return 0.0
    F = evaluate_grid(sys, safe, check_poles=False)
    E = F @ np.conj(np.swapaxes(F, 1, 2)) - np.eye(sys.m)
    return float(np.linalg.norm(E, 2, axis=(1, 2)).max())


def grid_distance(f, g, zs=None):
    """``max_z ||f(z) - g(z)||_2`` over grid points away from poles of both."""
    zs = default_grid() if zs is None else zs
    zs = _safe_points([f, g], zs)
    if not len(zs):
        return 0.0
    if isinstance(g, StateSpace):
        gv = evaluate_grid(g, zs, check_poles=False)
    else:
        gv = np.array([g(z) for z in zs])
    fv = evaluate_grid(f, zs, check_poles=False)
    return float(np.linalg.norm(fv - gv, 2, axis=(1, 2)).max())


def aligned_grid_distance(f, g, side="right", zs=None):
    """Grid distance after the best constant orthogonal alignment.

    ``side="right"`` compares ``f(z) U`` with ``g(z)`` (the gauge of left
    divisors); ``side="left"`` compares ``U f(z)`` with ``g(z)``.

    Returns
    -------
    (distance, U)
    """
    zs = default_grid() if zs is None else zs
    zs = _safe_points([f, g], zs)
    fv, gv = evaluate_grid(f, zs, check_poles=False), evaluate_grid(g, zs, check_poles=False)
    if side == "right":
        # ||F U - G|| = ||U^T F^T - G^T||: align the transposes from the left
        Ut = procrustes(np.hstack([a.T for a in fv]), np.hstack([b.T for b in gv]))
        U = Ut.T
        diff = fv @ U - gv
    elif side == "left":
        U = procrustes(np.hstack(list(fv)), np.hstack(list(gv)))
        diff = U @ fv - gv
    else:
        raise ValueError("side must be 'left' or 'right'")
    dist = np.linalg.norm(diff, 2, axis=(1, 2)).max() if len(zs) else 0.0
    return float(dist), U
