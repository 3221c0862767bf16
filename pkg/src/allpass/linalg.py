"""Dense real linear-algebra kernels.

Stein equations are solved over an orthonormal basis of the symmetric
matrices, so a singular Stein operator (mixed spectrum) is handled by the
same code path: the least-squares solve returns a particular solution and
the SVD exposes the homogeneous solution space.
"""

import itertools
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np
from scipy import linalg as sla
from scipy.linalg import lapack

from .config import resolve_tol, scaled_tol
from .exceptions import DimensionError, PreconditionError

__all__ = [
    "as_matrix",
    "sym_dim",
    "sym_to_vec",
    "vec_to_sym",
    "symmetrize",
    "SteinSolutionSet",
    "stein_operator",
    "solve_stein_sym",
    "psd_rank_factor",
    "pinv",
    "polar_orthogonal",
    "Inertia",
    "inertia",
    "numerical_rank",
    "Subspace",
    "kernel",
    "invariant_subspaces",
    "is_unmixed",
    "procrustes",
]


def as_matrix(x, name="matrix"):
    """Float copy of ``x`` as a 2-D array; scalars become 1x1."""
    a = np.array(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1) if a.size else a.reshape(0, 0)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _square(a, name):
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a.shape[0]


def symmetrize(S):
    return 0.5 * (S + S.T)


# --- symmetric-matrix coordinates -------------------------------------------

def sym_dim(n):
    return n * (n + 1) // 2


def _sym_index(n):
    return np.triu_indices(n)


def sym_to_vec(S):
    """Isometric coordinates of a symmetric matrix (off-diagonals weighted by sqrt 2)."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    i, j = _sym_index(n)
    w = np.where(i == j, 1.0, np.sqrt(2.0))
    return w * symmetrize(S)[i, j]


def vec_to_sym(v, n):
    """Inverse of :func:`sym_to_vec`."""
    i, j = _sym_index(n)
    w = np.where(i == j, 1.0, np.sqrt(2.0))
    S = np.zeros((n, n))
    S[i, j] = v / w
    S[j, i] = v / w
    return S


def _sym_basis(n):
    """Frobenius-orthonormal basis of the symmetric n x n matrices."""
    k = sym_dim(n)
    return [vec_to_sym(e, n) for e in np.eye(k)]


# --- Stein equations --------------------------------------------------------

@dataclass(frozen=True)
class SteinSolutionSet:
    """Solutions of ``A X A^T - X = R`` (or ``A^T X A - X = R``).

    ``particular`` is the minimum-norm symmetric solution, or None when the
    equation is inconsistent.  ``homogeneous_basis`` is a Frobenius-orthonormal
    basis of the symmetric solutions with ``R = 0``.
    """

    particular: Optional[np.ndarray]
    homogeneous_basis: List[np.ndarray]
    residual: float

    @property
    def is_unique(self):
        return self.particular is not None and not self.homogeneous_basis


def stein_operator(A, transpose_form=False):
    """Matrix of ``X -> A X A^T - X`` (or ``A^T X A - X``) on symmetric coordinates."""
    A = as_matrix(A, "A")
    n = _square(A, "A")
    At = A.T if transpose_form else A
    cols = [sym_to_vec(At @ E @ At.T - E) for E in _sym_basis(n)]
    if not cols:
        return np.zeros((0, 0))
    return np.column_stack(cols)


def _sign_fix(v, tol=1e-12):
    """Flip ``v`` so that its first non-negligible entry is positive."""
    idx = np.flatnonzero(np.abs(v) > tol * max(1.0, np.abs(v).max(initial=0.0)))
    if idx.size and v[idx[0]] < 0:
        return -v
    return v


def solve_stein_sym(A, rhs, transpose_form=False, tol=None):
    """Solve the symmetric Stein equation ``A X A^T - X = rhs``.

    With ``transpose_form=True`` the equation is ``A^T X A - X = rhs``.

    Parameters
    ----------
    A : (n, n) array_like
    rhs : (n, n) array_like
        Symmetric right-hand side.
    transpose_form : bool
    tol : float, optional
        Relative tolerance for the rank decision and residual check.

    Returns
    -------
    SteinSolutionSet
    """
    A = as_matrix(A, "A")
    n = _square(A, "A")
    R = np.zeros((n, n)) if np.isscalar(rhs) and rhs == 0 else as_matrix(rhs, "rhs")
    if R.size == 0 and n == 0:
        R = np.zeros((0, 0))
    if R.shape != (n, n):
        raise DimensionError(f"rhs must be {n}x{n}, got {R.shape}")
    if np.linalg.norm(R - R.T) > scaled_tol(tol, R):
        raise PreconditionError("right-hand side of the Stein equation is not symmetric")
    if n == 0:
        return SteinSolutionSet(np.zeros((0, 0)), [], 0.0)

    L = stein_operator(A, transpose_form)
    b = sym_to_vec(R)
    U, s, Vt = np.linalg.svd(L)
    cut = resolve_tol(tol) * max(1.0, s[0])
    r = int(np.sum(s > cut))
    x = Vt[:r].T @ ((U[:, :r].T @ b) / s[:r])
    X = vec_to_sym(x, n)
    residual = float(np.linalg.norm(L @ x - b))
    scale = max(1.0, np.linalg.norm(A, 2) ** 2 * np.linalg.norm(X, 2), np.linalg.norm(R, 2))
    particular = X if residual <= resolve_tol(tol) * scale else None
    homogeneous = [vec_to_sym(_sign_fix(v), n) for v in Vt[r:]]
    return SteinSolutionSet(particular, homogeneous, residual)


# --- factorizations ---------------------------------------------------------

def psd_rank_factor(W, m, tol=None):
    """Full-row-rank ``F`` (m x k) with ``F^T F = W`` for PSD ``W`` of rank ``m``.

    Uses the symmetric eigendecomposition with eigenvalues in descending order;
    each eigenvector is signed so that its first non-negligible entry is
    positive, which makes the factor deterministic.

    Raises
    ------
    PreconditionError
        If ``W`` has an eigenvalue below ``-tol`` or its numerical rank is not ``m``.
    """
    W = as_matrix(W, "W")
    k = _square(W, "W")
    if k == 0:
        return np.zeros((m, 0))
    W = symmetrize(W)
    w, V = np.linalg.eigh(W)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    thr = scaled_tol(tol, W)
    if w[-1] < -thr:
        raise PreconditionError(f"matrix is not positive semidefinite (min eigenvalue {w[-1]:.3e})")
    rank = int(np.sum(w > thr))
    if rank != m:
        raise PreconditionError(f"numerical rank is {rank}, expected {m}")
    rows = [np.sqrt(w[i]) * _sign_fix(V[:, i]) for i in range(m)]
    return np.array(rows).reshape(m, k)


def pinv(M, tol=None):
    """Moore-Penrose pseudoinverse with a relative singular-value cutoff."""
    M = as_matrix(M, "M")
    if M.size == 0:
        return np.zeros(M.shape[::-1])
    return np.linalg.pinv(M, rcond=resolve_tol(tol))


def polar_orthogonal(D):
    """Orthogonal ``U`` such that ``D @ U`` is symmetric positive semidefinite.

    From ``D = W S V^T`` take ``U = V W^T`` so that ``D U = W S W^T``.
    """
    D = as_matrix(D, "D")
    _square(D, "D")
    if D.size == 0:
        return np.zeros((0, 0))
    W, _, Vt = np.linalg.svd(D)
    return Vt.T @ W.T


def procrustes(X, Y):
    """Orthogonal ``U`` minimizing ``||U X - Y||_F`` (real part of complex data)."""
    M = np.real(np.asarray(Y) @ np.conj(np.asarray(X)).T)
    W, _, Vt = np.linalg.svd(M)
    return W @ Vt


class Inertia(NamedTuple):
    n_plus: int
    n_minus: int
    n_zero: int


def inertia(S, tol=None):
    """Counts of eigenvalues above ``tol``, below ``-tol`` and in between."""
    S = as_matrix(S, "S")
    _square(S, "S")
    if S.size == 0:
        return Inertia(0, 0, 0)
    w = np.linalg.eigvalsh(symmetrize(S))
    thr = scaled_tol(tol, S)
    return Inertia(int(np.sum(w > thr)), int(np.sum(w < -thr)), int(np.sum(np.abs(w) <= thr)))


def numerical_rank(M, tol=None):
    M = as_matrix(M, "M")
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > scaled_tol(tol, M)))


# --- subspaces --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace of R^n stored as an orthonormal basis (n x k, k may be 0)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2:
            raise DimensionError("subspace basis must be 2-D")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, 0)))

    @classmethod
    def full(cls, n):
        return cls(np.eye(n))

    @classmethod
    def span(cls, M, tol=None):
        """Orthonormal basis of the column space of ``M``."""
        M = np.asarray(M, dtype=float)
        if M.ndim == 1:
            M = M.reshape(-1, 1)
        n = M.shape[0]
        if M.size == 0:
            return cls.zero(n)
        U, s, _ = np.linalg.svd(M, full_matrices=False)
        r = int(np.sum(s > scaled_tol(tol, M)))
        return cls(U[:, :r])

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def projector(self):
        return self.basis @ self.basis.T

    def perp(self):
        n, k = self.basis.shape
        if k == 0:
            return Subspace.full(n)
        if k == n:
            return Subspace.zero(n)
        Q, _ = np.linalg.qr(self.basis, mode="complete")
        # columns k: of a complete QR span the orthogonal complement
        return Subspace(Q[:, k:])

    def distance(self, other):
        """Spectral-norm distance between the orthogonal projectors."""
        if self.ambient_dim != other.ambient_dim:
            raise DimensionError("subspaces live in different spaces")
        if self.ambient_dim == 0:
            return 0.0
        return float(np.linalg.norm(self.projector - other.projector, 2))

    def invariance_residual(self, A):
        """``||(I - Pi) A Pi||``; zero iff the subspace is A-invariant."""
        V = self.basis
        if V.shape[1] == 0 or V.shape[0] == 0:
            return 0.0
        AV = A @ V
        return float(np.linalg.norm(AV - V @ (V.T @ AV), 2))

    def is_invariant(self, A, tol=None):
        return self.invariance_residual(A) <= scaled_tol(tol, A)


def kernel(S, tol=None):
    """Null space of a symmetric matrix as a :class:`Subspace`."""
    S = as_matrix(S, "S")
    n = S.shape[0]
    if n == 0:
        return Subspace.zero(0)
    w, V = np.linalg.eigh(symmetrize(S))
    return Subspace(V[:, np.abs(w) <= scaled_tol(tol, S)])


def _schur_blocks(T):
    """Index lists of the 1x1 and 2x2 diagonal blocks of a real Schur form."""
    n = T.shape[0]
    blocks, i = [], 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            blocks.append([i, i + 1])
            i += 2
        else:
            blocks.append([i])
            i += 1
    return blocks


def invariant_subspaces(A, max_count=None, tol=None, dedupe_tol=1e-5):
    """A-invariant subspaces spanned by leading vectors of ordered real Schur forms.

    Every subset of diagonal Schur blocks is moved to the top with ``dtrsen``
    and the leading Schur vectors are kept.  Subsets are visited by increasing
    number of blocks; ``{0}`` comes first and the full space last.  Candidates
    failing the invariance test (ill-conditioned swaps of nearly equal
    eigenvalues) are dropped, and duplicates are removed.

    Parameters
    ----------
    A : (n, n) array_like
    max_count : int, optional
        Upper bound on the number of returned subspaces (at least 2 when n > 0).
    dedupe_tol : float
        Candidates closer than this (projector distance) count as one.  A
        defective eigenvalue of multiplicity k is split by rounding into k
        values ``O(eps^(1/k))`` apart, and reordering them yields copies of the
        same subspace that differ by about that much.
    """
    A = as_matrix(A, "A")
    n = _square(A, "A")
    if n == 0:
        return [Subspace.zero(0)]
    head, tail = Subspace.zero(n), Subspace.full(n)
    budget = None if max_count is None else max(0, int(max_count) - 2)
    T, Z = sla.schur(A, output="real")
    blocks = _schur_blocks(T)
    middle = []
    for r in range(1, len(blocks)):
        for chosen in itertools.combinations(range(len(blocks)), r):
            if budget is not None and len(middle) >= budget:
                break
            select = np.zeros(n, dtype=np.int32)
            for b in chosen:
                select[blocks[b]] = 1
            ts, qs, _, _, k, _, _, info = lapack.dtrsen(select, T, Z, job="N")
            if info != 0:
                continue
            cand = Subspace(qs[:, :k])
            if not cand.is_invariant(A, tol):
                continue
            if any(cand.dim == s.dim and cand.distance(s) < dedupe_tol for s in middle):
                continue
            middle.append(cand)
    return [head] + middle + [tail]


def is_unmixed(A, tol=None):
    """True iff no two eigenvalues (a value with itself included) multiply to 1."""
    A = as_matrix(A, "A")
    _square(A, "A")
    lam = np.linalg.eigvals(A)
    if lam.size == 0:
        return True
    prod = np.outer(lam, lam)
    return bool(np.all(np.abs(prod - 1.0) > resolve_tol(tol)))
