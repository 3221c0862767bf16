"""Seeded random minimal all-pass systems for tests and probes.

Systems are built from a random reachable pair (A, B): the Stein solution
``A P A^T - P = B B^T`` is completed to (C, D).  Eigenvalue moduli are drawn
from ``[0.3, 0.8] U [1.3, 2.5]`` so that the Stein operator stays well
conditioned; zero eigenvalues give singular A (and so singular D).
"""

import numpy as np
from scipy.stats import ortho_group

from .certificate import complete_from_B
from .deflate import DeflationStep, compose_step
from .exceptions import AllPassError
from .linalg import solve_stein_sym
from .realization import StateSpace, minimal_realization, series

__all__ = [
    "random_orthogonal",
    "random_spectrum",
    "random_state_matrix",
    "random_allpass",
    "signature_balance",
    "random_biproper",
    "random_mixed",
    "direct_sum",
    "random_with_delays",
    "random_series_pair",
]

_MAX_TRIES = 200


def random_orthogonal(rng, m):
    if m == 1:
        return np.array([[rng.choice([-1.0, 1.0])]])
    return ortho_group.rvs(m, random_state=rng)


def _modulus(rng, region):
    if region == "inside" or (region == "any" and rng.random() < 0.5):
        return rng.uniform(0.3, 0.8)
    return rng.uniform(1.3, 2.5)


def random_spectrum(rng, n, n_zero=0, region="any", complex_prob=0.3):
    """Real Schur-like blocks: a list of ``(block, eigenvalues)`` pairs.

    The ``n_zero`` zero eigenvalues form one nilpotent Jordan block (a delay
    chain), which stays reachable from a single input.
    """
    blocks = [(np.eye(n_zero, k=-1), [0.0] * n_zero)] if n_zero else []
    left = n - n_zero
    while left > 0:
        r = _modulus(rng, region)
        if left >= 2 and rng.random() < complex_prob:
            th = rng.uniform(0.3, np.pi - 0.3)
            a, b = r * np.cos(th), r * np.sin(th)
            blocks.append((np.array([[a, b], [-b, a]]), [r * np.exp(1j * th), r * np.exp(-1j * th)]))
            left -= 2
        else:
            lam = r * rng.choice([-1.0, 1.0])
            blocks.append((np.array([[lam]]), [lam]))
            left -= 1
    return blocks


def _unmixed(eigs, gap=0.15):
    eigs = np.asarray(eigs)
    return bool(np.all(np.abs(np.multiply.outer(eigs, eigs) - 1) > gap))


def random_state_matrix(rng, n, n_zero=0, region="any", max_cond=10.0):
    """``S blkdiag(...) S^{-1}`` with a mildly conditioned similarity ``S``."""
    for _ in range(_MAX_TRIES):
        blocks = random_spectrum(rng, n, n_zero, region)
        eigs = [e for _, es in blocks for e in es]
        if not _unmixed(eigs):
            continue
        J = np.zeros((n, n))
        i = 0
        for blk, _ in blocks:
            k = blk.shape[0]
            J[i:i + k, i:i + k] = blk
            i += k
        if n == 0:
            return J
        s = np.exp(rng.uniform(0, np.log(max_cond), n))
        S = random_orthogonal(rng, n) @ np.diag(s) @ random_orthogonal(rng, n)
        return S @ J @ np.linalg.inv(S)
    raise RuntimeError("could not draw an unmixed spectrum")


def _balancing(P):
    w, V = np.linalg.eigh(P)
    return (V / np.sqrt(np.abs(w))).T, V * np.sqrt(np.abs(w))


def signature_balance(sys, P):
    """Change state coordinates so that ``P`` becomes ``diag(+-1)``.

    With ``P = V diag(w) V^T`` take ``T = |w|^{-1/2} V^T``; then
    ``T P T^T`` is a signature matrix.  For poles all inside (or all
    outside) the unit circle the system matrix becomes orthogonal.
    """
    T, Ti = _balancing(P)
    return StateSpace(T @ sys.A @ Ti, T @ sys.B, sys.C @ Ti, sys.D)


def _complete_balanced(A, B, P, balance):
    """Complete (A, B) after moving to coordinates where ``P`` is a signature.

    The Stein equation is re-solved in the new coordinates, so the
    completion works with a well-conditioned ``P`` and the quadruple
    satisfies the certificate equations to working precision.
    """
    if balance:
        T, Ti = _balancing(P)
        A, B = T @ A @ Ti, T @ B
        P = solve_stein_sym(A, B @ B.T).particular
    C, D = complete_from_B(A, B, P)
    return StateSpace(A, B, C, D)


def random_allpass(rng, n, m, n_zero=0, region="any", max_cond_p=1e6, balance=True):
    """Minimal all-pass system of degree ``n`` with ``m`` channels.

    Parameters
    ----------
    n_zero : int
        Number of zero eigenvalues of A (singular A and D when positive).
    region : {"any", "inside", "outside"}
        Where the nonzero poles lie relative to the unit circle.
    """
    if n == 0:
        return StateSpace.constant(random_orthogonal(rng, m))
    for _ in range(_MAX_TRIES):
        A = random_state_matrix(rng, n, n_zero, region)
        B = rng.standard_normal((n, m))
        sol = solve_stein_sym(A, B @ B.T)
        P = sol.particular
        if P is None or not sol.is_unique:
            continue
        if n and np.linalg.cond(P) > max_cond_p:
            continue
        try:
            sys = _complete_balanced(A, B, P, balance)
        except AllPassError:
            continue
        if minimal_realization(sys)[1].minimal:
            return sys
    raise RuntimeError("could not generate a minimal all-pass system")


def random_biproper(rng, n, m, region="any"):
    """Minimal all-pass system with nonsingular A and D."""
    return random_allpass(rng, n, m, 0, region)


def random_series_pair(rng, n_left, n_right, m, **kw):
    """``(f, g, series(f, g))`` with the degrees adding up."""
    for _ in range(_MAX_TRIES):
        f = random_allpass(rng, n_left, m, **kw)
        g = random_allpass(rng, n_right, m, **kw)
        s = series(f, g)
        if minimal_realization(s)[1].minimal:
            return f, g, s
    raise RuntimeError("could not generate a minimal series connection")


def direct_sum(f, g):
    """``diag(f(z), g(z))`` with block-diagonal realization."""
    def blk(X, Y):
        out = np.zeros((X.shape[0] + Y.shape[0], X.shape[1] + Y.shape[1]))
        out[:X.shape[0], :X.shape[1]] = X
        out[X.shape[0]:, X.shape[1]:] = Y
        return out
    return StateSpace(*(blk(X, Y) for X, Y in zip(f.matrices(), g.matrices())))


def random_mixed(rng, n, m):
    """Minimal all-pass system whose A has a reciprocal eigenvalue pair.

    A scalar all-pass function with a pole at ``lam`` has a zero at
    ``1/lam``, so the pair must sit in different channels: the result is
    ``U1 diag(f, g) U2`` with a pole ``lam`` in ``f`` and ``1/lam`` in ``g``
    and random orthogonal ``U1, U2``.  Requires ``n >= 2`` and ``m >= 2``.
    """
    if n < 2 or m < 2:
        raise ValueError("a mixed spectrum needs n >= 2 and m >= 2")
    for _ in range(_MAX_TRIES):
        lam = rng.uniform(1.3, 2.5) * rng.choice([-1.0, 1.0])
        n1 = int(rng.integers(1, n))
        m1 = int(rng.integers(1, m))
        f = _with_pole(rng, n1, m1, lam)
        g = _with_pole(rng, n - n1, m - m1, 1.0 / lam)
        if f is None or g is None:
            continue
        s = direct_sum(f, g)
        U1, U2 = random_orthogonal(rng, m), random_orthogonal(rng, m)
        s = StateSpace(s.A, s.B @ U2, U1 @ s.C, U1 @ s.D @ U2)
        if minimal_realization(s)[1].minimal:
            return s
    raise RuntimeError("could not generate a mixed minimal system")


def _with_pole(rng, n, m, lam):
    for _ in range(_MAX_TRIES):
        A = random_state_matrix(rng, n, 0, "any")
        if n == 1:
            A = np.array([[lam]])
        else:
            # replace one real eigenvalue by lam, keep the rest
            w, V = np.linalg.eig(A)
            real = np.flatnonzero(np.abs(w.imag) < 1e-12)
            if real.size == 0:
                continue
            w = w.copy()
            w[real[0]] = lam
            if not _unmixed(w):
                continue
            A = np.real(V @ np.diag(w) @ np.linalg.inv(V))
        B = rng.standard_normal((n, m))
        sol = solve_stein_sym(A, B @ B.T)
        if sol.particular is None or np.linalg.cond(sol.particular) > 1e4:
            continue
        try:
            sys = _complete_balanced(A, B, sol.particular, True)
        except AllPassError:
            continue
        if minimal_realization(sys)[1].minimal:
            return sys
    return None


def random_with_delays(rng, n_core, m, n_steps, max_p=None):
    """Biproper core composed with ``n_steps`` random pure-delay factors.

    Returns
    -------
    (sys, core, steps)
    """
    core = random_biproper(rng, n_core, m)
    sys = core
    steps = []
    max_p = m if max_p is None else max_p
    for _ in range(n_steps):
        p = int(rng.integers(1, max_p + 1))
        step = DeflationStep(random_orthogonal(rng, m), p)
        sys = compose_step(sys, step)
        steps.append(step)
    return sys, core, steps
