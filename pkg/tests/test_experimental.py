"""Randomized probes of two open conjectures.

Outcomes are logged (run with ``-s`` or ``--log-cli-level=INFO`` to see
them) and never asserted: a counterexample would be an interesting finding,
not a test failure.
"""

import logging

import numpy as np
from scipy.optimize import least_squares

from allpass.certificate import complete_from_B
from allpass.generate import random_allpass
from allpass.linalg import numerical_rank, solve_stein_sym, sym_to_vec, vec_to_sym
from allpass.lmi import M_of
from allpass.realization import StateSpace, allpass_defect, observability_unobs_subspace

log = logging.getLogger("allpass.probes")


def _augment_unreachable(rng, core, k, mirror):
    """Append k unreachable states; with ``mirror`` their eigenvalues are
    reciprocals of core poles, which makes the Stein operator singular."""
    n, m = core.n, core.m
    if mirror:
        lam = np.linalg.eigvals(core.A)
        real = lam[np.abs(lam.imag) < 1e-12].real
        if real.size == 0:
            return None
        A22 = np.diag(1.0 / rng.choice(real, k))
    else:
        A22 = np.diag(rng.uniform(-0.9, 0.9, k))
    A = np.block([[core.A, rng.standard_normal((n, k))], [np.zeros((k, n)), A22]])
    B = np.vstack([core.B, np.zeros((k, m))])
    C = np.hstack([core.C, rng.standard_normal((m, k))])
    return StateSpace(A, B, C, core.D)


def test_probe_reachability_conjecture():
    """Stein solvability of (A, B) versus an observable all-pass realization,
    for pairs that are not reachable."""
    rng = np.random.default_rng(11)
    tally = {"observable_allpass": 0, "stein_solvable": 0, "counterexample": 0, "skipped": 0}
    for trial in range(40):
        core = random_allpass(rng, int(rng.integers(1, 4)), int(rng.integers(1, 3)))
        s = _augment_unreachable(rng, core, int(rng.integers(1, 3)), mirror=trial % 2 == 0)
        if s is None:
            tally["skipped"] += 1
            continue
        observable = observability_unobs_subspace(s.A, s.C).dim == 0
        allpass = allpass_defect(s) < 1e-8
        if not (observable and allpass):
            tally["skipped"] += 1
            continue
        tally["observable_allpass"] += 1
        sol = solve_stein_sym(s.A, s.B @ s.B.T)
        ok = sol.particular is not None
        tally["stein_solvable"] += ok
        if not ok:
            tally["counterexample"] += 1
            log.info("probe: observable all-pass realization without a Stein solution "
                     "(trial %d, eig A = %s)", trial, np.round(np.linalg.eigvals(s.A), 4))
    # the converse direction: a Stein solution of a non-reachable pair, completed on the
    # reachable part and extended by an observable unreachable block
    built = 0
    for _ in range(10):
        n1, m = 2, 2
        core = random_allpass(rng, n1, m)
        P1 = solve_stein_sym(core.A, core.B @ core.B.T).particular
        C1, D = complete_from_B(core.A, core.B, P1)
        s = _augment_unreachable(rng, StateSpace(core.A, core.B, C1, D), 1, mirror=False)
        built += (observability_unobs_subspace(s.A, s.C).dim == 0 and allpass_defect(s) < 1e-8)
    log.info("reachability conjecture probe: %s; converse constructions: %d/10", tally, built)
    print(f"\n[probe] reachability conjecture: {tally}; converse constructions {built}/10")


def _riccati_vec(x, A, C, n):
    P = vec_to_sym(x, n)
    mid = np.eye(C.shape[0]) + C @ P @ C.T
    APC = A @ P @ C.T
    R = A @ P @ A.T - APC @ np.linalg.lstsq(mid, APC.T, rcond=None)[0] - P
    return sym_to_vec(R)


def test_probe_rank_without_positivity():
    """Search for P with rank M(P) = m but M(P) indefinite, with singular A."""
    rng = np.random.default_rng(12)
    found, indefinite, starts = 0, 0, 0
    for _ in range(8):
        s = random_allpass(rng, 3, int(rng.integers(1, 3)), n_zero=1)
        n, m = s.n, s.m
        for _ in range(6):
            starts += 1
            x0 = sym_to_vec(rng.standard_normal((n, n)) * rng.uniform(0.1, 5))
            r = least_squares(_riccati_vec, x0, args=(s.A, s.C, n), xtol=1e-15, ftol=1e-15,
                              gtol=1e-15, max_nfev=400)
            P = vec_to_sym(r.x, n)
            M = M_of(P, s.A, s.C)
            w = np.linalg.eigvalsh(M)
            thr = 1e-8 * max(1.0, np.abs(w).max())
            if numerical_rank(M, thr / max(1.0, np.abs(w).max())) != m:
                continue
            found += 1
            if w.min() < -thr:
                indefinite += 1
                log.info("probe: rank-%d but indefinite M(P), min eig %.3e", m, w.min())
    log.info("rank-without-positivity probe: %d rank-m points from %d starts, %d indefinite",
             found, starts, indefinite)
    print(f"\n[probe] rank-m points {found}/{starts}, indefinite {indefinite}")
