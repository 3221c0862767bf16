"""Acceptance criteria 1-9.

Each test prints one ``PASS``/``FAIL`` line for its criterion (also
collected into the terminal summary) and then asserts it.  The shared
corpus is seeded, so every run checks the same systems.  Run standalone
with ``python3 tests/test_acceptance.py``.
"""

import json
import time
from functools import lru_cache

import numpy as np
import pytest

from allpass.certificate import certificate, certificate_residuals, f_identity_residual
from allpass.cli import main
from allpass.deflate import deflate_at_infinity, recompose
from allpass.factor import (biproper_left_divisor, biproper_right_divisor, divisor_distance,
                            factorize, right_divisor)
from allpass.generate import (random_allpass, random_mixed, random_series_pair,
                              random_with_delays)
from allpass.linalg import Subspace, invariant_subspaces, is_unmixed, numerical_rank
from allpass.lmi import (check_clmi, complementary, enumerate_solutions, riccati_residual_P,
                         riccati_residual_Q)
from allpass.realization import (aligned_grid_distance, allpass_defect, default_grid,
                                 grid_distance)

RESULTS = []
SEED = 2024
MAX_SUBSPACES = 16
ZS = default_grid(64, 16, SEED)


def report(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def _sigma_min(M):
    return np.linalg.svd(M, compute_uv=False)[-1] if M.size else np.inf


def _singular(M, tol=1e-8):
    return M.size > 0 and _sigma_min(M) <= tol * max(1.0, np.linalg.norm(M, 2))


@lru_cache(maxsize=None)
def corpus():
    """>= 200 minimal all-pass systems with n <= 8, m <= 3.

    Mix: generic systems (some with zero eigenvalues), systems with a mixed
    spectrum, and biproper cores composed with pure-delay factors.
    """
    rng = np.random.default_rng(SEED)
    systems = []
    for _ in range(130):
        n, m = int(rng.integers(1, 9)), int(rng.integers(1, 4))
        n_zero = 0 if rng.random() < 0.7 else int(rng.integers(1, min(2, n) + 1))
        systems.append(("generic", random_allpass(rng, n, m, n_zero=n_zero)))
    for _ in range(20):
        systems.append(("mixed", random_mixed(rng, int(rng.integers(2, 7)),
                                              int(rng.integers(2, 4)))))
    while len(systems) < 200:
        m = int(rng.integers(1, 4))
        n_core = int(rng.integers(1, 5))
        s, _, _ = random_with_delays(rng, n_core, m, int(rng.integers(1, 3)),
                                     max_p=min(m, 2))
        if s.n <= 8:
            systems.append(("delayed", s))
    return systems


# --- 1 -----------------------------------------------------------------------

def _complete_from_c(tmp_path, Q, name):
    path = tmp_path / name
    path.write_text(json.dumps({"A": [[2, 0], [0, 0.5]], "C": [[1, 0], [0, 1]], "Q": Q}))
    out = tmp_path / (name + ".out")
    code = main(["complete", str(path), "--mode", "from-C", "-o", str(out)])
    env = json.loads(out.read_text())
    return code, np.array(env["outputs"]["system"]["B"]), np.array(env["outputs"]["system"]["D"])


def test_criterion_1_mixed2(tmp_path):
    t0 = time.perf_counter()
    code0, B0, D0 = _complete_from_c(tmp_path, [[1 / 3, 0], [0, -4 / 3]], "q0.json")
    code1, B1, D1 = _complete_from_c(tmp_path, [[1 / 3, 1 / 6], [1 / 6, -4 / 3]], "q16.json")
    elapsed = time.perf_counter() - t0
    e0 = max(np.abs(B0 - np.diag([3, -0.75])).max(), np.abs(D0 - np.diag([2, 0.5])).max())
    e1 = max(np.abs(B1 - np.array([[2.85, 0.57], [0.14, -0.71]])).max(),
             np.abs(D1 - np.array([[1.95, 0.14], [0.14, 0.52]])).max())
    gauge = np.allclose(D1, D1.T) and np.linalg.eigvalsh(D1).min() >= 0
    ok = code0 == code1 == 0 and e0 <= 1e-9 and e1 <= 0.01 and gauge and elapsed < 1.0
    report(1, ok, f"q=0 max err {e0:.1e} (<=1e-9), q=1/6 max err {e1:.1e} (<=0.01), "
                  f"D=D^T>=0 {gauge}, {elapsed:.2f}s (<1s)")
    assert ok


# --- 2, 3 --------------------------------------------------------------------

def test_criterion_2_certificate_suite():
    systems = corpus()
    t0 = time.perf_counter()
    worst = dict(sym=0.0, pq=0.0, res=0.0, defect=0.0, fx=0.0)
    for _, s in systems:
        c = certificate(s)
        P, Q = c.P0, c.Q0
        worst["sym"] = max(worst["sym"], np.abs(P - P.T).max(initial=0),
                           np.abs(Q - Q.T).max(initial=0))
        if s.n:
            worst["pq"] = max(worst["pq"], np.linalg.norm(P @ Q - np.eye(s.n)))
        worst["res"] = max(worst["res"], *certificate_residuals(s, P, Q).values())
        worst["defect"] = max(worst["defect"], allpass_defect(s))
        worst["fx"] = max(worst["fx"], f_identity_residual(s, P))
    elapsed = time.perf_counter() - t0
    kinds = {k: sum(1 for kk, _ in systems if kk == k) for k in ("generic", "mixed", "delayed")}
    n_sing = sum(1 for _, s in systems if _singular(s.A))
    ok = (len(systems) >= 200 and all(v <= 1e-7 for v in worst.values()) and elapsed < 30
          and n_sing > 0)
    report(2, ok, f"{len(systems)} systems {kinds}, {n_sing} with singular A; worst "
                  + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
                  + f" (all <=1e-7); {elapsed:.1f}s (<30s)")
    assert ok


def test_criterion_3_dichotomy():
    bad = [i for i, (_, s) in enumerate(corpus()) if _singular(s.A) != _singular(s.D)]
    n_sing = sum(1 for _, s in corpus() if _singular(s.A))
    ok = not bad
    report(3, ok, f"singular(A) <=> singular(D) on {len(corpus())} systems "
                  f"({n_sing} singular), violations {bad}")
    assert ok


# --- 4, 5 --------------------------------------------------------------------

def test_criterion_4_riccati_vs_clmi():
    rng = np.random.default_rng(SEED + 4)
    n_inst = n_sol = n_probe = 0
    worst_sol = 0.0
    mismatches = []
    for idx, (_, s) in enumerate(corpus()):
        if s.n == 0 or _singular(s.A):
            continue
        n_inst += 1
        cert = certificate(s)
        sols = []
        for side in "PQ":
            for sol in enumerate_solutions(s, side, MAX_SUBSPACES, cert=cert):
                X = sol.P if side == "P" else sol.Q
                res = (riccati_residual_P(X, s.A, s.C) if side == "P"
                       else riccati_residual_Q(X, s.A, s.B))
                other = s.C if side == "P" else s.B
                if not check_clmi(X, s.A, other, side):
                    mismatches.append((idx, side, "solution fails CLMI"))
                worst_sol = max(worst_sol, res)
                n_sol += 1
                if side == "P":
                    sols.append(X)
        scale = max(1.0, np.linalg.norm(cert.P0, 2))
        for j in range(50):
            if j % 2:
                R = rng.standard_normal((s.n, s.n))
                P = (R + R.T) * scale
            else:
                E = rng.standard_normal((s.n, s.n))
                P = sols[j // 2 % len(sols)] + 1e-2 * scale * (E + E.T) / np.linalg.norm(E + E.T, 2)
            fails = not check_clmi(P, s.A, s.C, "P")
            try:
                res = riccati_residual_P(P, s.A, s.C)
            except Exception:
                res = np.inf
            n_probe += 1
            if fails != (res > 1e-5):
                mismatches.append((idx, j, fails, res))
    ok = worst_sol <= 1e-7 and not mismatches
    report(4, ok, f"{n_inst} nonsingular-A instances, {n_sol} enumerated solutions, worst "
                  f"Riccati residual {worst_sol:.1e} (<=1e-7); {n_probe} non-solutions, "
                  f"{len(mismatches)} CLMI/ARE disagreements")
    assert ok, mismatches[:5]


def test_criterion_5_geometry():
    worst_inv = 0.0
    rank_bad, dist_bad = [], []
    n_sol = 0
    min_dist = np.inf
    for idx, (_, s) in enumerate(corpus()):
        cert = certificate(s)
        sols = enumerate_solutions(s, "P", MAX_SUBSPACES, cert=cert)
        for sol in sols:
            n_sol += 1
            worst_inv = max(worst_inv, sol.kernel.invariance_residual(s.A.T)
                            / max(1.0, np.linalg.norm(s.A, 2)))
            q = complementary(s, sol, cert)
            q_kernel_inv = q.kernel.invariance_residual(s.A) / max(1.0, np.linalg.norm(s.A, 2))
            worst_inv = max(worst_inv, q_kernel_inv)
            if numerical_rank(sol.P) + numerical_rank(q.Q) != s.n:
                rank_bad.append(idx)
        if is_unmixed(s.A):
            for i in range(len(sols)):
                for j in range(i):
                    d = np.linalg.norm(sols[i].P - sols[j].P, 2)
                    min_dist = min(min_dist, d)
                    if d <= 1e-6:
                        dist_bad.append((idx, i, j))
    ok = worst_inv <= 1e-8 and not rank_bad and not dist_bad
    report(5, ok, f"{n_sol} solutions: worst kernel invariance {worst_inv:.1e} (<=1e-8), "
                  f"rank additivity failures {len(rank_bad)}, min pairwise distance "
                  f"(unmixed A) {min_dist:.1e} (>1e-6)")
    assert ok


# --- 6, 7 --------------------------------------------------------------------

def test_criterion_6_factorization():
    worst = dict(left=0.0, right=0.0, product=0.0)
    additivity = []
    count = 0
    for idx, (_, s) in enumerate(corpus()):
        cert = certificate(s)
        for X in invariant_subspaces(s.A, MAX_SUBSPACES):
            f = factorize(s, X, cert, zs=ZS)
            count += 1
            if (f.left.degree + f.right.degree != s.n or f.left.degree != X.dim
                    or f.left.minimal_sys.n != f.left.degree
                    or f.right.minimal_sys.n != f.right.degree):
                additivity.append(idx)
            worst["left"] = max(worst["left"], allpass_defect(f.left.minimal_sys))
            worst["right"] = max(worst["right"], allpass_defect(f.right.minimal_sys))
            worst["product"] = max(worst["product"], grid_distance(f.product(), s, ZS))
    rng = np.random.default_rng(SEED + 6)
    conv = 0.0
    for _ in range(20):
        nf, ng, m = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 4))
        fl, gr, s = random_series_pair(rng, nf, ng, m)
        X = Subspace.span(np.eye(nf + ng)[:, ng:])
        f = factorize(s, X, zs=ZS)
        conv = max(conv, aligned_grid_distance(f.left.minimal_sys, fl, "right", ZS)[0],
                   aligned_grid_distance(f.right.minimal_sys, gr, "left", ZS)[0])
    ok = not additivity and all(v <= 1e-7 for v in worst.values()) and conv <= 1e-6
    report(6, ok, f"{count} factorizations: additivity failures {len(additivity)}, worst "
                  f"defects left {worst['left']:.1e} right {worst['right']:.1e} product "
                  f"{worst['product']:.1e} (<=1e-7); converse recovery {conv:.1e} (<=1e-6)")
    assert ok


def test_criterion_7_biproper():
    worst = 0.0
    count = 0
    for _, s in corpus():
        if s.n == 0 or _singular(s.A) or _singular(s.D):
            continue
        cert = certificate(s)
        for X in invariant_subspaces(s.A, MAX_SUBSPACES):
            f = factorize(s, X, cert, zs=ZS)
            bl = biproper_left_divisor(s, f.left.source)
            br = biproper_right_divisor(s, f.right.source)
            worst = max(worst, divisor_distance(bl, f.left, ZS),
                        divisor_distance(br, right_divisor(s, f.right.source), ZS))
            count += 1
    ok = count > 0 and worst <= 1e-7
    report(7, ok, f"{count} biproper divisor pairs, worst aligned distance {worst:.1e} (<=1e-7)")
    assert ok


# --- 8, 9 --------------------------------------------------------------------

def test_criterion_8_deflation():
    rng = np.random.default_rng(SEED + 8)
    zs = ZS[np.abs(ZS) > 1e-6]
    worst_gap, min_sv, over = 0.0, np.inf, []
    N = 60
    for i in range(N):
        m = int(rng.integers(1, 4))
        s, _, _ = random_with_delays(rng, int(rng.integers(1, 5)), m, int(rng.integers(1, 4)))
        d = deflate_at_infinity(s, zs=zs)
        if len(d.steps) > s.n:
            over.append(i)
        min_sv = min(min_sv, _sigma_min(d.q0.D))
        worst_gap = max(worst_gap, grid_distance(recompose(d.q0, d.steps), s, zs))
    ok = not over and min_sv > 1e-6 and worst_gap <= 1e-7
    report(8, ok, f"{N} systems with singular D: step-count violations {len(over)}, "
                  f"min sigma(D_0) {min_sv:.2e} (>1e-6), recomposition {worst_gap:.1e} (<=1e-7)")
    assert ok


def test_criterion_9_no_benchmarks():
    report(9, True, "the only tabulated reference values are the two-state "
                    "completions checked in criterion 1; "
                    "all other acceptance is property-based")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
