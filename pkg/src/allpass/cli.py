"""Command-line interface.

::

    allpass check    problem.json
    allpass complete problem.json --mode from-B|from-C|from-BC
    allpass lmi      problem.json --side P|Q [--enumerate]
    allpass factor   problem.json [--enumerate] [--biproper]
    allpass deflate  problem.json

Results go to standard output as one JSON envelope; diagnostics go to
standard error.  Exit status: 0 success, 1 a mathematical precondition
failed (or an emitted all-pass object has grid defect above tolerance),
2 the input could not be read or parsed.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .certificate import (complete_from_B, complete_from_BC, complete_from_C, is_allpass,
                          residual_tol)
from .config import DEFAULT_GRID, ENV_TOL, resolve_tol
from .deflate import deflate_at_infinity, recompose
from .exceptions import AllPassError, PreconditionError
from .factor import (biproper_left_divisor, biproper_right_divisor, divisor_distance,
                     enumerate_divisors, factorize)
from .io import ParseError, dumps, load_problem, write_atomic
from .linalg import Subspace, numerical_rank
from .lmi import (check_clmi, enumerate_solutions, nonsingular_family_member,
                  riccati_residual_P, riccati_residual_Q, solution_from_subspace_P,
                  solution_from_subspace_Q)
from .realization import StateSpace, allpass_defect, default_grid, grid_distance

log = logging.getLogger("allpass")

EXIT_OK, EXIT_MATH, EXIT_IO = 0, 1, 2


class DefectError(PreconditionError):
    """An emitted all-pass object fails the independent grid check."""


class Context:
    """Per-invocation settings and the diagnostics collected along the way."""

    def __init__(self, args, problem):
        if args.tol is not None:
            self.tol, self.tol_source = resolve_tol(args.tol), "flag"
        elif problem.tol is not None:
            self.tol, self.tol_source = resolve_tol(problem.tol), "file"
        elif os.environ.get(ENV_TOL):
            self.tol, self.tol_source = resolve_tol(None), "env"
        else:
            self.tol, self.tol_source = resolve_tol(None), "default"
        self.grid = args.grid
        self.seed = args.seed
        self.zs = default_grid(args.grid, 16, args.seed)
        self.defects = {}
        self.warnings = []

    def certify(self, name, sys):
        """Record the grid defect of an emitted all-pass object; fail above tolerance."""
        defect = allpass_defect(sys, self.grid)
        self.defects[name] = defect
        bound = residual_tol(sys, None, self.tol)
        if defect > bound:
            raise DefectError(f"{name}: grid defect {defect:.3e} exceeds {bound:.3e}")
        return defect

    def diagnostics(self):
        return {"tol": self.tol, "tol_source": self.tol_source, "grid": self.grid,
                "seed": self.seed, "defects": self.defects, "warnings": self.warnings}


def _sys(sys):
    return {"A": sys.A, "B": sys.B, "C": sys.C, "D": sys.D, "n": sys.n, "m": sys.m}


# --- commands ----------------------------------------------------------------

def cmd_check(problem, ctx, args):
    sys_ = problem.system()
    v = is_allpass(sys_, ctx.tol, ctx.grid)
    ctx.defects["input"] = v.defect
    out = {"is_allpass": v.is_allpass, "defect": v.defect, "residuals": v.residuals,
           "mcmillan": v.minimal_sys.n, "minimal": v.minimal_sys.n == sys_.n}
    if v.certificate is not None:
        out["P0"], out["Q0"] = v.certificate.P0, v.certificate.Q0
    if v.reason:
        out["reason"] = v.reason
    return out


def cmd_complete(problem, ctx, args):
    mode = args.mode
    if mode == "from-B":
        A, B, P = problem.require("A", "B", "P")
        C, D = complete_from_B(A, B, P, ctx.tol)
    elif mode == "from-C":
        A, C, Q = problem.require("A", "C", "Q")
        B, D = complete_from_C(A, C, Q, ctx.tol)
    else:
        A, B, C, P, Q = problem.require("A", "B", "C", "P", "Q")
        D = complete_from_BC(A, B, C, P, Q, ctx.tol)
    sys_ = StateSpace(A, B, C, D)
    ctx.certify("completed", sys_)
    return {"mode": mode, "system": _sys(sys_)}


def _describe(sol, sys_, side, tol):
    X = sol.P if side == "P" else sol.Q
    out = {"side": side, "matrix": X, "rank": numerical_rank(X, tol), "kernel": sol.kernel}
    if side == "P":
        out["G"], out["L"] = sol.G, sol.L
        other = sys_.C
    else:
        out["H"], out["J"] = sol.H, sol.J
        other = sys_.B
    report = check_clmi(X, sys_.A, other, side, tol)
    out["clmi"] = {"passed": report.passed, "rank": report.rank, "min_eig": report.min_eig}
    try:
        res = (riccati_residual_P(X, sys_.A, sys_.C, tol) if side == "P"
               else riccati_residual_Q(X, sys_.A, sys_.B, tol))
        out["riccati_residual"] = res
    except PreconditionError as exc:
        out["riccati_residual"] = None
        out["riccati_note"] = str(exc)
    return out


def cmd_lmi(problem, ctx, args):
    sys_ = problem.system()
    side = args.side
    tol = ctx.tol
    if problem.delta is not None:
        base = nonsingular_family_member(sys_, problem.delta, side, tol=tol)
    else:
        v = is_allpass(sys_, tol, ctx.grid)
        if not v:
            raise PreconditionError(f"input is not a minimal all-pass realization ({v.reason})")
        base = v.certificate.P0 if side == "P" else v.certificate.Q0
    if args.enumerate:
        sols = enumerate_solutions(sys_, side, args.max_count, problem.delta, tol=tol)
        return {"side": side, "count": len(sols),
                "solutions": [_describe(s, sys_, side, tol) for s in sols]}
    S = problem.subspace if problem.subspace is not None else Subspace.zero(sys_.n)
    build = solution_from_subspace_P if side == "P" else solution_from_subspace_Q
    return {"side": side, "solution": _describe(build(sys_, base, S, tol), sys_, side, tol)}


def _fact(f, sys_, ctx, tag, biproper):
    ctx.certify(f"{tag}.left", f.left.minimal_sys)
    ctx.certify(f"{tag}.right", f.right.minimal_sys)
    product = f.product()
    out = {"subspace": f.subspace,
           "left": {"degree": f.left.degree, "system": _sys(f.left.minimal_sys),
                    "P": f.left.source.P},
           "right": {"degree": f.right.degree, "system": _sys(f.right.minimal_sys),
                     "Q": f.right.source.Q},
           "diagnostics": f.diagnostics}
    if biproper:
        bl = biproper_left_divisor(sys_, f.left.source.P, ctx.tol)
        br = biproper_right_divisor(sys_, f.right.source.Q, ctx.tol)
        out["biproper"] = {
            "left": {"G": bl.sys.B, "L": bl.sys.D,
                     "gauge_distance": divisor_distance(bl, f.left, ctx.zs)},
            "right": {"H": br.sys.C, "J": br.sys.D,
                      "gauge_distance": divisor_distance(br, f.right, ctx.zs)},
        }
    return out, product


def cmd_factor(problem, ctx, args):
    sys_ = problem.system()
    v = is_allpass(sys_, ctx.tol, ctx.grid)
    if not v or v.minimal_sys.n != sys_.n:
        raise PreconditionError(f"input is not a minimal all-pass realization {v.reason}".strip())
    if args.enumerate:
        facts = enumerate_divisors(sys_, args.max_count, ctx.tol)
    else:
        X = problem.subspace if problem.subspace is not None else Subspace.zero(sys_.n)
        facts = [factorize(sys_, X, v.certificate, ctx.tol, ctx.zs)]
    items = []
    for i, f in enumerate(facts):
        item, product = _fact(f, sys_, ctx, f"factorization[{i}]", args.biproper)
        item["product_defect"] = grid_distance(product, sys_, ctx.zs)
        if item["product_defect"] > residual_tol(sys_, None, ctx.tol):
            raise DefectError(f"factorization[{i}]: product gap {item['product_defect']:.3e}")
        items.append(item)
    return {"count": len(items), "factorizations": items}


def cmd_deflate(problem, ctx, args):
    sys_ = problem.system()
    d = deflate_at_infinity(sys_, ctx.tol, ctx.zs)
    ctx.warnings.extend(d.warnings)
    ctx.certify("q0", d.q0)
    sv = np.linalg.svd(d.q0.D, compute_uv=False)
    return {"q0": _sys(d.q0), "q0_min_singular_value": float(sv[-1]),
            "steps": [{"U": s.U, "p": s.p} for s in d.steps],
            "raw": [{"V": V, "q": q} for V, q in d.raw],
            "convention": d.convention,
            "recomposition_defect": grid_distance(recompose(d.q0, d.steps), sys_, ctx.zs[
                np.abs(ctx.zs) > 1e-6])}


COMMANDS = {"check": cmd_check, "complete": cmd_complete, "lmi": cmd_lmi,
            "factor": cmd_factor, "deflate": cmd_deflate}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="problem file (JSON); '-' reads standard input")
    common.add_argument("--tol", type=float, default=None,
                        help=f"relative tolerance (default 1e-9; env {ENV_TOL})")
    common.add_argument("--grid", type=int, default=DEFAULT_GRID,
                        help="unit-circle grid size for defect checks")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for the random off-circle comparison points")
    common.add_argument("-o", "--output", help="write the envelope here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="allpass", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="certify the all-pass property")
    p = sub.add_parser("complete", parents=[common], help="complete partial data")
    p.add_argument("--mode", required=True, choices=["from-B", "from-C", "from-BC"])
    p = sub.add_parser("lmi", parents=[common], help="constrained LMI solutions")
    p.add_argument("--side", choices=["P", "Q"], default="P")
    p.add_argument("--enumerate", action="store_true")
    p.add_argument("--max-count", type=int, default=None)
    p = sub.add_parser("factor", parents=[common], help="minimal all-pass factorizations")
    p.add_argument("--enumerate", action="store_true")
    p.add_argument("--max-count", type=int, default=None)
    p.add_argument("--biproper", action="store_true",
                   help="also emit the closed-form biproper divisors")
    sub.add_parser("deflate", parents=[common], help="deflation at infinity")
    return parser


def _emit(text, output):
    if output:
        write_atomic(output, text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="allpass: %(levelname)s: %(message)s", stream=sys.stderr)
    if args.grid < 1:
        print("allpass: error: --grid must be positive", file=sys.stderr)
        return EXIT_IO
    try:
        problem = load_problem(args.file)
        ctx = Context(args, problem)
    except (ParseError, ValueError) as exc:
        print(f"allpass: error: {exc}", file=sys.stderr)
        return EXIT_IO
    envelope = {"command": args.command, "input_digest": problem.digest}
    try:
        envelope["outputs"] = COMMANDS[args.command](problem, ctx, args)
        envelope["status"] = "ok"
        code = EXIT_OK
    except ParseError as exc:
        print(f"allpass: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AllPassError as exc:
        print(f"allpass: {type(exc).__name__}: {exc}", file=sys.stderr)
        envelope["status"] = "error"
        envelope["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_MATH
    envelope["diagnostics"] = ctx.diagnostics()
    try:
        _emit(dumps(envelope), args.output)
    except OSError as exc:
        print(f"allpass: error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
