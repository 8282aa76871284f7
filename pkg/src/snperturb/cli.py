"""Command-line front end.

Every command prints a JSON object on stdout (curves go to CSV files).
Exit status: 0 when a result or verdict was produced, 2 for bad input,
3 for a numerical failure.
"""
import argparse
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from .divdiff import fq_derivative
from .embed import (_jsonable, pl_convexity_check, reduce_to_selfadjoint, refute,
                    verify_iqp)
from .errors import ConvergenceError, DomainError
from .io import InputError, load_claim, load_matrix, save_matrix
from .linalg import as_hermitian, hermitian_eig
from .moi import moi_trace_order2, moi_trace_truncated
from .perturb import track_branches
from .schatten import bj_orthogonal, parse_p, rth_derivative, schatten_norm

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _emit(obj):
    print(json.dumps(_jsonable(obj), indent=2))


def _pair(args):
    A = as_hermitian(load_matrix(args.a))
    B = as_hermitian(load_matrix(args.b))
    if A.shape != B.shape:
        raise InputError(f"--a and --b differ in shape: {A.shape} vs {B.shape}")
    return A, B


def cmd_norm(args):
    M = load_matrix(args.matrix)
    p = parse_p(args.p)
    _emit({"p": p, "norm": schatten_norm(M, p)})


def cmd_deriv(args):
    A, B = _pair(args)
    report = rth_derivative(A, B, float(args.p), args.order, fd_check=args.fd_check)
    _emit(report.to_dict())


def cmd_moi_trace(args):
    A, B = _pair(args)
    p = float(args.p)
    spec = hermitian_eig(A)
    if args.rank is None:
        value = moi_trace_order2(spec, p, B)
    else:
        value = moi_trace_truncated(spec, p, B, args.rank)
    _emit({"p": p, "rank": args.rank, "trace": value})


def cmd_bj(args):
    A, B = _pair(args)
    _emit(bj_orthogonal(A, B, float(args.p)).to_dict())


def cmd_eigpath(args):
    A, B = _pair(args)
    family = track_branches(A, B, args.tmax, args.steps)
    family.to_csv(args.out)
    _emit({"out": args.out, "rows": len(family.t_grid), "branches": family.n,
           "vanishing_orders": family.vanishing_orders,
           "leading_coeffs": family.leading_coeffs, "flags": family.flags})


def cmd_reduce(args):
    A = load_matrix(args.a)
    B = load_matrix(args.b)
    p = parse_p(args.p)
    A_new, B_new = reduce_to_selfadjoint(A, B, p)
    pa, pb = f"{args.out_prefix}_A.json", f"{args.out_prefix}_B.json"
    save_matrix(pa, A_new)
    save_matrix(pb, B_new)
    _emit({"p": p, "A": pa, "B": pb, "shape": list(A_new.shape)})


def cmd_iqp_verify(args):
    claim = load_claim(args.claim)
    res = verify_iqp(claim, grid=(-4.0, 4.0, args.grid))
    _emit({"q": claim.q, "p": claim.p, "max_residual": res.max_residual,
           "t_at_max": res.t_at_max, "tolerance": res.tolerance, "passed": res.passed,
           "grid": [-4.0, 4.0, args.grid]})


def cmd_refute(args):
    claim = load_claim(args.claim)
    report = refute(claim)
    with open(args.out, "w") as fh:
        fh.write(report.to_json(indent=2))
    _emit({"out": args.out, "conclusion": report.conclusion})


def cmd_plconvex(args):
    x = load_matrix(args.x)
    y = load_matrix(args.y)
    _emit(asdict(pl_convexity_check(x, y, q_claimed=args.q, angles=args.angles)))


def cmd_fq_deriv(args):
    _emit({"q": args.q, "n": args.n, "t": args.t, "value": fq_derivative(args.q, args.n, args.t)})


def build_parser():
    parser = _Parser(prog="snperturb", description="Schatten-norm perturbation toolkit")
    parser.add_argument("--seed", type=int, help="seed for randomized sub-procedures "
                        "(overrides SNPERTURB_SEED)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def pair(p):
        p.add_argument("--a", required=True, metavar="PATH")
        p.add_argument("--b", required=True, metavar="PATH")

    c = sub.add_parser("norm", help="Schatten p-norm of a matrix")
    c.add_argument("--matrix", required=True, metavar="PATH")
    c.add_argument("--p", required=True, help="real > 0, inf or one")
    c.set_defaults(func=cmd_norm)

    c = sub.add_parser("deriv", help="derivative of ||A+tB||_p^p at t = 0")
    pair(c)
    c.add_argument("--p", required=True, type=float)
    c.add_argument("--order", required=True, type=int, choices=(1, 2, 3))
    c.add_argument("--fd-check", action="store_true", help="compare with a finite difference")
    c.set_defaults(func=cmd_deriv)

    c = sub.add_parser("moi-trace", help="second-order MOI trace, optionally truncated")
    pair(c)
    c.add_argument("--p", required=True, type=float)
    c.add_argument("--rank", type=int)
    c.set_defaults(func=cmd_moi_trace)

    c = sub.add_parser("bj", help="Birkhoff-James orthogonality test")
    pair(c)
    c.add_argument("--p", required=True, type=float)
    c.set_defaults(func=cmd_bj)

    c = sub.add_parser("eigpath", help="track eigenvalue branches of A + tB to CSV")
    pair(c)
    c.add_argument("--tmax", required=True, type=float)
    c.add_argument("--steps", required=True, type=int)
    c.add_argument("--out", required=True, metavar="PATH")
    c.set_defaults(func=cmd_eigpath)

    c = sub.add_parser("reduce", help="self-adjoint 2x2 block reduction of a pair")
    pair(c)
    c.add_argument("--p", required=True, help="real or inf")
    c.add_argument("--out-prefix", required=True, metavar="PATH")
    c.set_defaults(func=cmd_reduce)

    c = sub.add_parser("iqp-verify", help="check ||A+tB||_p = ||(1,t)||_q on a grid")
    c.add_argument("--claim", required=True, metavar="PATH")
    c.add_argument("--grid", type=int, default=513)
    c.set_defaults(func=cmd_iqp_verify)

    c = sub.add_parser("refute", help="run the refutation pipeline on a claim")
    c.add_argument("--claim", required=True, metavar="PATH")
    c.add_argument("--out", required=True, metavar="PATH")
    c.set_defaults(func=cmd_refute)

    c = sub.add_parser("plconvex", help="PL-convexity inequality in the trace norm")
    c.add_argument("--x", required=True, metavar="PATH")
    c.add_argument("--y", required=True, metavar="PATH")
    c.add_argument("--angles", type=int, default=256)
    c.add_argument("--q", type=float, help="claimed q, for the arithmetic refutation")
    c.set_defaults(func=cmd_plconvex)

    c = sub.add_parser("fq-deriv", help="n-th derivative of (1 + |t|^q)^(1/q)")
    c.add_argument("--q", required=True, type=float)
    c.add_argument("--n", required=True, type=int)
    c.add_argument("--t", required=True, type=float)
    c.set_defaults(func=cmd_fq_deriv)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    if args.seed is not None:
        os.environ["SNPERTURB_SEED"] = str(args.seed)
    try:
        args.func(args)
    except (InputError, DomainError, ValueError) as exc:
        print(f"snperturb {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"snperturb {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"snperturb {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
