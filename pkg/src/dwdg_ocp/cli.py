"""Command line entry point: ``dwdg-ocp run`` and ``dwdg-ocp solve``."""

from __future__ import annotations

import argparse
import logging
import math
import sys

from .harness import (DEFAULT_GAMMAS, DEFAULT_LEVELS, SweepError, emit_table, make_config,
                      run_sweep, solve_level)
from .problems import get_example


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_bounds(text: str) -> tuple[float, float]:
    """'lo,hi' with 'inf'/'-inf' allowed; a bare 'inf' means no bounds."""
    if text.strip().lower() in ("inf", "none"):
        return -math.inf, math.inf
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi or inf, got {text!r}")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"need lo < hi, got {text!r}")
    return lo, hi


def _common(p: argparse.ArgumentParser):
    p.add_argument("--example", type=int, choices=(1, 2), required=True)
    p.add_argument("--control-degree", type=int, choices=(0, 1), default=0)
    p.add_argument("--beta", type=float, default=None, help="regularisation weight (default 1)")
    p.add_argument("--bounds", type=parse_bounds, default=None,
                   help="control bounds lo,hi or inf (default: the example's)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dwdg-ocp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="refinement sweep, printed as a table")
    _common(run)
    run.add_argument("--gamma", type=_float_list, default=list(DEFAULT_GAMMAS))
    run.add_argument("--levels", type=_int_list, default=list(DEFAULT_LEVELS))
    run.add_argument("--format", choices=("csv", "md"), default="csv")
    run.add_argument("--out", default=None, help="write the table here instead of stdout")

    solve = sub.add_parser("solve", help="single level, prints errors and iterations")
    _common(solve)
    solve.add_argument("--gamma", type=float, default=0.0)
    solve.add_argument("--level", type=int, required=True, help="N; h = 1/(2N)")
    return parser


def _run(args) -> int:
    try:
        records = run_sweep(args.example, args.control_degree, args.gamma, args.levels,
                            beta=args.beta, bounds=args.bounds, tol=args.tol,
                            max_iter=args.max_iter)
    except (SweepError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = emit_table(records, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    bad = [r for r in records if not r.converged]
    for r in bad:
        print(f"not converged: gamma={r.gamma:g}, N={r.N}", file=sys.stderr)
    return 1 if bad else 0


def _solve(args) -> int:
    example = get_example(args.example)
    try:
        cfg = make_config(example, args.control_degree, args.gamma, args.beta, args.bounds,
                          args.tol, args.max_iter)
        rec = solve_level(example, cfg, args.level)
    except (SweepError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"example {rec.example}, k={rec.k}, gamma={rec.gamma:g}, N={rec.N}, h=1/{2 * rec.N}")
    print(f"dof state/control : {rec.dof_state} / {rec.dof_control}")
    print(f"|||y - y_h|||     : {rec.err_y_energy:.6e}")
    print(f"|||p - p_h|||     : {rec.err_p_energy:.6e}")
    print(f"||u - u_h||_L2    : {rec.err_u_l2:.6e}")
    print(f"iterations        : {rec.pdas_iters} ({'converged' if rec.converged else 'NOT converged'})")
    print(f"kkt residual      : {rec.kkt_residual:.3e}")
    return 0 if rec.converged else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    return _run(args) if args.command == "run" else _solve(args)


if __name__ == "__main__":
    sys.exit(main())
