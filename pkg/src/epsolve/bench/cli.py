"""Command-line entry point: ``epsolve solve|sweep|verify``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..core import ConstantBeta, parse_beta, parse_termination
from ..errors import ContractViolation, EPSolveError, SpecError
from .experiment import (ALGORITHMS, PROBLEMS, ExperimentSpec, load_run, parse_vec, preset,
                         problem_defaults, run_experiment)
from .invariants import verify_invariants

EXIT_OK, EXIT_RUN_FAILED, EXIT_INVALID = 0, 1, 2


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _add_run_options(p, multi):
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--params", help="Nash-Cournot parameter file (key = values per column)")
    if multi:
        p.add_argument("--preset", help="table3 ... table10")
        p.add_argument("--theta", action="append", type=_floats, help="value or comma list; repeatable")
        p.add_argument("--delta", action="append", type=_floats, help="value or comma list; repeatable")
        p.add_argument("--beta", action="append", help="const:<c> | rational:<a>,<b>; repeatable")
        p.add_argument("--x0", action="append", help="comma-separated point; repeatable")
        p.add_argument("--repeat", type=int, default=1, help="timing repeats per grid point")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--no-traces", action="store_true")
    else:
        p.add_argument("--theta", type=float)
        p.add_argument("--delta", type=float)
        p.add_argument("--beta")
        p.add_argument("--x0")
    p.add_argument("--term", help="xz:<eps> | xy:<eps>")
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--inner-tol", type=float, default=1e-10)
    p.add_argument("--proj-tol", type=float, default=1e-10)
    p.add_argument("--out", type=Path)


def build_parser():
    parser = argparse.ArgumentParser(prog="epsolve", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_options(sub.add_parser("solve", help="single run"), multi=False)
    _add_run_options(sub.add_parser("sweep", help="parameter grid"), multi=True)
    v = sub.add_parser("verify", help="invariant report for a saved trace")
    v.add_argument("trace", type=Path)
    return parser


def _flatten(lists):
    return [v for chunk in lists for v in chunk] if lists else None


def spec_from_args(args) -> ExperimentSpec:
    base = preset(args.preset) if getattr(args, "preset", None) else {}
    problem = args.problem or base.get("problem")
    if problem is None:
        raise SpecError("--problem is required (or use --preset)")
    defaults = {**problem_defaults(problem), **{k: v for k, v in base.items() if k != "problem"}}
    multi = args.command == "sweep"
    if multi:
        thetas = _flatten(args.theta)
        deltas = _flatten(args.delta)
        betas = [parse_beta(b) for b in args.beta] if args.beta else None
        x0s = [parse_vec(x) for x in args.x0] if args.x0 else None
    else:
        thetas = [args.theta] if args.theta is not None else None
        deltas = [args.delta] if args.delta is not None else None
        betas = [parse_beta(args.beta)] if args.beta else None
        x0s = [parse_vec(args.x0)] if args.x0 else None
    if thetas is None:
        thetas = defaults.get("thetas")
    if deltas is None:
        deltas = defaults.get("deltas", [0.01])
    if thetas is None:
        raise SpecError("--theta is required")
    return ExperimentSpec(
        problem=problem,
        algorithm=args.algorithm or defaults["algorithm"],
        thetas=thetas,
        deltas=deltas,
        betas=betas or defaults.get("betas", [ConstantBeta(0.5)]),
        x0s=x0s or defaults.get("x0s", defaults["x0"]),
        termination=parse_termination(args.term) if args.term else defaults["termination"],
        out_dir=args.out,
        repeats=getattr(args, "repeat", 1),
        max_outer=args.max_iters,
        inner_tol=args.inner_tol,
        projection_tol=args.proj_tol,
        write_traces=not getattr(args, "no_traces", False),
        workers=getattr(args, "workers", 1),
        params_file=args.params,
    )


def _print_rows(rows):
    print(f"{'#':>3} {'theta':>6} {'delta':>6} {'beta':>14} {'iters':>6} {'time(s)':>9} "
          f"{'final E':>10}  status / final point")
    for r in rows:
        point = np.array2string(np.asarray(r.final_point), precision=6, separator=",")
        print(f"{r.index:3d} {r.theta:6g} {r.delta:6g} {r.beta:>14} {r.iterations:6d} "
              f"{r.wall_time:9.4f} {r.final_E:10.3e}  {r.status} {point}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        try:
            trace, instance, config = load_run(args.trace)
            report = verify_invariants(trace, instance, config)
        except (EPSolveError, OSError, KeyError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        print(report.format())
        return EXIT_OK if report.passed else EXIT_RUN_FAILED
    try:
        spec = spec_from_args(args)
        spec.configs()
    except (SpecError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        rows = run_experiment(spec)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _print_rows(rows)
    if spec.out_dir is not None:
        print(f"wrote {spec.out_dir / 'summary.csv'}")
    return EXIT_RUN_FAILED if any(r.failed for r in rows) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
