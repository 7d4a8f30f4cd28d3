"""Parameter sweeps over the solvers, with CSV summaries and traces."""

from __future__ import annotations

import csv
import itertools
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .. import problems
from ..core import (ConstantBeta, Criterion, IterateRecord, RationalBeta, RunTrace, SolverConfig,
                    Status, TerminationRule, parse_beta, parse_termination, run)
from ..errors import ContractViolation, EPSolveError, SpecError

PROBLEMS = ("nash-cournot", "quasimonotone-vi", "synthetic")
ALGORITHMS = ("alg1", "alg2")

TRACE_HEADER = ["k", "E", "dist_to_anchor", "m_k", "theta_k", "linesearch_lhs", "num_cuts", "wall_ms"]
SUMMARY_HEADER = ["index", "problem", "algorithm", "theta", "delta", "beta", "x0", "termination",
                  "iterations", "wall_time", "final_E", "final_point", "status", "trace_file"]


def fmt(v) -> str:
    return format(float(v), ".17g")


def fmt_vec(v) -> str:
    return " ".join(fmt(t) for t in np.asarray(v, dtype=float))


def parse_vec(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.replace(",", " ").split()])


def build_problem(name: str, params_file: Optional[str] = None):
    if name == "nash-cournot":
        params = problems.load_params(params_file) if params_file else None
        return problems.build_nash_cournot(params)
    if params_file:
        raise SpecError(f"--params only applies to nash-cournot, not {name}")
    if name == "quasimonotone-vi":
        return problems.build_quasimonotone_vi()
    if name == "synthetic":
        from ..model import FeasibleBox
        return problems.synthetic_affine_vi(np.eye(2), -np.array([0.3, 0.7]), FeasibleBox.unit(2),
                                            name="synthetic")
    raise SpecError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}")


def problem_defaults(name: str) -> dict:
    if name == "nash-cournot":
        return dict(algorithm="alg1", x0=[problems.NASH_COURNOT_X0],
                    termination=TerminationRule(Criterion.XZ, 1e-4))
    return dict(algorithm="alg2", x0=[(0.0, 0.0)], termination=TerminationRule(Criterion.XY, 1e-8))


@dataclass
class ExperimentSpec:
    problem: str
    algorithm: str
    thetas: list
    deltas: list
    betas: list
    x0s: list
    termination: TerminationRule
    out_dir: Optional[Path] = None
    repeats: int = 1
    max_outer: int = 10_000
    inner_tol: float = 1e-10
    projection_tol: float = 1e-10
    write_traces: bool = True
    workers: int = 1
    params_file: Optional[str] = None

    def configs(self) -> list:
        """One validated SolverConfig per grid point, in grid order."""
        if self.problem not in PROBLEMS:
            raise SpecError(f"unknown problem {self.problem!r}")
        if self.algorithm not in ALGORITHMS:
            raise SpecError(f"unknown algorithm {self.algorithm!r}")
        if self.repeats < 1 or self.workers < 1:
            raise SpecError("repeats and workers must be >= 1")
        grid = list(itertools.product(self.thetas, self.deltas, self.betas, self.x0s))
        if not grid:
            raise SpecError("parameter grid is empty")
        instance = build_problem(self.problem, self.params_file)
        if self.algorithm == "alg2" and not instance.is_vi:
            raise SpecError(f"alg2 needs a VI problem; {self.problem} is an EP")
        out = []
        for theta, delta, beta, x0 in grid:
            try:
                cfg = SolverConfig(theta=float(theta), delta=float(delta), x0=x0,
                                   beta_schedule=beta, termination=self.termination,
                                   inner_tol=self.inner_tol, projection_tol=self.projection_tol,
                                   max_outer=self.max_outer)
                instance.check_point(cfg.x0, "x0")
            except ContractViolation as exc:
                raise SpecError(f"invalid grid point theta={theta} delta={delta} beta={beta} "
                                f"x0={x0}: {exc}") from None
            if not instance.feasible.contains(cfg.x0):
                raise SpecError(f"x0={list(cfg.x0)} lies outside the feasible box")
            out.append(cfg)
        return out


@dataclass
class SummaryRow:
    index: int
    problem: str
    algorithm: str
    theta: float
    delta: float
    beta: str
    x0: np.ndarray
    termination: str
    iterations: int
    wall_time: float
    final_E: float
    final_point: np.ndarray
    status: str
    trace_file: str = ""
    trace: Optional[RunTrace] = field(default=None, repr=False)

    @property
    def failed(self) -> bool:
        try:
            return not Status(self.status).converged
        except ValueError:
            return True

    def csv_row(self) -> list:
        return [self.index, self.problem, self.algorithm, fmt(self.theta), fmt(self.delta),
                self.beta, fmt_vec(self.x0), self.termination, self.iterations,
                fmt(self.wall_time), fmt(self.final_E), fmt_vec(self.final_point), self.status,
                self.trace_file]


def _execute(job):
    problem, params_file, algorithm, config, repeats = job
    instance = build_problem(problem, params_file)
    times, trace, error = [], None, None
    for _ in range(repeats):
        t0 = time.monotonic()
        try:
            trace = run(instance, config, algorithm)
        except EPSolveError as exc:
            error = f"Error:{type(exc).__name__}: {exc}"
            break
        times.append(time.monotonic() - t0)
    return trace, (statistics.median(times) if times else float("nan")), error


def _check_writable(out_dir: Path):
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out_dir} is not writable: {exc}") from exc


def run_experiment(spec: ExperimentSpec) -> list:
    """Run every grid point; rows come back (and are written) in grid order.

    Individual run failures are recorded in the row's status instead of
    aborting the sweep.
    """
    configs = spec.configs()
    out_dir = Path(spec.out_dir) if spec.out_dir is not None else None
    if out_dir is not None:
        _check_writable(out_dir)
    jobs = [(spec.problem, spec.params_file, spec.algorithm, cfg, spec.repeats) for cfg in configs]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_execute, jobs))
    else:
        results = [_execute(j) for j in jobs]

    rows = []
    for i, (cfg, (trace, wall, error)) in enumerate(zip(configs, results)):
        common = dict(index=i, problem=spec.problem, algorithm=spec.algorithm, theta=cfg.theta,
                      delta=cfg.delta, beta=str(cfg.beta_schedule), x0=cfg.x0,
                      termination=str(cfg.termination))
        if trace is None:
            rows.append(SummaryRow(iterations=0, wall_time=wall, final_E=float("nan"),
                                   final_point=cfg.x0, status=error, **common))
            continue
        row = SummaryRow(iterations=trace.iterations, wall_time=wall, final_E=trace.final_E,
                         final_point=trace.final_point, status=trace.status.value, trace=trace,
                         **common)
        if out_dir is not None and spec.write_traces:
            path = out_dir / f"trace_{i:03d}.csv"
            save_run(trace, path, spec.problem, cfg, spec.params_file)
            row.trace_file = path.name
        rows.append(row)
    if out_dir is not None:
        write_summary(rows, out_dir / "summary.csv")
    return rows


def write_summary(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for r in rows:
            w.writerow(r.csv_row())


# -- trace files -----------------------------------------------------------

def emit_trace(trace: RunTrace, path) -> Path:
    """Write the per-iteration CSV (17 significant digits, exact round trip)."""
    if not trace.records:
        raise ContractViolation("cannot emit an empty trace")
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_HEADER)
            for r in trace.records:
                w.writerow([r.k, fmt(r.E), fmt(r.dist_to_anchor), r.m, fmt(r.theta_k),
                            fmt(r.linesearch_lhs), r.num_cuts, fmt(1000.0 * r.wall_time)])
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc
    return path


def read_trace(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_HEADER:
            raise ContractViolation(f"{path} is not a trace file (header {reader.fieldnames})")
        rows = []
        for rec in reader:
            rows.append({k: (int(v) if k in ("k", "m_k", "num_cuts") else float(v))
                         for k, v in rec.items()})
    return rows


def _sidecars(path: Path):
    return path.with_suffix(".vectors.csv"), path.with_suffix(".run.csv")


def save_run(trace: RunTrace, path, problem: str, config: SolverConfig, params_file=None):
    """Trace CSV plus two sidecars: iterate vectors and run settings, enough
    for ``load_run`` to rebuild the trace for invariant checking."""
    path = Path(path)
    emit_trace(trace, path)
    vec_path, run_path = _sidecars(path)
    with open(vec_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "beta", "x", "y", "z", "g"])
        for r in trace.records:
            g = "" if r.g is None else fmt_vec(r.g)
            w.writerow([r.k, fmt(r.beta), fmt_vec(r.x), fmt_vec(r.y), fmt_vec(r.z), g])
    settings = {
        "problem": problem, "algorithm": trace.algorithm, "params_file": params_file or "",
        "theta": fmt(config.theta), "delta": fmt(config.delta), "beta": str(config.beta_schedule),
        "x0": fmt_vec(config.x0), "termination": f"{config.termination.variant.value}:{fmt(config.termination.threshold)}",
        "eps_subgrad": fmt(config.eps_subgrad), "inner_tol": fmt(config.inner_tol),
        "projection_tol": fmt(config.projection_tol), "max_outer": config.max_outer,
        "cut_cap": "" if config.cut_cap is None else config.cut_cap,
        "status": trace.status.value, "final_point": fmt_vec(trace.final_point),
    }
    with open(run_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "value"])
        for k, v in settings.items():
            w.writerow([k, v])


def load_run(path):
    """Inverse of ``save_run``: returns (trace, instance, config)."""
    path = Path(path)
    vec_path, run_path = _sidecars(path)
    for p in (path, vec_path, run_path):
        if not p.exists():
            raise ContractViolation(f"missing run file {p}")
    with open(run_path, newline="") as fh:
        settings = {row["key"]: row["value"] for row in csv.DictReader(fh)}
    config = SolverConfig(
        theta=float(settings["theta"]), delta=float(settings["delta"]),
        x0=parse_vec(settings["x0"]), beta_schedule=parse_beta(settings["beta"]),
        termination=parse_termination(settings["termination"]),
        eps_subgrad=float(settings["eps_subgrad"]), inner_tol=float(settings["inner_tol"]),
        projection_tol=float(settings["projection_tol"]), max_outer=int(settings["max_outer"]),
        cut_cap=int(settings["cut_cap"]) if settings["cut_cap"] else None)
    instance = build_problem(settings["problem"], settings["params_file"] or None)
    scalars = read_trace(path)
    with open(vec_path, newline="") as fh:
        vectors = list(csv.DictReader(fh))
    if len(vectors) != len(scalars):
        raise ContractViolation(f"{vec_path} and {path} disagree on the number of iterations")
    records = []
    for s, v in zip(scalars, vectors):
        records.append(IterateRecord(
            k=s["k"], x=parse_vec(v["x"]), y=parse_vec(v["y"]), z=parse_vec(v["z"]), m=s["m_k"],
            theta_k=s["theta_k"], g=parse_vec(v["g"]) if v["g"] else None, E=s["E"],
            dist_to_anchor=s["dist_to_anchor"], wall_time=s["wall_ms"] / 1000.0,
            beta=float(v["beta"]), linesearch_lhs=s["linesearch_lhs"], num_cuts=s["num_cuts"]))
    trace = RunTrace(tuple(records), Status(settings["status"]), parse_vec(settings["final_point"]),
                     settings["algorithm"])
    return trace, instance, config


# -- named presets ---------------------------------------------------------

def preset(name: str) -> dict:
    """Named grid ``table3`` ... ``table10`` as ExperimentSpec kwargs."""
    c = ConstantBeta
    nc = dict(problem="nash-cournot", algorithm="alg1", x0s=[problems.NASH_COURNOT_X0],
              termination=TerminationRule(Criterion.XZ, 1e-4))
    vi = dict(problem="quasimonotone-vi", algorithm="alg2",
              termination=TerminationRule(Criterion.XY, 1e-8))
    table = {
        "table3": dict(nc, thetas=[0.05, 0.1, 0.2, 0.25, 0.5, 0.6, 0.7, 0.85, 0.95, 0.99],
                       deltas=[0.01], betas=[c(0.5)]),
        "table4": dict(nc, thetas=[0.1], deltas=[0.01],
                       betas=[c(b / 10) for b in range(1, 11)]),
        "table5": dict(nc, thetas=[0.1], deltas=[0.01],
                       betas=[RationalBeta(a, 3) for a in range(1, 6)]
                       + [c(b) for b in (0.1, 0.3, 0.5, 0.7, 1.0)]),
        "table6": dict(nc, thetas=[0.1, 0.3, 0.5, 0.8, 0.99], deltas=[0.01], betas=[c(0.5)]),
        "table7": dict(nc, thetas=[0.1], deltas=[0.01, 0.05, 0.1, 0.25, 0.5], betas=[c(0.5)]),
        "table8": dict(vi, thetas=[0.95], deltas=[0.01], betas=[c(0.5)],
                       x0s=[(0, 0), (0, 1), (1, 0), (1, 1), (0.3, 0.5), (0.7, 0.1)]),
        "table9": dict(vi, thetas=[0.5], deltas=[0.01], x0s=[(0, 0)],
                       betas=[c(round(0.05 * i, 2)) for i in range(1, 11)]),
        "table10": dict(vi, thetas=[0.05, 0.1, 0.2, 0.25, 0.5, 0.6, 0.7, 0.85, 0.95, 0.99],
                        deltas=[0.01], betas=[c(0.5)], x0s=[(0, 0)]),
    }
    if name not in table:
        raise SpecError(f"unknown preset {name!r}; choose from {', '.join(table)}")
    return table[name]
