"""Post-hoc re-verification of a recorded run against the method's guarantees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import (RunTrace, SolverConfig, build_w_cut, linesearch_lhs, linesearch_point,
                    linesearch_rhs, termination_value)
from ..errors import ContractViolation
from ..inner import subproblem_residual
from ..model import HalfSpace, ProblemInstance

PASS, FAIL, NA = "pass", "fail", "n/a"

DEFAULT_SLACK = {
    "anchor_monotonicity": 1e-8,
    "feasibility": 1e-8,
    "minty_retention": 1e-9,
    "boundedness_ball": 1e-6,
    "subproblem_residual": 1e-8,
}


@dataclass
class InvariantCheck:
    name: str
    status: str
    worst: float = 0.0
    tolerance: float = 0.0
    detail: str = ""


@dataclass
class InvariantReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    def __getitem__(self, name) -> InvariantCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def format(self) -> str:
        lines = [f"{'invariant':24s} {'status':6s} {'worst':>12s} {'tol':>10s}"]
        for c in self.checks:
            lines.append(f"{c.name:24s} {c.status:6s} {c.worst:12.3e} {c.tolerance:10.1e}  {c.detail}")
        return "\n".join(lines)


def _check(name, values, tol, detail=""):
    worst = float(max(values)) if len(values) else 0.0
    return InvariantCheck(name, PASS if worst <= tol else FAIL, worst, tol, detail)


def verify_invariants(trace: RunTrace, instance: ProblemInstance, config: SolverConfig,
                      slack=None) -> InvariantReport:
    """Re-check every per-iteration guarantee on ``trace``.

    Each check reports its worst-case excess over zero (so ``worst <= tol``
    passes). Checks that need data the instance lacks are marked n/a.
    """
    slack = {**DEFAULT_SLACK, **(slack or {})}
    recs = trace.records
    if not recs:
        raise ContractViolation("trace has no records")
    x0 = np.asarray(config.x0, dtype=float)
    for r in recs:
        if r.x.shape != (instance.dim,):
            raise ContractViolation("trace dimension does not match the instance")
    if not np.array_equal(recs[0].x, x0):
        raise ContractViolation("trace does not start at the configured x0")
    mode = "VI" if trace.algorithm == "alg2" else "EP"
    if mode == "VI" and not instance.is_vi:
        raise ContractViolation("algorithm 2 trace paired with a non-VI instance")
    report = InvariantReport()
    lined = [r for r in recs if r.m >= 1]

    # z^k = (1 - theta^m) x^k + theta^m y^k, bit for bit
    recon = []
    for r in recs:
        z, tk = linesearch_point(r.x, r.y, config.theta, r.m)
        recon.append(max(abs(tk - r.theta_k), float(np.max(np.abs(z - r.z)))))
    report.checks.append(_check("theta_reconstruction", recon, 0.0))

    e_err = []
    for r in recs:
        err = abs(termination_value(config.termination, r.x, r.y, r.z) - r.E)
        e_err.append(err if r.E >= 0 else np.inf)
    report.checks.append(_check("termination_value", e_err, 0.0))

    # linesearch: holds at m, fails at m - 1
    cert, minimal = [], []
    for r in lined:
        rhs = linesearch_rhs(r.x, r.y, r.beta, config.delta, mode)
        cert.append(linesearch_lhs(instance, r.x, r.y, r.z, mode) - rhs)
        if r.m >= 2:
            zp, _ = linesearch_point(r.x, r.y, config.theta, r.m - 1)
            minimal.append(rhs - linesearch_lhs(instance, r.x, r.y, zp, mode))
    report.checks.append(_check("linesearch_certificate", cert, 0.0))
    mini = _check("linesearch_minimality", minimal, 0.0,
                  "test at m-1 strictly violated" if minimal else "no record with m >= 2")
    if minimal and mini.worst >= 0.0:
        mini.status = FAIL
    report.checks.append(mini)

    sub = [subproblem_residual(instance, r.x, r.y, r.beta) for r in recs]
    report.checks.append(_check("subproblem_residual", sub, slack["subproblem_residual"]))

    # Step 4 output against the sets it was projected onto
    mono, feas, box_exact = [], [], []
    cuts = []
    for prev, nxt in zip(recs, recs[1:]):
        cuts.append(HalfSpace(prev.g, prev.z))
        if config.cut_cap is not None:
            cuts = cuts[-config.cut_cap:]
        xn = nxt.x
        box_exact.append(instance.feasible.violation(xn))
        w = build_w_cut(x0, prev.x)
        feas.append(max([c.violation(xn) for c in cuts] + [w.violation(xn)]))
        lhs = float(np.sum((xn - x0) ** 2))
        rhs = float(np.sum((prev.x - x0) ** 2) + np.sum((xn - prev.x) ** 2))
        mono.append(max(rhs - lhs, prev.dist_to_anchor - nxt.dist_to_anchor))
    report.checks.append(_check("anchor_monotonicity", mono, slack["anchor_monotonicity"]))
    feas_check = _check("feasibility", feas, slack["feasibility"])
    if box_exact and max(box_exact) > 0.0:
        feas_check.status = FAIL
        feas_check.worst = max(feas_check.worst, max(box_exact))
        feas_check.detail = "iterate outside the box"
    report.checks.append(feas_check)

    xbar = instance.known_minty_point
    if xbar is None:
        report.checks.append(InvariantCheck("minty_retention", NA, detail="no known Minty point"))
    else:
        vals = [float(r.g @ (xbar - r.z)) for r in lined]
        report.checks.append(_check("minty_retention", vals, slack["minty_retention"]))

    if xbar is None or not instance.minty_unique:
        report.checks.append(InvariantCheck("boundedness_ball", NA,
                                            detail="projection of x0 onto the Minty set unknown"))
    else:
        center = 0.5 * (x0 + xbar)
        radius = 0.5 * float(np.linalg.norm(x0 - xbar))
        vals = [float(np.linalg.norm(r.x - center)) - radius for r in recs]
        report.checks.append(_check("boundedness_ball", vals, slack["boundedness_ball"]))
    return report
