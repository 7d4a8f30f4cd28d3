"""Outer loops of the anchored linesearch projection methods.

Each iteration solves the proximal subproblem for y^k, backtracks along
[x^k, y^k] for z^k, cuts with the half-space through z^k, and projects the
fixed anchor x^0 onto the box, all accumulated cuts and W(x^k).
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractViolation, LinesearchFailure, NonConvergence
from .inner import solve_subproblem
from .model import HalfSpace, ProblemInstance, as_vector
from .projections import project_intersection

EPS_FIXED_ITERATE = 1e-14


@dataclass(frozen=True)
class ConstantBeta:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ContractViolation("constant beta must be positive")

    def __call__(self, k: int) -> float:
        return float(self.value)

    def __str__(self):
        return f"const:{self.value:g}"


@dataclass(frozen=True)
class RationalBeta:
    """beta_k = (k + 1) / (a k + b)."""

    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or not self.b > 0:
            raise ContractViolation("rational beta needs a >= 0 and b > 0")
        if self.a == 0:
            # (k+1)/b grows without bound
            raise ContractViolation("rational beta with a = 0 is unbounded")

    def __call__(self, k: int) -> float:
        return (k + 1.0) / (self.a * k + self.b)

    def __str__(self):
        return f"rational:{self.a:g},{self.b:g}"


def parse_beta(text: str):
    """Parse ``const:<c>`` or ``rational:<a>,<b>``."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "const":
            return ConstantBeta(float(arg))
        if kind == "rational":
            a, b = (float(v) for v in arg.split(","))
            return RationalBeta(a, b)
    except ValueError:
        pass
    raise ContractViolation(f"bad beta schedule {text!r}; use const:<c> or rational:<a>,<b>")


class Criterion(str, enum.Enum):
    XZ = "xz"
    XY = "xy"


@dataclass(frozen=True)
class TerminationRule:
    variant: Criterion
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "variant", Criterion(self.variant))
        if not self.threshold > 0:
            raise ContractViolation("termination threshold must be positive")

    def __str__(self):
        return f"{self.variant.value}:{self.threshold:g}"


def parse_termination(text: str) -> TerminationRule:
    kind, _, arg = text.partition(":")
    try:
        return TerminationRule(Criterion(kind.lower()), float(arg))
    except ValueError:
        raise ContractViolation(f"bad termination rule {text!r}; use xz:<eps> or xy:<eps>") from None


def termination_value(rule: TerminationRule, x, y, z) -> float:
    other = z if rule.variant is Criterion.XZ else y
    d = np.asarray(x, dtype=float) - np.asarray(other, dtype=float)
    return float(d @ d)


@dataclass(frozen=True)
class SolverConfig:
    theta: float
    delta: float
    x0: np.ndarray
    beta_schedule: object = ConstantBeta(0.5)
    termination: TerminationRule = TerminationRule(Criterion.XZ, 1e-4)
    eps_subgrad: float = 1e-12
    inner_tol: float = 1e-10
    projection_tol: float = 1e-10
    max_outer: int = 10_000
    max_linesearch: int = 100
    max_inner: int = 10_000
    cut_cap: Optional[int] = None
    projection_method: str = "active-set"

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ContractViolation("theta must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ContractViolation("delta must lie in (0, 1)")
        for name in ("eps_subgrad", "inner_tol", "projection_tol"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be positive")
        if self.max_outer < 1 or self.max_linesearch < 1:
            raise ContractViolation("iteration caps must be >= 1")
        if self.cut_cap is not None and self.cut_cap < 1:
            raise ContractViolation("cut_cap must be >= 1")
        x0 = as_vector(self.x0, "x0")
        x0.flags.writeable = False
        object.__setattr__(self, "x0", x0)

    @property
    def eps_same(self) -> float:
        """Norm below which y^k is treated as equal to x^k."""
        return 1e-6 * np.sqrt(self.termination.threshold)


class Status(str, enum.Enum):
    SOLVED_Y_EQUALS_X = "SolvedByYEqualsX"
    SOLVED_ZERO_SUBGRADIENT = "SolvedByZeroSubgradient"
    SOLVED_FIXED_ITERATE = "SolvedByFixedIterate"
    TOLERANCE_MET = "ToleranceMet"
    ITERATION_LIMIT = "IterationLimit"
    PROJECTION_FAILURE = "ProjectionFailure"

    @property
    def converged(self) -> bool:
        return self not in (Status.ITERATION_LIMIT, Status.PROJECTION_FAILURE)


@dataclass(frozen=True)
class IterateRecord:
    k: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    m: int
    theta_k: float
    g: Optional[np.ndarray]
    E: float
    dist_to_anchor: float
    wall_time: float
    beta: float
    linesearch_lhs: float = float("nan")
    num_cuts: int = 0


@dataclass(frozen=True)
class RunTrace:
    records: tuple
    status: Status
    final_point: np.ndarray
    algorithm: str = "alg1"
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_E(self) -> float:
        return self.records[-1].E


def linesearch_lhs(instance, x, y, z, mode):
    if mode == "VI":
        return float(np.dot(instance.oracle.F(z), y - z))
    return float(instance.ep.value(z, y))


def linesearch_rhs(x, y, beta, delta, mode):
    d2 = float(np.sum((np.asarray(x) - np.asarray(y)) ** 2))
    if mode == "VI":
        return -delta / (2.0 * beta) * d2
    return -delta * beta / 2.0 * d2


def linesearch_point(x, y, theta, m):
    tk = theta ** m
    return (1.0 - tk) * x + tk * y, tk


def armijo_linesearch(instance: ProblemInstance, x, y, beta, theta, delta, mode="EP",
                      max_m=100):
    """Smallest m >= 1 with z = (1 - theta^m) x + theta^m y passing the
    sufficient-decrease test.

    EP mode tests f(z, y) <= -(delta beta / 2) ||x - y||^2; VI mode tests
    <F(z), y - z> <= -(delta / (2 beta)) ||x - y||^2. Returns (m, z, lhs).
    """
    if mode not in ("EP", "VI"):
        raise ContractViolation(f"unknown linesearch mode {mode!r}")
    if mode == "VI" and not instance.is_vi:
        raise ContractViolation("VI linesearch needs a VI oracle")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rhs = linesearch_rhs(x, y, beta, delta, mode)
    for m in range(1, max_m + 1):
        z, _ = linesearch_point(x, y, theta, m)
        lhs = linesearch_lhs(instance, x, y, z, mode)
        if lhs <= rhs:
            return m, z, lhs
    raise LinesearchFailure(f"no m <= {max_m} satisfies the linesearch (||x-y||={np.linalg.norm(x - y):.3e})")


def build_cut(g, z) -> HalfSpace:
    g = as_vector(g, "g")
    if not np.any(g):
        raise ContractViolation("cut normal is zero; the iterate already solves the problem")
    return HalfSpace(g, z)


def build_w_cut(x0, xk) -> HalfSpace:
    """W(x^k) = {x : <x - x^k, x^0 - x^k> <= 0}; all of R^n when x^k = x^0."""
    x0 = np.asarray(x0, dtype=float)
    xk = np.asarray(xk, dtype=float)
    return HalfSpace(x0 - xk, xk)


def _run(instance: ProblemInstance, config: SolverConfig, mode: str) -> RunTrace:
    x0 = instance.check_point(config.x0, "x0")
    box = instance.feasible
    if not box.contains(x0):
        raise ContractViolation("x0 must lie in the feasible box")
    algorithm = "alg2" if mode == "VI" else "alg1"
    records = []
    cuts = []
    x = x0.copy()

    def finish(status, point, message=""):
        return RunTrace(tuple(records), status, np.array(point), algorithm, message)

    for k in range(config.max_outer):
        t0 = time.perf_counter()
        beta = config.beta_schedule(k)
        dist = float(np.linalg.norm(x - x0))

        # Step 1
        sub = solve_subproblem(instance, x, beta, tol=config.inner_tol, max_iter=config.max_inner)
        y = sub.minimizer
        if np.linalg.norm(y - x) <= config.eps_same:
            records.append(IterateRecord(
                k, x, y, y.copy(), 0, 1.0, None, termination_value(config.termination, x, y, y),
                dist, time.perf_counter() - t0, beta, num_cuts=len(cuts)))
            return finish(Status.SOLVED_Y_EQUALS_X, x)

        # Step 2
        m, z, lhs = armijo_linesearch(instance, x, y, beta, config.theta, config.delta, mode,
                                      config.max_linesearch)
        g = (np.asarray(instance.oracle.F(z), dtype=float) if mode == "VI"
             else np.asarray(instance.ep.subgrad2(z, z), dtype=float))
        E = termination_value(config.termination, x, y, z)

        def record(n_cuts):
            return IterateRecord(k, x, y, z, m, config.theta ** m, g, E, dist,
                                 time.perf_counter() - t0, beta, lhs, n_cuts)

        if np.linalg.norm(g) <= config.eps_subgrad:
            records.append(record(len(cuts)))
            return finish(Status.SOLVED_ZERO_SUBGRADIENT, z)
        if E <= config.termination.threshold:
            records.append(record(len(cuts)))
            return finish(Status.TOLERANCE_MET, x)

        # Step 3
        cuts.append(build_cut(g, z))
        if config.cut_cap is not None and len(cuts) > config.cut_cap:
            del cuts[0]
        w_cut = build_w_cut(x0, x)

        # Step 4
        try:
            proj = project_intersection(box, cuts + [w_cut], x0, tol=config.projection_tol,
                                        method=config.projection_method)
        except NonConvergence as exc:
            records.append(record(len(cuts)))
            return finish(Status.PROJECTION_FAILURE, x, str(exc))
        records.append(record(len(cuts)))
        x_next = proj.point
        if np.linalg.norm(x_next - x) <= EPS_FIXED_ITERATE:
            return finish(Status.SOLVED_FIXED_ITERATE, x)
        x = x_next

    return finish(Status.ITERATION_LIMIT, x, f"max_outer={config.max_outer} reached")


def run_algorithm1(instance: ProblemInstance, config: SolverConfig) -> RunTrace:
    """Linesearch projection method for the equilibrium problem EP(f, C).

    A VI instance is handled through its equilibrium form <F(x), y - x>.
    """
    return _run(instance, config, "EP")


def run_algorithm2(instance: ProblemInstance, config: SolverConfig) -> RunTrace:
    """Variational-inequality variant: closed-form y^k, VI linesearch test and
    cut normal F(z^k)."""
    if not instance.is_vi:
        raise ContractViolation("algorithm 2 needs a VI instance")
    return _run(instance, config, "VI")


def run(instance, config, algorithm="alg1") -> RunTrace:
    if algorithm == "alg1":
        return run_algorithm1(instance, config)
    if algorithm == "alg2":
        return run_algorithm2(instance, config)
    raise ContractViolation(f"unknown algorithm {algorithm!r}")
