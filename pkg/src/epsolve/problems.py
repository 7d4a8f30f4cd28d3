"""Benchmark instances: the Nash-Cournot electricity market, the
quasimonotone VI on the unit square, and synthetic affine VIs and quadratic
EPs with independently checkable solutions."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolation, UnsupportedError
from .inner import prox_separable_1d
from .model import EPOracle, FeasibleBox, ProblemInstance, ProxStructure, VIOracle
from .projections import project_box

# Generator cost data (rows = units 1..6)
GENERATOR_COSTS = {
    "alpha0": (0.0400, 0.0350, 0.1250, 0.0116, 0.0500, 0.0500),
    "beta0": (2.00, 1.75, 1.00, 3.25, 3.00, 3.00),
    "gamma0": (0.00, 0.00, 0.00, 0.00, 0.00, 0.00),
    "alpha1": (2.00, 1.75, 1.00, 3.25, 3.00, 3.00),
    "beta1": (1.00, 1.00, 1.00, 1.00, 1.00, 1.00),
    "gamma1": (25.0000, 28.5714, 8.0000, 86.2069, 20.0000, 20.0000),
}
# Unit and company production bounds
PRODUCTION_BOUNDS = {
    "company": (1, 2, 2, 3, 3, 3),
    "xg_min": (0, 0, 0, 0, 0, 0),
    "xg_max": (80, 80, 50, 55, 30, 40),
    "xc_min": (0, 0, 0, 0, 0, 0),
    "xc_max": (80, 130, 130, 125, 125, 125),
}
NASH_COURNOT_X0 = (20.0, 50.0, 40.0, 45.0, 30.0, 30.0)


@dataclass(frozen=True)
class NashCournotParams:
    """Market data. ``company[j]`` is the 1-based owner of unit j; the
    company bounds are stored per unit row, repeating the owner's values."""

    alpha0: tuple = GENERATOR_COSTS["alpha0"]
    beta0: tuple = GENERATOR_COSTS["beta0"]
    gamma0: tuple = GENERATOR_COSTS["gamma0"]
    alpha1: tuple = GENERATOR_COSTS["alpha1"]
    beta1: tuple = GENERATOR_COSTS["beta1"]
    gamma1: tuple = GENERATOR_COSTS["gamma1"]
    company: tuple = PRODUCTION_BOUNDS["company"]
    xg_min: tuple = PRODUCTION_BOUNDS["xg_min"]
    xg_max: tuple = PRODUCTION_BOUNDS["xg_max"]
    xc_min: tuple = PRODUCTION_BOUNDS["xc_min"]
    xc_max: tuple = PRODUCTION_BOUNDS["xc_max"]
    # intercept used in the linear term a = -price_intercept * sum_i q^i
    price_intercept: float = 387.4
    # intercept of p(sigma) used only by the profit report
    profit_price_intercept: float = 378.4
    price_slope: float = 2.0

    def __post_init__(self):
        cols = ("alpha0", "beta0", "gamma0", "alpha1", "beta1", "gamma1",
                "company", "xg_min", "xg_max", "xc_min", "xc_max")
        n = len(self.alpha0)
        for c in cols:
            vals = tuple(getattr(self, c))
            if len(vals) != n:
                raise ContractViolation(f"column {c} has {len(vals)} entries, expected {n}")
            object.__setattr__(self, c, vals)
        if np.any(np.array(self.xg_min) > np.array(self.xg_max)):
            raise ContractViolation("generator lower bound exceeds upper bound")
        if np.any(np.array(self.alpha0) < 0) or np.any(np.array(self.gamma1) <= 0):
            raise ContractViolation("cost branches must be convex (alpha0 >= 0, gamma1 > 0)")
        if np.any(np.array(self.beta1) <= 0):
            raise ContractViolation("beta1 must be positive")
        if min(self.company) < 1:
            raise ContractViolation("company indices are 1-based")

    @property
    def n_units(self) -> int:
        return len(self.alpha0)

    @property
    def n_companies(self) -> int:
        return max(self.company)

    def company_units(self, i) -> list:
        """0-based unit indices owned by 1-based company ``i``."""
        return [j for j, c in enumerate(self.company) if c == i]

    def indicator(self) -> np.ndarray:
        """Rows q^i: q^i_j = 1 if unit j belongs to company i."""
        q = np.zeros((self.n_companies, self.n_units))
        for j, c in enumerate(self.company):
            q[c - 1, j] = 1.0
        return q


@dataclass(frozen=True)
class ModelMatrices:
    A: np.ndarray
    B: np.ndarray
    a: np.ndarray


def model_matrices(params: NashCournotParams) -> ModelMatrices:
    q = params.indicator()
    ones = np.ones(params.n_units)
    A = sum(2.0 * np.outer(ones - qi, qi) for qi in q)
    B = sum(2.0 * np.outer(qi, qi) for qi in q)
    a = -params.price_intercept * q.sum(axis=0)
    return ModelMatrices(A, B, a)


def _cost_branches(params):
    """Per-unit (c2, c1, c0) for both branches; branch 1 must be quadratic."""
    b1 = np.array(params.beta1, dtype=float)
    if not np.allclose(b1, 1.0):
        return None
    br0 = np.column_stack([np.array(params.alpha0) / 2, params.beta0, params.gamma0])
    br1 = np.column_stack([0.5 / np.array(params.gamma1), params.alpha1, np.zeros(params.n_units)])
    return br0, br1


def _branch_values(params, j, x):
    c0 = params.alpha0[j] / 2 * x * x + params.beta0[j] * x + params.gamma0[j]
    b1 = params.beta1[j]
    c1 = params.alpha1[j] * x + b1 / (b1 + 1) * params.gamma1[j] ** (-1 / b1) * x ** ((b1 + 1) / b1)
    return c0, c1


def _unit(params, j):
    if not 1 <= j <= params.n_units:
        raise ContractViolation(f"unit index {j} outside 1..{params.n_units}")
    return j - 1


def cost_c(params: NashCournotParams, j: int, x_j: float) -> float:
    """Cost of unit ``j`` (1-based) producing ``x_j``: the larger branch."""
    c0, c1 = _branch_values(params, _unit(params, j), x_j)
    return float(max(c0, c1))


def cost_subgradient(params: NashCournotParams, j: int, x_j: float) -> float:
    """Derivative of the active cost branch of unit ``j`` (1-based); branch 0 wins ties."""
    j = _unit(params, j)
    c0, c1 = _branch_values(params, j, x_j)
    if c0 >= c1:
        return float(params.alpha0[j] * x_j + params.beta0[j])
    b1 = params.beta1[j]
    return float(params.alpha1[j] + params.gamma1[j] ** (-1 / b1) * x_j ** (1 / b1))


def total_cost(params, x) -> float:
    return float(sum(cost_c(params, j + 1, x[j]) for j in range(params.n_units)))


def quadratic_ep(P, Q, r, box: FeasibleBox, branches=None, name="quadratic-ep",
                 cost=None, cost_grad=None, **kwargs) -> ProblemInstance:
    """EP with f(x, y) = (P x + Q y + r)^T (y - x) + h(y) - h(x).

    ``h`` is separable; by default h_j(t) = max(qa_j(t), qb_j(t)) for the
    quadratic ``branches = (qa, qb)`` given as (n, 3) coefficient arrays,
    which makes the oracle prox-capable. Passing explicit ``cost`` and
    ``cost_grad`` callables instead yields an oracle without prox structure.
    ``Q + Q^T`` must be positive semidefinite so that f(x, .) is convex.
    """
    P = np.array(P, dtype=float)
    Q = np.array(Q, dtype=float)
    r = np.array(r, dtype=float)
    n = box.dim
    if P.shape != (n, n) or Q.shape != (n, n) or r.shape != (n,):
        raise ContractViolation("quadratic EP data has inconsistent dimensions")
    Qs = Q + Q.T
    if np.linalg.eigvalsh(Qs).min() < -1e-10:
        raise ContractViolation("Q + Q^T must be positive semidefinite")
    for arr in (P, Q, r):
        arr.flags.writeable = False

    prox = None
    if cost is None:
        if branches is None:
            branches = (np.zeros((n, 3)), np.zeros((n, 3)))
        ba = np.array(branches[0], dtype=float)
        bb = np.array(branches[1], dtype=float)
        if ba.shape != (n, 3) or bb.shape != (n, 3):
            raise ContractViolation("branch coefficient arrays must have shape (n, 3)")
        if np.any(ba[:, 0] < 0) or np.any(bb[:, 0] < 0):
            raise ContractViolation("cost branches must be convex")

        def cost(y):
            qa = (ba[:, 0] * y + ba[:, 1]) * y + ba[:, 2]
            qb = (bb[:, 0] * y + bb[:, 1]) * y + bb[:, 2]
            return float(np.sum(np.maximum(qa, qb)))

        def cost_grad(y):
            qa = (ba[:, 0] * y + ba[:, 1]) * y + ba[:, 2]
            qb = (bb[:, 0] * y + bb[:, 1]) * y + bb[:, 2]
            return np.where(qa >= qb, 2 * ba[:, 0] * y + ba[:, 1], 2 * bb[:, 0] * y + bb[:, 1])

        lip = float(max(np.linalg.eigvalsh(Qs).max(), 0.0))
        prox = ProxStructure(
            grad=lambda x, y: (P - Q.T) @ x + r + Qs @ y,
            lipschitz=lip,
            prox=lambda v, w, lo, hi: prox_separable_1d(ba, bb, v, w, lo, hi),
        )

    def value(x, y):
        return float((P @ x + Q @ y + r) @ (y - x) + cost(y) - cost(x))

    def subgrad2(x, y):
        return (P - Q.T) @ x + r + Qs @ y + cost_grad(y)

    oracle = EPOracle(value=value, subgrad2=subgrad2, prox=prox)
    return ProblemInstance(oracle=oracle, feasible=box, name=name, **kwargs)


def build_nash_cournot(params: NashCournotParams | None = None, strict=False) -> ProblemInstance:
    """Nash-Cournot oligopoly EP on the generator box.

    With ``strict=True`` the company production bounds are required to be
    implied by the generator bounds (they are for the default data);
    non-redundant company bounds would make the feasible set a non-box and
    are rejected.
    """
    params = params or NashCournotParams()
    mats = model_matrices(params)
    box = FeasibleBox(np.array(params.xg_min, float), np.array(params.xg_max, float))
    if strict:
        for i in range(1, params.n_companies + 1):
            units = params.company_units(i)
            row = units[0]
            lo_sum = sum(params.xg_min[j] for j in units)
            hi_sum = sum(params.xg_max[j] for j in units)
            if lo_sum < params.xc_min[row] or hi_sum > params.xc_max[row]:
                raise UnsupportedError(
                    f"company {i} bounds are not implied by generator bounds; "
                    "only box feasible sets are supported")
    branches = _cost_branches(params)
    common = dict(name="nash-cournot", metadata={"params": params, "matrices": mats})
    if branches is not None:
        return quadratic_ep(mats.A + mats.B, mats.B, mats.a, box, branches=branches, **common)
    return quadratic_ep(
        mats.A + mats.B, mats.B, mats.a, box,
        cost=lambda y: total_cost(params, y),
        cost_grad=lambda y: np.array([cost_subgradient(params, j + 1, y[j])
                                      for j in range(params.n_units)]),
        **common)


def company_profit_report(params: NashCournotParams, x) -> list:
    """Profit of each company at production vector ``x``."""
    x = np.asarray(x, dtype=float)
    price = params.profit_price_intercept - params.price_slope * float(np.sum(x))
    profits = []
    for i in range(1, params.n_companies + 1):
        units = params.company_units(i)
        revenue = price * sum(x[j] for j in units)
        costs = sum(x[j] * cost_c(params, j + 1, x[j]) for j in units)
        profits.append(float(revenue - costs))
    return profits


def quasimonotone_F(x) -> np.ndarray:
    x1, x2 = np.asarray(x, dtype=float)
    rad = x1 * x1 + 4.0 * x2
    if rad < 0:
        raise ContractViolation(f"F undefined at {x}: negative radicand {rad}")
    t = (x1 + np.sqrt(rad)) / 2.0
    return np.array([-t / (1.0 + t), -1.0 / (1.0 + t)])


def build_quasimonotone_vi() -> ProblemInstance:
    return ProblemInstance(
        oracle=VIOracle(quasimonotone_F),
        feasible=FeasibleBox.unit(2),
        name="quasimonotone-vi",
        known_minty_point=np.array([1.0, 1.0]),
        known_solution=np.array([1.0, 1.0]),
        minty_unique=True,
    )


def natural_residual(F, box, x) -> float:
    return float(np.linalg.norm(x - project_box(box, x - F(x))))


def synthetic_affine_vi(M, q, box: FeasibleBox, grid_points=201,
                        name="synthetic-affine-vi") -> ProblemInstance:
    """Affine VI F(x) = M x + q with a solution located numerically.

    The solution is found by minimizing the natural residual on a grid over
    the box and then refining with extragradient steps, which converge for
    monotone affine maps (M positive semidefinite).
    """
    M = np.array(M, dtype=float)
    q = np.array(q, dtype=float)
    n = box.dim
    if M.shape != (n, n) or q.shape != (n,):
        raise ContractViolation("M, q and box dimensions differ")
    if np.linalg.eigvalsh(0.5 * (M + M.T)).min() < -1e-12:
        raise ContractViolation("M must be positive semidefinite")
    if n > 3:
        raise UnsupportedError("known-solution search supports dimension <= 3")
    M.flags.writeable = False
    q.flags.writeable = False

    def F(x):
        return M @ x + q

    axes = [np.linspace(lo, hi, grid_points if n <= 2 else 41)
            for lo, hi in zip(box.lower, box.upper)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    vals = pts @ M.T + q
    res = np.linalg.norm(pts - np.clip(pts - vals, box.lower, box.upper), axis=1)
    x = pts[np.argmin(res)]
    step = 0.5 / max(np.linalg.norm(M, 2), 1e-12)
    for _ in range(20_000):
        if natural_residual(F, box, x) <= 1e-13:
            break
        xh = project_box(box, x - step * F(x))
        x = project_box(box, x - step * F(xh))
    return ProblemInstance(oracle=VIOracle(F), feasible=box, name=name,
                           known_solution=x, metadata={"M": M, "q": q})


# -- parameter files -------------------------------------------------------

_PARAM_COLUMNS = ("alpha0", "beta0", "gamma0", "alpha1", "beta1", "gamma1",
                  "company", "xg_min", "xg_max", "xc_min", "xc_max")
_PARAM_SCALARS = ("price_intercept", "profit_price_intercept", "price_slope")


def dump_params(params: NashCournotParams, path) -> None:
    """Write ``key = v1 v2 ...`` lines, one per table column."""
    lines = ["# Nash-Cournot market data; one column per line, one value per unit"]
    for c in _PARAM_COLUMNS:
        lines.append(f"{c} = " + " ".join(repr(v) for v in getattr(params, c)))
    for s in _PARAM_SCALARS:
        lines.append(f"{s} = {getattr(params, s)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path) -> NashCournotParams:
    """Read a parameter file; missing keys keep their default values."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ContractViolation(f"{path}:{lineno}: expected 'key = values'")
        key, _, rhs = (s.strip() for s in line.partition("="))
        try:
            if key in _PARAM_COLUMNS:
                conv = int if key == "company" else float
                values[key] = tuple(conv(v) for v in rhs.replace(",", " ").split())
            elif key in _PARAM_SCALARS:
                values[key] = float(rhs)
            else:
                raise ContractViolation(f"{path}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ContractViolation(f"{path}:{lineno}: {exc}") from None
    return NashCournotParams(**values)
