"""Anchored linesearch projection methods for non-monotone equilibrium
problems and variational inequalities."""

from .core import (
    ConstantBeta,
    Criterion,
    IterateRecord,
    RationalBeta,
    RunTrace,
    SolverConfig,
    Status,
    TerminationRule,
    armijo_linesearch,
    build_cut,
    build_w_cut,
    parse_beta,
    parse_termination,
    run_algorithm1,
    run_algorithm2,
    termination_value,
)
from .errors import (
    ContractViolation,
    EPSolveError,
    Infeasible,
    IterationLimit,
    LinesearchFailure,
    NonConvergence,
    SpecError,
    UnsupportedError,
)
from .inner import (
    SubproblemResult,
    ep_residual,
    prox_separable_1d,
    solve_subproblem,
    subproblem_residual,
)
from .model import (
    EPOracle,
    FeasibleBox,
    HalfSpace,
    ProblemInstance,
    ProxStructure,
    VIOracle,
    ep_eval,
    ep_subgradient2,
    vi_as_ep,
)
from .projections import (
    ProjectionResult,
    brute_force_projection,
    project_box,
    project_halfspace,
    project_intersection,
)

__version__ = "0.1.0"

__all__ = [
    "armijo_linesearch",
    "brute_force_projection",
    "build_cut",
    "build_w_cut",
    "ConstantBeta",
    "ContractViolation",
    "Criterion",
    "ep_eval",
    "ep_residual",
    "ep_subgradient2",
    "EPOracle",
    "EPSolveError",
    "FeasibleBox",
    "HalfSpace",
    "Infeasible",
    "IterateRecord",
    "IterationLimit",
    "LinesearchFailure",
    "NonConvergence",
    "parse_beta",
    "parse_termination",
    "ProblemInstance",
    "project_box",
    "project_halfspace",
    "project_intersection",
    "ProjectionResult",
    "prox_separable_1d",
    "ProxStructure",
    "RationalBeta",
    "run_algorithm1",
    "run_algorithm2",
    "RunTrace",
    "solve_subproblem",
    "SolverConfig",
    "SpecError",
    "Status",
    "subproblem_residual",
    "SubproblemResult",
    "termination_value",
    "TerminationRule",
    "UnsupportedError",
    "vi_as_ep",
    "VIOracle",
]
