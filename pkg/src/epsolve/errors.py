"""Exception types raised by the solver library."""

import numpy as np


class EPSolveError(Exception):
    """Base class for all library errors."""


class ContractViolation(EPSolveError, ValueError):
    """An operation was called with arguments outside its contract."""


class UnsupportedError(EPSolveError):
    pass


class NonConvergence(EPSolveError):
    """An iterative projection stopped before reaching its tolerance.

    Carries the best point found and its residual so callers can decide
    whether to accept it.
    """

    def __init__(self, message, point=None, residual=np.inf):
        super().__init__(message)
        self.point = point
        self.residual = residual


class Infeasible(EPSolveError):
    pass


class IterationLimit(EPSolveError):
    def __init__(self, message, point=None, gap=np.inf):
        super().__init__(message)
        self.point = point
        self.gap = gap


class LinesearchFailure(EPSolveError):
    pass


class SpecError(EPSolveError, ValueError):
    """An experiment specification failed validation."""
