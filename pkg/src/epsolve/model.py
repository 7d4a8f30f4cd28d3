"""Oracles, feasible sets and problem instances.

Vectors are 1-D float numpy arrays. Every container here is frozen; the
arrays they hold are marked read-only on construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ContractViolation


def as_vector(v, name="vector") -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ContractViolation(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} has non-finite entries: {arr}")
    return arr


def _frozen(v, name):
    arr = as_vector(v, name)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FeasibleBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _frozen(self.lower, "lower")
        hi = _frozen(self.upper, "upper")
        if lo.shape != hi.shape:
            raise ContractViolation("box bounds have different dimensions")
        if np.any(lo > hi):
            raise ContractViolation("box has lower > upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, n):
        return cls(np.zeros(n), np.ones(n))

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x, tol=0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(max(0.0, np.max(self.lower - x), np.max(x - self.upper)))


@dataclass(frozen=True)
class HalfSpace:
    """The set {x : <normal, x - anchor> <= 0}; a zero normal means all of R^n."""

    normal: np.ndarray
    anchor: np.ndarray

    def __post_init__(self):
        g = _frozen(self.normal, "normal")
        z = _frozen(self.anchor, "anchor")
        if g.shape != z.shape:
            raise ContractViolation("half-space normal and anchor dimensions differ")
        object.__setattr__(self, "normal", g)
        object.__setattr__(self, "anchor", z)

    @property
    def unit_normal(self) -> np.ndarray:
        """normal / ||normal||, computed without under- or overflow; zero for
        the whole space."""
        scale = float(np.max(np.abs(self.normal)))
        if scale == 0.0:
            return np.zeros_like(self.normal)
        g = self.normal / scale
        return g / float(np.linalg.norm(g))

    @property
    def is_whole_space(self) -> bool:
        return not np.any(self.normal)

    @property
    def offset(self) -> float:
        return float(self.normal @ self.anchor)

    def value(self, x) -> float:
        return float(self.normal @ (np.asarray(x, dtype=float) - self.anchor))

    def violation(self, x) -> float:
        """Euclidean distance from ``x`` to the half-space."""
        if self.is_whole_space:
            return 0.0
        return max(0.0, float(self.unit_normal @ (np.asarray(x, dtype=float) - self.anchor)))

    def contains(self, x, tol=0.0) -> bool:
        return self.violation(x) <= tol


@dataclass(frozen=True)
class ProxStructure:
    """Composite split of ``y -> f(x, y)`` used by the accelerated inner solver.

    f(x, y) = smooth(x, y) + separable(y) + terms constant in y, where
    ``grad(x, y)`` is the gradient of the smooth part in y, ``lipschitz`` bounds
    its Lipschitz constant, and ``prox(v, weight, lo, hi)`` returns the exact
    coordinatewise minimizer of separable(t) + weight/2 * ||t - v||^2 on
    [lo, hi].
    """

    grad: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lipschitz: float
    prox: Callable[[np.ndarray, float, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EPOracle:
    value: Callable[[np.ndarray, np.ndarray], float]
    subgrad2: Callable[[np.ndarray, np.ndarray], np.ndarray]
    prox: Optional[ProxStructure] = None


@dataclass(frozen=True)
class VIOracle:
    F: Callable[[np.ndarray], np.ndarray]


def vi_as_ep(vi: VIOracle) -> EPOracle:
    """Equilibrium form f(x, y) = <F(x), y - x> of a variational inequality."""

    def value(x, y):
        return float(np.dot(vi.F(x), y - x))

    def subgrad2(x, y):
        return np.asarray(vi.F(x), dtype=float)

    return EPOracle(value=value, subgrad2=subgrad2)


@dataclass(frozen=True)
class ProblemInstance:
    oracle: Union[EPOracle, VIOracle]
    feasible: FeasibleBox
    name: str = "problem"
    known_minty_point: Optional[np.ndarray] = None
    known_solution: Optional[np.ndarray] = None
    # True when the Minty solution set is exactly {known_minty_point}; enables
    # the boundedness-ball check.
    minty_unique: bool = False
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for attr in ("known_minty_point", "known_solution"):
            p = getattr(self, attr)
            if p is None:
                continue
            p = _frozen(p, attr)
            if p.shape != (self.dim,):
                raise ContractViolation(f"{attr} has wrong dimension")
            if not self.feasible.contains(p, tol=1e-12):
                raise ContractViolation(f"{attr} lies outside the feasible box")
            object.__setattr__(self, attr, p)

    @property
    def dim(self) -> int:
        return self.feasible.dim

    @property
    def is_vi(self) -> bool:
        return isinstance(self.oracle, VIOracle)

    @property
    def ep(self) -> EPOracle:
        if self.is_vi:
            return vi_as_ep(self.oracle)
        return self.oracle

    def check_point(self, x, name="x") -> np.ndarray:
        x = as_vector(x, name)
        if x.shape != (self.dim,):
            raise ContractViolation(
                f"{name} has dimension {x.size}, instance {self.name!r} expects {self.dim}")
        return x


def ep_eval(instance: ProblemInstance, x, y) -> float:
    x = instance.check_point(x, "x")
    y = instance.check_point(y, "y")
    return float(instance.ep.value(x, y))


def ep_subgradient2(instance: ProblemInstance, x, y) -> np.ndarray:
    """One deterministic element of the subdifferential of f(x, .) at y."""
    x = instance.check_point(x, "x")
    y = instance.check_point(y, "y")
    return np.asarray(instance.ep.subgrad2(x, y), dtype=float)
