"""Solver for the strongly convex subproblem

    min_{y in box} f(x, y) + beta/2 * ||y - x||^2

Three routes, picked from the oracle: closed-form projection for VI oracles,
accelerated proximal gradient when the oracle exposes a ProxStructure, and
projected subgradient with averaging otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, IterationLimit
from .model import ProblemInstance
from .projections import project_box


@dataclass(frozen=True)
class SubproblemResult:
    minimizer: np.ndarray
    certified_gap: float
    inner_iterations: int


def _branch_coeffs(b):
    b = np.asarray(b, dtype=float)
    if b.shape[-1] != 3:
        raise ContractViolation("quadratic branch needs (c2, c1, c0) coefficients")
    if np.any(b[..., 0] < 0):
        raise ContractViolation("quadratic branch is not convex (negative leading coefficient)")
    return b[..., 0], b[..., 1], b[..., 2]


def prox_separable_1d(branch_a, branch_b, center, weight, lo, hi):
    """Exact minimizer of max(qa, qb)(t) + weight/2 (t - center)^2 on [lo, hi].

    Branches are (c2, c1, c0) with q(t) = c2 t^2 + c1 t + c0. All arguments
    broadcast, so one call handles every coordinate of a separable sum.
    """
    a2, a1, a0 = _branch_coeffs(branch_a)
    b2, b1, b0 = _branch_coeffs(branch_b)
    center = np.asarray(center, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(np.asarray(weight) <= 0):
        raise ContractViolation("prox weight must be positive")
    if np.any(lo > hi):
        raise ContractViolation("prox interval has lo > hi")
    a2, a1, a0, b2, b1, b0, center, lo, hi = np.broadcast_arrays(
        a2, a1, a0, b2, b1, b0, center, lo, hi)

    cands = [lo, hi,
             (weight * center - a1) / (2 * a2 + weight),
             (weight * center - b1) / (2 * b2 + weight)]
    # crossing points of the two branches
    d2, d1, d0 = a2 - b2, a1 - b1, a0 - b0
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = d1 * d1 - 4 * d2 * d0
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        quad = np.abs(d2) > 1e-300
        r1 = np.where(quad, (-d1 + sq) / (2 * d2), np.where(d1 != 0, -d0 / d1, np.nan))
        r2 = np.where(quad, (-d1 - sq) / (2 * d2), np.nan)
    cands += [r1, r2]
    C = np.stack([np.clip(np.nan_to_num(c, nan=lo), lo, hi) for c in cands], axis=-1)

    def obj(t):
        qa = (a2[..., None] * t + a1[..., None]) * t + a0[..., None]
        qb = (b2[..., None] * t + b1[..., None]) * t + b0[..., None]
        return np.maximum(qa, qb) + 0.5 * weight * (t - center[..., None]) ** 2

    best = np.argmin(obj(C), axis=-1)
    out = np.take_along_axis(C, best[..., None], axis=-1)[..., 0]
    return float(out) if out.ndim == 0 else out


def subproblem_residual(instance: ProblemInstance, x, y, beta) -> float:
    """f(x, y) + beta ||x - y||^2, which is <= 0 at an exact subproblem solution."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(instance.ep.value(x, y) + beta * np.sum((x - y) ** 2))


def ep_residual(instance: ProblemInstance, x, beta=0.5, tol=1e-12, max_iter=100_000) -> float:
    """-min_y {f(x, y) + beta/2 ||y - x||^2}: zero exactly at solutions of the EP."""
    x = np.asarray(x, dtype=float)
    y = solve_subproblem(instance, x, beta, tol=tol, max_iter=max_iter).minimizer
    return -float(instance.ep.value(x, y) + 0.5 * beta * np.sum((y - x) ** 2))


def _solve_prox(oracle, box, x, beta, tol, max_iter):
    ps = oracle.prox
    L = ps.lipschitz + beta
    lo, hi = box.lower, box.upper

    def grad(v):
        return ps.grad(x, v) + beta * (v - x)

    def step(v):
        return ps.prox(v - grad(v) / L, L, lo, hi)

    y = project_box(box, x)
    v = y
    t = 1.0
    gap = np.inf
    for it in range(1, max_iter + 1):
        y_new = step(v)
        # gradient-mapping residual through strong convexity (modulus beta)
        gap = float(np.sum((y_new - v) ** 2)) * L * L / (2.0 * beta)
        if gap <= tol:
            return SubproblemResult(y_new, gap, it)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if np.dot(y_new - y, v - y_new) > 0:
            # adaptive restart
            t_new = 1.0
            v = y_new
        else:
            v = y_new + (t - 1.0) / t_new * (y_new - y)
        y, t = y_new, t_new
    raise IterationLimit(f"prox-gradient could not certify gap <= {tol} in {max_iter} steps",
                         point=y, gap=gap)


def _model_lower_bound(obj_val, g, y, beta, box):
    # F(w) >= F(y) + <g, w - y> + beta/2 ||w - y||^2 for the beta-strongly convex objective
    w = project_box(box, y - g / beta)
    return obj_val + float(g @ (w - y)) + 0.5 * beta * float(np.sum((w - y) ** 2))


def _solve_subgradient(oracle, box, x, beta, tol, max_iter):
    def objective(v):
        return oracle.value(x, v) + 0.5 * beta * float(np.sum((v - x) ** 2))

    def subgrad(v):
        return np.asarray(oracle.subgrad2(x, v), dtype=float) + beta * (v - x)

    y = project_box(box, x)
    best, best_val = y, objective(y)
    # weighted aggregate of the minorants F_i + <g_i, w - y_i> + beta/2 ||w - y_i||^2;
    # any convex combination is again a minorant, minimized over the box in closed form
    agg_const, agg_g, agg_y = 0.0, np.zeros_like(y), np.zeros_like(y)
    weight_sum = 0.0
    lower = -np.inf
    gap = np.inf
    for it in range(1, max_iter + 1):
        val, g = objective(y), subgrad(y)
        if val < best_val:
            best, best_val = y, val
        lower = max(lower, _model_lower_bound(val, g, y, beta, box))
        weight_sum += it
        lam = it / weight_sum
        agg_const += lam * (val - float(g @ y) + 0.5 * beta * float(y @ y) - agg_const)
        agg_g += lam * (g - agg_g)
        agg_y += lam * (y - agg_y)
        lin = agg_g - beta * agg_y
        w = project_box(box, -lin / beta)
        lower = max(lower, agg_const + float(lin @ w) + 0.5 * beta * float(w @ w))
        gap = best_val - lower
        if gap <= tol:
            return SubproblemResult(best.copy(), max(gap, 0.0), it)
        # step 2/(beta (t+1)) with weights proportional to t gives O(1/t) for strongly convex
        y = project_box(box, y - 2.0 / (beta * (it + 1)) * g)
    raise IterationLimit(f"subgradient fallback could not certify gap <= {tol} in {max_iter} steps",
                         point=best, gap=gap)


def solve_subproblem(instance: ProblemInstance, x, beta, tol=1e-10,
                     max_iter=10_000) -> SubproblemResult:
    if beta <= 0:
        raise ContractViolation("beta must be positive")
    if tol <= 0:
        raise ContractViolation("tol must be positive")
    x = instance.check_point(x)
    box = instance.feasible
    if not box.contains(x, tol=1e-12):
        raise ContractViolation("subproblem center lies outside the feasible box")
    if instance.is_vi:
        y = project_box(box, x - np.asarray(instance.oracle.F(x), dtype=float) / beta)
        return SubproblemResult(y, 0.0, 0)
    oracle = instance.oracle
    if oracle.prox is not None:
        return _solve_prox(oracle, box, x, beta, tol, max_iter)
    return _solve_subgradient(oracle, box, x, beta, tol, max_iter)
