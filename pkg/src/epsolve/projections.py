"""Metric projections onto boxes, half-spaces and their intersections."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from .errors import ContractViolation, Infeasible, NonConvergence
from .model import FeasibleBox, HalfSpace


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray
    iterations: int
    residual: float


def project_box(box: FeasibleBox, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != box.lower.shape:
        raise ContractViolation("point and box dimensions differ")
    return np.clip(x, box.lower, box.upper)


def project_halfspace(h: HalfSpace, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if h.is_whole_space:
        return x.copy()
    u = h.unit_normal
    excess = float(u @ (x - h.anchor))
    if excess <= 0.0:
        return x.copy()
    return x - excess * u


def _constraint_rows(box, cuts):
    """Stack box faces and non-trivial cuts as unit-normal rows G p <= h."""
    n = box.dim
    eye = np.eye(n)
    rows = [eye, -eye]
    rhs = [box.upper, -box.lower]
    active = [c for c in cuts if not c.is_whole_space]
    if active:
        U = np.array([c.unit_normal for c in active])
        rows.append(U)
        rhs.append(np.einsum("ij,ij->i", U, np.array([c.anchor for c in active])))
    return np.vstack(rows), np.concatenate(rhs)


def _max_violation(G, h, p):
    return float(max(0.0, np.max(G @ p - h)))


def nnls(E, f, max_iter=None):
    """Lawson-Hanson active-set solver for min ||E u - f|| subject to u >= 0."""
    n, m = E.shape
    if max_iter is None:
        max_iter = 3 * m + 50
    tol = 10 * np.finfo(float).eps * max(n, m) * max(1.0, np.abs(E).sum(axis=0).max())
    passive = np.zeros(m, dtype=bool)
    u = np.zeros(m)
    w = E.T @ f
    for _ in range(max_iter):
        free = ~passive & (w > tol)
        if not free.any():
            return u
        j = int(np.argmax(np.where(free, w, -np.inf)))
        passive[j] = True
        while True:
            s = np.zeros(m)
            s[passive] = np.linalg.lstsq(E[:, passive], f, rcond=None)[0]
            if np.all(s[passive] > 0):
                break
            # move toward s until the first passive coordinate hits zero
            blocking = passive & (s <= 0)
            alpha = np.min(u[blocking] / (u[blocking] - s[blocking]))
            u = u + alpha * (s - u)
            passive &= u > tol
            u[~passive] = 0.0
            if not passive.any():
                s = np.zeros(m)
                break
        u = s
        w = E.T @ (f - E @ u)
    raise NonConvergence(f"NNLS did not converge in {max_iter} iterations")


def _polish(G, h, x, active):
    """Exact projection onto the affine set {G_A p = h_A}."""
    GA = G[active]
    mu = np.linalg.lstsq(GA @ GA.T, GA @ x - h[active], rcond=None)[0]
    return x - GA.T @ mu


def _project_ldp(box, cuts, x, tol):
    # Least-distance form: d = p - x minimizes ||d|| s.t. (-G) d >= G x - h,
    # reduced to NNLS as in Lawson & Hanson's LDP algorithm.
    G, h = _constraint_rows(box, cuts)
    slack = G @ x - h
    if np.all(slack <= 0.0):
        return x.copy(), 0
    n = x.size
    # work in units of the largest violation: p is recovered by dividing by r[-1] ~ 1/(1+|d|^2),
    # which amplifies NNLS rounding unless |d| = O(1)
    scale = float(slack.max())
    E = np.vstack([-G.T, slack[None, :] / scale])
    f = np.zeros(n + 1)
    f[-1] = 1.0
    u = nnls(E, f)
    r = E @ u - f
    if abs(r[-1]) < 1e-14:
        raise NonConvergence("intersection is numerically empty", point=project_box(box, x),
                             residual=np.inf)
    p = x - scale * r[:n] / r[-1]
    best, best_res = p, _max_violation(G, h, p)
    active = u > 0
    if np.any(active):
        q = _polish(G, h, x, active)
        q_res = _max_violation(G, h, q)
        if q_res <= best_res and np.linalg.norm(q - p) <= max(tol, 1e-8 * (1 + np.linalg.norm(p))):
            best, best_res = q, q_res
    best = np.clip(best, box.lower, box.upper)
    return best, 1


def _project_dykstra(box, cuts, x, tol, max_iter):
    sets = [lambda v: np.clip(v, box.lower, box.upper)]
    sets += [(lambda v, c=c: project_halfspace(c, v)) for c in cuts if not c.is_whole_space]
    G, h = _constraint_rows(box, cuts)
    if max_iter is None:
        max_iter = 50 * len(sets) * x.size
    increments = np.zeros((len(sets), x.size))
    p = x.copy()
    residual = np.inf
    for cycle in range(1, max_iter + 1):
        prev, prev_inc = p, increments.copy()
        for i, proj in enumerate(sets):
            w = p + increments[i]
            p = proj(w)
            increments[i] = w - p
        residual = _max_violation(G, h, p)
        # the iterate can stall while the corrections are still moving
        change = max(np.linalg.norm(p - prev), np.abs(increments - prev_inc).max())
        if change <= tol and residual <= tol:
            return p, cycle
    raise NonConvergence(f"Dykstra did not reach tol={tol} in {max_iter} cycles",
                         point=p, residual=residual)


def project_intersection(box: FeasibleBox, cuts: Sequence[HalfSpace], x, tol=1e-10,
                         max_iter=None, method="active-set") -> ProjectionResult:
    """Project ``x`` onto ``box`` intersected with every half-space in ``cuts``.

    ``method="active-set"`` solves the least-distance problem exactly through
    NNLS and polishes on the identified active set. ``method="dykstra"`` runs
    Dykstra's alternating projections, which is much slower once dozens of
    cuts have accumulated. The reported residual is the largest distance from
    the returned point to any constraint.

    Raises NonConvergence (with the best point attached) when the residual
    cannot be brought below ``tol``.
    """
    if tol <= 0:
        raise ContractViolation("tol must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != box.lower.shape:
        raise ContractViolation("point and box dimensions differ")
    cuts = list(cuts)
    for c in cuts:
        if c.normal.shape != x.shape:
            raise ContractViolation("cut dimension differs from point dimension")
    if not any(not c.is_whole_space for c in cuts):
        return ProjectionResult(project_box(box, x), 0, 0.0)
    if method == "active-set":
        p, its = _project_ldp(box, cuts, x, tol)
    elif method == "dykstra":
        p, its = _project_dykstra(box, cuts, x, tol, max_iter)
    else:
        raise ContractViolation(f"unknown projection method {method!r}")
    G, h = _constraint_rows(box, cuts)
    residual = _max_violation(G, h, p)
    if residual > tol:
        raise NonConvergence(f"projection residual {residual:.3e} exceeds tol={tol}",
                             point=p, residual=residual)
    return ProjectionResult(p, its, residual)


def brute_force_projection(box: FeasibleBox, cuts: Sequence[HalfSpace], x,
                           feas_tol=1e-9) -> np.ndarray:
    """Exact projection by enumerating candidate active sets (small problems only).

    Every subset of at most ``n`` constraints is treated as active; the point
    nearest ``x`` on the corresponding affine set is kept if it satisfies all
    constraints, and the closest survivor is returned.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    cuts = [c for c in cuts if not c.is_whole_space]
    if n > 3 or len(cuts) > 3:
        raise ContractViolation("brute-force projection supports dim <= 3 and <= 3 cuts")
    G, h = _constraint_rows(box, cuts)
    best, best_dist = None, np.inf
    for size in range(0, n + 1):
        for subset in itertools.combinations(range(G.shape[0]), size):
            if size == 0:
                cand = x
            else:
                idx = list(subset)
                GA = G[idx]
                if np.linalg.matrix_rank(GA) < size:
                    continue
                cand = x - GA.T @ np.linalg.solve(GA @ GA.T, GA @ x - h[idx])
            if np.all(G @ cand - h <= feas_tol):
                dist = float(np.linalg.norm(cand - x))
                if dist < best_dist:
                    best, best_dist = cand, dist
    if best is None:
        raise Infeasible("box and cuts have empty intersection")
    return best
