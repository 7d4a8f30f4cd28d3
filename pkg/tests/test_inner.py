import numpy as np
import pytest

from epsolve import (ContractViolation, EPOracle, FeasibleBox, IterationLimit, ProblemInstance,
                     ep_eval, prox_separable_1d, solve_subproblem, subproblem_residual)
from epsolve.problems import build_quasimonotone_vi, quadratic_ep
from oracles import grid_minimize_2d, quadratic_ep_objective, random_quadratic_ep

SQUARE = (np.array([[1.0, 0.0, 0.0]]), np.array([[1.0, 0.0, 0.0]]))


def squared_norm_ep(n, prox=True):
    """f(x, y) = ||y||^2 - ||x||^2 on [-1, 1]^n."""
    box = FeasibleBox(-np.ones(n), np.ones(n))
    if prox:
        ones = np.tile([1.0, 0.0, 0.0], (n, 1))
        return quadratic_ep(np.zeros((n, n)), np.zeros((n, n)), np.zeros(n), box,
                            branches=(ones, ones))
    oracle = EPOracle(value=lambda x, y: float(y @ y - x @ x), subgrad2=lambda x, y: 2 * y)
    return ProblemInstance(oracle, box)


def test_vi_closed_form_example2():
    res = solve_subproblem(build_quasimonotone_vi(), [0.0, 0.0], 0.5)
    np.testing.assert_array_equal(res.minimizer, [0.0, 1.0])
    assert res.certified_gap == 0.0


@pytest.mark.parametrize("prox", [True, False])
@pytest.mark.parametrize("beta", [0.1, 0.5, 3.0])
def test_squared_norm_closed_form(rng, prox, beta):
    inst = squared_norm_ep(3, prox=prox)
    for x in rng.uniform(-1, 1, size=(5, 3)):
        res = solve_subproblem(inst, x, beta, tol=1e-10)
        expected = np.clip(beta * x / (2 + beta), -1, 1)
        np.testing.assert_allclose(res.minimizer, expected, atol=1e-5)
        assert res.certified_gap <= 1e-10


def test_squared_norm_matches_grid():
    inst = squared_norm_ep(2)
    x = np.array([0.8, -0.6])
    obj = lambda Y: (Y ** 2).sum(axis=1) - x @ x + 0.25 * ((Y - x) ** 2).sum(axis=1)
    grid = grid_minimize_2d(obj, [-1, -1], [1, 1])
    np.testing.assert_allclose(solve_subproblem(inst, x, 0.5).minimizer, grid, atol=1e-3)


def test_fixed_point_returns_center():
    res = solve_subproblem(squared_norm_ep(2), [0.0, 0.0], 0.5)
    np.testing.assert_array_equal(res.minimizer, [0.0, 0.0])
    assert res.certified_gap == 0.0


def test_prox_1d_examples():
    sq = (1.0, 0.0, 0.0)
    zero = (0.0, 0.0, 0.0)
    assert prox_separable_1d(sq, sq, 0.0, 1.0, -1.0, 1.0) == 0.0
    for c in (-0.7, 0.0, 0.4, 3.0):
        assert prox_separable_1d(zero, zero, c, 2.0, -1.0, 1.0) == pytest.approx(np.clip(c, -1, 1))
    unit1 = (0.02, 2.0, 0.0)
    t = prox_separable_1d(unit1, unit1, 10.0, 1.0, 0.0, 80.0)
    assert t == pytest.approx(8 / 1.04, abs=1e-12)
    # fine grid agrees (grid point nearest 7.6923 at step 1e-5)
    grid = np.linspace(0, 80, 8_000_001)
    vals = 0.02 * grid ** 2 + 2 * grid + 0.5 * (grid - 10) ** 2
    assert abs(grid[np.argmin(vals)] - t) <= 1e-5


def test_prox_1d_kink_against_grid(rng):
    grid = np.linspace(-2, 2, 400_001)
    for _ in range(30):
        a = (rng.uniform(0, 2), rng.normal(), rng.normal())
        b = (rng.uniform(0, 2), rng.normal(), rng.normal())
        c, w = rng.normal(), rng.uniform(0.1, 3)
        t = prox_separable_1d(a, b, c, w, -2.0, 2.0)
        vals = np.maximum(np.polyval(a, grid), np.polyval(b, grid)) + 0.5 * w * (grid - c) ** 2
        obj_t = max(np.polyval(a, t), np.polyval(b, t)) + 0.5 * w * (t - c) ** 2
        assert obj_t <= vals.min() + 1e-12
        assert abs(grid[np.argmin(vals)] - t) <= 2e-5


def test_prox_1d_rejects_nonconvex():
    with pytest.raises(ContractViolation):
        prox_separable_1d((-1.0, 0, 0), (1.0, 0, 0), 0.0, 1.0, -1.0, 1.0)
    with pytest.raises(ContractViolation):
        prox_separable_1d((1.0, 0, 0), (1.0, 0, 0), 0.0, 0.0, -1.0, 1.0)


def test_subproblem_residual_examples():
    qvi = build_quasimonotone_vi()
    assert subproblem_residual(qvi, [0, 0], [0, 0], 0.5) == 0.0
    assert subproblem_residual(qvi, [0, 0], [0, 1], 0.5) == pytest.approx(-0.5, abs=1e-15)


def test_first_order_certificate(rng):
    for _ in range(10):
        inst, _ = random_quadratic_ep(rng)
        x = rng.uniform(-1, 1, 2)
        beta = rng.uniform(0.2, 2)
        y = solve_subproblem(inst, x, beta).minimizer
        assert subproblem_residual(inst, x, y, beta) <= 1e-8
        fy = ep_eval(inst, x, y)
        for w in rng.uniform(-1, 1, size=(100, 2)):
            assert ep_eval(inst, x, w) >= fy + beta * np.dot(x - y, w - y) - 1e-6


def test_agrees_with_grid_search(rng):
    for _ in range(8):
        inst, (P, Q, r, ba, bb) = random_quadratic_ep(rng)
        x = rng.uniform(-1, 1, 2)
        beta = rng.uniform(0.2, 2)
        y = solve_subproblem(inst, x, beta).minimizer
        grid = grid_minimize_2d(quadratic_ep_objective(P, Q, r, ba, bb, x, beta), [-1, -1], [1, 1])
        assert np.linalg.norm(y - grid) <= 1e-3


def test_generic_fallback_agrees_with_prox_route(rng):
    for _ in range(5):
        inst, _ = random_quadratic_ep(rng)
        generic = ProblemInstance(EPOracle(inst.oracle.value, inst.oracle.subgrad2), inst.feasible)
        x = rng.uniform(-1, 1, 2)
        fast = solve_subproblem(inst, x, 1.0).minimizer
        slow = solve_subproblem(generic, x, 1.0, tol=1e-4, max_iter=200_000)
        # strong convexity: ||y - y*||^2 <= 2 gap / beta
        assert np.linalg.norm(fast - slow.minimizer) <= np.sqrt(2 * slow.certified_gap) + 1e-9


def test_generic_fallback_iteration_limit():
    oracle = EPOracle(value=lambda x, y: float(np.abs(y).sum() - np.abs(x).sum()),
                      subgrad2=lambda x, y: np.where(y >= 0, 1.0, -1.0))
    inst = ProblemInstance(oracle, FeasibleBox(-np.ones(2), np.ones(2)))
    with pytest.raises(IterationLimit) as info:
        solve_subproblem(inst, [0.3, -0.2], 0.5, tol=1e-14, max_iter=50)
    assert info.value.point is not None


def test_argument_checks():
    inst = squared_norm_ep(2)
    with pytest.raises(ContractViolation):
        solve_subproblem(inst, [0, 0], 0.0)
    with pytest.raises(ContractViolation):
        solve_subproblem(inst, [0, 0], 1.0, tol=0.0)
    with pytest.raises(ContractViolation):
        solve_subproblem(inst, [2.0, 0], 1.0)
