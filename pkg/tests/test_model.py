import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epsolve import (ContractViolation, FeasibleBox, HalfSpace, ProblemInstance, VIOracle,
                     ep_eval, ep_subgradient2, vi_as_ep)
from epsolve.problems import quasimonotone_F


def unit_vi(F):
    return ProblemInstance(VIOracle(F), FeasibleBox.unit(2), name="vi")


def test_vi_wrapper_inner_product():
    inst = unit_vi(lambda x: np.array([0.0, -1.0]))
    assert ep_eval(inst, [0, 0], [0, 1]) == -1.0


def test_zero_map_gives_zero_bifunction(rng):
    ep = vi_as_ep(VIOracle(lambda x: np.zeros(3)))
    for _ in range(20):
        x, y = rng.normal(size=(2, 3))
        assert ep.value(x, y) == 0.0


def test_example2_wrapper_value():
    inst = unit_vi(quasimonotone_F)
    assert ep_eval(inst, [0, 0], [0, 1]) == pytest.approx(-1.0, abs=1e-15)


def test_vi_wrapper_diagonal_and_subgradient(rng):
    ep = vi_as_ep(VIOracle(quasimonotone_F))
    for x in rng.uniform(0, 1, size=(100, 2)):
        assert ep.value(x, x) == 0.0
        y1, y2 = rng.uniform(0, 1, size=(2, 2))
        assert np.array_equal(ep.subgrad2(x, y1), ep.subgrad2(x, y2))
        assert np.array_equal(ep.subgrad2(x, y1), quasimonotone_F(x))


def test_dimension_mismatch_is_contract_violation():
    inst = unit_vi(quasimonotone_F)
    with pytest.raises(ContractViolation):
        ep_eval(inst, [0, 0, 0], [0, 1])
    with pytest.raises(ContractViolation):
        ep_subgradient2(inst, [0, 0], [1.0])


def test_box_validation():
    with pytest.raises(ContractViolation):
        FeasibleBox([1.0], [0.0])
    with pytest.raises(ContractViolation):
        FeasibleBox([0.0, np.inf], [1.0, 1.0])
    box = FeasibleBox([0, 0], [1, 2])
    assert box.contains([1, 2]) and not box.contains([1.1, 0])
    with pytest.raises(ValueError):
        box.lower[0] = 5.0


def test_halfspace_zero_normal_is_whole_space():
    h = HalfSpace([0.0, 0.0], [3.0, 4.0])
    assert h.is_whole_space
    assert h.contains([1e9, -1e9])


def test_instance_rejects_known_point_outside_box():
    with pytest.raises(ContractViolation):
        ProblemInstance(VIOracle(quasimonotone_F), FeasibleBox.unit(2), known_solution=[2.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_halfspace_violation_is_distance(g, z):
    h = HalfSpace(g, z)
    x = np.array([1.0, 1.0])
    if h.is_whole_space:
        assert h.violation(x) == 0.0
    else:
        u = np.array(g) / np.max(np.abs(g))
        u /= np.linalg.norm(u)
        expected = max(0.0, float(np.dot(u, x - np.array(z))))
        assert h.violation(x) == pytest.approx(expected, rel=1e-12, abs=1e-12)
