import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupled_minimax import (ConfigurationError, DimensionError, DomainError, ProblemInstance, feasibility_check,
                             lagrangian_eval, lagrangian_grads, zoo_instance)
from coupled_minimax.geometry import Box
from coupled_minimax.problem import (JammingObjective, QuadraticObjective, estimate_constants,
                                     inner_feasibility)
from coupled_minimax.zoo import ZOO, zoo_catalog

from oracles import central_difference, lagrangian_direct


def example1():
    # x + y <= 1 with x in [0, 2], y in [0, 1]: x > 1 leaves no feasible y
    return zoo_instance("custom-quadratic", {"P": [[2.0]], "C": [[0.0]], "R": [[2.0]], "A": [[1.0]],
                                             "B": [[1.0]], "c": [1.0], "x_box": [0.0, 2.0], "y_box": [0.0, 1.0]})


def random_instance(seed, n=2, m=3, k=2):
    return zoo_instance("custom-quadratic", {"n": n, "m": m, "k": k, "seed": seed})


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_lagrangian_matches_direct_formula(seed):
    inst = random_instance(seed)
    rng = np.random.default_rng(seed)
    x, y, lam = rng.normal(size=2), rng.normal(size=3), rng.random(2)
    o = inst.objective
    ref = lagrangian_direct(o.P, o.C, o.R, o.p, o.q, inst.A, inst.B, inst.c, x, y, lam)
    assert lagrangian_eval(inst, x, y, lam) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_gradients_at_zero_multiplier():
    inst = zoo_instance("eq23-divergence")
    x, y = np.array([0.0]), np.array([-1.0])
    gx, gy, gl = lagrangian_grads(inst, x, y, np.zeros(2))
    assert gx == pytest.approx([-1.0])
    assert gy == pytest.approx([1.0])
    assert gl == pytest.approx(-inst.coupling.residual(x, y))


@pytest.mark.parametrize("name", sorted(ZOO))
def test_gradients_match_finite_differences(name):
    inst = zoo_instance(name)
    rng = np.random.default_rng(3)
    x, y = inst.X.sample(rng, 1)[0], inst.Y.sample(rng, 1)[0]
    lam = rng.random(inst.k)
    gx, gy, gl = lagrangian_grads(inst, x, y, lam)
    fx = central_difference(lambda z: lagrangian_eval(inst, z, y, lam), x)
    fy = central_difference(lambda z: lagrangian_eval(inst, x, z, lam), y)
    fl = central_difference(lambda z: lagrangian_eval(inst, x, y, np.abs(z)), lam + 1e-3)
    for analytic, numeric in ((gx, fx), (gy, fy), (gl, fl)):
        assert np.allclose(analytic, numeric, rtol=1e-5, atol=1e-6)


def test_point_checks():
    inst = zoo_instance("eq23-divergence")
    with pytest.raises(DimensionError):
        lagrangian_eval(inst, np.zeros(2), np.zeros(1), np.zeros(2))
    with pytest.raises(DomainError):
        lagrangian_eval(inst, np.zeros(1), np.zeros(1), np.array([-1.0, 0.0]))


def test_eq23_layout():
    inst = zoo_instance("eq23-divergence")
    assert (inst.X.lo[0], inst.X.hi[0], inst.Y.lo[0], inst.Y.hi[0]) == (-1.0, 1.0, -2.0, 0.0)
    assert inst.coupling.equality_pairs() == [(0, 1)]
    assert np.allclose(inst.coupling.residual([0.0], [-1.0]), 0.0)
    k = inst.constants
    assert (k.mu_x, k.mu_y) == (1.0, 1.0)
    assert k.L_x == pytest.approx(np.sqrt(2)) and k.L_y == pytest.approx(np.sqrt(2))


def test_prop1_layout():
    inst = zoo_instance("prop1-quadratic", {"x_iv": [0, 1], "y_iv": [0, 1], "sign": "+"})
    assert inst.objective.value(np.array([0.3]), np.array([0.6])) == pytest.approx(0.09 - 0.36)
    assert np.allclose(inst.A, [[1.0], [-1.0]]) and np.allclose(inst.B, [[1.0], [-1.0]])
    with pytest.raises(ConfigurationError):
        zoo_instance("prop1-quadratic", {"sign": "*"})


@pytest.mark.parametrize("name", sorted(ZOO))
def test_json_round_trip(name):
    inst = zoo_instance(name)
    back = ProblemInstance.from_json(inst.to_json())
    assert back.to_dict() == json.loads(inst.to_json())
    rng = np.random.default_rng(0)
    x, y, lam = inst.X.sample(rng, 1)[0], inst.Y.sample(rng, 1)[0], rng.random(inst.k)
    assert lagrangian_eval(back, x, y, lam) == lagrangian_eval(inst, x, y, lam)


def test_round_trip_without_coupling():
    inst = zoo_instance("prop1-quadratic", {"coupled": False})
    assert ProblemInstance.from_json(inst.to_json()).k == 0


def test_unknown_instance():
    with pytest.raises(ConfigurationError):
        zoo_instance("nope")


def test_catalog_is_stable():
    names = [name for name, _ in zoo_catalog()]
    assert names == list(ZOO) and all(desc for _, desc in zoo_catalog())


def test_quadratic_constants_are_exact():
    obj = QuadraticObjective([[2.0, 0.0], [0.0, 4.0]], np.zeros((2, 1)), [[3.0]])
    k = estimate_constants(obj, Box([-1, -1], [1, 1]), Box(-1, 1))
    assert (k.mu_x, k.mu_y, k.L_x, k.L_y) == (2.0, 3.0, 4.0, 3.0)
    assert not k.estimated
    assert k.D == pytest.approx(np.sqrt(2))  # radius of the larger of the two sets
    assert k.f_lower <= -3.0 / 2 + 1e-9 and k.f_upper >= 3.0 - 1e-9


def test_jamming_constants_are_flagged_estimates():
    inst = zoo_instance("jamming", {"eta": 0.1, "eta_x": 0.1})
    assert inst.constants.estimated
    assert inst.constants.mu_y >= 0.1 * 0.9
    assert isinstance(inst.objective, JammingObjective)


def test_indefinite_blocks_need_opt_in():
    with pytest.raises(ConfigurationError):
        zoo_instance("custom-quadratic", {"P": [[-1.0]], "C": [[0.0]], "R": [[1.0]]})
    zoo_instance("custom-quadratic", {"P": [[-1.0]], "C": [[0.0]], "R": [[1.0]], "allow_indefinite": True})


def test_eq10_rejects_indefinite_q():
    with pytest.raises(ConfigurationError):
        zoo_instance("eq10-hard", {"Q": [[1.0, 0.0], [0.0, -1.0]]})


def test_example1_infeasible_beyond_one():
    inst = example1()
    res, _ = inner_feasibility(inst, np.array([1.5]))
    assert res == pytest.approx(0.5, abs=1e-9)
    assert inner_feasibility(inst, np.array([0.5]))[0] == 0.0
    report = feasibility_check(inst)
    assert not report.feasible
    assert report.worst_residual == pytest.approx(1.0, abs=1e-9)
    assert report.worst_x[0] == pytest.approx(2.0)


@pytest.mark.parametrize("name", ["eq23-divergence", "eq10-hard", "example3-dual"])
def test_zoo_instances_are_feasible(name):
    assert feasibility_check(zoo_instance(name), samples=32).feasible


def test_random_instances_have_slater_margin():
    report = feasibility_check(random_instance(5, 2, 2, 2), samples=64)
    assert report.feasible and report.slater_margin >= 0.2 - 1e-9
