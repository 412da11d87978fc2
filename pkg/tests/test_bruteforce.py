import numpy as np
import pytest

from coupled_minimax import ConfigurationError, zoo_instance
from coupled_minimax.bruteforce import (GridProblem, GridSpec, inner_solution_sets, relations_check,
                                        relations_suite, value_duals, value_mMI, value_mMO, value_MmI, value_MmO)
from coupled_minimax.errors import InfeasibilityError
from coupled_minimax.geometry import Ball

GRID = GridSpec(201)


def square():
    return zoo_instance("prop1-quadratic", {"x_iv": [0, 1], "y_iv": [0, 1], "sign": "+"})


def test_square_values():
    inst = square()
    assert value_mMI(inst, GRID) == pytest.approx(-1.0, abs=0.05)
    assert value_MmI(inst, GRID) == pytest.approx(1.0, abs=0.05)
    assert value_mMO(inst, GRID) == pytest.approx(1.0, abs=0.05)
    assert value_MmO(inst, GRID) == pytest.approx(-1.0, abs=0.05)


def test_eq23_value_is_objective_at_solution():
    # f(0, -1) = 0 + 0 - 1/2
    assert value_mMI(zoo_instance("eq23-divergence"), GRID) == pytest.approx(-0.5, abs=0.02)


def test_uncoupled_values_match_classical_minimax():
    inst = zoo_instance("custom-quadratic", {"P": [[2.0]], "C": [[1.0]], "R": [[2.0]], "A": [[0.0]], "B": [[0.0]],
                                             "c": [0.0]})
    gp = GridProblem(inst, GRID)
    tol = gp.cell_tolerance()
    assert gp.value_mMI() == pytest.approx(gp.value_MmI(), abs=tol)
    assert gp.value_mMO() == pytest.approx(gp.value_mMI(), abs=1e-12)
    assert gp.value_MmO() == pytest.approx(gp.value_MmI(), abs=1e-12)


def test_dual_orderings_agree():
    inst = zoo_instance("custom-quadratic", {"n": 1, "m": 1, "k": 1, "seed": 3})
    d1, d2, d3 = value_duals(inst, GridSpec(101), lambda_points=101)
    assert abs(d1 - d2) <= 1e-12 and abs(d2 - d3) <= 1e-12


def test_strong_duality_on_slater_instance():
    inst = zoo_instance("custom-quadratic", {"n": 1, "m": 1, "k": 1, "seed": 104})
    gp = GridProblem(inst, GRID)
    bound = gp.multiplier_bound()
    p = gp.value_mMI()
    d1, d2, d3, h_lam, gmax = gp.value_duals(max(10.0, bound), 201)
    tol = 2 * (gp.cell_tolerance() + gmax * h_lam)
    # the dual minimum sits near lambda = 12.5, beyond the naive [0, 10] box
    assert bound > 12.5
    assert abs(p - d2) <= tol
    short = gp.value_duals(10.0, 201)[1]
    assert short - p > abs(d2 - p)


def test_multiplier_bound_needs_slater_point():
    inst = zoo_instance("eq23-divergence")
    assert GridProblem(inst, GridSpec(51)).multiplier_bound() == np.inf
    uncoupled = zoo_instance("prop1-quadratic", {"coupled": False})
    assert GridProblem(uncoupled, GridSpec(51)).multiplier_bound() == 0.0


def test_refinement_narrows_multiplier_cell():
    inst = zoo_instance("custom-quadratic", {"n": 1, "m": 1, "k": 1, "seed": 108})
    gp = GridProblem(inst, GridSpec(101))
    coarse = gp.value_duals(12.0, 13)
    fine = gp.value_duals(12.0, 13, refine=3)
    assert fine[3] < coarse[3] / 10
    assert fine[1] <= coarse[1] + 1e-12


def test_example3_solution_sets():
    inst = zoo_instance("example3-dual")
    sa, sb = inner_solution_sets(inst, np.zeros(1), GRID, lambda_max=4.0, lambda_points=201)
    lams = np.linspace(0, 4, 201)
    # y = 1 together with every grid multiplier
    assert np.all(sa[:, 0] == 1.0) and np.allclose(np.sort(sa[:, 1]), lams)
    assert sb.shape == (1, 2) and np.allclose(sb[0], [1.0, 0.0])


def test_relations_suite():
    report = relations_check(relations_suite(), GRID)
    v = report.values
    assert v["wide-y"]["mM-I"] == pytest.approx(-3.0, abs=0.05)
    assert v["wide-y"]["Mm-O"] == pytest.approx(-1.0, abs=0.05)
    assert v["shifted"]["Mm-I"] == pytest.approx(3.0, abs=0.05)
    assert v["shifted"]["mM-O"] == pytest.approx(1.0, abs=0.05)
    assert report.universal_hold
    assert all(seen == {"<", "=", ">"} for seen in report.realized.values())
    text = report.to_text()
    assert "FAIL" not in text and "square" in text
    assert report.to_csv().splitlines()[0] == "instance,mM-I,Mm-I,mM-O,Mm-O,tolerance"


def test_empty_grid_is_infeasible():
    inst = zoo_instance("custom-quadratic", {"P": [[1.0]], "C": [[0.0]], "R": [[1.0]], "A": [[0.0]], "B": [[1.0]],
                                             "c": [-5.0]})
    with pytest.raises(InfeasibilityError):
        value_mMI(inst, GridSpec(21))


def test_grid_preconditions():
    with pytest.raises(ConfigurationError):
        GridSpec(5)
    inst = zoo_instance("eq23-divergence")
    inst.X = Ball([0.0], 1.0)
    with pytest.raises(ConfigurationError):
        GridProblem(inst, GridSpec(21))


def test_refinement_consistency():
    inst = zoo_instance("custom-quadratic", {"n": 1, "m": 1, "k": 1, "seed": 2})
    coarse = GridProblem(inst, GridSpec(51))
    fine = GridProblem(inst, GridSpec(101))
    for name in ("value_mMI", "value_MmI"):
        assert abs(getattr(fine, name)() - getattr(coarse, name)()) <= coarse.cell_tolerance()
