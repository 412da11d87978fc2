import numpy as np
import pytest

from coupled_minimax import ConfigurationError
from coupled_minimax.errors import InfeasibilityError
from coupled_minimax.netflow import (METHODS, ExperimentConfig, FlowNetwork, attack_instance, baseline_attack,
                                     generate_network, min_cost_flow, minimax_attack, nikaido_isoda_attack,
                                     run_experiment, run_trial, trial_seed)

from oracles import min_cost_two_edges


def toy():
    """Two parallel source-sink edges with weights 1 and 2, unit capacities and unit demand."""
    return FlowNetwork(2, [(0, 1), (0, 1)], [1.0, 1.0], [1.0, 2.0], 1.0)


def exhaustive_best_attack(net, budget, points=201):
    clean = min_cost_two_edges(net.weight, net.capacity, net.demand)[0]
    best = (-np.inf, None)
    for y1 in np.linspace(0, budget, points):
        y = np.array([y1, budget - y1])
        cost, _ = min_cost_two_edges(net.weight, net.capacity - y, net.demand)
        rho = (cost - clean) / clean
        if rho > best[0]:
            best = (rho, y)
    return best


def test_toy_clean_flow_matches_oracle():
    net = toy()
    x, cost = min_cost_flow(net)
    ref_cost, ref_x = min_cost_two_edges(net.weight, net.capacity, 1.0)
    # minimising x1^2 + 2 x2^2 with x1 + x2 = 1 splits the demand 2:1
    assert np.allclose(x, [2 / 3, 1 / 3], atol=1e-6) and np.allclose(ref_x, x, atol=1e-5)
    assert cost == pytest.approx(ref_cost, abs=1e-8)


def test_toy_attacked_flow():
    x, cost = min_cost_flow(toy(), np.array([1.0, 0.0]))
    assert np.allclose(x, [0.0, 1.0], atol=1e-7)
    assert cost == pytest.approx(2.0, abs=1e-6)


def test_toy_attacks_agree_with_exhaustive_search():
    net = toy()
    rho_star, y_star = exhaustive_best_attack(net, 1.0)
    assert np.allclose(y_star, [1.0, 0.0]) and rho_star == pytest.approx(2.0, abs=1e-6)
    for res in (minimax_attack(net, 1.0, solver="mgd"), minimax_attack(net, 1.0, solver="d3-gda"),
                baseline_attack(net, 1.0, "greedy"), baseline_attack(net, 1.0, "max_capacity")):
        assert np.allclose(res.attack, [1.0, 0.0], atol=1e-4), res.method
        assert res.rho == pytest.approx(rho_star, abs=1e-4), res.method


def test_baseline_fill_rules():
    net = FlowNetwork(2, [(0, 1)] * 3, [1.0, 2.0, 1.5], [1.8, 1.2, 1.2], 0.5)
    assert np.allclose(baseline_attack(net, 2.5, "max_capacity").attack, [0.0, 2.0, 0.5])
    # ties in weight go to the lower edge index
    assert np.allclose(baseline_attack(net, 2.5, "greedy").attack, [0.0, 2.0, 0.5])
    assert np.allclose(baseline_attack(net, 4.0, "greedy").attack, [0.5, 2.0, 1.5])


def test_random_attack_spends_budget_within_capacity():
    net = generate_network(8, 1.0, 20.0, 3)
    y = baseline_attack(net, 2.0, "random", seed=5).attack
    assert y.sum() == pytest.approx(2.0) and np.all(y >= 0) and np.all(y <= net.capacity + 1e-12)
    assert np.array_equal(y, baseline_attack(net, 2.0, "random", seed=5).attack)


def test_generated_network_layout():
    net = generate_network(15, 1.0, 20.0, trial_seed(0, 0, 0))
    assert net.n_edges == 15 * 14
    out = net.capacity[net.edges[:, 0] == 0].sum()
    assert net.demand == pytest.approx(0.2 * out)
    assert np.all((net.capacity >= 1) & (net.capacity <= 2)) and np.all((net.weight >= 1) & (net.weight <= 2))
    again = generate_network(15, 1.0, 20.0, trial_seed(0, 0, 0))
    assert np.array_equal(net.capacity, again.capacity) and np.array_equal(net.weight, again.weight)


def test_flow_respects_conservation_and_capacity():
    net = generate_network(10, 0.6, 30.0, 11)
    y = baseline_attack(net, 1.0, "greedy").attack
    x, _ = min_cost_flow(net, y)
    M, rhs = net.balance_matrix()
    assert np.allclose(M @ x, rhs, atol=1e-8)
    assert np.all(x >= -1e-12) and np.all(x + y <= net.capacity + 1e-9)


def test_unroutable_demand():
    net = toy()
    with pytest.raises(InfeasibilityError):
        min_cost_flow(net, np.array([1.0, 0.5]))
    with pytest.raises(ConfigurationError):
        FlowNetwork(2, [(0, 1)], [1.0], [0.0], 1.0)


def test_attack_instance_orientation():
    net = toy()
    inst = attack_instance(net, 1.0)
    assert (inst.n, inst.m, inst.k) == (2, 2, 2)
    assert np.array_equal(inst.A, np.eye(2)) and np.array_equal(inst.B, np.eye(2))
    assert np.array_equal(inst.c, net.capacity)


def test_nikaido_isoda_attack_is_feasible():
    net = generate_network(6, 1.0, 20.0, 4)
    y = nikaido_isoda_attack(net, 1.5, outer_steps=20, inner_steps=5)
    assert y.sum() == pytest.approx(1.5) and np.all(y <= net.capacity + 1e-9)
    min_cost_flow(net, y)


def test_zero_budget_gives_zero_degradation():
    cfg = ExperimentConfig(nodes=6, budgets=(0.0,), trials=1, methods=METHODS)
    result = run_experiment(cfg)
    for method in METHODS:
        assert result.mean(0.0, method) == pytest.approx(0.0, abs=1e-6)


def test_trials_are_paired_across_methods():
    a = run_trial(ExperimentConfig(nodes=6, budgets=(1.0,), trials=1, methods=("random",)), 0)
    b = run_trial(ExperimentConfig(nodes=6, budgets=(1.0,), trials=1, methods=("greedy", "random")), 0)
    assert a[(1.0, "random")] == b[(1.0, "random")]


def test_experiment_csv():
    cfg = ExperimentConfig(nodes=5, budgets=(0.5, 1.0), trials=2, methods=("greedy", "random"))
    text = run_experiment(cfg).to_csv()
    lines = text.splitlines()
    assert lines[0] == "budget,method,trials_ok,trials_failed,rho_mean,rho_min,rho_max"
    assert len(lines) == 5 and lines[1].startswith("0.5,greedy,2,0,")


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(methods=("magic",))
    with pytest.raises(ConfigurationError):
        generate_network(1, 0.5, 20.0)
