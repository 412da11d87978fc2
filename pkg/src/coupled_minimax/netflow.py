"""Capacity attacks on congestion-priced single-commodity flow networks.

A user routes ``demand`` units from ``source`` to ``sink`` at total cost
``sum_e w_e (x_e + y_e) x_e``, where ``y`` is capacity removed by an attacker
(``0 <= y <= p``, ``sum y = budget``) and ``x <= p - y``.  The attacker
maximises the user's optimal cost; the damage ``rho`` is the relative cost
increase over the unattacked network.
"""

from __future__ import annotations

import csv
import io
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import networkx as nx
import numpy as np

from .d3gda import D3Config, d3_gda_run
from .errors import ConfigurationError, InfeasibilityError, MinimaxError
from .geometry import AffineEquality, Box, Polytope, Simplex
from .inner import InnerSolverConfig
from .mgd import MgdConfig, mgd_run
from .problem import CouplingConstraints, ProblemInstance, QuadraticObjective, estimate_constants

log = logging.getLogger(__name__)

METHODS = ("mgd", "d3-gda", "random", "max_capacity", "greedy", "nikaido_isoda")
FEAS_TOL = 1e-9


@dataclass
class FlowNetwork:
    n_nodes: int
    edges: np.ndarray
    capacity: np.ndarray
    weight: np.ndarray
    demand: float
    source: int = 0
    sink: int | None = None

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=int).reshape(-1, 2)
        self.capacity = np.asarray(self.capacity, dtype=float)
        self.weight = np.asarray(self.weight, dtype=float)
        if self.sink is None:
            self.sink = self.n_nodes - 1
        if self.capacity.shape != (len(self.edges),) or self.weight.shape != (len(self.edges),):
            raise ConfigurationError("capacity and weight need one entry per edge")
        if np.any(self.capacity < 0) or np.any(self.weight <= 0):
            raise ConfigurationError("capacities must be >= 0 and weights > 0")

    @property
    def n_edges(self):
        return len(self.edges)

    def balance_matrix(self):
        """Rows: net inflow at every internal node, then at the sink."""
        nodes = [v for v in range(self.n_nodes) if v not in (self.source, self.sink)] + [self.sink]
        row = {v: i for i, v in enumerate(nodes)}
        M = np.zeros((len(nodes), self.n_edges))
        for e, (i, j) in enumerate(self.edges):
            if j in row:
                M[row[j], e] += 1.0
            if i in row:
                M[row[i], e] -= 1.0
        rhs = np.zeros(len(nodes))
        rhs[-1] = self.demand
        return M, rhs

    def flow_polytope(self, upper=None):
        upper = self.capacity if upper is None else np.maximum(np.asarray(upper, float), 0.0)
        M, rhs = self.balance_matrix()
        return Polytope([Box(np.zeros(self.n_edges), upper), AffineEquality(M, rhs)], method="dual-newton")

    def max_flow(self, upper=None):
        upper = self.capacity if upper is None else np.maximum(upper, 0.0)
        G = nx.DiGraph()
        G.add_nodes_from(range(self.n_nodes))
        for (i, j), cap in zip(self.edges, upper):
            if G.has_edge(i, j):
                G[i][j]["capacity"] += cap
            else:
                G.add_edge(i, j, capacity=cap)
        return float(nx.maximum_flow_value(G, self.source, self.sink))

    def cost(self, x, y=None):
        y = np.zeros(self.n_edges) if y is None else y
        return float(np.sum(self.weight * (x + y) * x))

    def to_dict(self):
        return {"n_nodes": self.n_nodes, "edges": self.edges.tolist(), "capacity": self.capacity.tolist(),
                "weight": self.weight.tolist(), "demand": self.demand, "source": self.source, "sink": self.sink}


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def generate_network(n_nodes, edge_prob, demand_pct, seed=None, max_retries=100):
    """Random directed graph with ``p, w ~ U[1, 2]``; node 0 is the source, node ``n-1`` the sink.

    The demand is ``demand_pct`` percent of the capacity leaving the source.
    Draws are repeated until the demand can be routed.
    """
    if n_nodes < 2 or not (0 < edge_prob <= 1) or not (0 < demand_pct <= 100):
        raise ConfigurationError("need n_nodes >= 2, 0 < edge_prob <= 1 and 0 < demand_pct <= 100")
    rng = _rng(seed)
    pairs = np.array([(i, j) for i in range(n_nodes) for j in range(n_nodes) if i != j])
    for _ in range(max_retries):
        keep = rng.random(len(pairs)) < edge_prob
        edges = pairs[keep]
        cap = rng.uniform(1.0, 2.0, len(edges))
        w = rng.uniform(1.0, 2.0, len(edges))
        out_cap = cap[edges[:, 0] == 0].sum() if len(edges) else 0.0
        net = FlowNetwork(n_nodes, edges, cap, w, demand_pct / 100.0 * out_cap)
        if net.demand > 0 and net.max_flow() >= net.demand * (1 + 1e-9):
            return net
    raise InfeasibilityError(f"no routable network after {max_retries} draws", 0.0)


def _check_routable(net, upper):
    mf = net.max_flow(upper)
    if mf < net.demand * (1 - 1e-9):
        raise InfeasibilityError("demand exceeds the max flow of the remaining capacity", net.demand - mf)


def min_cost_flow(net, y=None, tol=1e-7, max_iters=20_000, x0=None):
    """User's optimal flow after attack ``y``; returns ``(flow, cost)``.

    Projected gradient with step ``1/(2 max w)`` until the scaled
    projected-gradient residual is at most ``tol``.
    """
    y = np.zeros(net.n_edges) if y is None else np.asarray(y, float)
    upper = np.maximum(net.capacity - y, 0.0)
    _check_routable(net, upper)
    poly = net.flow_polytope(upper)
    step = 1.0 / (2 * net.weight.max())
    x = poly.project(np.zeros(net.n_edges) if x0 is None else np.minimum(x0, upper))
    for _ in range(max_iters):
        g = net.weight * (2 * x + y)
        x_new = poly.project(x - step * g)
        if np.linalg.norm(x_new - x) / step <= tol:
            x = x_new
            break
        x = x_new
    else:
        raise MinimaxError(f"min-cost flow did not reach residual {tol} in {max_iters} iterations")
    return x, net.cost(x, y)


def attack_instance(net, budget, eta=0.1, samples=200):
    """The attack as a coupled minimax problem in solver orientation.

    The minimising variable is the attack ``u`` (capped simplex); the
    maximising variable is the flow ``v`` (flow polytope with box ``[0, p]``).
    The objective is ``eta/2 |u|^2 - sum w (v + u) v`` and the coupling is
    ``u + v <= p``.
    """
    if not (0 <= budget <= net.capacity.sum()):
        raise ConfigurationError(f"budget {budget} outside [0, total capacity]")
    if eta <= 0:
        raise ConfigurationError("eta must be positive")
    E = net.n_edges
    W = np.diag(net.weight)
    obj = QuadraticObjective(eta * np.eye(E), -W, 2 * W)
    X = Simplex(E, budget, "eq", 0.0, net.capacity)
    Y = net.flow_polytope()
    consts = estimate_constants(obj, X, Y, samples=samples)
    return ProblemInstance("network-attack", obj, X, Y, CouplingConstraints(np.eye(E), np.eye(E), net.capacity),
                           consts, {"budget": budget, "eta": eta})


@dataclass
class AttackResult:
    method: str
    attack: np.ndarray
    flow_clean: np.ndarray
    flow_attacked: np.ndarray
    cost_clean: float
    cost_attacked: float
    seconds: float = 0.0

    @property
    def rho(self):
        return (self.cost_attacked - self.cost_clean) / self.cost_clean


def _evaluate(net, method, y, clean=None, started=None):
    xc, qc = min_cost_flow(net) if clean is None else clean
    xa, qa = min_cost_flow(net, y)
    return AttackResult(method, y, xc, xa, qc, qa, time.perf_counter() - (started or time.perf_counter()))


def default_mgd_config():
    return MgdConfig(alpha=0.5, T=100, delta_mode="iterations", diagnostics=False, allow_large_alpha=True,
                     inner=InnerSolverConfig("gda_multistep", step_x=0.5, step_y=0.25, max_iters=5))


def default_d3_config():
    return D3Config(alpha=0.5, beta=0.25, T=100, ascent_steps=5)


def minimax_attack(net, budget, eta=0.1, solver="mgd", config=None, clean=None):
    """Attack computed by a coupled minimax solver, evaluated by re-solving the user's flow."""
    started = time.perf_counter()
    inst = attack_instance(net, budget, eta)
    if solver == "mgd":
        cfg = config or default_mgd_config()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            trace = mgd_run(inst, cfg)
    elif solver == "d3-gda":
        trace = d3_gda_run(inst, config or default_d3_config())
    else:
        raise ConfigurationError(f"unknown minimax solver {solver!r}")
    y = inst.X.project(trace.final_x)
    return _evaluate(net, solver, y, clean, started)


def _fill(order, cap, budget):
    y = np.zeros_like(cap)
    left = budget
    for e in order:
        if left <= 0:
            break
        y[e] = min(cap[e], left)
        left -= y[e]
    return y


def baseline_attack(net, budget, method, seed=None, eta=0.1, clean=None):
    """Heuristic attacks: ``random``, ``max_capacity``, ``greedy`` and ``nikaido_isoda``."""
    started = time.perf_counter()
    if not (0 <= budget <= net.capacity.sum()):
        raise ConfigurationError(f"budget {budget} outside [0, total capacity]")
    idx = np.arange(net.n_edges)
    if method == "random":
        rng = _rng(seed)
        spacings = rng.exponential(size=net.n_edges)
        y = Simplex(net.n_edges, budget, "eq", 0.0, net.capacity).project(budget * spacings / spacings.sum())
    elif method == "max_capacity":
        y = _fill(np.lexsort((idx, -net.capacity)), net.capacity, budget)
    elif method == "greedy":
        y = _fill(np.lexsort((idx, net.weight)), net.capacity, budget)
    elif method == "nikaido_isoda":
        y = nikaido_isoda_attack(net, budget, eta)
    else:
        raise ConfigurationError(f"unknown baseline {method!r}; choose from {METHODS[2:]}")
    return _evaluate(net, method, y, clean, started)


def nikaido_isoda_attack(net, budget, eta=0.1, outer_steps=100, inner_steps=25, step_attack=0.5, step_flow=None):
    """Attack from gradient descent on the Nikaido-Isoda gap of the attack game.

    With ``f(x, y) = sum w (x + y) x - eta/2 |y|^2``, the gap is
    ``max_y' f(x, y') - min_x' f(x', y)`` over the coupled sets.  Both inner
    optimisations are approximated by ``inner_steps`` projected gradient
    steps, and the outer descent uses the resulting partial gradients.
    """
    w, p = net.weight, net.capacity
    step_flow = step_flow or 1.0 / (2 * w.max())
    E = net.n_edges
    y = Simplex(E, budget, "eq", 0.0, p).project(np.full(E, budget / E))
    x = net.flow_polytope(p - y).project(np.zeros(E))
    x_hat, y_hat = x.copy(), y.copy()
    for _ in range(outer_steps):
        flows = net.flow_polytope(p - y)
        x_hat = flows.project(x_hat)
        for _ in range(inner_steps):
            x_hat = flows.project(x_hat - step_flow * w * (2 * x_hat + y))
        attacks = Simplex(E, budget, "eq", 0.0, np.maximum(p - x, 0.0))
        y_hat = attacks.project(y_hat)
        for _ in range(inner_steps):
            y_hat = attacks.project(y_hat + step_attack * (w * x - eta * y_hat))
        # gap gradient: d/dx f(x, y_hat) for the max term, -d/dy f(x_hat, y) for the min term
        y = Simplex(E, budget, "eq", 0.0, p).project(y + step_attack * (w * x_hat - eta * y))
        x = net.flow_polytope(p - y).project(x - step_flow * w * (2 * x + y_hat))
    return y


@dataclass
class ExperimentConfig:
    nodes: int = 15
    edge_prob: float = 1.0
    demand_pct: float = 20.0
    budgets: tuple = (1.0, 2.0, 3.0)
    methods: tuple = ("mgd", "random", "max_capacity", "greedy")
    trials: int = 15
    seed: int = 0
    eta: float = 0.1
    workers: int = 1

    def __post_init__(self):
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigurationError(f"unknown methods {bad}; choose from {METHODS}")
        if self.trials < 1 or not self.budgets:
            raise ConfigurationError("need trials >= 1 and at least one budget")
        self.budgets = tuple(float(b) for b in self.budgets)
        self.methods = tuple(self.methods)


def trial_seed(base, trial, *stream):
    """Independent seed for ``(trial, *stream)``; identical across methods for pairing."""
    return np.random.SeedSequence(base, spawn_key=(trial, *stream))


def run_trial(cfg, trial):
    """``{(budget, method): rho or None}`` for one network draw."""
    net = generate_network(cfg.nodes, cfg.edge_prob, cfg.demand_pct, trial_seed(cfg.seed, trial, 0))
    clean = min_cost_flow(net)
    out = {}
    for bi, b in enumerate(cfg.budgets):
        for method in cfg.methods:
            try:
                if method in ("mgd", "d3-gda"):
                    res = minimax_attack(net, b, cfg.eta, method, clean=clean)
                else:
                    res = baseline_attack(net, b, method, trial_seed(cfg.seed, trial, 1, bi), cfg.eta, clean)
                out[(b, method)] = res.rho
            except MinimaxError as exc:
                log.warning("trial %d budget %g method %s failed: %s", trial, b, method, exc)
                out[(b, method)] = None
    return out


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rhos: dict = field(default_factory=dict)

    def rows(self):
        rows = []
        for b in sorted(self.config.budgets):
            for method in sorted(self.config.methods):
                vals = [v for v in self.rhos[(b, method)] if v is not None]
                failed = len(self.rhos[(b, method)]) - len(vals)
                stats = (float(np.mean(vals)), float(np.min(vals)), float(np.max(vals))) if vals else (np.nan,) * 3
                rows.append({"budget": b, "method": method, "trials_ok": len(vals), "trials_failed": failed,
                             "rho_mean": stats[0], "rho_min": stats[1], "rho_max": stats[2]})
        return rows

    def mean(self, budget, method):
        vals = [v for v in self.rhos[(float(budget), method)] if v is not None]
        return float(np.mean(vals)) if vals else float("nan")

    def to_csv(self, path=None):
        buf = io.StringIO()
        cols = ["budget", "method", "trials_ok", "trials_failed", "rho_mean", "rho_min", "rho_max"]
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow(row)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(buf.getvalue())
        return buf.getvalue()


def run_experiment(cfg):
    """Paired trials: each trial draws one network shared by all budgets and methods."""
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            per_trial = list(pool.map(run_trial, [cfg] * cfg.trials, range(cfg.trials)))
    else:
        per_trial = [run_trial(cfg, t) for t in range(cfg.trials)]
    result = ExperimentResult(cfg, {(b, m): [] for b in cfg.budgets for m in cfg.methods})
    for trial_out in per_trial:
        for key, rho in trial_out.items():
            result.rhos[key].append(rho)
    return result


def config_dict(cfg):
    return asdict(cfg)
