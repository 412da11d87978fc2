"""Command-line interface.

Exit codes: 0 success, 1 solver failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .bruteforce import GridProblem, GridSpec, relations_check, relations_suite
from .d3gda import D3Config, d3_gda_run
from .diagnostics import report_from_trace, stationarity_report
from .errors import ConfigurationError, DimensionError, DomainError, MinimaxError
from .inner import InnerSolverConfig
from .mgd import MgdConfig, dual_constants, mgd_run, rate_report
from .netflow import ExperimentConfig, run_experiment
from .problem import ProblemInstance
from .zoo import zoo_catalog, zoo_instance

log = logging.getLogger("coupled_minimax")

DEFAULTS = {
    "solve": {"instance": "eq23-divergence", "params": None, "instance_file": None, "solver": "mgd",
              "T": 200, "alpha": None, "beta": None, "delta_mode": "fixed", "delta": 1e-3,
              "inner_method": "extragradient", "inner_step_x": None, "inner_step_y": None,
              "inner_iters": 100_000, "ascent_steps": 1, "allow_large_alpha": False, "epsilon": 1e-3,
              "trace_csv": None, "trace_json": None, "no_diagnostics": False},
    "diagnose": {"instance": "eq23-divergence", "params": None, "instance_file": None, "trace": None,
                 "eps": None, "delta": None},
    "check-relations": {"points": 201, "csv": None},
    "check-duality": {"instance": "example3-dual", "params": None, "instance_file": None, "points": 101,
                      "lambda_max": None, "lambda_points": None, "refine": 0},
    "bench-flow": {"nodes": 15, "edge_prob": 1.0, "demand_pct": 20.0, "budgets": "1,2,3",
                   "methods": "mgd,random,max_capacity,greedy", "trials": 15, "eta": 0.1, "workers": 1,
                   "out": None},
    "zoo-list": {},
}

# `solve --inner K`: a fixed budget of K gradient descent-ascent steps per outer
# iteration with every step size 0.5; explicit options still take precedence
FIXED_BUDGET_RECIPE = {"delta_mode": "iterations", "inner_method": "gda_multistep", "inner_step_x": 0.5,
                       "inner_step_y": 0.5, "alpha": 0.5, "allow_large_alpha": True}


def _instance_args(p):
    p.add_argument("--instance", "--zoo", dest="instance", help="zoo instance name (see zoo-list)")
    p.add_argument("--params", help="JSON object of instance parameters")
    p.add_argument("--instance-file", help="instance JSON written by 'solve --save-instance'")


def build_parser():
    parser = argparse.ArgumentParser(prog="coupled-minimax",
                                     description="Solvers and checks for minimax problems with coupled linear constraints.")
    parser.add_argument("--version", action="store_true", help="print version and the zoo constants table")
    parser.add_argument("--config", help="JSON file of option values; explicit flags take precedence")
    parser.add_argument("--seed", type=int, help="base seed for every random draw")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("solve", help="run multiplier gradient descent or D3 gradient descent-ascent")
    _instance_args(p)
    p.add_argument("--solver", choices=["mgd", "d3-gda"])
    p.add_argument("--T", "--outer", dest="T", type=int, help="outer iterations")
    p.add_argument("--inner", type=int, help="fixed inner budget: K descent-ascent steps, all steps 0.5")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float, help="ascent step (d3-gda)")
    p.add_argument("--delta-mode", choices=["fixed", "schedule", "iterations"])
    p.add_argument("--delta", type=float)
    p.add_argument("--inner-method", choices=["gda_multistep", "ogda", "extragradient"])
    p.add_argument("--inner-step-x", type=float)
    p.add_argument("--inner-step-y", type=float)
    p.add_argument("--inner-iters", type=int, help="inner iteration cap (exact count in 'iterations' mode)")
    p.add_argument("--ascent-steps", type=int)
    p.add_argument("--allow-large-alpha", action="store_true", default=None)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--no-diagnostics", action="store_true", default=None)
    p.add_argument("--trace-csv")
    p.add_argument("--trace-json")
    p.add_argument("--save-instance", help="write the instance JSON here")

    p = sub.add_parser("diagnose", help="stationarity certificate for the last iterate of a JSON trace")
    _instance_args(p)
    p.add_argument("--trace", help="trace JSON from 'solve --trace-json'")
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)

    p = sub.add_parser("check-relations", help="grid values of the four coupled formulations")
    p.add_argument("--points", type=int)
    p.add_argument("--csv")

    p = sub.add_parser("check-duality", help="grid primal value against the three dual orderings")
    _instance_args(p)
    p.add_argument("--points", type=int)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--lambda-points", type=int)
    p.add_argument("--refine", type=int, help="rounds of multiplier-grid refinement around the best point")

    p = sub.add_parser("bench-flow", help="network capacity-attack experiment")
    p.add_argument("--nodes", type=int)
    p.add_argument("--edge-prob", type=float)
    p.add_argument("--demand-pct", type=float)
    p.add_argument("--budgets", help="comma-separated attack budgets")
    p.add_argument("--methods", help="comma-separated methods")
    p.add_argument("--trials", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV output path (stdout if omitted)")

    sub.add_parser("zoo-list", help="list named instances")
    return parser


def _merged(args, config):
    opts = dict(DEFAULTS.get(args.command, {}))
    section = config.get(args.command, config)
    given = {k.replace("-", "_"): v for k, v in section.items() if not isinstance(v, dict)}
    given.update({k: v for k, v in vars(args).items() if v is not None})
    if args.command == "solve" and given.get("inner") is not None:
        opts.update(FIXED_BUDGET_RECIPE)
        opts["inner_iters"] = given["inner"]
    opts.update(given)
    return opts


def _load_instance(opts, seed):
    if opts.get("instance_file"):
        with open(opts["instance_file"]) as fh:
            return ProblemInstance.from_json(fh.read())
    params = opts.get("params") or {}
    if isinstance(params, str):
        try:
            params = json.loads(params)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"--params is not valid JSON: {exc}") from exc
    if seed is not None and opts["instance"] == "custom-quadratic":
        params.setdefault("seed", seed)
    return zoo_instance(opts["instance"], params)


def cmd_solve(opts, seed):
    inst = _load_instance(opts, seed)
    if opts.get("save_instance"):
        with open(opts["save_instance"], "w") as fh:
            fh.write(inst.to_json())
    if opts["solver"] == "d3-gda":
        trace = d3_gda_run(inst, D3Config(alpha=opts["alpha"], beta=opts["beta"], T=opts["T"],
                                          ascent_steps=opts["ascent_steps"]))
    else:
        inner = InnerSolverConfig(opts["inner_method"], opts["inner_step_x"], opts["inner_step_y"],
                                  opts["ascent_steps"], opts["inner_iters"])
        cfg = MgdConfig(alpha=opts["alpha"], T=opts["T"], delta_mode=opts["delta_mode"], delta=opts["delta"],
                        inner=inner, diagnostics=not opts["no_diagnostics"], epsilon=opts["epsilon"],
                        allow_large_alpha=bool(opts["allow_large_alpha"]))
        trace = mgd_run(inst, cfg)
    if opts.get("trace_csv"):
        trace.to_csv(opts["trace_csv"])
    if opts.get("trace_json"):
        trace.to_json(opts["trace_json"])
    print(f"instance   {inst.name}")
    print(f"x          {np.array2string(trace.final_x, precision=6)}")
    print(f"y          {np.array2string(trace.final_y, precision=6)}")
    print(f"lambda     {np.array2string(trace.final_lambda, precision=6)}")
    last = trace.records[-1] if trace.records else None
    if last is not None:
        print(f"violation  {last.max_violation:.3e}")
        print(f"comp gap   {last.comp_gap_abs:.3e}")
        if trace.kind == "mgd" and not opts["no_diagnostics"]:
            print(f"|Q|        {last.q_norm:.3e}")
            print(f"certified  {trace.metadata.get('certified')}")
            if opts["delta_mode"] != "iterations":
                rep = rate_report(trace, inst)
                for chk in rep.checks:
                    print(f"rate T={chk.T}: mean|Q|^2 {chk.measured:.3e} <= {chk.bound:.3e} "
                          f"{'ok' if chk.passed else 'FAIL'}")
        if trace.kind == "d3-gda":
            print(f"P_xl, P_y  {last.p_xl:.3e}, {last.p_y:.3e}")
    return 0


def cmd_diagnose(opts, seed):
    inst = _load_instance(opts, seed)
    if opts.get("trace"):
        with open(opts["trace"]) as fh:
            data = json.load(fh)
        rec = data["records"][-1]
        alpha = data["metadata"]["alpha"]
        b_bar = max([r["lambda_norm"] for r in data["records"]]
                    + [float(np.linalg.norm(data["final"]["lambda"]))])
        eps = opts["eps"] if opts["eps"] is not None else 1e-3
        delta = opts["delta"] if opts["delta"] is not None else 1e-3
        report = stationarity_report(inst, np.array(rec["x"]), np.array(rec["y"]), np.array(rec["lambda"]),
                                     eps, delta, alpha, b_bar)
    else:
        trace = mgd_run(inst, MgdConfig(T=200))
        report = report_from_trace(inst, trace, opts["eps"], opts["delta"])
    print(report.summary())
    return 0 if report.passed else 1


def cmd_check_relations(opts, seed):
    report = relations_check(relations_suite(), GridSpec(points_per_dim=opts["points"]))
    print(report.to_text())
    if opts.get("csv"):
        with open(opts["csv"], "w") as fh:
            fh.write(report.to_csv())
    return 0 if report.universal_hold else 1


def cmd_check_duality(opts, seed):
    inst = _load_instance(opts, seed)
    gp = GridProblem(inst, GridSpec(points_per_dim=opts["points"]))
    primal = gp.value_mMI()
    lam_max = opts["lambda_max"]
    if lam_max is None:
        bound = gp.multiplier_bound()
        lam_max = max(10.0, bound) if np.isfinite(bound) else 10.0
    d1, d2, d3, h_lam, g_max = gp.value_duals(lam_max, opts["lambda_points"], opts["refine"])
    tol = 2 * (gp.cell_tolerance() + g_max * h_lam)
    print(f"primal (min-max, inner coupling)  {primal:.6f}")
    print(f"dual orderings                    {d1:.6f} {d2:.6f} {d3:.6f}")
    print(f"multiplier box                    [0, {lam_max:.4g}]^{inst.k}")
    print(f"grid tolerance                    {tol:.3e}")
    weak = primal <= d2 + tol
    strong = abs(primal - d2) <= 2 * tol
    print(f"weak duality   {'ok' if weak else 'FAIL'}")
    print(f"strong duality {'ok' if strong else 'no (gap beyond grid tolerance)'}")
    return 0 if weak else 1


def cmd_bench_flow(opts, seed):
    cfg = ExperimentConfig(nodes=opts["nodes"], edge_prob=opts["edge_prob"], demand_pct=opts["demand_pct"],
                           budgets=tuple(float(b) for b in str(opts["budgets"]).split(",")),
                           methods=tuple(m.strip() for m in str(opts["methods"]).split(",")),
                           trials=opts["trials"], seed=0 if seed is None else seed, eta=opts["eta"],
                           workers=opts["workers"])
    result = run_experiment(cfg)
    text = result.to_csv(opts.get("out"))
    if not opts.get("out"):
        print(text, end="")
    return 0


def cmd_zoo_list(opts, seed):
    for name, desc in zoo_catalog():
        print(f"{name:18s} {desc}")
    return 0


def print_version():
    print(f"coupled-minimax {__version__}")
    print(f"{'instance':18s} {'mu_x':>8} {'mu_y':>8} {'L_x':>8} {'L_y':>8} {'sigma':>8} {'L_G':>10}")
    for name, _ in zoo_catalog():
        inst = zoo_instance(name)
        k = inst.constants
        try:
            lg = f"{dual_constants(inst).L_G:10.3f}"
        except MinimaxError:
            lg = f"{'n/a':>10}"
        flag = " (estimated)" if k.estimated else ""
        print(f"{name:18s} {k.mu_x:8.3f} {k.mu_y:8.3f} {k.L_x:8.3f} {k.L_y:8.3f} "
              f"{inst.coupling.sigma_max:8.3f} {lg}{flag}")


COMMANDS = {"solve": cmd_solve, "diagnose": cmd_diagnose, "check-relations": cmd_check_relations,
            "check-duality": cmd_check_duality, "bench-flow": cmd_bench_flow, "zoo-list": cmd_zoo_list}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    if args.version:
        print_version()
        return 0
    if args.command is None:
        parser.print_help()
        return 2
    try:
        config = {}
        if args.config:
            with open(args.config) as fh:
                config = json.load(fh)
        seed = args.seed if args.seed is not None else config.get("seed")
        opts = _merged(args, config)
        return COMMANDS[args.command](opts, seed)
    except (ConfigurationError, DimensionError, DomainError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except MinimaxError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
