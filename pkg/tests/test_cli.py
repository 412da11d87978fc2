import csv
import json

import numpy as np
import pytest

from coupled_minimax import __version__
from coupled_minimax.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_zoo_list_is_deterministic(capsys):
    code, first, _ = run(capsys, "zoo-list")
    _, second, _ = run(capsys, "zoo-list")
    assert code == 0 and first == second
    assert [line.split()[0] for line in first.splitlines()] == [
        "eq23-divergence", "prop1-quadratic", "eq10-hard", "example3-dual", "jamming", "custom-quadratic"]


def test_version_prints_constants(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and __version__ in out and "eq23-divergence" in out and "(estimated)" in out


def test_solve_fixed_inner_budget(capsys, tmp_path):
    trace_csv = tmp_path / "trace.csv"
    trace_json = tmp_path / "trace.json"
    code, out, _ = run(capsys, "solve", "--zoo", "eq23-divergence", "--solver", "mgd", "--outer", "50",
                       "--inner", "5", "--trace-csv", str(trace_csv), "--trace-json", str(trace_json))
    assert code == 0
    rows = list(csv.DictReader(trace_csv.open()))
    assert len(rows) == 50
    last = json.loads(trace_json.read_text())["records"][-1]
    assert np.max(np.abs(np.array(last["x"] + last["y"]) - [0.0, -1.0])) <= 1e-2


def test_solve_d3(capsys):
    code, out, _ = run(capsys, "solve", "--instance", "eq23-divergence", "--solver", "d3-gda", "--T", "300")
    assert code == 0 and "P_xl" in out


def test_solve_reports_rate_checks(capsys):
    code, out, _ = run(capsys, "solve", "--instance", "eq23-divergence", "--T", "20")
    assert code == 0 and "rate T=20" in out and "FAIL" not in out


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"solve": {"T": 3, "instance": "eq23-divergence", "no_diagnostics": True}}))
    out_csv = tmp_path / "t.csv"
    assert main(["--config", str(cfg), "solve", "--trace-csv", str(out_csv)]) == 0
    assert len(out_csv.read_text().splitlines()) == 4
    assert main(["--config", str(cfg), "solve", "--T", "5", "--trace-csv", str(out_csv)]) == 0
    assert len(out_csv.read_text().splitlines()) == 6
    capsys.readouterr()


def test_save_instance_and_diagnose(capsys, tmp_path):
    inst_file = tmp_path / "inst.json"
    trace_file = tmp_path / "trace.json"
    assert main(["solve", "--instance", "eq23-divergence", "--T", "300", "--delta-mode", "schedule",
                 "--save-instance", str(inst_file), "--trace-json", str(trace_file)]) == 0
    before = inst_file.read_text()
    code, out, _ = run(capsys, "diagnose", "--instance-file", str(inst_file), "--trace", str(trace_file),
                       "--eps", "1e-2", "--delta", "1e-2")
    assert code == 0 and "violation row 0" in out
    assert inst_file.read_text() == before


def test_check_relations(capsys, tmp_path):
    out_csv = tmp_path / "rel.csv"
    code, out, _ = run(capsys, "check-relations", "--csv", str(out_csv))
    assert code == 0
    for name in ("square", "wide-y", "shifted", "uncoupled"):
        assert name in out
    assert "FAIL" not in out
    assert out_csv.read_text().startswith("instance,mM-I")


def test_check_duality(capsys):
    code, out, _ = run(capsys, "check-duality", "--instance", "custom-quadratic", "--params",
                       '{"n": 1, "m": 1, "k": 1, "seed": 104}', "--points", "101")
    assert code == 0 and "weak duality   ok" in out


def test_bench_flow_is_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bench-flow", "--nodes", "5", "--trials", "2", "--budgets", "0.5", "--methods", "greedy,random"]
    assert main(["--seed", "7", *args, "--out", str(a)]) == 0
    assert main(["--seed", "7", *args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


@pytest.mark.parametrize("argv", [
    ["solve", "--instance", "nope"],
    ["solve", "--instance", "custom-quadratic", "--params", "{bad json"],
    ["solve", "--instance", "eq23-divergence", "--alpha", "1.0"],
    ["--config", "/nonexistent/cfg.json", "zoo-list"],
    ["bench-flow", "--methods", "magic"],
])
def test_configuration_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "configuration error" in err


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_solver_failure_exits_1(capsys):
    params = json.dumps({"P": [[1.0]], "C": [[5.0]], "R": [[1.0]], "p": [1.0], "x_box": [-1e300, 1e300],
                         "y_box": [-1e300, 1e300]})
    code, _, err = run(capsys, "solve", "--instance", "custom-quadratic", "--params", params, "--T", "2",
                       "--inner-method", "ogda", "--inner-step-x", "2", "--inner-step-y", "2",
                       "--alpha", "0.1", "--allow-large-alpha", "--no-diagnostics")
    assert code == 1 and "solver failure" in err


def test_no_command_prints_help(capsys):
    code, out, _ = run(capsys)
    assert code == 2 and "usage" in out
