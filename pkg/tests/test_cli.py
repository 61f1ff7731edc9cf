import csv
import json
import os

import numpy as np
import pytest

from eclasso.cli import build_parser, main
from eclasso.io import write_matrix

SUBCOMMANDS = ("solve", "path", "diagnose", "bounds", "generate", "simulate", "reproduce")


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def instance(tmp_path, capsys):
    d = tmp_path / "inst"
    code, _, _ = run(["generate", "--kind", "example1_case2", "--n", "100", "--seed", "42",
                      "--out-dir", str(d)], capsys)
    assert code == 0
    return d


def test_generate_files(instance):
    assert sorted(os.listdir(instance)) == ["X.csv", "beta.csv", "manifest.json", "noise.csv", "y.csv"]
    X = np.loadtxt(instance / "X.csv", delimiter=",")
    assert X.shape == (100, 3)
    manifest = json.loads((instance / "manifest.json").read_text())
    assert manifest["seed"] == 42
    assert manifest["support"] == [1, 2]
    assert manifest["spec"]["kind"] == "example1_case2"
    assert manifest["invocation"][:2] == ["eclasso", "generate"]


def test_generate_round_trips_exactly(instance):
    from eclasso.synthgen import gen_example1
    inst = gen_example1(2, 100, seed=42)
    X = np.loadtxt(instance / "X.csv", delimiter=",")
    assert X.tobytes() == np.ascontiguousarray(inst.X).tobytes()


def test_solve(instance, capsys):
    code, out, _ = run(["solve", "--design", str(instance / "X.csv"), "--response", str(instance / "y.csv"),
                        "--lambda", "10", "--format", "json"], capsys)
    assert code == 0
    res = json.loads(out)
    assert len(res["coefficients"]) == 3
    assert res["kkt_residual"] <= 1e-6 * (1 + 1e4)


def test_solve_normalize_matches_scaled_fit(tmp_path, capsys):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 4)) * np.array([1.0, 3.0, 0.5, 2.0])
    y = X @ np.array([1.0, 0.0, -2.0, 0.0]) + 0.1 * rng.standard_normal(40)
    write_matrix(tmp_path / "X.csv", X)
    write_matrix(tmp_path / "y.csv", y)
    code, out, _ = run(["solve", "--design", str(tmp_path / "X.csv"), "--response", str(tmp_path / "y.csv"),
                        "--lambda", "2", "--normalize", "--format", "json"], capsys)
    assert code == 0
    from eclasso.solver import solve_lasso
    scale = np.sqrt((X**2).mean(axis=0))
    ref = solve_lasso(X / scale, y, 2.0).beta_hat / scale
    np.testing.assert_allclose(json.loads(out)["coefficients"], ref, rtol=1e-12)


def test_path_to_stdout(instance, capsys):
    code, out, err = run(["path", "--design", str(instance / "X.csv"), "--response", str(instance / "y.csv"),
                          "--grid-count", "10", "--support", "1,2"], capsys)
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert sum(r["row_type"] == "summary" for r in rows) == 10
    assert "recovered" in err


def test_diagnose_json(instance, capsys):
    code, out, _ = run(["diagnose", "--design", str(instance / "X.csv"), "--support", "1,2",
                        "--format", "json"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert "ec_holds" in rep and isinstance(rep["ec_holds"], bool)


def test_diagnose_text(instance, capsys):
    code, out, _ = run(["diagnose", "--design", str(instance / "X.csv"), "--support", "1,2"], capsys)
    assert code == 0
    assert "ec_holds=" in out


def test_diagnose_bad_support(instance, capsys):
    code, _, err = run(["diagnose", "--design", str(instance / "X.csv"), "--support", "0,4"], capsys)
    assert code == 64
    assert "1..3" in err


def test_bounds_value(capsys):
    code, out, _ = run(["bounds", "--theorem", "2", "--n", "100", "--c", "0.5", "--eta", "1.0"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "0.1"


def test_bounds_theorem3_json(capsys):
    code, out, _ = run(["bounds", "--theorem", "3", "--n", "100", "--t", "0.05", "--K", "1",
                        "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["failure_bound"] == pytest.approx(np.exp(-5), abs=1e-12)


def test_bounds_table(capsys):
    code, out, _ = run(["bounds", "table", "--theorem", "gauss-poly", "--c", "0.5", "--eta", "1",
                        "--n-min", "10", "--n-max", "1000", "--points", "5"], capsys)
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert [int(r["n"]) for r in rows] == [10, 32, 100, 316, 1000]


def test_bounds_regime_error(capsys):
    code, _, err = run(["bounds", "--theorem", "2", "--n", "100", "--c", "1", "--eta", "0.5"], capsys)
    assert code == 1
    assert "RegimeViolationError" in err


def test_bounds_missing_flags(capsys):
    code, _, _ = run(["bounds", "--theorem", "2", "--n", "100"], capsys)
    assert code == 64


@pytest.mark.parametrize("argv", [["frobnicate"], ["solve", "--bogus"], [], ["bounds", "--theorem", "7"]])
def test_usage_errors(argv, capsys):
    code, _, _ = run(argv, capsys)
    assert code == 64


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_documents_every_flag(cmd, capsys):
    code, out, _ = run([cmd, "--help"], capsys)
    assert code == 0
    sub = build_parser()._subparsers._group_actions[0].choices[cmd]
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in out
        if action.option_strings:
            assert action.help, f"{cmd} {action.option_strings} lacks help"


def test_out_dir_not_overwritten(instance, capsys):
    argv = ["generate", "--kind", "example1_case1", "--out-dir", str(instance)]
    code, _, err = run(argv, capsys)
    assert code == 1 and "--force" in err
    code, _, _ = run(argv + ["--force"], capsys)
    assert code == 0


def test_default_seed_recorded(tmp_path, capsys):
    code, _, _ = run(["generate", "--kind", "example1_case1", "--out-dir", str(tmp_path / "g")], capsys)
    assert code == 0
    assert json.loads((tmp_path / "g" / "manifest.json").read_text())["seed"] == 20240229


CONFIG = """\
[experiment]
kind = example1_case2
n = 100
replicates = 6
master_seed = 11
lambda_policy = grid
grid_count = 15
grid_ratio = 0.01
recovery_criterion = anywhere_on_path
"""


def test_simulate_config_round_trip(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(CONFIG)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    code, out, _ = run(["simulate", "--config", str(cfg), "--out-dir", str(out_a)], capsys)
    assert code == 0
    assert "6 replicates" in out
    manifest = json.loads((out_a / "manifest.json").read_text())
    assert manifest["config"]["master_seed"] == 11
    assert manifest["config"]["lambda_policy"]["count"] == 15
    run(["simulate", "--config", str(cfg), "--out-dir", str(out_b)], capsys)
    for name in ("replicates.csv", "aggregates.csv", "summary.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    with open(out_a / "replicates.csv") as fh:
        assert sum(1 for _ in fh) == 1 + 6 * 15


def test_simulate_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(CONFIG + "colour = blue\n")
    code, _, err = run(["simulate", "--config", str(cfg)], capsys)
    assert code == 64 and "colour" in err


def test_reproduce_table1_rows(tmp_path, capsys):
    d = tmp_path / "t1"
    code, out, _ = run(["reproduce", "table1", "--seed", "7", "--replicates", "2", "--no-figures",
                        "--out-dir", str(d)], capsys)
    assert code in (0, 2)
    with open(d / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 12
    assert [(int(r["n"]), int(r["p"]), int(r["q"])) for r in rows][:2] == [(100, 400, 4), (100, 500, 5)]
    assert all(0 <= float(r["recovery_rate"]) <= 1 for r in rows)


def test_reproduce_example1_outputs(tmp_path, capsys):
    d = tmp_path / "e1"
    code, out, _ = run(["reproduce", "example1", "--seed", "1", "--replicates", "60", "--out-dir", str(d)], capsys)
    assert code in (0, 2)
    names = set(os.listdir(d))
    assert {"summary.csv", "verdicts.csv", "profiles.csv", "manifest.json", "example1_paths.png",
            "example1_recovery.png", "example1_case1", "example1_case2"} <= names
    with open(d / "profiles.csv") as fh:
        labels = {r["label"] for r in csv.DictReader(fh)}
    assert labels == {"example1_case1", "example1_case2"}
    assert (d / "example1_paths.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_readme_config_example_parses(tmp_path):
    import re
    from eclasso.cli import load_config
    readme = open(os.path.join(os.path.dirname(__file__), "..", "README.md")).read()
    block = re.search(r"```ini\n(.*?)```", readme, re.S).group(1)
    cfg = tmp_path / "readme.ini"
    cfg.write_text(block)
    config = load_config(str(cfg))
    assert config.generator.kind == "example1_case2"
    assert config.generator.setting_id is None
    assert config.lambda_policy.kind == "grid" and config.lambda_policy.count == 100
    assert config.lambda_policy.values == (0.5, 1.0, 2.0)
    assert config.replicates == 500 and config.master_seed == 20240229
