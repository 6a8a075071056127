import csv
import json

import pytest

from singular_pucci.cli import load_config, parse_config_text, parse_pairs, run_command
from singular_pucci.errors import ValidationError

REGIME3 = "mu = 0\nalpha = 3\nlambda = 1\nLambda = 1\nB = 0.1\nb = 0\nc0 = 0.1\nM = 1\n"


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "regime3.cfg"
    path.write_text(REGIME3 + f"output_dir = {tmp_path / 'out'}\ndelta_steps = 40\n")
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_solve_then_diagnostics(cfg, tmp_path):
    out = tmp_path / "out"
    assert run_command(["solve", "--config", str(cfg)]) == 0
    report = json.loads((out / "solve_report.json").read_text())
    assert set(report) == {"solution_csv_path", "residual_max", "iterations", "hopf_radius"}
    assert read_rows(out / "solution.csv")[0] == ["r", "value"]
    assert run_command(["rates", "--config", str(cfg)]) == 0
    rates = json.loads((out / "rates.json").read_text())
    assert rates["regime"] == rates["predicted_regime"] == "power"
    assert abs(rates["fitted_exponent"] - 0.5) <= 0.05
    assert run_command(["harnack", "--config", str(cfg)]) == 0
    assert read_rows(out / "harnack.csv")[0] == ["scale", "ratio"]
    assert read_rows(out / "oscillation.csv")[0] == ["scale", "osc"]


def test_rates_without_solution(cfg, capsys):
    assert run_command(["rates", "--config", str(cfg)]) == 2
    assert "run solve first" in capsys.readouterr().err


def test_validation_exit_code(cfg):
    assert run_command(["solve", "--config", str(cfg), "--set", "lambda=5"]) == 2
    assert run_command(["solve", "--config", str(cfg), "--set", "gamma=1"]) == 2
    assert run_command(["solve", "--config", str(cfg), "--set", "nodes=abc"]) == 2
    assert run_command(["solve", "--config", str(cfg.parent / "missing.cfg")]) == 2


def test_numerical_exit_code(cfg):
    assert run_command(["solve", "--config", str(cfg), "--set", "delta_steps=1",
                        "--set", "continuation_tol=1e-15", "--set", "nodes=129"]) == 3
    assert run_command(["certify", "--config", str(cfg), "--set", "alpha=0.4",
                        "--set", "inequality=I7_krylov_slab", "--set", "nu=0.3"]) == 3


def test_solution_csv_is_deterministic(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run_command(["solve", "--config", str(cfg), "--output-dir", str(d),
                            "--set", "nodes=513"]) == 0
        assert run_command(["rates", "--config", str(cfg), "--output-dir", str(d),
                            "--set", "window_min=1e-3"]) == 0
    for name in ("solution.csv", "rates.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_eigen_command(tmp_path):
    out = tmp_path / "e"
    assert run_command(["eigen", "--output-dir", str(out), "--set", "dim=1",
                        "--set", "Lambda=1", "--set", "eigen_nodes=513"]) == 0
    rep = json.loads((out / "eigen.json").read_text())
    assert rep["weighted"] is False and rep["residual"] <= 1e-8
    assert abs(rep["eigenvalue"] - 9.8696044010893586) <= 1e-4


def test_certify_command(tmp_path):
    out = tmp_path / "c"
    args = ["certify", "--output-dir", str(out), "--set", "mu=0", "--set", "alpha=0.4",
            "--set", "dim=2", "--set", "inequality=I7_krylov_slab"]
    assert run_command(args) == 0
    rep = json.loads((out / "certify.json").read_text())
    assert rep["passed"] and rep["min_margin"] > 0
    assert {"inequality", "family", "constants", "min_margin", "worst_node"} <= set(rep)


def test_sweep_command(tmp_path):
    out = tmp_path / "s"
    assert run_command(["sweep", "--output-dir", str(out), "--jobs", "2",
                        "--set", "pairs=1:1,0:3", "--set", "delta_steps=40"]) == 0
    rows = read_rows(out / "rates_summary.csv")
    assert rows[0] == ["mu", "alpha", "regime", "expected", "fitted", "residual"]
    assert [r[2] for r in rows[1:]] == ["linear", "power"]
    assert (out / "sweep_mu1_alpha1" / "solution.csv").exists()


def test_report_round_trip(cfg, tmp_path, capsys):
    assert run_command(["report", "--config", str(cfg), "--set", "nu=0.25"]) == 0
    text = capsys.readouterr().out
    emitted = tmp_path / "out" / "effective.cfg"
    assert emitted.read_text() == text
    first = load_config(emitted)
    assert first.effective() == load_config(cfg, ["nu=0.25"]).effective()
    assert run_command(["report", "--config", str(emitted)]) == 0
    assert capsys.readouterr().out == text


def test_parsers():
    assert parse_config_text("a = 1 # note\n\n b=x\n") == {"a": "1", "b": "x"}
    with pytest.raises(ValidationError):
        parse_config_text("nonsense")
    assert parse_pairs("1:1, 0:3") == [(1.0, 1.0), (0.0, 3.0)]
    with pytest.raises(ValidationError):
        parse_pairs("1-1")
