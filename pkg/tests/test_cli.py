import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

import json

import numpy as np
import pytest

from cli import build_parser, main


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "instance": {"kind": "synthetic", "L": 8, "K": 2, "m": 0},
        "policies": [{"name": "ts-cascade"}, {"name": "cascade-ucb1"}],
        "T": 100,
        "runs": 2,
    }))
    return str(path)


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_lowerbound(capsys):
    assert main(["lowerbound", "--L", "64", "--K", "8", "--T", "100000"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("bound=") and "epsilon=" in out


def test_lowerbound_vacuous(capsys):
    assert main(["lowerbound", "--L", "5", "--K", "5", "--T", "100"]) == 0
    assert "clamped to 0" in capsys.readouterr().out


def test_lowerbound_without_admissible_epsilon(capsys):
    assert main(["lowerbound", "--L", "10", "--K", "4", "--T", "1000"]) == 2
    assert "error: " in capsys.readouterr().err


def test_run_then_report(config_path, tmp_path, capsys):
    out_dir = tmp_path / "out"
    assert main(["run", config_path, "--out", str(out_dir), "--workers", "1"]) == 0
    printed = capsys.readouterr().out
    assert "TS-Cascade" in printed and "CascadeUCB1" in printed
    for name in ("result.json", "runs.csv", "trajectories.csv", "report.txt", "regret.svg"):
        assert (out_dir / name).exists()

    again = tmp_path / "again"
    assert main(["report", str(out_dir / "result.json"), "--out", str(again)]) == 0
    assert capsys.readouterr().out == (out_dir / "report.txt").read_text(encoding="utf-8")
    assert (again / "report.txt").read_text(encoding="utf-8") == (out_dir / "report.txt").read_text(encoding="utf-8")


def test_run_with_bad_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"instance": {"kind": "explicit", "K": 2}, "policies": [{"name": "cts"}], "T": 10}))
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 2
    assert "error: Invalid experiment config" in capsys.readouterr().err


def test_run_with_malformed_instance_file(tmp_path, capsys):
    instance = tmp_path / "instance.json"
    instance.write_text(json.dumps({"L": 2, "K": 1, "w": ["high", 0.1]}))
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"instance": {"kind": "file", "path": str(instance)},
                                "policies": [{"name": "cts"}], "T": 10, "runs": 1}))
    assert main(["run", str(path), "--out", str(tmp_path / "out"), "--workers", "1"]) == 2
    assert "error: Instance file" in capsys.readouterr().err


def test_report_missing_result(tmp_path, capsys):
    assert main(["report", str(tmp_path / "nope.json")]) == 2
    assert "File not found" in capsys.readouterr().err


def test_features(tmp_path, capsys):
    train = tmp_path / "train.csv"
    rows = (np.random.default_rng(2).random((60, 12)) < 0.25).astype(int)
    np.savetxt(train, rows, fmt="%d", delimiter=",")
    out = tmp_path / "features.json"
    assert main(["features", "--train", str(train), "--d", "2", "--K", "4", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["d"] == 2 and summary["L"] == 12
    assert summary["max_column_norm"] == pytest.approx(0.5)
    stored = json.loads(out.read_text())
    assert stored["d"] == 2 and stored["K"] == 4 and len(stored["X"]) == 12


def test_features_rejects_degenerate_matrix(tmp_path, capsys):
    train = tmp_path / "zeros.csv"
    train.write_text("0,0,0\n0,0,0\n")
    assert main(["features", "--train", str(train), "--d", "1", "--K", "1", "--out", str(tmp_path / "f.json")]) == 2
    assert "degenerate training matrix" in capsys.readouterr().err


def test_verify_quick(tmp_path, capsys):
    report_path = tmp_path / "verify.json"
    assert main(["verify", "--quick", "--json", str(report_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8 and all(line.startswith("PASS") for line in lines)
    assert json.loads(report_path.read_text())["passed"] is True
