import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

import csv
import json
import re

import numpy as np
import pytest

from utils import StructuralError, format_sci
from bandits.harness import ExperimentResult, RunRecord, run_experiment
from bandits.report import RUNS_FIELDS, TRAJECTORY_FIELDS, emit_plot, emit_report, render_table


def make_result(rows, checkpoints=(5, 10)):
    """rows: (label, [per-run trajectory values], seconds)."""
    labels = []
    records = []
    for label, runs, seconds in rows:
        if label not in labels:
            labels.append(label)
        for run, values in enumerate(runs):
            trajectory = list(zip(checkpoints, values))
            records.append(RunRecord(policy=label, policy_index=labels.index(label), run=run, T=checkpoints[-1],
                                     final_regret=values[-1], realized_reward=0, seconds=seconds,
                                     trajectory=trajectory))
    return ExperimentResult(config={}, L=8, K=2, T=checkpoints[-1], runs=len(rows[0][1]),
                            checkpoints=list(checkpoints), labels=labels, records=records)


def test_format_sci():
    assert format_sci(26000.0) == "2.60×10⁴"
    assert format_sci(0.0123) == "1.23×10⁻²"
    assert format_sci(0.0) == "0.00×10⁰"


def test_table_row_shape():
    result = make_result([("CascadeUCB1", [[1.0, 25966.8], [2.0, 26033.2]], 14.7)])
    lines = render_table(result).splitlines()
    assert lines[-1] == "CascadeUCB1  2.60×10⁴ ± 3.32×10¹  1.47×10¹"
    assert lines[1].startswith("Algorithm")


def test_table_orders_by_descending_mean():
    result = make_result([
        ("TS-Cascade", [[1.0, 100.0]], 1.0),
        ("CascadeUCB1", [[1.0, 900.0]], 1.0),
        ("CTS", [[1.0, 400.0]], 1.0),
    ])
    body = [line.split()[0] for line in render_table(result).splitlines()[2:]]
    assert body == ["CascadeUCB1", "CTS", "TS-Cascade"]


def test_single_run_table_has_zero_std():
    result = make_result([("CTS", [[3.0, 7.5]], 0.25)])
    assert "± 0.00×10⁰" in render_table(result)


def test_csv_files(tmp_path):
    result = run_experiment({
        "instance": {"kind": "explicit", "K": 2, "w": [0.4, 0.3, 0.2, 0.1]},
        "policies": [{"name": "ts-cascade"}, {"name": "cascade-ucb1"}],
        "T": 200, "runs": 3, "checkpoints": [10, 100, 200],
    }, workers=1)
    artifacts = emit_report(result, str(tmp_path))
    with open(artifacts.paths["runs"], newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        assert reader.fieldnames == RUNS_FIELDS
        runs = list(reader)
    assert len(runs) == 6
    with open(artifacts.paths["trajectories"], newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        assert reader.fieldnames == TRAJECTORY_FIELDS
        trajectory = list(reader)
    assert len(trajectory) == 6 * 3

    data = json.loads(open(artifacts.paths["result"], encoding="utf-8").read())
    for aggregate in data["aggregates"]:
        finals = np.array([float(r["final_regret"]) for r in runs if r["policy"] == aggregate["policy"]])
        assert abs(finals.mean() - aggregate["mean"]) <= 1e-9
        assert abs(finals.std() - aggregate["std"]) <= 1e-9
    for r in runs:
        last = [row for row in trajectory if row["policy"] == r["policy"] and row["run"] == r["run"]][-1]
        assert last["t"] == "200"
        assert float(last["regret"]) == float(r["final_regret"])


def test_emit_report_writes_every_artifact(tmp_path):
    result = make_result([("TS-Cascade", [[1.0, 2.0], [1.5, 3.0]], 0.5)])
    artifacts = emit_report(result, str(tmp_path / "out"))
    assert set(artifacts.paths) == {"result", "runs", "trajectories", "report", "plot"}
    assert all(os.path.exists(p) for p in artifacts.paths.values())
    assert open(artifacts.paths["report"], encoding="utf-8").read() == artifacts.table
    assert emit_report(result).paths == {}


def test_report_from_saved_result(tmp_path):
    result = make_result([("CTS", [[1.0, 4.0], [2.0, 6.0]], 0.1), ("TS-Cascade", [[0.5, 1.0], [0.5, 2.0]], 0.1)])
    saved = emit_report(result, str(tmp_path / "a"))
    loaded = ExperimentResult.from_dict(json.loads(open(saved.paths["result"], encoding="utf-8").read()))
    assert render_table(loaded) == saved.table


def test_plot_polylines_and_legend(tmp_path):
    result = make_result([("TS-Cascade", [[1.0, 2.0], [3.0, 6.0]], 0.1), ("CTS", [[2.0, 5.0], [2.0, 7.0]], 0.1)])
    svg = open(emit_plot(result, str(tmp_path / "regret.svg")), encoding="utf-8").read()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 2
    assert ">TS-Cascade</text>" in svg and ">CTS</text>" in svg
    finals = dict(re.findall(r'data-policy="([^"]+)" data-final-mean="([^"]+)"', svg))
    summaries = {s.policy: s.mean for s in result.summaries()}
    assert {k: float(v) for k, v in finals.items()} == summaries


def test_plot_single_run_has_zero_length_error_bars(tmp_path):
    result = make_result([("CTS", [[1.0, 2.0]], 0.1)])
    svg = open(emit_plot(result, str(tmp_path / "regret.svg")), encoding="utf-8").read()
    bars = re.findall(r'<line x1="([^"]+)" y1="([^"]+)" x2="([^"]+)" y2="([^"]+)"[^>]*class="error-bar"', svg)
    assert len(bars) == 2
    assert all(y1 == y2 for _, y1, _, y2 in bars)


def test_plot_rejects_empty_trajectories(tmp_path):
    result = make_result([("CTS", [[1.0, 2.0]], 0.1)])
    for record in result.records:
        record.trajectory = []
    with pytest.raises(StructuralError):
        emit_plot(result, str(tmp_path / "regret.svg"))


def test_plot_reference_curve(tmp_path):
    result = make_result([("TS-Cascade", [[10.0, 30.0], [14.0, 34.0]], 0.1)], checkpoints=(100, 400))
    plain = open(emit_plot(result, str(tmp_path / "plain.svg")), encoding="utf-8").read()
    assert 'class="reference"' not in plain
    svg = open(emit_plot(result, str(tmp_path / "ref.svg"), reference=True), encoding="utf-8").read()
    assert svg.count('class="reference"') == 1
    assert "sqrt(KLT) ln T" in svg
    first_point = re.search(r'points="([^ "]+)[^"]*" data-policy', svg).group(1)
    ref_first = re.search(r'points="([^ "]+)[^"]*" class="reference"', svg).group(1)
    assert first_point == ref_first
