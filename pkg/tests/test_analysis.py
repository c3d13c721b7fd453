import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

import math
import numpy as np
import pytest

from utils import StructuralError, run_stream
from bandits.env import ProblemInstance, RankedList
from bandits.analysis import (
    concentration_floor, concentration_rate, confidence_widths, cts_gap_terms, gap_table,
    reward_decomposition, run_verification_suite, scaling_curve,
)
from bandits.harness import run_experiment


def test_decomposition_identical_arguments():
    S = RankedList.of([2, 0, 1])
    w = np.array([0.3, 0.2, 0.6])
    assert reward_decomposition(S, S, w, w) == (0.0, 0.0, 0.0)


def test_decomposition_single_slot():
    w = np.array([0.3, 0.2])
    form1, form2, direct = reward_decomposition(RankedList.of([0]), RankedList.of([1]), w, w)
    assert form1 == pytest.approx(0.1, abs=1e-15)
    assert form2 == pytest.approx(0.1, abs=1e-15)
    assert direct == pytest.approx(0.1, abs=1e-15)


def test_decomposition_random_tuples():
    rng = run_stream(31, 0)
    for _ in range(1000):
        K = int(rng.integers(1, 7))
        L = int(rng.integers(K, 13))
        S = RankedList.of(rng.permutation(L)[:K])
        S_prime = RankedList.of(rng.permutation(L)[:K])
        form1, form2, direct = reward_decomposition(S, S_prime, rng.random(L), rng.random(L))
        assert abs(form1 - direct) < 1e-12
        assert abs(form2 - direct) < 1e-12


def test_decomposition_length_mismatch():
    with pytest.raises(StructuralError):
        reward_decomposition(RankedList.of([0]), RankedList.of([0, 1]), [0.1, 0.2], [0.1, 0.2])


def test_widths_cold_start():
    widths = confidence_widths(np.zeros(3), np.zeros(3), 1)
    assert widths.g == pytest.approx([24 * math.log(2)] * 3)
    assert widths.g[0] == pytest.approx(16.6355, abs=1e-4)


def test_widths_ratio_and_degenerate_means():
    w_hat = np.array([0.0, 1.0, 0.4])
    N = np.array([5, 5, 5])
    widths = confidence_widths(w_hat, N, 20)
    assert np.allclose(widths.h / widths.g, math.sqrt(math.log(21)), rtol=0, atol=1e-15)
    assert widths.g[0] == pytest.approx(24 * math.log(21) / 6)
    assert widths.g[1] == widths.g[0]


def test_widths_monotone():
    w_hat = np.full(4, 0.3)
    fewer = confidence_widths(w_hat, np.full(4, 3), 50)
    more = confidence_widths(w_hat, np.full(4, 4), 50)
    later = confidence_widths(w_hat, np.full(4, 3), 51)
    assert np.all(more.g < fewer.g) and np.all(more.h < fewer.h)
    assert np.all(later.g > fewer.g) and np.all(later.h > fewer.h)
    with pytest.raises(StructuralError):
        confidence_widths(w_hat, np.zeros(4), 0)


def test_concentration_floor():
    assert concentration_floor(4, 9) == pytest.approx(0.988)
    assert concentration_floor(64, 2) == 0.0


def test_concentration_needs_replications():
    with pytest.raises(StructuralError):
        concentration_rate(ProblemInstance.from_weights([0.3] * 4, 2), [10], replications=999)


def test_concentration_vacuous_checkpoint_passes():
    report = concentration_rate(ProblemInstance.from_weights([0.3] * 16, 2), [1, 2], replications=1000)
    assert [row.floor for row in report.rows] == [0.0, 0.0]
    assert report.passed
    assert report.as_dict()["rows"][0]["t"] == 1


@pytest.mark.slow
def test_concentration_diagnostic_passes():
    instance = ProblemInstance.from_weights([0.3] * 8, 2)
    report = concentration_rate(instance, [100, 1000], replications=2000, seed=7)
    assert [row.t for row in report.rows] == [100, 1000]
    assert report.passed


def test_gap_table_values():
    w = [0.2, 0.2, 0.1, 0.1, 0.05, 0.05]
    table = gap_table(w, 2)
    assert table.min_gap == pytest.approx(0.1)
    assert table.deltas.shape == (2, 4)
    assert table.deltas[0, -1] == pytest.approx(table.deltas.max())
    assert np.all(table.deltas >= table.min_gap - 1e-15)
    assert table.as_dict()["order"][:2] == [1, 2]


def test_gap_table_edge_cases():
    assert gap_table([0.3] * 5, 2).min_gap == 0.0
    with pytest.raises(StructuralError, match="no suboptimal items"):
        gap_table([0.3, 0.2], 2)


def test_cts_gap_terms():
    terms = cts_gap_terms([0.5, 0.3, 0.1], 1, math.e)
    assert terms["epsilon"] == pytest.approx(0.2 / 3)
    assert terms["log_term"] == pytest.approx(138.75)
    assert terms["pair_term"] == pytest.approx(0.6)
    assert terms["total"] == pytest.approx(139.35)
    with pytest.raises(StructuralError):
        cts_gap_terms([0.3, 0.3, 0.1], 1, 100)


def test_scaling_curve_doubling():
    T = np.array([1000.0, 2000.0])
    curve = scaling_curve(4, 64, T)
    assert curve[0] == pytest.approx(1.0)
    assert curve[1] / curve[0] == pytest.approx(math.sqrt(2) * math.log(2000) / math.log(1000))


def test_scaling_curve_anchor_and_lower_order():
    T = [100.0, 1000.0, 10000.0]
    anchored = scaling_curve(1, 1, T, anchor=5.0)
    assert anchored[0] == pytest.approx(5.0)
    assert anchored[2] / anchored[0] == pytest.approx(math.sqrt(100) * 2.0)
    assert scaling_curve(2, 8, T, lower_order=True)[-1] != pytest.approx(scaling_curve(2, 8, T)[-1])
    with pytest.raises(StructuralError):
        scaling_curve(2, 8, [100.0, 50.0])


def test_quick_verification_suite_passes():
    rows = run_verification_suite(quick=True)
    assert len(rows) == 8
    failed = [(r.name, r.measured, r.detail) for r in rows if not r.passed]
    assert not failed
    assert all(r.seconds >= 0 for r in rows)


@pytest.mark.slow
def test_reference_curve_tracks_ts_cascade_over_last_decade():
    config = {
        "instance": {"kind": "synthetic", "L": 64, "K": 4},
        "policies": [{"name": "ts-cascade"}],
        "T": 10_000,
        "runs": 10,
        "checkpoints": [1_000, 10_000],
    }
    steps, mean, _ = run_experiment(config).mean_trajectory("TS-Cascade")
    reference = scaling_curve(4, 64, steps, anchor=mean[0])
    ratio = mean / reference
    assert ratio[0] == pytest.approx(1.0)
    assert abs(ratio[-1] / ratio[0] - 1.0) < 0.5
