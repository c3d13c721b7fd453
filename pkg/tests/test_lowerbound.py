import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

import math
from itertools import permutations

import numpy as np
import pytest

from utils import StructuralError, run_stream
from bandits.env import RankedList
from bandits.lowerbound import (
    E4, HardInstanceFamily, bernoulli_kl, exact_gap, exact_gaps, gap_lower_bound, gap_lower_bounds, hot_items,
    kl_budget, mc_outcome_kl, mean_outcome_kl, minimax_bound, optimal_list_for, outcome_kl, weights_for,
)


@pytest.fixture
def family():
    return HardInstanceFamily(L=10, K=5, epsilon=0.05)


def test_null_instance_weights(family):
    assert np.allclose(weights_for(family, 0), 0.19)


def test_hot_block_wraps_around(family):
    w = weights_for(family, 8)
    hot = [i for i in range(10) if w[i] > 0.2]
    assert sorted(i + 1 for i in hot) == [1, 2, 8, 9, 10]
    assert np.allclose(w[hot], 0.21)
    assert np.allclose(np.delete(w, hot), 0.19)
    assert optimal_list_for(family, 8).to_one_based() == [1, 2, 8, 9, 10]


def test_every_item_is_hot_in_K_instances(family):
    counts = np.zeros(family.L, dtype=int)
    for ell in range(1, family.L + 1):
        counts[hot_items(family, ell)] += 1
    assert np.all(counts == family.K)


def test_every_item_is_hot_in_K_instances_for_all_small_families():
    for L in range(5, 33):
        for K in range(5, L + 1):
            family = HardInstanceFamily(L=L, K=K, epsilon=0.1)
            counts = np.zeros(L, dtype=int)
            for ell in range(1, L + 1):
                hot = hot_items(family, ell)
                assert len(set(hot.tolist())) == K
                counts[hot] += 1
            assert np.all(counts == K), (L, K)


def test_family_validation():
    with pytest.raises(StructuralError):
        HardInstanceFamily(L=10, K=4, epsilon=0.05)
    with pytest.raises(StructuralError):
        HardInstanceFamily(L=10, K=5, epsilon=0.3)
    with pytest.raises(StructuralError):
        HardInstanceFamily(L=4, K=5, epsilon=0.05)
    with pytest.raises(StructuralError):
        weights_for(HardInstanceFamily(L=10, K=5, epsilon=0.05), 11)


def test_gap_bound_single_miss(family):
    S = RankedList.of([0, 1, 2, 3, 4])
    # ell=2 is hot on items 1..5 (0-based), so S misses exactly one
    assert gap_lower_bound(family, S, 2) == pytest.approx(0.1 / (5 * E4), rel=1e-12)
    assert gap_lower_bound(family, S, 2) == pytest.approx(3.663e-4, rel=1e-3)
    assert gap_lower_bound(family, S, 1) == 0.0


def test_exact_gap_dominates_bound():
    family = HardInstanceFamily(L=7, K=5, epsilon=0.05)
    for items in permutations(range(family.L), family.K):
        S = RankedList.of(items)
        for ell in range(1, family.L + 1):
            assert exact_gap(family, S, ell) >= gap_lower_bound(family, S, ell) - 1e-15


def test_gap_bound_dominance_over_every_ordered_list(family):
    perms = np.array(list(permutations(range(family.L), family.K)))
    assert len(perms) == 30240
    for ell in range(1, family.L + 1):
        slack = exact_gaps(family, perms, ell) - gap_lower_bounds(family, perms, ell)
        assert slack.min() >= -1e-15


def test_vectorized_gaps_match_single_list_values(family):
    rng = run_stream(24, 0)
    lists = np.array([rng.permutation(family.L)[:family.K] for _ in range(50)])
    for ell in (1, 4, 10):
        bounds = gap_lower_bounds(family, lists, ell)
        gaps = exact_gaps(family, lists, ell)
        for row, bound, gap in zip(lists, bounds, gaps):
            S = RankedList.of(row)
            assert bound == gap_lower_bound(family, S, ell)
            assert gap == pytest.approx(exact_gap(family, S, ell), abs=1e-15)


def test_vectorized_gaps_reject_bad_lists(family):
    with pytest.raises(StructuralError):
        gap_lower_bounds(family, [[0, 1, 2, 3]], 1)
    with pytest.raises(StructuralError):
        exact_gaps(family, [[0, 1, 2, 3, 3]], 1)
    with pytest.raises(StructuralError):
        gap_lower_bounds(family, [[0, 1, 2, 3, 10]], 1)
    with pytest.raises(StructuralError):
        gap_lower_bounds(family, [[0, 1, 2, 3, 4]], 0)


@pytest.mark.slow
def test_gap_bound_dominance_single_list_operations(family):
    for items in permutations(range(family.L), family.K):
        S = RankedList.of(items)
        for ell in range(1, family.L + 1):
            assert exact_gap(family, S, ell) >= gap_lower_bound(family, S, ell) - 1e-15


def test_bernoulli_kl_values():
    assert bernoulli_kl(0.5, 0.25) == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(2 / 3), rel=1e-12)
    assert bernoulli_kl(0.5, 0.25) == pytest.approx(0.14384, abs=1e-5)
    assert bernoulli_kl(0.0, 0.3) == pytest.approx(-math.log(0.7), rel=1e-12)
    assert bernoulli_kl(0.4, 0.4) == 0.0
    assert bernoulli_kl(0.3, 1.0) == math.inf
    assert bernoulli_kl(0.3, 0.0) == math.inf


def test_bernoulli_kl_pinsker_and_asymmetry():
    rng = np.random.default_rng(21)
    a, b = rng.random(1000) * 0.98 + 0.01, rng.random(1000) * 0.98 + 0.01
    kl = bernoulli_kl(a, b)
    assert np.all(kl >= 2 * (a - b) ** 2 - 1e-15)
    assert bernoulli_kl(0.1, 0.5) != pytest.approx(bernoulli_kl(0.5, 0.1))


def test_kl_budget_value(family):
    assert kl_budget(family) == pytest.approx(3.088e-3, rel=1e-3)


@pytest.mark.parametrize("K", [5, 8, 16])
def test_kl_budget_small_epsilon_limit(K):
    family = HardInstanceFamily(L=64, K=K, epsilon=1e-4)
    limit = (K / family.L) * 2 * K / (K - 1)
    assert kl_budget(family) / family.epsilon ** 2 == pytest.approx(limit, rel=0.01)


def test_kl_budget_ratio_between_small_epsilons():
    a = HardInstanceFamily(L=20, K=5, epsilon=1e-3)
    b = HardInstanceFamily(L=20, K=5, epsilon=1e-4)
    assert (kl_budget(a) / a.epsilon ** 2) / (kl_budget(b) / b.epsilon ** 2) == pytest.approx(1.0, rel=0.01)


def test_mean_outcome_kl_within_budget(family):
    rng = run_stream(22, 0)
    budget = kl_budget(family)
    for _ in range(30):
        S = RankedList.of(rng.permutation(family.L)[:family.K])
        assert mean_outcome_kl(family, S) <= budget + 1e-15


def test_outcome_kl_monte_carlo(family):
    S = RankedList.of([9, 0, 4, 7, 2])
    exact = outcome_kl(S, weights_for(family, 0), weights_for(family, 3))
    estimate, se = mc_outcome_kl(family, S, 3, 200_000, run_stream(23, 0))
    assert se > 0
    assert abs(estimate - exact) <= 5 * se


def test_minimax_vacuous_regime_clamps():
    bound, eps, clamped = minimax_bound(5, 5, 1000)
    assert bound == 0.0 and clamped
    assert 0 < eps < 0.25


def test_minimax_interior_optimum_matches_closed_form():
    L, K, T = 64, 8, 100_000
    a = 1 - K / L
    b = math.sqrt(T * K / (2 * L))
    bound, eps, clamped = minimax_bound(L, K, T)
    assert not clamped
    assert bound == pytest.approx(T * a ** 2 / (2 * E4 * b), rel=1e-3)
    assert eps == pytest.approx(a / (2 * b), rel=0.05)


def test_minimax_scaling_in_L():
    K, T = 8, 100_000
    base, _, _ = minimax_bound(64, K, T)
    wider, _, _ = minimax_bound(256, K, T)
    expected = 2 * ((1 - K / 256) / (1 - K / 64)) ** 2
    assert wider / base == pytest.approx(expected, rel=1e-3)


def test_minimax_grid_refinement():
    coarse, _, _ = minimax_bound(64, 8, 100_000, grid=10_000)
    fine, _, _ = minimax_bound(64, 8, 100_000, grid=100_000)
    assert coarse == pytest.approx(fine, rel=1e-3)


def test_minimax_requires_admissible_epsilon():
    with pytest.raises(StructuralError, match="K >= 5"):
        minimax_bound(10, 4, 1000)
    with pytest.raises(StructuralError):
        minimax_bound(4, 5, 1000)
