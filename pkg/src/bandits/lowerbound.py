"""
Minimax lower-bound machinery for cascading bandits.

The L+1 hard instances (a null instance with every weight (1-eps)/K, and L
instances where a circular block of K items is raised to (1+eps)/K), the
per-list gap bound, Bernoulli KL utilities, the per-step KL budget and a
numeric evaluation of the resulting regret lower bound.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import rel_entr

from config import Config, logger
from utils import StructuralError, fail
from bandits.env import RankedList, cascade_outcome_probs, expected_reward

E4 = math.exp(4.0)


def bernoulli_kl(a, b):
    """
    KL(Bern(a) || Bern(b)) with the 0 ln 0 = 0 convention.
    Returns +inf when b is 0 or 1 and a differs from b. Works elementwise on arrays.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    kl = rel_entr(a, b) + rel_entr(1.0 - a, 1.0 - b)
    kl = np.maximum(kl, 0.0)
    return float(kl) if kl.ndim == 0 else kl


@dataclass(frozen=True)
class HardInstanceFamily:
    L: int
    K: int
    epsilon: float

    def __post_init__(self):
        lo = (1.0 - self.epsilon) / self.K if self.K > 0 else 0.0
        hi = (1.0 + self.epsilon) / self.K if self.K > 0 else 1.0
        if not 0.0 < self.epsilon < 1.0:
            fail(StructuralError, f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 1 <= self.K <= self.L:
            fail(StructuralError, f"Need 1 <= K <= L, got L={self.L}, K={self.K}")
        if not 0.0 < lo < hi < 0.25:
            fail(StructuralError, f"Need 0 < (1-eps)/K < (1+eps)/K < 1/4; got K={self.K}, eps={self.epsilon}")

    @property
    def low(self) -> float:
        return (1.0 - self.epsilon) / self.K

    @property
    def high(self) -> float:
        return (1.0 + self.epsilon) / self.K


def hot_items(family: HardInstanceFamily, ell: int) -> np.ndarray:
    """0-based items {ell, ..., ell+K-1} (1-based, wrapping past L)."""
    return (ell - 1 + np.arange(family.K)) % family.L


def weights_for(family: HardInstanceFamily, ell: int) -> np.ndarray:
    if not 0 <= ell <= family.L:
        fail(StructuralError, f"Instance index {ell} outside 0..{family.L}")
    w = np.full(family.L, family.low)
    if ell >= 1:
        w[hot_items(family, ell)] = family.high
    return w


def optimal_list_for(family: HardInstanceFamily, ell: int) -> RankedList:
    if ell == 0:
        return RankedList.of(range(family.K))
    return RankedList.of(sorted(hot_items(family, ell).tolist()))


def _as_lists(family: HardInstanceFamily, lists) -> np.ndarray:
    lists = np.asarray(lists, dtype=int)
    if lists.ndim != 2 or lists.shape[1] != family.K:
        fail(StructuralError, f"Expected an n x K array of lists with K={family.K}, got shape {lists.shape}")
    if lists.size and (lists.min() < 0 or lists.max() >= family.L):
        fail(StructuralError, f"List entries must lie in 0..{family.L - 1}")
    if family.K > 1 and np.any(np.diff(np.sort(lists, axis=1), axis=1) == 0):
        fail(StructuralError, "Ranked lists must not repeat items")
    return lists


def gap_lower_bounds(family: HardInstanceFamily, lists, ell: int) -> np.ndarray:
    """gap_lower_bound for every row of an n x K array of 0-based lists."""
    lists = _as_lists(family, lists)
    if not 1 <= ell <= family.L:
        fail(StructuralError, f"The gap bound is defined for instances 1..{family.L} only, got {ell}")
    Q = family.K - np.isin(lists, hot_items(family, ell)).sum(axis=1)
    return 2.0 * Q * family.epsilon / (E4 * family.K)


def exact_gaps(family: HardInstanceFamily, lists, ell: int) -> np.ndarray:
    """exact_gap for every row of an n x K array of 0-based lists."""
    lists = _as_lists(family, lists)
    w = weights_for(family, ell)
    rewards = 1.0 - np.prod(np.sort(1.0 - w[lists], axis=1), axis=1)
    return expected_reward(optimal_list_for(family, ell), w) - rewards


def gap_lower_bound(family: HardInstanceFamily, S: RankedList, ell: int) -> float:
    """2 |S minus S*_ell| eps / (e^4 K)."""
    S.validate(family.L, family.K)
    return float(gap_lower_bounds(family, [S.items], ell)[0])


def exact_gap(family: HardInstanceFamily, S: RankedList, ell: int) -> float:
    w = weights_for(family, ell)
    return expected_reward(optimal_list_for(family, ell), w) - expected_reward(S, w)


def kl_budget(family: HardInstanceFamily) -> float:
    """(K/L) [(1-eps) ln((1-eps)/(1+eps)) + (K-1+eps) ln((K-1+eps)/(K-1-eps))]."""
    eps, K = family.epsilon, family.K
    first = (1.0 - eps) * (math.log1p(-eps) - math.log1p(eps))
    second = (K - 1 + eps) * (math.log1p(eps / (K - 1)) - math.log1p(-eps / (K - 1)))
    return max(0.0, (K / family.L) * (first + second))


def outcome_kl(S: RankedList, w: np.ndarray, w_alt: np.ndarray) -> float:
    """KL between the K+1-outcome cascade distributions of S under w and w_alt."""
    p = cascade_outcome_probs(S, w)
    q = cascade_outcome_probs(S, w_alt)
    return float(np.sum(rel_entr(p, q)))


def mean_outcome_kl(family: HardInstanceFamily, S: RankedList) -> float:
    """(1/L) sum over ell of outcome_kl(S, w^0, w^ell); bounded by kl_budget."""
    w0 = weights_for(family, 0)
    return float(np.mean([outcome_kl(S, w0, weights_for(family, ell)) for ell in range(1, family.L + 1)]))


def mc_outcome_kl(family: HardInstanceFamily, S: RankedList, ell: int, n: int,
                  rng: np.random.Generator) -> Tuple[float, float]:
    """
    Monte-Carlo estimate of outcome_kl(S, w^0, w^ell): the mean log-likelihood
    ratio of outcomes drawn under instance 0. Returns (estimate, standard error).
    """
    p = cascade_outcome_probs(S, weights_for(family, 0))
    q = cascade_outcome_probs(S, weights_for(family, ell))
    outcomes = rng.choice(p.size, size=n, p=p)
    llr = np.log(p[outcomes]) - np.log(q[outcomes])
    return float(llr.mean()), float(llr.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def admissible_epsilon(K: int) -> float:
    """Supremum of eps with 0 < (1-eps)/K < (1+eps)/K < 1/4 and eps < 1."""
    return min(1.0, K / 4.0 - 1.0)


def minimax_objective(eps, L: int, K: int, T: int):
    return (2.0 * eps * T / E4) * (1.0 - K / L - eps * np.sqrt(T * K / (2.0 * L)))


def minimax_bound(L: int, K: int, T: int, grid: int = Config.MINIMAX_GRID) -> Tuple[float, float, bool]:
    """
    Evaluate max over admissible eps of (2 eps T / e^4)(1 - K/L - eps sqrt(TK/(2L))).
    Returns (bound, maximizing eps, clamped) where clamped flags the vacuous regime.
    """
    if L < 1 or K < 1 or T < 1 or K > L:
        fail(StructuralError, f"Need 1 <= K <= L and T >= 1, got L={L}, K={K}, T={T}")
    eps_max = admissible_epsilon(K)
    if eps_max <= 0.0:
        fail(StructuralError, f"No admissible epsilon for K={K}: the construction needs K >= 5")
    eps = eps_max * np.arange(1, grid + 1) / (grid + 1)
    values = minimax_objective(eps, L, K, T)
    best = int(np.argmax(values))
    bound = float(values[best])
    if bound <= 0.0:
        logger.warning(f"Lower bound is vacuous for L={L}, K={K}, T={T}; clamping to 0")
        return 0.0, float(eps[best]), True
    return bound, float(eps[best]), False
