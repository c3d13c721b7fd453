"""
Cascading-bandit environment.

Problem instances, the cascade click simulator, expected rewards and
pseudo-regret accounting. Item indices are 0-based internally and 1-based in
every JSON document and printed report.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import logger
from utils import StructuralError, fail, load_json, dump_json, top_k


@dataclass(frozen=True)
class RankedList:
    """An ordered K-permutation of item indices (0-based)."""
    items: Tuple[int, ...]

    @classmethod
    def of(cls, items: Sequence[int]) -> "RankedList":
        return cls(tuple(int(i) for i in items))

    @classmethod
    def from_one_based(cls, items: Sequence[int]) -> "RankedList":
        return cls(tuple(int(i) - 1 for i in items))

    def to_one_based(self) -> List[int]:
        return [i + 1 for i in self.items]

    def validate(self, L: int, K: Optional[int] = None) -> "RankedList":
        if K is not None and len(self.items) != K:
            fail(StructuralError, f"Ranked list has length {len(self.items)}, expected K={K}")
        if len(set(self.items)) != len(self.items):
            fail(StructuralError, f"Ranked list repeats items: {self.to_one_based()}")
        for i in self.items:
            if not 0 <= i < L:
                fail(StructuralError, f"Item index {i + 1} out of range 1..{L}")
        return self

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


@dataclass(frozen=True)
class Feedback:
    """
    Cascade observation for one list.
    click_position is 1-based or None; realized_clicks holds the observed prefix only.
    """
    click_position: Optional[int]
    realized_clicks: Tuple[int, ...]

    @property
    def reward(self) -> int:
        return 0 if self.click_position is None else 1


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    L: int
    K: int
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        if self.L < 1 or not 1 <= self.K <= self.L:
            fail(StructuralError, f"Need 1 <= K <= L, got L={self.L}, K={self.K}")
        if w.size != self.L:
            fail(StructuralError, f"Weight vector has {w.size} entries, expected L={self.L}")
        if np.any(~np.isfinite(w)) or np.any(w < 0.0) or np.any(w > 1.0):
            fail(StructuralError, "Click probabilities must lie in [0, 1]")

    @classmethod
    def from_weights(cls, w: Sequence[float], K: int) -> "ProblemInstance":
        return cls(L=len(w), K=K, w=np.asarray(w, dtype=float))

    @classmethod
    def from_json(cls, path: str) -> "ProblemInstance":
        data = load_json(path)
        missing = {"L", "K", "w"} - set(data)
        if missing:
            fail(StructuralError, f"Instance file {path} lacks fields: {sorted(missing)}")
        try:
            L, K, w = int(data["L"]), int(data["K"]), np.asarray(data["w"], dtype=float)
        except (TypeError, ValueError) as e:
            fail(StructuralError, f"Instance file {path} has non-numeric L, K or w: {e}")
        return cls(L=L, K=K, w=w)

    def to_json(self, path: str) -> str:
        return dump_json({"L": self.L, "K": self.K, "w": [float(x) for x in self.w]}, path)

    @cached_property
    def optimal_list(self) -> RankedList:
        return RankedList.of(top_k(self.w, self.K))

    @cached_property
    def optimal_reward(self) -> float:
        return expected_reward(self.optimal_list, self.w)


def expected_reward(S: RankedList, w: np.ndarray) -> float:
    """
    r(S|w) = 1 - prod_{i in S} (1 - w(i)).
    The factors are multiplied in sorted order so the value is exactly
    invariant under any reordering of S.
    """
    w = np.asarray(w, dtype=float)
    idx = np.fromiter(S.items if isinstance(S, RankedList) else S, dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= w.size):
        fail(StructuralError, f"List {[i + 1 for i in idx]} indexes outside 1..{w.size}")
    miss = np.sort(1.0 - w[idx])
    return float(1.0 - np.prod(miss))


def optimal_reward(instance: ProblemInstance) -> float:
    """Expected reward of the K largest weights, in any order."""
    return instance.optimal_reward


def cascade_outcome_probs(S: RankedList, w: np.ndarray) -> np.ndarray:
    """Probabilities of a click at positions 1..K followed by the no-click outcome."""
    wS = np.asarray(w, dtype=float)[list(S.items)]
    reach = np.concatenate(([1.0], np.cumprod(1.0 - wS)))
    return np.concatenate((wS * reach[:-1], reach[-1:]))


def simulate_step(instance: ProblemInstance, S: RankedList, rng: np.random.Generator) -> Feedback:
    """
    Draw the cascade feedback for S.
    One uniform is consumed per examined item, in list order; the unobserved
    suffix after a click consumes nothing.
    """
    clicks = []
    for k, item in enumerate(S.items, start=1):
        if rng.random() < instance.w[item]:
            clicks.append(1)
            return Feedback(click_position=k, realized_clicks=tuple(clicks))
        clicks.append(0)
    return Feedback(click_position=None, realized_clicks=tuple(clicks))


def observed_prefix(S: RankedList, f: Feedback) -> List[Tuple[int, int]]:
    """(item, W) pairs for the examined prefix of S."""
    K = len(S)
    expected = K if f.click_position is None else f.click_position
    if f.click_position is not None and not 1 <= f.click_position <= K:
        fail(StructuralError, f"Click position {f.click_position} outside 1..{K}")
    if len(f.realized_clicks) != expected:
        fail(StructuralError, f"Feedback carries {len(f.realized_clicks)} observations, expected {expected}")
    pattern = (0,) * expected if f.click_position is None else (0,) * (expected - 1) + (1,)
    if tuple(int(c) for c in f.realized_clicks) != pattern:
        fail(StructuralError,
             f"Feedback clicks {list(f.realized_clicks)} do not match click position {f.click_position}")
    return list(zip(S.items[:expected], f.realized_clicks))


@dataclass
class RegretAccumulator:
    """Running pseudo-regret r(S*|w) - r(S_t|w), plus the realized 0/1 rewards."""
    t: int = 0
    cum_regret: float = 0.0
    realized_reward: int = 0
    checkpoints: Optional[Sequence[int]] = None
    trajectory: List[Tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        self._pending = sorted(set(int(c) for c in self.checkpoints)) if self.checkpoints else []
        self._next = 0


def regret_step(acc: RegretAccumulator, instance: ProblemInstance, S: RankedList,
                feedback: Optional[Feedback] = None) -> RegretAccumulator:
    """Advance the accumulator by one step; the increment is clamped at 0 against float noise."""
    increment = instance.optimal_reward - expected_reward(S, instance.w)
    acc.t += 1
    acc.cum_regret += max(0.0, increment)
    if feedback is not None:
        acc.realized_reward += feedback.reward
    if acc._next < len(acc._pending) and acc._pending[acc._next] == acc.t:
        acc.trajectory.append((acc.t, acc.cum_regret))
        acc._next += 1
    return acc


def brute_force_optimum(instance: ProblemInstance) -> float:
    """Max expected reward over every ordered K-subset. Exponential; small L only."""
    from itertools import permutations
    if instance.L > 10:
        logger.warning(f"Brute-force optimum over L={instance.L} items is expensive")
    return max(expected_reward(RankedList.of(p), instance.w)
               for p in permutations(range(instance.L), instance.K))
