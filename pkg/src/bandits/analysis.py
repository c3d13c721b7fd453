"""
Checks and diagnostics for cascading-bandit theory.

- reward_decomposition: the two telescoping expansions of r(S|w) - r(S'|w').
- confidence_widths / concentration_rate: the g_t, h_t widths and a
  Monte-Carlo frequency of the event that every empirical mean lies within g_t.
- gap_table / cts_gap_terms: problem-difficulty gaps and the explicit CTS terms.
- scaling_curve: shape-only sqrt(KLT) ln T reference curve for plots.
- run_verification_suite: the named PASS/FAIL property suites behind `verify`.
"""

import math
import time
from dataclasses import dataclass, field, asdict
from itertools import permutations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import logger
from utils import DIAGNOSTIC_STREAM, CascadeBanditError, StructuralError, fail, run_stream
from bandits.env import ProblemInstance, RankedList, brute_force_optimum, expected_reward
from bandits.lowerbound import (
    HardInstanceFamily, exact_gaps, gap_lower_bounds, kl_budget, mc_outcome_kl, mean_outcome_kl, outcome_kl,
    weights_for,
)
from bandits.linear import LinearState, gram_update, jacobi_eigenvalues, truncated_svd


def reward_decomposition(S: RankedList, S_prime: RankedList, w: np.ndarray,
                         w_prime: np.ndarray) -> Tuple[float, float, float]:
    """
    Returns (form1, form2, direct) for r(S|w) - r(S'|w'):
      form1 = sum_k prod_{j<k}(1-w(i_j)) (w(i_k) - w'(i'_k)) prod_{j>k}(1-w'(i'_j))
      form2 = sum_k prod_{j<k}(1-w'(i'_j)) (w(i_k) - w'(i'_k)) prod_{j>k}(1-w(i_j))
    """
    if len(S) != len(S_prime):
        fail(StructuralError, f"Lists differ in length: {len(S)} vs {len(S_prime)}")
    a = np.asarray(w, dtype=float)[list(S.items)]
    b = np.asarray(w_prime, dtype=float)[list(S_prime.items)]
    K = a.size
    form1 = form2 = 0.0
    for k in range(K):
        diff = a[k] - b[k]
        form1 += np.prod(1.0 - a[:k]) * diff * np.prod(1.0 - b[k + 1:])
        form2 += np.prod(1.0 - b[:k]) * diff * np.prod(1.0 - a[k + 1:])
    direct = expected_reward(S, w) - expected_reward(S_prime, w_prime)
    return float(form1), float(form2), float(direct)


@dataclass
class ConfidenceWidths:
    g: np.ndarray
    h: np.ndarray


def confidence_widths(w_hat: np.ndarray, N: np.ndarray, t: int) -> ConfidenceWidths:
    """g = sqrt(16 nu ln(t+1)/(N+1)) + 24 ln(t+1)/(N+1), h = sqrt(ln(t+1)) g, nu = w_hat(1-w_hat)."""
    if t < 1:
        fail(StructuralError, f"Widths need t >= 1, got {t}")
    w_hat = np.asarray(w_hat, dtype=float)
    denom = np.asarray(N, dtype=float) + 1.0
    log_term = math.log(t + 1)
    nu = w_hat * (1.0 - w_hat)
    g = np.sqrt(16.0 * nu * log_term / denom) + 24.0 * log_term / denom
    return ConfidenceWidths(g=g, h=math.sqrt(log_term) * g)


def concentration_floor(L: int, t: int) -> float:
    return max(0.0, 1.0 - 3.0 * L / (t + 1) ** 3)


@dataclass
class ConcentrationRow:
    t: int
    frequency: float
    floor: float

    @property
    def passed(self) -> bool:
        return self.frequency >= self.floor


@dataclass
class ConcentrationReport:
    replications: int
    rows: List[ConcentrationRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def as_dict(self) -> Dict:
        return {"replications": self.replications, "passed": self.passed,
                "rows": [{**asdict(r), "passed": r.passed} for r in self.rows]}


def concentration_rate(instance: ProblemInstance, checkpoints: Sequence[int], replications: int = 2000,
                       seed: int = 0) -> ConcentrationReport:
    """
    Empirical frequency, over independent TS-Cascade replications, of the event
    that |w_hat_t(i) - w(i)| <= g_t(i) for every item, evaluated on the history
    before round t. All replications advance together as R x L arrays.
    """
    if replications < 1000:
        fail(StructuralError, f"Concentration diagnostic needs at least 1000 replications, got {replications}")
    wanted = sorted(set(int(c) for c in checkpoints))
    if not wanted or wanted[0] < 1:
        fail(StructuralError, "Checkpoints must be positive integers")
    L, K, w = instance.L, instance.K, instance.w
    R = replications
    rng = run_stream(seed, purpose=DIAGNOSTIC_STREAM)
    w_hat = np.zeros((R, L))
    N = np.zeros((R, L))
    rows_idx = np.arange(R)[:, None]
    report = ConcentrationReport(replications=R)
    for t in range(1, wanted[-1] + 1):
        if t in wanted:
            g = confidence_widths(w_hat, N, t).g
            inside = np.all(np.abs(w_hat - w) <= g, axis=1)
            row = ConcentrationRow(t=t, frequency=float(inside.mean()), floor=concentration_floor(L, t))
            logger.debug(f"Concentration at t={t}: {row.frequency:.5f} vs floor {row.floor:.5f}")
            report.rows.append(row)
        log_term = math.log(t + 1)
        z = rng.standard_normal(R)[:, None]
        sigma = np.maximum(np.sqrt(w_hat * (1.0 - w_hat) * log_term / (N + 1.0)), log_term / (N + 1.0))
        S = np.argsort(-(w_hat + z * sigma), axis=1, kind="stable")[:, :K]
        clicks = rng.random((R, K)) < w[S]
        any_click = clicks.any(axis=1)
        seen = np.where(any_click, clicks.argmax(axis=1) + 1, K)
        mask = np.arange(K) < seen[:, None]
        r_idx = np.broadcast_to(rows_idx, S.shape)[mask]
        i_idx = S[mask]
        n = N[r_idx, i_idx]
        w_hat[r_idx, i_idx] = np.clip((n * w_hat[r_idx, i_idx] + clicks[mask]) / (n + 1.0), 0.0, 1.0)
        N[r_idx, i_idx] = n + 1.0
    return report


@dataclass
class GapTable:
    """Gaps w(i) - w(j) between the K best and the remaining items, in descending weight order."""
    order: np.ndarray
    deltas: np.ndarray
    min_gap: float

    def as_dict(self) -> Dict:
        return {"order": (self.order + 1).tolist(), "deltas": self.deltas.tolist(), "min_gap": self.min_gap}


def gap_table(w: np.ndarray, K: int) -> GapTable:
    w = np.asarray(w, dtype=float)
    if not 1 <= K <= w.size:
        fail(StructuralError, f"Need 1 <= K <= L, got K={K}, L={w.size}")
    if K == w.size:
        fail(StructuralError, "no suboptimal items")
    order = np.argsort(-w, kind="stable")
    ranked = w[order]
    deltas = ranked[:K, None] - ranked[None, K:]
    return GapTable(order=order, deltas=deltas, min_gap=float(ranked[K - 1] - ranked[K]))


def cts_gap_terms(w: np.ndarray, K: int, T: int) -> Dict[str, float]:
    """
    Problem-dependent CTS terms with eps = Delta/3:
    4 ln T sum_{i>K} (D_Ki - eps)/(D_Ki - 2 eps)^2 and sum_{i>K} sum_{j<=K} D_ji.
    """
    table = gap_table(w, K)
    if table.min_gap <= 0.0:
        fail(StructuralError, "CTS gap terms need a positive minimum gap")
    eps = table.min_gap / 3.0
    d_k = table.deltas[K - 1]
    log_term = 4.0 * math.log(T) * float(np.sum((d_k - eps) / (d_k - 2.0 * eps) ** 2))
    pair_term = float(table.deltas.sum())
    return {"epsilon": eps, "log_term": log_term, "pair_term": pair_term, "total": log_term + pair_term}


def scaling_curve(K: int, L: int, T_grid: Sequence[float], lower_order: bool = False,
                  anchor: Optional[float] = None) -> np.ndarray:
    """
    sqrt(KLT) ln T, optionally plus L (ln T)^(5/2), scaled to equal `anchor`
    (default 1) at the first grid point. Shape only.
    """
    T = np.asarray(T_grid, dtype=float)
    if T.size == 0 or np.any(np.diff(T) <= 0):
        fail(StructuralError, "T grid must be non-empty and strictly ascending")
    logs = np.log(T)
    curve = np.sqrt(K * L * T) * logs
    if lower_order:
        curve = curve + L * logs ** 2.5
    if curve[0] <= 0.0:
        fail(StructuralError, f"Reference curve vanishes at T={T[0]:g}; start the grid above 1")
    return curve * ((1.0 if anchor is None else anchor) / curve[0])


@dataclass
class VerificationRow:
    name: str
    passed: bool
    measured: float
    threshold: float
    seconds: float = 0.0
    detail: str = ""


def _random_lists(rng: np.random.Generator, L: int, K: int) -> RankedList:
    return RankedList.of(rng.permutation(L)[:K])


def _check_decomposition(quick: bool) -> VerificationRow:
    rng = run_stream(11, purpose=DIAGNOSTIC_STREAM)
    worst = 0.0
    for _ in range(200 if quick else 1000):
        K = int(rng.integers(1, 7))
        L = int(rng.integers(K, 13))
        S, S_prime = _random_lists(rng, L, K), _random_lists(rng, L, K)
        form1, form2, direct = reward_decomposition(S, S_prime, rng.random(L), rng.random(L))
        worst = max(worst, abs(form1 - direct), abs(form2 - direct))
    return VerificationRow("reward decomposition", worst < 1e-12, worst, 1e-12)


def _check_brute_force(quick: bool) -> VerificationRow:
    rng = run_stream(12, purpose=DIAGNOSTIC_STREAM)
    worst = 0.0
    for L in range(1, 7):
        for K in range(1, L + 1):
            for _ in range(2 if quick else 10):
                instance = ProblemInstance.from_weights(np.round(rng.random(L), 2), K)
                worst = max(worst, abs(instance.optimal_reward - brute_force_optimum(instance)))
    return VerificationRow("brute-force optimality", worst == 0.0, worst, 0.0)


def _check_gap_bound(quick: bool) -> VerificationRow:
    family = HardInstanceFamily(L=10, K=5, epsilon=0.05)
    perms = np.array(list(permutations(range(family.L), family.K)))
    worst = math.inf
    for ell in range(1, family.L + 1):
        slack = exact_gaps(family, perms, ell) - gap_lower_bounds(family, perms, ell)
        worst = min(worst, float(np.min(slack)))
    return VerificationRow("gap-bound dominance", worst >= -1e-15, worst, 0.0,
                           detail=f"{len(perms)} lists x {family.L} instances")


def _check_kl_limit(quick: bool) -> VerificationRow:
    worst = 0.0
    for K in (5, 8, 16):
        family = HardInstanceFamily(L=64, K=K, epsilon=1e-4)
        limit = (K / family.L) * 2.0 * K / (K - 1)
        worst = max(worst, abs(kl_budget(family) / family.epsilon ** 2 / limit - 1.0))
    return VerificationRow("KL budget limit", worst < 0.01, worst, 0.01)


def _check_kl_budget(quick: bool) -> VerificationRow:
    family = HardInstanceFamily(L=10, K=5, epsilon=0.05)
    budget = kl_budget(family)
    rng = run_stream(15, purpose=DIAGNOSTIC_STREAM)
    worst = -math.inf
    mc_gap = 0.0
    for _ in range(10 if quick else 50):
        S = _random_lists(rng, family.L, family.K)
        worst = max(worst, mean_outcome_kl(family, S) - budget)
    S = _random_lists(rng, family.L, family.K)
    estimate, se = mc_outcome_kl(family, S, 1, 20_000 if quick else 200_000, rng)
    exact = outcome_kl(S, weights_for(family, 0), weights_for(family, 1))
    mc_gap = abs(estimate - exact) / max(se, 1e-300)
    return VerificationRow("KL budget vs outcome KL", worst <= 1e-15 and mc_gap <= 5.0, worst, 0.0,
                           detail=f"Monte-Carlo deviation {mc_gap:.2f} standard errors")


def _check_svd(quick: bool) -> VerificationRow:
    rng = run_stream(16, purpose=DIAGNOSTIC_STREAM)
    A = rng.standard_normal((20, 5)) @ rng.standard_normal((5, 30))
    svd = truncated_svd(A, 5)
    recon = float(np.linalg.norm(A - svd.reconstruct()))
    oracle = np.sqrt(np.clip(jacobi_eigenvalues(A.T @ A)[:5], 0.0, None))
    sv_err = float(np.max(np.abs(svd.S - oracle)))
    worst = max(recon, sv_err)
    return VerificationRow("truncated SVD vs Jacobi", worst <= 1e-8, worst, 1e-8)


def _check_sherman_morrison(quick: bool) -> VerificationRow:
    rng = run_stream(17, purpose=DIAGNOSTIC_STREAM)
    d = 8
    state = LinearState.fresh(d)
    for _ in range(2_000 if quick else 10_000):
        x = rng.standard_normal(d)
        gram_update(state, 0.5 * x / np.linalg.norm(x), float(rng.random() < 0.3))
    drift = float(np.max(np.abs(state.M_inv - np.linalg.inv(state.M))))
    return VerificationRow("Sherman-Morrison drift", drift <= 1e-10, drift, 1e-10)


def _check_concentration(quick: bool) -> VerificationRow:
    instance = ProblemInstance.from_weights([0.3] * 8, 2)
    checkpoints = (100,) if quick else (100, 1000)
    report = concentration_rate(instance, checkpoints, replications=1000 if quick else 2000, seed=18)
    margin = min(row.frequency - row.floor for row in report.rows)
    return VerificationRow("concentration diagnostic", report.passed, margin, 0.0,
                           detail=", ".join(f"t={r.t}: {r.frequency:.4f} >= {r.floor:.4f}" for r in report.rows))


SUITES: List[Callable[[bool], VerificationRow]] = [
    _check_decomposition,
    _check_brute_force,
    _check_gap_bound,
    _check_kl_limit,
    _check_kl_budget,
    _check_svd,
    _check_sherman_morrison,
    _check_concentration,
]


def run_verification_suite(quick: bool = False) -> List[VerificationRow]:
    """Run every property suite; a suite that raises is reported as FAIL with the error text."""
    rows = []
    for suite in SUITES:
        start = time.perf_counter()
        try:
            row = suite(quick)
        except CascadeBanditError as e:
            row = VerificationRow(suite.__name__.removeprefix("_check_"), False, math.nan, math.nan, detail=str(e))
        row.seconds = time.perf_counter() - start
        logger.info(f"verify {row.name}: {'PASS' if row.passed else 'FAIL'} ({row.measured:.3g}, {row.seconds:.2f}s)")
        rows.append(row)
    return rows
