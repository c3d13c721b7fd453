"""
Tabular cascading-bandit policies.

- TS-Cascade: Gaussian Thompson sampling with one shared normal draw per round.
- CTS: Beta-Bernoulli Thompson sampling, independent per item.
- CascadeUCB1 / CascadeKL-UCB: optimistic baselines.
- Oracle: always plays the optimal list (harness sanity checks).

Every policy implements the same contract: select(t, rng) -> RankedList,
update(S, feedback) and reset(). Ties in any ranking go to the lowest index.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from config import Config, logger
from utils import ConfigError, fail, top_k
from bandits.env import Feedback, RankedList, observed_prefix
from bandits.lowerbound import bernoulli_kl


@dataclass
class EmpiricalState:
    """Empirical means w_hat and observation counts N, shared by TS-Cascade and the UCB baselines."""
    w_hat: np.ndarray
    N: np.ndarray

    @classmethod
    def fresh(cls, L: int) -> "EmpiricalState":
        return cls(w_hat=np.zeros(L), N=np.zeros(L, dtype=np.int64))


@dataclass
class CTSState:
    alpha: np.ndarray
    beta: np.ndarray

    @classmethod
    def fresh(cls, L: int) -> "CTSState":
        return cls(alpha=np.ones(L), beta=np.ones(L))


def empirical_update(state: EmpiricalState, S: RankedList, f: Feedback) -> EmpiricalState:
    for item, W in observed_prefix(S, f):
        n = state.N[item]
        # clamp: floating drift must not leave [0, 1]
        state.w_hat[item] = min(1.0, max(0.0, (n * state.w_hat[item] + W) / (n + 1)))
        state.N[item] = n + 1
    return state


def ts_cascade_scores(state: EmpiricalState, t: int, z: float) -> np.ndarray:
    """theta_t(i) = w_hat(i) + z * sigma_t(i)."""
    log_term = math.log(t + 1)
    denom = state.N + 1.0
    nu = state.w_hat * (1.0 - state.w_hat)
    sigma = np.maximum(np.sqrt(nu * log_term / denom), log_term / denom)
    return state.w_hat + z * sigma


def ts_cascade_select(state: EmpiricalState, t: int, rng: np.random.Generator, K: int) -> RankedList:
    z = rng.standard_normal()
    return RankedList.of(top_k(ts_cascade_scores(state, t, z), K))


def ts_cascade_update(state: EmpiricalState, S: RankedList, f: Feedback) -> EmpiricalState:
    return empirical_update(state, S, f)


def cts_select(state: CTSState, rng: np.random.Generator, K: int) -> RankedList:
    theta = rng.beta(state.alpha, state.beta)
    return RankedList.of(top_k(theta, K))


def cts_update(state: CTSState, S: RankedList, f: Feedback) -> CTSState:
    for item, W in observed_prefix(S, f):
        state.alpha[item] += W
        state.beta[item] += 1 - W
    return state


def ucb1_indices(state: EmpiricalState, t: int) -> np.ndarray:
    """U_t(i) = w_hat(i) + sqrt(1.5 ln t / N(i)); unexplored items get +inf."""
    index = np.full(state.w_hat.shape, np.inf)
    seen = state.N > 0
    index[seen] = state.w_hat[seen] + np.sqrt(1.5 * math.log(t) / state.N[seen])
    return index


def cascade_ucb1_select(state: EmpiricalState, t: int, K: int) -> RankedList:
    return RankedList.of(top_k(ucb1_indices(state, t), K))


def klucb_budget(t: int) -> float:
    if t < 2:
        return 0.0
    return max(0.0, math.log(t) + 3.0 * math.log(math.log(t)))


def klucb_indices(state: EmpiricalState, t: int,
                  tol: float = Config.KLUCB_TOL, max_iter: int = Config.KLUCB_MAX_ITER) -> np.ndarray:
    """
    q_t(i) = max{q in [w_hat, 1] : N KL(w_hat, q) <= budget}, by vectorized bisection.
    The lower end always satisfies the constraint and carries its KL value along,
    so each step evaluates the divergence once, on the items still bracketing.
    An item is finished when its bracket is narrower than tol and the constraint
    is tight to 1e-8, or when the bracket can no longer be halved.
    """
    budget = klucb_budget(t)
    q = np.ones(state.w_hat.shape)
    seen = state.N > 0
    if not seen.any():
        return q
    p = state.w_hat[seen]
    n = state.N[seen].astype(float)
    if budget == 0.0:
        q[seen] = p
        return q
    lo = p.copy()
    hi = np.ones_like(p)
    kl_lo = np.zeros_like(p)
    active = np.flatnonzero(lo < 1.0)
    for _ in range(max_iter):
        if active.size == 0:
            break
        mid = 0.5 * (lo[active] + hi[active])
        kl_mid = bernoulli_kl(p[active], mid)
        ok = n[active] * kl_mid <= budget
        lo[active] = np.where(ok, mid, lo[active])
        hi[active] = np.where(ok, hi[active], mid)
        kl_lo[active] = np.where(ok, kl_mid, kl_lo[active])
        a_lo, a_hi = lo[active], hi[active]
        tight = (budget - n[active] * kl_lo[active] <= 1e-8) | (a_lo >= 1.0)
        done = ((a_hi - a_lo) <= tol) & tight
        half = 0.5 * (a_lo + a_hi)
        stuck = (half == a_lo) | (half == a_hi)
        active = active[~(done | stuck)]
    q[seen] = lo
    return q


def cascade_klucb_select(state: EmpiricalState, t: int, K: int) -> RankedList:
    return RankedList.of(top_k(klucb_indices(state, t), K))


class CascadePolicy(ABC):
    """Common contract for every policy the harness can run."""
    key = ""
    display_name = ""

    def __init__(self, L: int, K: int):
        self.L = L
        self.K = K
        self.reset()

    @abstractmethod
    def select(self, t: int, rng: np.random.Generator) -> RankedList:
        ...

    @abstractmethod
    def update(self, S: RankedList, f: Feedback) -> None:
        ...

    @abstractmethod
    def reset(self) -> None:
        ...


class TSCascade(CascadePolicy):
    key = "ts-cascade"
    display_name = "TS-Cascade"

    def reset(self):
        self.state = EmpiricalState.fresh(self.L)

    def select(self, t, rng):
        return ts_cascade_select(self.state, t, rng, self.K)

    def update(self, S, f):
        ts_cascade_update(self.state, S, f)


class CTS(CascadePolicy):
    key = "cts"
    display_name = "CTS"

    def reset(self):
        self.state = CTSState.fresh(self.L)

    def select(self, t, rng):
        return cts_select(self.state, rng, self.K)

    def update(self, S, f):
        cts_update(self.state, S, f)


class CascadeUCB1(CascadePolicy):
    key = "cascade-ucb1"
    display_name = "CascadeUCB1"

    def reset(self):
        self.state = EmpiricalState.fresh(self.L)

    def select(self, t, rng):
        return cascade_ucb1_select(self.state, t, self.K)

    def update(self, S, f):
        empirical_update(self.state, S, f)


class CascadeKLUCB(CascadeUCB1):
    key = "cascade-klucb"
    display_name = "CascadeKL-UCB"

    def select(self, t, rng):
        return cascade_klucb_select(self.state, t, self.K)


class Oracle(CascadePolicy):
    key = "oracle"
    display_name = "Oracle"

    def __init__(self, L: int, K: int, optimal_list: RankedList):
        self.optimal_list = optimal_list
        super().__init__(L, K)

    def reset(self):
        pass

    def select(self, t, rng):
        return self.optimal_list

    def update(self, S, f):
        pass


def make_policy(name: str, L: int, K: int, features=None, instance=None, **params) -> CascadePolicy:
    """
    Build a policy from its harness name.
    Raises ConfigError for unknown names or a linear policy without features.
    """
    from bandits import linear

    name = name.lower().strip()
    if name not in Config.VALID_POLICIES:
        fail(ConfigError, f"Unknown policy: {name}. Must be one of {Config.VALID_POLICIES}")
    if name in Config.LINEAR_POLICIES:
        if features is None:
            fail(ConfigError, f"Policy {name} needs a feature matrix (synthetic training data or a linear instance)")
        if features.L != L:
            fail(ConfigError, f"Feature matrix has {features.L} items, instance has L={L}")
    logger.debug(f"Building policy {name} (L={L}, K={K}, params={params})")
    if name == "ts-cascade":
        return TSCascade(L, K)
    if name == "cts":
        return CTS(L, K)
    if name == "cascade-ucb1":
        return CascadeUCB1(L, K)
    if name == "cascade-klucb":
        return CascadeKLUCB(L, K)
    if name == "oracle":
        if instance is None:
            fail(ConfigError, "Oracle policy needs the problem instance")
        return Oracle(L, K, instance.optimal_list)
    if name == "lints-cascade":
        return linear.LinTSCascade(L, K, features, lam=params.get("lam", Config.LINTS_LAMBDA_PRESETS[0]))
    if name == "cascade-linucb":
        return linear.CascadeLinUCB(L, K, features,
                                    sigma=params.get("sigma", Config.LINUCB_SIGMA),
                                    delta=params.get("delta", Config.LINUCB_DELTA))
    return linear.CascadeLinTS(L, K, features, sigma=params.get("sigma", Config.LINTS_SIGMA))
