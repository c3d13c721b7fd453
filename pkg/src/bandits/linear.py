"""
Linear generalization for cascading bandits.

Click probabilities are modelled as w(i) = x(i)^T beta for known item features
x(i). This module holds the small dense kernels (Gram matrix with
Sherman-Morrison inverse, subspace-iteration truncated SVD, a Jacobi
eigensolver used as an oracle), feature generation from historical clicks and
the three linear policies: LinTS-Cascade(lambda), CascadeLinUCB and
CascadeLinTS.
"""

import math
from dataclasses import dataclass
import numpy as np

from config import Config, logger
from utils import NumericError, StructuralError, fail, load_json, dump_json, top_k
from bandits.env import Feedback, RankedList, observed_prefix
from bandits.policies import CascadePolicy


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """d x L matrix whose column i is the feature vector x(i)."""
    X: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2 or X.size == 0:
            fail(StructuralError, f"Feature matrix must be a non-empty d x L array, got shape {X.shape}")
        if X.shape[0] > 256:
            fail(StructuralError, f"Feature dimension d={X.shape[0]} exceeds 256")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def L(self) -> int:
        return self.X.shape[1]

    def max_column_norm(self) -> float:
        return float(np.linalg.norm(self.X, axis=0).max())

    def check_norm(self, K: int) -> bool:
        """True when every column satisfies ||x(i)|| <= 1/sqrt(K)."""
        ok = self.max_column_norm() <= 1.0 / math.sqrt(K) + 1e-12
        if not ok:
            logger.warning(f"Feature column norm {self.max_column_norm():.4g} exceeds 1/sqrt(K) for K={K}")
        return ok

    @classmethod
    def from_json(cls, path: str) -> "FeatureMatrix":
        data = load_json(path)
        try:
            columns = np.asarray(data.get("X", []), dtype=float)
            d, scale = int(data.get("d", -1)), float(data.get("scale", 1.0))
        except (AttributeError, TypeError, ValueError) as e:
            fail(StructuralError, f"Feature file {path} has non-numeric entries: {e}")
        if columns.ndim != 2 or columns.shape[1] != d:
            fail(StructuralError, f"Feature file {path} must hold L columns of length d")
        return cls(X=columns.T, scale=scale)

    def to_json(self, path: str, K: int) -> str:
        payload = {"d": self.d, "K": K, "scale": self.scale, "X": self.X.T.tolist()}
        return dump_json(payload, path)


@dataclass(frozen=True, eq=False)
class LinearInstance:
    features: FeatureMatrix
    beta: np.ndarray

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).reshape(-1)
        if beta.size != self.features.d:
            fail(StructuralError, f"beta has {beta.size} entries, features have d={self.features.d}")
        object.__setattr__(self, "beta", beta)
        w = self.weights
        if np.any(w < -1e-12) or np.any(w > 1 + 1e-12):
            fail(StructuralError, "Induced weights x(i)^T beta must lie in [0, 1]")

    @property
    def weights(self) -> np.ndarray:
        return np.clip(self.features.X.T @ self.beta, 0.0, 1.0)


@dataclass
class LinearState:
    """Regularized Gram matrix M = I + sum x x^T, its inverse, b and psi_hat = M^-1 b."""
    M: np.ndarray
    M_inv: np.ndarray
    b: np.ndarray
    psi_hat: np.ndarray
    updates: int = 0
    refresh: int = Config.GRAM_REFRESH

    @classmethod
    def fresh(cls, d: int, refresh: int = Config.GRAM_REFRESH, **kwargs):
        return cls(M=np.eye(d), M_inv=np.eye(d), b=np.zeros(d), psi_hat=np.zeros(d),
                   refresh=refresh, **kwargs)

    def inverse_factor(self) -> np.ndarray:
        """Lower-triangular F with F F^T = M^-1."""
        try:
            return np.linalg.cholesky(self.M_inv)
        except np.linalg.LinAlgError:
            eig = np.linalg.eigvalsh(self.M)
            fail(NumericError, f"Gram matrix lost positive definiteness after {self.updates} updates; "
                               f"eigenvalues {eig.tolist()}")


@dataclass
class LinTSState(LinearState):
    lam: float = Config.LINTS_LAMBDA_PRESETS[0]


def gram_update(state: LinearState, x: np.ndarray, W: float) -> LinearState:
    """Rank-one update of M, b and the Sherman-Morrison inverse."""
    state.M += np.outer(x, x)
    state.b += x * W
    Mx = state.M_inv @ x
    state.M_inv -= np.outer(Mx, Mx) / (1.0 + x @ Mx)
    state.updates += 1
    if state.refresh and state.updates % state.refresh == 0:
        logger.debug(f"Refreshing Gram inverse after {state.updates} updates")
        state.M_inv = np.linalg.inv(state.M)
    state.M_inv = 0.5 * (state.M_inv + state.M_inv.T)
    return state


def lints_update(state: LinearState, features: FeatureMatrix, S: RankedList, f: Feedback) -> LinearState:
    for item, W in observed_prefix(S, f):
        gram_update(state, features.X[:, item], W)
    state.psi_hat = state.M_inv @ state.b
    return state


def exploration_radius(t: float, d: int) -> float:
    """v_t = 3 sqrt(d ln t); zero in the first round."""
    return 3.0 * math.sqrt(d * math.log(t)) if t > 1 else 0.0


def lints_sample_rho(state: LinTSState, t: float, K: int, xi: np.ndarray) -> np.ndarray:
    """
    rho = psi_hat + lam v_t sqrt(K) F xi for each row of xi, where F F^T = M^-1.
    Same Gaussian law as the symmetric square root M^-1/2.
    """
    scale = state.lam * exploration_radius(t, state.psi_hat.size) * math.sqrt(K)
    F = state.inverse_factor()
    if np.ndim(xi) == 2:
        return state.psi_hat + scale * (xi @ F.T)
    return state.psi_hat + scale * (F @ xi)


def lints_select(state: LinTSState, features: FeatureMatrix, t: int, K: int,
                 rng: np.random.Generator) -> RankedList:
    xi = rng.standard_normal(features.d)
    rho = lints_sample_rho(state, t, K, xi)
    return RankedList.of(top_k(features.X.T @ rho, K))


def linucb_scores(state: LinearState, features: FeatureMatrix, t: int,
                  sigma: float = Config.LINUCB_SIGMA, delta: float = Config.LINUCB_DELTA) -> np.ndarray:
    """min{1, x^T psi_hat + sigma sqrt(x^T M^-1 x) c_t}, c_t = sqrt(d ln((1+t)/delta))."""
    X = features.X
    c_t = math.sqrt(features.d * math.log((1.0 + t) / delta))
    quad = np.einsum("ij,ij->j", X, state.M_inv @ X)
    return np.minimum(1.0, X.T @ state.psi_hat + sigma * np.sqrt(np.maximum(quad, 0.0)) * c_t)


def cascade_linucb_select(state: LinearState, features: FeatureMatrix, t: int, K: int,
                          sigma: float = Config.LINUCB_SIGMA,
                          delta: float = Config.LINUCB_DELTA) -> RankedList:
    return RankedList.of(top_k(linucb_scores(state, features, t, sigma, delta), K))


def cascade_lints_sample(state: LinearState, xi: np.ndarray, sigma: float = Config.LINTS_SIGMA) -> np.ndarray:
    """psi = psi_hat + sigma F xi with F F^T = M^-1, for one xi or for each row of a 2-D xi."""
    F = state.inverse_factor()
    if np.ndim(xi) == 2:
        return state.psi_hat + sigma * (xi @ F.T)
    return state.psi_hat + sigma * (F @ xi)


def cascade_lints_select(state: LinearState, features: FeatureMatrix, t: int, K: int,
                         rng: np.random.Generator, sigma: float = Config.LINTS_SIGMA) -> RankedList:
    """Sample psi ~ N(psi_hat, sigma^2 M^-1) and rank by x^T psi."""
    psi = cascade_lints_sample(state, rng.standard_normal(features.d), sigma)
    return RankedList.of(top_k(features.X.T @ psi, K))


@dataclass
class SVDResult:
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    iterations: int = 0

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.T


def truncated_svd(A: np.ndarray, d: int, tol: float = Config.SVD_TOL, max_iter: int = Config.SVD_MAX_ITER,
                  oversample: int = Config.SVD_OVERSAMPLE, seed: int = 0) -> SVDResult:
    """
    Top-d singular triplets by subspace iteration on A^T A with Rayleigh-Ritz
    extraction from the small projected matrix A Q.
    Converged when every leading triplet has ||A^T u_i - sigma_i v_i|| <= tol * sigma_i
    (A v_i = sigma_i u_i holds by construction). Residuals at rounding level,
    eps * sigma_1 * sqrt(m L), also count as converged.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        fail(StructuralError, f"Expected a matrix, got shape {A.shape}")
    m, L = A.shape
    if not 1 <= d <= min(m, L):
        fail(StructuralError, f"Target rank d={d} outside 1..{min(m, L)}")
    k = min(d + oversample, m, L)
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(A.T @ rng.standard_normal((m, k)))
    worst = np.inf
    for it in range(1, max_iter + 1):
        B = A @ Q
        Ub, sb, Wbt = np.linalg.svd(B, full_matrices=False)
        U, sv, V = Ub[:, :d], sb[:d], Q @ Wbt[:d].T
        scale = max(float(sb[0]), np.finfo(float).tiny)
        residual = np.linalg.norm(A.T @ U - V * sv, axis=0)
        allowed = np.maximum(tol * sv, np.finfo(float).eps * scale * math.sqrt(m * L))
        worst = float(np.max(residual / np.maximum(sv, np.finfo(float).tiny)))
        if np.all(residual <= allowed):
            break
        Q, _ = np.linalg.qr(A.T @ B)
    else:
        fail(NumericError, f"Truncated SVD did not converge after {max_iter} iterations; "
                           f"worst relative residual {worst:.3e}")
    logger.debug(f"Truncated SVD rank {d} converged in {it} iterations")
    return SVDResult(U=U, S=sv, V=V, iterations=it)


def jacobi_eigenvalues(S: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max())):
        fail(StructuralError, "Jacobi eigensolver needs a square symmetric matrix")
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, float(np.sum(A * A) - np.sum(np.diag(A) ** 2))))
        if off <= tol * max(np.linalg.norm(A), np.finfo(float).tiny):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * col_p - s * col_q, s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * row_p - s * row_q, s * row_p + c * row_q
    else:
        fail(NumericError, f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
    return np.sort(np.diag(A))[::-1]


def load_training_matrix(path: str) -> np.ndarray:
    """Dense 0/1 CSV, one row per user."""
    try:
        A = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as e:
        fail(StructuralError, f"Cannot read training matrix {path}: {e}")
    return A


def generate_features(A_train: np.ndarray, d: int, K: int) -> FeatureMatrix:
    """
    X = diag(S) V^T from the rank-d truncated SVD of the click matrix, rescaled
    by one global factor so the largest column norm is 1/sqrt(K).
    """
    A = np.asarray(A_train, dtype=float)
    if A.ndim != 2 or not np.isin(A, (0.0, 1.0)).all():
        fail(StructuralError, "Training matrix must be a 2-D array of 0/1 entries")
    if not A.any():
        fail(StructuralError, "degenerate training matrix")
    svd = truncated_svd(A, d)
    X = svd.S[:, None] * svd.V.T
    largest = float(np.linalg.norm(X, axis=0).max())
    if largest == 0.0:
        fail(StructuralError, "degenerate training matrix")
    scale = 1.0 / (math.sqrt(K) * largest)
    logger.info(f"Generated {d} x {A.shape[1]} features from {A.shape[0]} rows; scale factor {scale:.6g}")
    return FeatureMatrix(X=X * scale, scale=scale)


class _LinearPolicy(CascadePolicy):
    def __init__(self, L: int, K: int, features: FeatureMatrix, refresh: int = Config.GRAM_REFRESH):
        if features.L != L:
            fail(StructuralError, f"Feature matrix has {features.L} items, expected L={L}")
        self.features = features
        self.refresh = refresh
        super().__init__(L, K)

    def reset(self):
        self.state = LinearState.fresh(self.features.d, refresh=self.refresh)

    def update(self, S, f):
        lints_update(self.state, self.features, S, f)


class LinTSCascade(_LinearPolicy):
    key = "lints-cascade"

    def __init__(self, L: int, K: int, features: FeatureMatrix, lam: float = Config.LINTS_LAMBDA_PRESETS[0],
                 refresh: int = Config.GRAM_REFRESH):
        if lam <= 0:
            fail(StructuralError, f"lambda must be positive, got {lam}")
        self.lam = lam
        super().__init__(L, K, features, refresh)

    @property
    def display_name(self):
        return f"LinTS-Cascade({self.lam:g})"

    def reset(self):
        self.state = LinTSState.fresh(self.features.d, refresh=self.refresh, lam=self.lam)

    def select(self, t, rng):
        return lints_select(self.state, self.features, t, self.K, rng)


class CascadeLinUCB(_LinearPolicy):
    key = "cascade-linucb"
    display_name = "CascadeLinUCB"

    def __init__(self, L, K, features, sigma: float = Config.LINUCB_SIGMA,
                 delta: float = Config.LINUCB_DELTA, refresh: int = Config.GRAM_REFRESH):
        self.sigma = sigma
        self.delta = delta
        super().__init__(L, K, features, refresh)

    def select(self, t, rng):
        return cascade_linucb_select(self.state, self.features, t, self.K, self.sigma, self.delta)


class CascadeLinTS(_LinearPolicy):
    key = "cascade-lints"
    display_name = "CascadeLinTS"

    def __init__(self, L, K, features, sigma: float = Config.LINTS_SIGMA, refresh: int = Config.GRAM_REFRESH):
        self.sigma = sigma
        super().__init__(L, K, features, refresh)

    def select(self, t, rng):
        return cascade_lints_select(self.state, self.features, t, self.K, rng, self.sigma)
