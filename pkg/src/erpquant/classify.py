"""BLDA (evidence-maximised Bayesian linear regression) and extreme learning machine."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DimensionError, TrainingError

BLDA_TOL = 1e-6
BLDA_MAX_ITERS = 100


def _signed(labels):
    y = np.where(np.asarray(labels) > 0, 1, -1)
    n_pos = int(np.count_nonzero(y > 0))
    if n_pos == 0 or n_pos == y.size:
        raise TrainingError("training labels contain a single class")
    return y, n_pos, y.size - n_pos


def _features(features, n_features=None):
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise DimensionError(f"features must be 1-D or 2-D, got shape {x.shape}")
    if n_features is not None and x.shape[1] != n_features:
        raise DimensionError(f"model expects {n_features} features, got {x.shape[1]}")
    return x


@dataclass(frozen=True)
class BldaModel:
    weights: np.ndarray  # feature weights followed by the bias
    alpha: float
    beta: float
    n_iters: int
    converged: bool = True

    @property
    def n_features(self):
        return self.weights.size - 1


def train_blda(features, labels) -> BldaModel:
    """Fit BLDA on rows of ``features``.

    Regression targets are ``N/N+`` for targets and ``-N/N-`` for
    non-targets. The prior precision ``alpha`` (shared with the bias) and the
    noise precision ``beta`` are re-estimated by the MacKay fixed point using
    one eigendecomposition of the augmented Gram matrix.
    """
    x = _features(features)
    y, n_pos, n_neg = _signed(labels)
    if n_pos < 2 or n_neg < 2:
        raise TrainingError("BLDA needs at least two samples per class")
    if x.shape[0] != y.size:
        raise DimensionError(f"{x.shape[0]} feature rows but {y.size} labels")
    n = y.size
    t = np.where(y > 0, n / n_pos, -n / n_neg)

    xa = np.hstack([x, np.ones((n, 1))]).T  # (d+1) x n
    lam, v = np.linalg.eigh(xa @ xa.T)
    lam = np.clip(lam, 0.0, None)
    vxy = v.T @ (xa @ t)

    def solve(alpha, beta):
        return beta * (v @ (vxy / (beta * lam + alpha)))

    alpha, beta = 25.0, 1.0
    converged = False
    it = 0
    while it < BLDA_MAX_ITERS:
        it += 1
        w = solve(alpha, beta)
        err = np.sum((t - w @ xa) ** 2)
        gamma = np.sum(beta * lam / (beta * lam + alpha))
        new_alpha = gamma / (w @ w)
        new_beta = (n - gamma) / err
        d_alpha = abs(new_alpha - alpha) / abs(new_alpha)
        d_beta = abs(new_beta - beta) / abs(new_beta)
        alpha, beta = new_alpha, new_beta
        if d_alpha < BLDA_TOL and d_beta < BLDA_TOL:
            converged = True
            break
    if not converged:
        warnings.warn(f"BLDA hyperparameters did not converge in {BLDA_MAX_ITERS} iterations",
                      RuntimeWarning, stacklevel=2)
    return BldaModel(weights=solve(alpha, beta), alpha=float(alpha), beta=float(beta),
                     n_iters=it, converged=converged)


def predict_linear(model, features):
    """``w . x + bias``. Returns a float for one vector, an array for a batch."""
    w = model.weights if isinstance(model, BldaModel) else np.asarray(model, dtype=np.float64)
    single = np.ndim(features) == 1
    x = _features(features, w.size - 1)
    scores = x @ w[:-1] + w[-1]
    return float(scores[0]) if single else scores


# ---------------------------------------------------------------------------
# ELM

CODEBOOKS = {
    2: np.array([-1.0, 1.0]),
    3: np.array([0.0, 1.0]),
    4: np.array([-1.0, -0.33, 0.33, 1.0]),
    5: np.array([-1.0, -5 / 7, -3 / 7, -1 / 7, 1 / 7, 3 / 7, 5 / 7, 1.0]),
}
ELM_CONDITIONS = (1, 2, 3, 4, 5)
STD_FLOOR = 1e-12
PINV_RCOND = 1e-10


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def init_elm_weights(condition, seed, n_hidden=200, n_features=1024):
    """Random input weights ``(n_hidden, n_features)`` and biases for an init condition.

    Condition 1 draws uniformly on [-1, 1]; conditions 2-5 draw uniformly
    from the level tables in :data:`CODEBOOKS`.
    """
    if condition not in ELM_CONDITIONS:
        raise ConfigurationError(f"unknown ELM init condition {condition!r}; valid: 1-5")
    rng = np.random.default_rng(seed)
    if condition == 1:
        w = rng.uniform(-1.0, 1.0, size=(n_hidden, n_features + 1))
    else:
        book = CODEBOOKS[condition]
        w = book[rng.integers(0, book.size, size=(n_hidden, n_features + 1))]
    return w[:, :-1].copy(), w[:, -1].copy()


@dataclass(frozen=True)
class ElmModel:
    input_weights: np.ndarray
    input_biases: np.ndarray
    output_weights: np.ndarray
    feature_mean: np.ndarray
    feature_std: np.ndarray
    init_condition: int = 1
    activation: str = "logistic"
    meta: dict = field(default_factory=dict)

    @property
    def n_hidden(self):
        return self.output_weights.size

    def with_output_weights(self, beta):
        return replace(self, output_weights=np.asarray(beta, dtype=np.float64))


def hidden_layer(x, input_weights, input_biases):
    return sigmoid(x @ np.asarray(input_weights).T + np.asarray(input_biases))


def solve_output_weights(h, t, rcond=PINV_RCOND):
    """Minimum-norm least-squares ``beta`` for ``H beta ~ T`` via a truncated SVD."""
    u, s, vt = np.linalg.svd(np.asarray(h, dtype=np.float64), full_matrices=False)
    keep = s > rcond * s[0] if s.size else s.astype(bool)
    return vt[keep].T @ ((u[:, keep].T @ np.asarray(t, dtype=np.float64)) / s[keep])


def train_elm(input_weights, input_biases, features, labels, init_condition=1) -> ElmModel:
    x = _features(features, np.shape(input_weights)[1])
    y, _, _ = _signed(labels)
    if x.shape[0] != y.size:
        raise DimensionError(f"{x.shape[0]} feature rows but {y.size} labels")
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), STD_FLOOR)
    h = hidden_layer((x - mean) / std, input_weights, input_biases)
    beta = solve_output_weights(h, y.astype(np.float64))
    return ElmModel(
        input_weights=np.asarray(input_weights, dtype=np.float64),
        input_biases=np.asarray(input_biases, dtype=np.float64),
        output_weights=beta,
        feature_mean=mean,
        feature_std=std,
        init_condition=init_condition,
    )


def predict_elm(model: ElmModel, features):
    single = np.ndim(features) == 1
    x = _features(features, model.input_weights.shape[1])
    h = hidden_layer((x - model.feature_mean) / model.feature_std,
                     model.input_weights, model.input_biases)
    scores = h @ model.output_weights
    return float(scores[0]) if single else scores
