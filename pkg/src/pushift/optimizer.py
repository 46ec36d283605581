"""AMSGrad and the training loop for linear-in-parameter PU models."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalError
from .model import FeatureMap, LinearModel
from .risk import PUSample, RiskSpec, objective_and_gradient, risk_from_scores

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 500
    batch_size: int | None = None  # None means full batch
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if int(self.epochs) < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size is not None and int(self.batch_size) < 1:
            raise ValueError("batch_size must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")


@dataclass
class AmsGradState:
    m: np.ndarray
    v: np.ndarray
    v_hat: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, dim: int) -> "AmsGradState":
        return cls(np.zeros(dim), np.zeros(dim), np.zeros(dim), 0)


def amsgrad_step(state: AmsGradState, weights, gradient, config: TrainConfig):
    """One AMSGrad update; returns ``(new_state, new_weights)`` without mutating inputs."""
    w = np.asarray(weights, dtype=float)
    g = np.asarray(gradient, dtype=float)
    if not (w.shape == g.shape == state.m.shape):
        raise DimensionError(f"shape mismatch: weights {w.shape}, gradient {g.shape}, state {state.m.shape}")
    if not np.all(np.isfinite(g)):
        bad = np.flatnonzero(~np.isfinite(g))
        raise NumericalError(f"non-finite gradient at step {state.t + 1}, components {bad[:5].tolist()}")
    b1, b2 = config.beta1, config.beta2
    m = b1 * state.m + (1.0 - b1) * g
    with np.errstate(over="ignore"):
        v = b2 * state.v + (1.0 - b2) * g * g
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"second moment overflowed at step {state.t + 1}; the gradient is too large to square")
    v_hat = np.maximum(state.v_hat, v)
    new_w = w - config.learning_rate * m / (np.sqrt(v_hat) + config.epsilon)
    return AmsGradState(m, v, v_hat, state.t + 1), new_w


@dataclass
class TrainResult:
    model: LinearModel
    best_objective: float
    best_epoch: int
    history: list = field(default_factory=list)


def train(spec: RiskSpec, sample: PUSample, feature_map: FeatureMap, config: TrainConfig | None = None) -> LinearModel:
    """Minimise the risk selected by ``spec``; returns the best full-batch iterate."""
    return train_with_history(spec, sample, feature_map, config).model


def train_with_history(spec, sample, feature_map, config=None) -> TrainResult:
    config = config or TrainConfig()
    if feature_map.input_dim != sample.dim:
        raise DimensionError(f"feature map expects {feature_map.input_dim}-D patterns, sample has {sample.dim}-D")
    phi_p = feature_map.transform(sample.positives)
    phi_u = feature_map.transform(sample.unlabeled)
    return train_on_features(spec, phi_p, phi_u, sample.train_prior, feature_map, config)


def train_on_features(spec, phi_p, phi_u, train_prior, feature_map, config) -> TrainResult:
    """Training loop on precomputed feature matrices (shared by ``train``)."""
    dim = phi_p.shape[1]
    w = np.zeros(dim)
    state = AmsGradState.zeros(dim)
    rng = np.random.default_rng(config.seed)
    # bias (last weight) is never decayed
    decay_mask = np.ones(dim)
    decay_mask[-1] = 0.0

    n_p, n_u = len(phi_p), len(phi_u)
    best_w, best_obj, best_epoch = w.copy(), np.inf, 0
    history = []
    for epoch in range(1, int(config.epochs) + 1):
        if config.batch_size is None:
            batches = [(slice(None), slice(None))]
        else:
            batches = _minibatches(n_p, n_u, int(config.batch_size), rng)
        for idx_p, idx_u in batches:
            _, grad = objective_and_gradient(spec, w, phi_p[idx_p], phi_u[idx_u], train_prior)
            if config.weight_decay:
                grad = grad + config.weight_decay * decay_mask * w
            state, w = amsgrad_step(state, w, grad, config)
        obj = _full_objective(spec, w, phi_p, phi_u, train_prior, config, decay_mask)
        if not np.isfinite(obj):
            raise NumericalError(f"objective became non-finite at epoch {epoch}")
        history.append(obj)
        if obj < best_obj:
            best_w, best_obj, best_epoch = w.copy(), obj, epoch
    log.debug("best objective %.6g at epoch %d/%d", best_obj, best_epoch, config.epochs)
    return TrainResult(LinearModel(feature_map, best_w), float(best_obj), best_epoch, history)


def _full_objective(spec, w, phi_p, phi_u, train_prior, config, decay_mask):
    obj = risk_from_scores(spec, train_prior, phi_p @ w, phi_u @ w)
    if config.weight_decay:
        obj += 0.5 * config.weight_decay * float(np.sum(decay_mask * w * w))
    return obj


def _minibatches(n_p, n_u, batch_size, rng):
    """Split P and U proportionally into about (n_p + n_u) / batch_size batches."""
    n_batches = max(1, int(np.ceil((n_p + n_u) / batch_size)))
    n_batches = min(n_batches, n_p, n_u)
    perm_p = np.array_split(rng.permutation(n_p), n_batches)
    perm_u = np.array_split(rng.permutation(n_u), n_batches)
    return list(zip(perm_p, perm_u))
