"""Empirical PU risk estimators and their weight gradients.

Every estimator has the form

    mean_p[a*l(g) + b*l(-g)] + c * mean_u[l(-g)]

for coefficients fixed by the task (ordinary, prior-shifted or asymmetric),
optionally with the implicit negative-class part clamped at zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, EmptySampleError, UnsupportedLossError
from .losses import Loss, linear_odd_slope, loss_subgradient, loss_value
from .model import LinearModel, as_patterns
from .prior_cost import check_open_unit

PU = "pu"
PU_SHIFT = "pu_shift"
PU_ASYM = "pu_asym"
MODES = (PU, PU_SHIFT, PU_ASYM)


@dataclass(frozen=True, eq=False)
class PUSample:
    positives: np.ndarray
    unlabeled: np.ndarray
    train_prior: float

    def __post_init__(self):
        xp = np.asarray(self.positives, dtype=float)
        xu = np.asarray(self.unlabeled, dtype=float)
        if xp.size == 0 or xu.size == 0:
            raise EmptySampleError("a PU sample needs at least one positive and one unlabeled pattern")
        xp, _ = as_patterns(xp if xp.ndim == 2 else xp.reshape(len(xp), -1))
        xu, _ = as_patterns(xu if xu.ndim == 2 else xu.reshape(len(xu), -1))
        if xp.shape[1] != xu.shape[1]:
            raise DimensionError("positive and unlabeled patterns differ in dimensionality")
        object.__setattr__(self, "positives", xp)
        object.__setattr__(self, "unlabeled", xu)
        object.__setattr__(self, "train_prior", check_open_unit(self.train_prior, "train_prior"))

    @property
    def n_p(self) -> int:
        return len(self.positives)

    @property
    def n_u(self) -> int:
        return len(self.unlabeled)

    @property
    def dim(self) -> int:
        return self.positives.shape[1]


@dataclass(frozen=True)
class RiskSpec:
    """Which estimator to minimise.

    ``test_prior`` is used by ``pu_shift``, ``fp_cost`` by ``pu_asym``.
    """

    loss: Loss = Loss.SQUARED
    mode: str = PU
    test_prior: float | None = None
    fp_cost: float | None = None
    non_negative: bool = False

    def __post_init__(self):
        object.__setattr__(self, "loss", Loss.parse(self.loss))
        if self.mode not in MODES:
            raise ValueError(f"unknown risk mode {self.mode!r}")
        if self.mode == PU_SHIFT:
            if self.test_prior is None:
                raise ValueError("pu_shift needs a test_prior")
            object.__setattr__(self, "test_prior", check_open_unit(self.test_prior, "test_prior"))
        if self.mode == PU_ASYM:
            if self.fp_cost is None:
                raise ValueError("pu_asym needs an fp_cost")
            object.__setattr__(self, "fp_cost", check_open_unit(self.fp_cost, "fp_cost"))
            if self.non_negative:
                raise ValueError(
                    "non-negative correction is not defined for pu_asym; "
                    "convert with prior_from_alpha and use pu_shift"
                )


def _coefficients(mode, pi, param):
    """(a, b, c) of mean_p[a l(g) + b l(-g)] + c mean_u[l(-g)]."""
    if mode == PU:
        return pi, -pi, 1.0
    if mode == PU_SHIFT:
        pp = param
        return pp, -(pi - pi * pp) / (1.0 - pi), (1.0 - pp) / (1.0 - pi)
    a = param
    return pi * (1.0 - a), -pi * a, a


def _spec_param(spec):
    return spec.test_prior if spec.mode == PU_SHIFT else spec.fp_cost


def risk_from_scores(spec: RiskSpec, pi: float, s_p, s_u, with_grad: bool = False):
    """Risk value from decision scores; with ``with_grad`` also d(risk)/d(score).

    Returns ``value`` or ``(value, d_p, d_u)`` where ``d_p``/``d_u`` already
    carry the 1/n averaging factors.
    """
    loss = spec.loss
    n_p, n_u = len(s_p), len(s_u)
    if n_p == 0 or n_u == 0:
        raise EmptySampleError("empty positive or unlabeled sample")
    if with_grad and not loss.is_surrogate:
        raise UnsupportedLossError("gradients need a surrogate loss")
    lp_pos = loss_value(loss, s_p)
    lp_neg = loss_value(loss, -s_p)
    lu_neg = loss_value(loss, -s_u)

    if not spec.non_negative:
        a, b, c = _coefficients(spec.mode, pi, _spec_param(spec))
        value = float(np.mean(a * lp_pos + b * lp_neg) + c * np.mean(lu_neg))
        if not with_grad:
            return value
        d_p = (a * loss_subgradient(loss, s_p) - b * loss_subgradient(loss, -s_p)) / n_p
        d_u = -c * loss_subgradient(loss, -s_u) / n_u
        return value, d_p, d_u

    if spec.mode == PU:
        pos_coef, neg_coef = pi, 1.0
    else:
        pp = spec.test_prior
        pos_coef, neg_coef = pp, (1.0 - pp) / (1.0 - pi)
    r_neg = float(np.mean(lu_neg) - pi * np.mean(lp_neg))
    active = r_neg < 0.0  # boundary r_neg == 0 is treated as unclamped
    value = float(pos_coef * np.mean(lp_pos) + neg_coef * max(0.0, r_neg))
    if not with_grad:
        return value
    d_p = pos_coef * loss_subgradient(loss, s_p) / n_p
    if active:
        d_u = np.zeros(n_u)
    else:
        d_p = d_p + neg_coef * pi * loss_subgradient(loss, -s_p) / n_p
        d_u = -neg_coef * loss_subgradient(loss, -s_u) / n_u
    return value, d_p, d_u


def _scores(model: LinearModel, sample: PUSample):
    fm = model.feature_map
    if fm.input_dim != sample.dim:
        raise DimensionError(f"model expects {fm.input_dim}-D patterns, sample has {sample.dim}-D")
    return fm.transform(sample.positives) @ model.weights, fm.transform(sample.unlabeled) @ model.weights


def empirical_risk(spec: RiskSpec, model: LinearModel, sample: PUSample) -> float:
    s_p, s_u = _scores(model, sample)
    return risk_from_scores(spec, sample.train_prior, s_p, s_u)


def empirical_pu_risk(model, sample, loss) -> float:
    return empirical_risk(RiskSpec(loss, PU), model, sample)


def empirical_shift_risk(model, sample, test_prior, loss) -> float:
    return empirical_risk(RiskSpec(loss, PU_SHIFT, test_prior=test_prior), model, sample)


def empirical_asym_risk(model, sample, fp_cost, loss) -> float:
    return empirical_risk(RiskSpec(loss, PU_ASYM, fp_cost=fp_cost), model, sample)


def nn_pu_risk(model, sample, loss) -> float:
    return empirical_risk(RiskSpec(loss, PU, non_negative=True), model, sample)


def nn_shift_risk(model, sample, test_prior, loss) -> float:
    return empirical_risk(RiskSpec(loss, PU_SHIFT, test_prior=test_prior, non_negative=True), model, sample)


def objective_and_gradient(spec: RiskSpec, weights, phi_p, phi_u, train_prior):
    """Risk and weight gradient on precomputed feature matrices."""
    s_p = phi_p @ weights
    s_u = phi_u @ weights
    value, d_p, d_u = risk_from_scores(spec, train_prior, s_p, s_u, with_grad=True)
    return value, phi_p.T @ d_p + phi_u.T @ d_u


def risk_gradient(spec: RiskSpec, model: LinearModel, sample: PUSample) -> np.ndarray:
    fm = model.feature_map
    if fm.input_dim != sample.dim:
        raise DimensionError(f"model expects {fm.input_dim}-D patterns, sample has {sample.dim}-D")
    _, grad = objective_and_gradient(
        spec, model.weights, fm.transform(sample.positives), fm.transform(sample.unlabeled), sample.train_prior
    )
    return grad


class ShiftDecomposition(NamedTuple):
    linear_term: float
    gamma_term: float
    unlabeled_term: float

    @property
    def total(self) -> float:
        return self.linear_term + self.gamma_term + self.unlabeled_term


def decompose_shift_risk(model, sample, test_prior, loss) -> ShiftDecomposition:
    """Split the shifted risk into a linear part, a part scaled by the shift
    ``gamma = test_prior - train_prior``, and an unlabeled part.

    The middle term is the only one that can break convexity (when gamma < 0).
    """
    loss = Loss.parse(loss)
    slope = linear_odd_slope(loss)
    if slope is None:
        raise UnsupportedLossError(f"{loss.value} loss is not linear-odd")
    pi = sample.train_prior
    gamma = check_open_unit(test_prior, "test_prior") - pi
    s_p, s_u = _scores(model, sample)
    linear = slope * pi * float(np.mean(s_p))
    middle = gamma * float(np.mean(loss_value(loss, s_p) + pi / (1.0 - pi) * loss_value(loss, -s_p)))
    unlabeled = (1.0 - gamma / (1.0 - pi)) * float(np.mean(loss_value(loss, -s_u)))
    return ShiftDecomposition(linear, middle, unlabeled)
