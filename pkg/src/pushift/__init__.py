"""PU classification under class-prior shift and asymmetric misclassification costs."""

from .density_ratio import RatioModel, UlsifGrid, dr_classify, fit_ulsif, ratio_at
from .errors import (
    DimensionError,
    DomainError,
    EmptySampleError,
    NumericalError,
    ParseError,
    PUError,
    UnsupportedLossError,
)
from .losses import Loss, linear_odd_slope, loss_subgradient, loss_value
from .model import FeatureMap, LinearModel, predict_label, predict_score
from .optimizer import TrainConfig, amsgrad_step, train
from .prior_cost import (
    TestCondition,
    UnifiedCondition,
    alpha_from_shift,
    prior_from_alpha,
    reduce,
    unify_alpha,
    unify_prior,
)
from .risk import PUSample, RiskSpec, empirical_risk, risk_gradient

__version__ = "0.1.0"

__all__ = [
    "alpha_from_shift",
    "amsgrad_step",
    "DimensionError",
    "DomainError",
    "dr_classify",
    "empirical_risk",
    "EmptySampleError",
    "FeatureMap",
    "fit_ulsif",
    "linear_odd_slope",
    "LinearModel",
    "Loss",
    "loss_subgradient",
    "loss_value",
    "NumericalError",
    "ParseError",
    "predict_label",
    "predict_score",
    "prior_from_alpha",
    "PUError",
    "PUSample",
    "ratio_at",
    "RatioModel",
    "reduce",
    "risk_gradient",
    "RiskSpec",
    "TestCondition",
    "train",
    "TrainConfig",
    "UlsifGrid",
    "UnifiedCondition",
    "unify_alpha",
    "unify_prior",
    "UnsupportedLossError",
]
