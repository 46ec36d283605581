"""Margin losses used by the risk estimators.

All functions are vectorised over the margin ``z`` and return arrays of the
same shape (or a float for scalar input).
"""

from __future__ import annotations

import enum

import numpy as np
from scipy.special import expit

from .errors import UnsupportedLossError


class Loss(enum.Enum):
    ZERO_ONE = "zero-one"
    SQUARED = "squared"
    LOGISTIC = "logistic"
    DOUBLE_HINGE = "double-hinge"

    @classmethod
    def parse(cls, name: "str | Loss") -> "Loss":
        """Accept a ``Loss`` or a name such as ``"double-hinge"`` / ``"double_hinge"``."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        for member in cls:
            if member.value == key:
                return member
        raise UnsupportedLossError(f"unknown loss {name!r}")

    @property
    def is_surrogate(self) -> bool:
        return self is not Loss.ZERO_ONE

    # kinks of the double hinge; the other surrogates are smooth
    @property
    def kinks(self) -> tuple:
        return (-1.0, 1.0) if self is Loss.DOUBLE_HINGE else ()


def _out(value, z):
    return float(value) if np.ndim(z) == 0 else value


def loss_value(loss, margin):
    loss = Loss.parse(loss)
    z = np.asarray(margin, dtype=float)
    if loss is Loss.ZERO_ONE:
        v = np.where(z >= 0, 0.0, 1.0)
    elif loss is Loss.SQUARED:
        v = (1.0 - z) ** 2
    elif loss is Loss.LOGISTIC:
        # overflow-safe log(1 + exp(-z))
        v = np.maximum(0.0, -z) + np.log1p(np.exp(-np.abs(z)))
    else:
        v = np.maximum(-z, np.maximum(0.0, 0.5 - 0.5 * z))
    return _out(v, margin)


def loss_subgradient(loss, margin):
    """Derivative of the loss in the margin; left derivative at double-hinge kinks."""
    loss = Loss.parse(loss)
    z = np.asarray(margin, dtype=float)
    if loss is Loss.ZERO_ONE:
        raise UnsupportedLossError("the zero-one loss has no useful subgradient")
    if loss is Loss.SQUARED:
        g = -2.0 * (1.0 - z)
    elif loss is Loss.LOGISTIC:
        g = -expit(-z)
    else:
        g = np.where(z <= -1.0, -1.0, np.where(z <= 1.0, -0.5, 0.0))
    return _out(g, margin)


_SLOPES = {Loss.SQUARED: -4.0, Loss.LOGISTIC: -1.0, Loss.DOUBLE_HINGE: -1.0}


def linear_odd_slope(loss):
    """Constant ``c`` with loss(z) - loss(-z) = c*z, or ``None`` if no such ``c``."""
    return _SLOPES.get(Loss.parse(loss))
