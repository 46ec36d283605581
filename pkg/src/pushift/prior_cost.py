"""Conversions between class-prior shift and asymmetric misclassification cost.

A PU task is described by the prior of the unlabeled pool ``pi``, the prior of
the test distribution ``pi_prime`` and the false-positive cost ``alpha`` (the
false-negative cost is ``1 - alpha``).  Any such task has the same Bayes
classifier as

* a pure shift task from ``pi`` to ``pi_unif`` with symmetric cost, and
* a pure asymmetric task at prior ``pi`` with cost ``alpha_unif``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def check_open_unit(value: float, name: str) -> float:
    """Return ``value`` as float, raising ``DomainError`` unless 0 < value < 1."""
    value = float(value)
    if not (0.0 < value < 1.0) or math.isnan(value):
        raise DomainError(f"{name} must lie strictly inside (0, 1), got {value!r}")
    return value


def sign(x):
    """Sign with the convention sign(0) = +1 (works on scalars and arrays)."""
    out = np.where(np.asarray(x) >= 0, 1, -1)
    if out.ndim == 0:
        return int(out)
    return out


def alpha_from_shift(train_prior: float, test_prior: float) -> float:
    """False-positive cost whose Bayes rule at ``train_prior`` matches the
    symmetric Bayes rule at ``test_prior``."""
    pi = check_open_unit(train_prior, "train_prior")
    pp = check_open_unit(test_prior, "test_prior")
    return (pi - pi * pp) / (pp + pi - 2.0 * pi * pp)


def prior_from_alpha(train_prior: float, fp_cost: float) -> float:
    """Inverse of :func:`alpha_from_shift` in its second argument."""
    pi = check_open_unit(train_prior, "train_prior")
    a = check_open_unit(fp_cost, "fp_cost")
    return (pi - a * pi) / (pi + a - 2.0 * a * pi)


def unify_prior(test_prior: float, fp_cost: float) -> float:
    """Fold an asymmetric cost at ``test_prior`` into an equivalent prior."""
    pp = check_open_unit(test_prior, "test_prior")
    a = check_open_unit(fp_cost, "fp_cost")
    return (pp - a * pp) / (pp + a - 2.0 * a * pp)


def unify_alpha(train_prior: float, pi_unif: float) -> float:
    pi = check_open_unit(train_prior, "train_prior")
    pu = check_open_unit(pi_unif, "pi_unif")
    return (pi - pi * pu) / (pu + pi - 2.0 * pi * pu)


@dataclass(frozen=True)
class TestCondition:
    """Training prior, test prior and false-positive cost of a PU task."""

    __test__ = False  # not a pytest class

    train_prior: float
    test_prior: float
    fp_cost: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "train_prior", check_open_unit(self.train_prior, "train_prior"))
        object.__setattr__(self, "test_prior", check_open_unit(self.test_prior, "test_prior"))
        object.__setattr__(self, "fp_cost", check_open_unit(self.fp_cost, "fp_cost"))

    def shift(self) -> float:
        return self.test_prior - self.train_prior


@dataclass(frozen=True)
class UnifiedCondition:
    pi_unif: float
    alpha_unif: float

    def __post_init__(self):
        check_open_unit(self.pi_unif, "pi_unif")
        check_open_unit(self.alpha_unif, "alpha_unif")


def reduce(condition: TestCondition) -> UnifiedCondition:
    """Reduce a combined shift + asymmetric-cost task to its canonical form."""
    pi_unif = unify_prior(condition.test_prior, condition.fp_cost)
    return UnifiedCondition(pi_unif, unify_alpha(condition.train_prior, pi_unif))
