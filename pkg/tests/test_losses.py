import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pushift.errors import UnsupportedLossError
from pushift.losses import Loss, linear_odd_slope, loss_subgradient, loss_value

SURROGATES = [Loss.SQUARED, Loss.LOGISTIC, Loss.DOUBLE_HINGE]
margins = st.floats(min_value=-50, max_value=50, allow_nan=False)


def test_value_examples():
    assert loss_value(Loss.SQUARED, 1.0) == 0.0
    assert loss_value(Loss.LOGISTIC, 0.0) == pytest.approx(math.log(2), abs=1e-12)
    assert loss_value(Loss.DOUBLE_HINGE, -1.0) == 1.0
    assert loss_value(Loss.DOUBLE_HINGE, 0.0) == 0.5
    assert loss_value(Loss.DOUBLE_HINGE, -3.0) == 3.0
    assert loss_value(Loss.ZERO_ONE, 0.0) == 0.0
    assert loss_value(Loss.ZERO_ONE, -0.1) == 1.0


def test_subgradient_examples():
    assert loss_subgradient(Loss.SQUARED, 1.0) == 0.0
    assert loss_subgradient(Loss.LOGISTIC, 0.0) == pytest.approx(-0.5, abs=1e-15)
    assert loss_subgradient(Loss.DOUBLE_HINGE, -2.0) == -1.0


def test_double_hinge_kinks_take_left_derivative():
    assert loss_subgradient(Loss.DOUBLE_HINGE, -1.0) == -1.0
    assert loss_subgradient(Loss.DOUBLE_HINGE, 1.0) == -0.5


def test_zero_one_has_no_subgradient():
    with pytest.raises(UnsupportedLossError):
        loss_subgradient(Loss.ZERO_ONE, 0.3)


def test_slopes():
    assert linear_odd_slope(Loss.SQUARED) == -4
    assert linear_odd_slope(Loss.LOGISTIC) == -1
    assert linear_odd_slope(Loss.DOUBLE_HINGE) == -1
    assert linear_odd_slope(Loss.ZERO_ONE) is None


@pytest.mark.parametrize("text", ["double-hinge", "double_hinge", "zero-one", "squared", Loss.LOGISTIC])
def test_parse_accepts_cli_spellings(text):
    assert isinstance(Loss.parse(text), Loss)


def test_parse_rejects_unknown():
    with pytest.raises(ValueError):
        Loss.parse("huber")


def test_logistic_is_overflow_safe():
    z = np.array([-1000.0, -800.0, 800.0, 1000.0])
    v = loss_value(Loss.LOGISTIC, z)
    assert np.all(np.isfinite(v))
    assert v[0] == pytest.approx(1000.0) and v[-1] == 0.0
    g = loss_subgradient(Loss.LOGISTIC, z)
    assert g.tolist() == pytest.approx([-1.0, -1.0, 0.0, 0.0])


def test_vector_and_scalar_agree():
    z = np.linspace(-3, 3, 13)
    for loss in Loss:
        vec = loss_value(loss, z)
        assert vec.tolist() == pytest.approx([loss_value(loss, float(v)) for v in z])
        assert isinstance(loss_value(loss, 0.5), float)


@pytest.mark.parametrize("loss", SURROGATES)
def test_linear_odd_by_sampling(loss):
    z = np.random.default_rng(0).uniform(-10, 10, 1000)
    c = linear_odd_slope(loss)
    assert np.max(np.abs(loss_value(loss, z) - loss_value(loss, -z) - c * z)) < 1e-9


@pytest.mark.parametrize("loss", SURROGATES)
def test_convexity_by_sampling(loss):
    rng = np.random.default_rng(1)
    z1, z2 = rng.uniform(-10, 10, (2, 1000))
    t = rng.uniform(0, 1, 1000)
    lhs = loss_value(loss, t * z1 + (1 - t) * z2)
    rhs = t * loss_value(loss, z1) + (1 - t) * loss_value(loss, z2)
    assert np.all(lhs <= rhs + 1e-12)


@pytest.mark.parametrize("loss", list(Loss))
@given(z=margins)
def test_values_non_negative(loss, z):
    assert loss_value(loss, z) >= 0


@pytest.mark.parametrize("loss", SURROGATES)
@given(z=margins, z2=margins)
def test_subgradient_inequality(loss, z, z2):
    g = loss_subgradient(loss, z)
    assert loss_value(loss, z2) >= loss_value(loss, z) + g * (z2 - z) - 1e-9 * max(1.0, abs(z2 - z) ** 2)


@pytest.mark.parametrize("loss", SURROGATES)
def test_subgradient_matches_finite_difference(loss):
    z = np.random.default_rng(2).uniform(-5, 5, 1000)
    for kink in loss.kinks:
        z = z[np.abs(z - kink) >= 1e-3]
    h = 1e-6
    fd = (loss_value(loss, z + h) - loss_value(loss, z - h)) / (2 * h)
    assert np.max(np.abs(loss_subgradient(loss, z) - fd)) < 1e-5
