import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ibpfourier.series_core import (IdenticallyZeroTail, SeriesAtInfinity, decay_order_from_series,
                                    differentiate_series, expand_coulomb1d, newton_binomial_coeff)


def test_newton_binomial_examples():
    assert newton_binomial_coeff(0) == 1.0
    assert newton_binomial_coeff(1) == -0.5
    assert newton_binomial_coeff(2) == 0.375


def test_newton_binomial_ratio_and_factorial_formula():
    for n in range(0, 30):
        b = newton_binomial_coeff(n)
        exact = (-1) ** n * math.factorial(2 * n) / (2 ** (2 * n) * math.factorial(n) ** 2)
        np.testing.assert_allclose(b, exact, rtol=1e-14)
        np.testing.assert_allclose(newton_binomial_coeff(n + 1) / b, -(2 * n + 1) / (2 * n + 2), rtol=1e-14)


def test_newton_binomial_is_sqrt_series():
    # sum b_n t^n = (1 + t)^(-1/2)
    t = 0.3
    s = sum(newton_binomial_coeff(n) * t**n for n in range(60))
    np.testing.assert_allclose(s, 1 / math.sqrt(1 + t), rtol=1e-14)


def test_expand_coulomb_examples():
    s = expand_coulomb1d(2.0, "positive", 4)
    assert s.coefficients == (1.0, 2.0, 4.0, 8.0)
    assert s.radius == 0.5
    assert expand_coulomb1d(0.0, "positive", 4).coefficients == (1.0, 0.0, 0.0, 0.0)
    assert expand_coulomb1d(2.0, "negative", 3).coefficients == (-1.0, -2.0, -4.0)


def test_expand_coulomb_zero_shift_radius_capped():
    assert expand_coulomb1d(0.0, order=4).radius == 1e6


def test_expand_coulomb_rejects_order_zero():
    with pytest.raises(ValueError):
        expand_coulomb1d(2.0, order=0)


def test_differentiate_examples():
    d = differentiate_series(expand_coulomb1d(2.0, order=4))
    assert d.coefficients == (0.0, -1.0, -4.0, -12.0)
    assert d.truncation_order == 4
    assert d.radius == 0.5
    assert differentiate_series(expand_coulomb1d(0.0, order=4)).coefficients == (0.0, -1.0, 0.0, 0.0)


def test_differentiate_rejects_order_one():
    with pytest.raises(ValueError):
        differentiate_series(expand_coulomb1d(2.0, order=1))


def test_differentiate_matches_finite_difference():
    s = expand_coulomb1d(2.0, order=24)
    d = differentiate_series(s)
    x = 0.01
    X, h = 1 / x, 1e-3
    fd = (s.evaluate(1 / (X + h)) - s.evaluate(1 / (X - h))) / (2 * h)
    np.testing.assert_allclose(d.evaluate(x), fd, rtol=1e-6)


@pytest.mark.parametrize("d", [2.0, -1.5, 0.4])
@pytest.mark.parametrize("side", ["positive", "negative"])
def test_derivative_series_matches_analytic(d, side):
    # at X = 2/radius the tail ratio is 1/2, so 1e-8 needs about 40 terms
    s = expand_coulomb1d(d, side, 40)
    ds = differentiate_series(s)
    sgn = 1.0 if side == "positive" else -1.0
    eps = s.radius
    X = sgn * np.geomspace(2 / eps, 100 / eps, 20)
    exact = -sgn / (X - d) ** 2
    np.testing.assert_allclose(ds.evaluate(1 / X), exact, rtol=1e-8)


def test_decay_order_examples():
    assert decay_order_from_series(expand_coulomb1d(2.0, order=4))[0] == 1
    assert decay_order_from_series(differentiate_series(expand_coulomb1d(2.0, order=4)))[0] == 2
    assert decay_order_from_series(SeriesAtInfinity("positive", (0, 0, 5), 1.0))[0] == 3


def test_decay_order_rejects_zero_series():
    with pytest.raises(IdenticallyZeroTail):
        decay_order_from_series(SeriesAtInfinity("positive", (0, 0, 0), 1.0))


def test_decay_constant_bounds_function():
    s = expand_coulomb1d(2.0, order=24)
    n, M = decay_order_from_series(s)
    X = np.geomspace(2 / s.radius * 1.0001, 1e5, 300)
    assert np.all(1 / np.abs(X - 2.0) <= M / X**n)


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5).filter(lambda d: abs(d) > 1e-3), st.sampled_from(["positive", "negative"]),
       st.integers(0, 3))
def test_differentiation_shifts_leading_order(d, side, reps):
    s = expand_coulomb1d(d, side, 24)
    for _ in range(reps):
        s = differentiate_series(s)
    n, _ = decay_order_from_series(s)
    n2, _ = decay_order_from_series(differentiate_series(s))
    assert n == reps + 1
    assert n2 == n + 1


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5).filter(lambda d: abs(d) > 1e-2), st.sampled_from(["positive", "negative"]))
def test_doubling_truncation_within_remainder(d, side):
    s = expand_coulomb1d(d, side, 12)
    s2 = expand_coulomb1d(d, side, 24)
    x = s.sign * s.radius / 2
    assert abs(s.evaluate(x) - s2.evaluate(x)) <= s.remainder_bound * (1 + 1e-12) + 1e-15


def test_json_round_trip():
    s = expand_coulomb1d(-0.7, "negative", 6)
    d = json.loads(s.to_json())
    assert set(d) == {"side", "radius", "coefficients", "remainder_bound"}
    assert SeriesAtInfinity.from_dict(d) == s
