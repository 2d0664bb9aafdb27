import math
from fractions import Fraction

import numpy as np
import pytest

from tiltkde.errors import QuadratureError, UnsupportedDerivativeError
from tiltkde.kernels import KERNELS, get_kernel

COMPACT = ["epanechnikov", "biweight", "triweight"]
GRID = np.linspace(-1.5, 1.5, 1001)
STEP = 1e-5


def _derivative_orders(kernel):
    top = 6 if math.isinf(kernel.smoothness) else int(kernel.smoothness)
    return range(1, top + 1)


def _exact_moment(power, constant, j):
    """int_{-1}^{1} u^j C (1 - u^2)^k du by binomial expansion, in rationals."""
    if j % 2:
        return Fraction(0)
    total = Fraction(0)
    for i in range(power + 1):
        total += math.comb(power, i) * (-1) ** i * Fraction(2, j + 2 * i + 1)
    return constant * total


def test_point_values():
    assert get_kernel("epanechnikov").eval(0.0) == 0.75
    assert get_kernel("epanechnikov").eval(1.5) == 0.0
    assert get_kernel("gaussian").eval(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)


def test_biweight_first_derivative():
    k = get_kernel("biweight")
    assert k.eval_derivative(1, 0.0) == 0.0
    fd = (k.eval(0.5 + STEP) - k.eval(0.5 - STEP)) / (2 * STEP)
    assert fd == pytest.approx(-1.40625, abs=1e-8)
    assert k.eval_derivative(1, 0.5) == pytest.approx(fd, abs=1e-8)


def test_epanechnikov_second_derivative_piecewise():
    k = get_kernel("epanechnikov")
    d = 1e-4
    fd = (k.eval(0.3 + d) - 2 * k.eval(0.3) + k.eval(0.3 - d)) / d**2
    assert k.eval_derivative(2, 0.3, piecewise=True) == pytest.approx(fd, abs=1e-6)
    with pytest.raises(UnsupportedDerivativeError):
        k.eval_derivative(2, 0.3)


@pytest.mark.parametrize("name", list(KERNELS))
def test_symmetry_and_support(name):
    k = get_kernel(name)
    np.testing.assert_array_equal(k.eval(GRID), k.eval(-GRID))
    if k.compact:
        outside = GRID[np.abs(GRID) > k.support]
        assert np.all(k.eval(outside) == 0.0)
        for s in _derivative_orders(k):
            assert np.all(k.eval_derivative(s, outside) == 0.0)


@pytest.mark.parametrize("name", list(KERNELS))
def test_analytic_derivatives_match_finite_differences(name):
    k = get_kernel(name)
    for s in _derivative_orders(k):
        lower = k.eval_derivative(s - 1, GRID + STEP), k.eval_derivative(s - 1, GRID - STEP)
        fd = (lower[0] - lower[1]) / (2 * STEP)
        assert np.max(np.abs(k.eval_derivative(s, GRID) - fd)) <= 1e-6, (name, s)


@pytest.mark.parametrize("name", list(KERNELS))
def test_zeroth_derivative_is_eval(name):
    k = get_kernel(name)
    np.testing.assert_array_equal(k.eval_derivative(0, GRID), k.eval(GRID))


@pytest.mark.parametrize("name", list(KERNELS))
def test_moments_normalisation_and_odd(name):
    k = get_kernel(name)
    assert abs(k.moment(0) - 1.0) <= 1e-10
    for j in (1, 3, 5, 7, 9):
        assert abs(k.moment(j)) <= 1e-10


@pytest.mark.parametrize(
    "name, power, constant",
    [("epanechnikov", 1, Fraction(3, 4)), ("biweight", 2, Fraction(15, 16)), ("triweight", 3, Fraction(35, 32))],
)
def test_even_moments_against_exact_rationals(name, power, constant):
    k = get_kernel(name)
    for j in (2, 4, 6, 8, 10):
        assert k.moment(j) == pytest.approx(float(_exact_moment(power, constant, j)), abs=1e-12)


def test_epanechnikov_second_moment():
    assert get_kernel("epanechnikov").moment(2) == pytest.approx(0.2, abs=1e-12)


def test_gaussian_moments_are_double_factorials():
    k = get_kernel("gaussian")
    for j, exact in ((2, 1.0), (4, 3.0), (6, 15.0), (8, 105.0)):
        assert k.moment(j) == pytest.approx(exact, rel=1e-10)


def test_gaussian_high_moment_quadrature_failure():
    with pytest.raises(QuadratureError):
        get_kernel("gaussian").moment(60)


def test_unknown_kernel():
    with pytest.raises(ValueError):
        get_kernel("cosine")


def test_negative_order_rejected():
    with pytest.raises(UnsupportedDerivativeError):
        get_kernel("biweight").eval_derivative(-1, 0.0)
