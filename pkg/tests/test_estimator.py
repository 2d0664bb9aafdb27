import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltkde.densities import get_density
from tiltkde.errors import InvalidConfigError, InvalidInputError, UnsupportedDerivativeError
from tiltkde.estimator import (
    BandwidthRule,
    EstimatorSpec,
    bandwidth_rate,
    conventional_estimate,
    estimate,
    fit_estimate,
    uniform_weights,
)
from tiltkde.evaluation import kernel_sum
from tiltkde.kernels import KERNELS, get_kernel
from tiltkde.tilt import TiltConfig, TiltWeights, build_weights

COMPACT = ["epanechnikov", "biweight", "triweight"]
NORMAL = get_density("normal")


def trapezoid(y, x):
    return float(np.sum((y[1:] + y[:-1]) * np.diff(x)) / 2)


def orders(kernel):
    return range(0, min(kernel.smoothness, 3) + 1)


def signed_weights(rng, n):
    w = rng.uniform(-0.5, 1.5, n)
    return w / math.fsum(w)


def make(kernel, s, weights, h):
    spec = EstimatorSpec(kernel=kernel, r=max(2, s + s % 2), s=s, bandwidth=h, tilt=TiltConfig(mode="none"))
    return spec, TiltWeights(weights=weights, delta=0.0, raw=weights, policy_applied="signed", h=h)


def test_bandwidth_examples():
    assert bandwidth_rate(1024, 2, 1.0) == 0.25
    assert bandwidth_rate(512, 4, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert bandwidth_rate(1, 2, 0.7) == 0.7
    assert bandwidth_rate(1, 6, 0.7) == 0.7
    with pytest.raises(InvalidConfigError):
        bandwidth_rate(100, 3)
    with pytest.raises(InvalidConfigError):
        bandwidth_rate(100, 2, 0.0)


def test_spec_validation():
    k = get_kernel("biweight")
    with pytest.raises(InvalidConfigError):
        EstimatorSpec(kernel=k, r=3)
    with pytest.raises(InvalidConfigError):
        EstimatorSpec(kernel=k, r=2, s=3)
    with pytest.raises(UnsupportedDerivativeError):
        EstimatorSpec(kernel=k, r=2, s=2)
    with pytest.raises(InvalidConfigError):
        EstimatorSpec(kernel=k, bandwidth=-1.0)
    assert EstimatorSpec(kernel=k, r=4, bandwidth=BandwidthRule(2.0)).bandwidth_for(512) == pytest.approx(1.0)


def test_truncated_tilt_flag():
    k = get_kernel("triweight")
    assert EstimatorSpec(kernel=k, r=4).truncated_tilt
    assert not EstimatorSpec(kernel=k, r=2).truncated_tilt
    assert not EstimatorSpec(kernel=k, r=4, tilt=TiltConfig(mode="none")).truncated_tilt


def test_single_point():
    k = get_kernel("epanechnikov")
    spec, w = make(k, 0, np.array([1.0]), 1.0)
    assert estimate(spec, np.array([0.0]), w, [0.0]).values[0] == 0.75


def test_far_query_is_exactly_zero():
    k = get_kernel("triweight")
    x = NORMAL.sampler(1, 0).sample(100)
    for s in orders(k):
        res = conventional_estimate(x, k, 0.3, s, [x[-1] + 0.31, x[0] - 0.5])
        assert np.all(res.values == 0.0)


def test_antisymmetric_first_derivative():
    k = get_kernel("biweight")
    assert conventional_estimate(np.array([-1.0, 1.0]), k, 1.5, 1, [0.0]).values[0] == 0.0


@pytest.mark.parametrize("name", list(KERNELS))
def test_untilted_equals_conventional(name):
    k = get_kernel(name)
    x = NORMAL.sampler(4, 0).sample(300)
    grid = np.linspace(-4, 4, 201)
    for s in orders(k):
        spec = EstimatorSpec(kernel=k, r=max(2, s + s % 2), s=s, bandwidth=0.4, tilt=TiltConfig(mode="none"))
        tilted = estimate(spec, x, build_weights(spec.tilt, k, x, 0.4), grid)
        plain = conventional_estimate(x, k, 0.4, s, grid)
        assert np.max(np.abs(tilted.values - plain.values)) <= 1e-12


def test_conventional_standard_normal_value():
    n = 10**5
    x = NORMAL.sampler(31, 0).sample(n)
    res = conventional_estimate(x, get_kernel("epanechnikov"), n ** -0.2, 0, [0.0])
    assert res.values[0] == pytest.approx(0.399, abs=0.02)


def _loop_reference(kernel, s, h, sample, weights, queries):
    """Independent double loop: scalar kernel calls, plain accumulation."""
    out, scale = [], []
    for x in queries:
        acc, mag = 0.0, 0.0
        for xi, wi in zip(sample, weights):
            term = wi * kernel.eval_derivative(s, (x - xi) / h)
            acc += term
            mag += abs(term)
        out.append(acc / h ** (s + 1))
        scale.append(mag / h ** (s + 1))
    return np.array(out), np.array(scale)


@pytest.mark.parametrize("name", COMPACT)
def test_window_matches_double_loop(name):
    k = get_kernel(name)
    rng = np.random.default_rng(17)
    x = np.sort(rng.normal(size=200))
    w = signed_weights(rng, 200)
    q = rng.uniform(-4, 4, 50)
    for s in orders(k):
        fast = kernel_sum(k, s, 0.35, x, w, q, method="window")
        ref, scale = _loop_reference(k, s, 0.35, x, w, q)
        assert np.all(np.abs(fast - ref) <= 1e-12 * np.maximum(np.abs(ref), scale))
        np.testing.assert_array_equal(fast, kernel_sum(k, s, 0.35, x, w, q, method="naive"))


def test_window_rejects_unsorted_or_unbounded():
    with pytest.raises(InvalidInputError):
        kernel_sum(get_kernel("biweight"), 0, 1.0, [2.0, 1.0], [0.5, 0.5], [0.0], method="window")
    with pytest.raises(InvalidInputError):
        kernel_sum(get_kernel("gaussian"), 0, 1.0, [1.0, 2.0], [0.5, 0.5], [0.0], method="window")


def test_input_validation():
    k = get_kernel("epanechnikov")
    spec, w = make(k, 0, np.array([0.5, 0.5]), 1.0)
    with pytest.raises(InvalidInputError):
        estimate(spec, np.array([0.0, 1.0, 2.0]), w, [0.0])
    with pytest.raises(InvalidInputError):
        kernel_sum(k, 0, 0.0, [0.0], [1.0], [0.0])
    with pytest.raises(InvalidInputError):
        kernel_sum(k, 0, 1.0, [], [], [0.0])
    with pytest.raises(UnsupportedDerivativeError):
        conventional_estimate(np.array([0.0]), k, 1.0, 1, [0.0])


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(list(KERNELS)),
    st.integers(0, 2**32 - 1),
    st.floats(0.05, 2.0),
    st.floats(-3.0, 3.0),
)
def test_linearity_in_weights(name, seed, h, a):
    k = get_kernel(name)
    rng = np.random.default_rng(seed)
    n = 60
    x = np.sort(rng.normal(size=n))
    w1, w2 = rng.normal(size=n), rng.normal(size=n)
    q = rng.uniform(-3, 3, 10)
    s = int(rng.integers(0, min(k.smoothness, 2) + 1))
    combined = kernel_sum(k, s, h, x, w1 + a * w2, q)
    parts = kernel_sum(k, s, h, x, w1, q) + a * kernel_sum(k, s, h, x, w2, q)
    scale1, scale2 = _abs_scale(k, s, h, x, w1, q), _abs_scale(k, s, h, x, w2, q)
    assert np.all(np.abs(combined - parts) <= 1e-12 * (1 + scale1 + abs(a) * scale2))


def _abs_scale(k, s, h, x, w, q):
    """sum_i |w_i K^{(s)}| / h^{s+1}: the conditioning scale of each sum."""
    return np.array([np.sum(np.abs(w * k.eval_derivative(s, (xq - x) / h))) for xq in q]) / h ** (s + 1)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(list(KERNELS)), st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_scaling_identity(name, seed, lam):
    k = get_kernel(name)
    rng = np.random.default_rng(seed)
    x = np.sort(rng.normal(size=80))
    w = np.full(80, 1 / 80)
    q = rng.uniform(-3, 3, 12)
    base = kernel_sum(k, 0, 0.4, x, w, q)
    scaled = kernel_sum(k, 0, 0.4 * lam, lam * x, w, lam * q)
    np.testing.assert_allclose(scaled, base / lam, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("name", COMPACT)
def test_mass_with_signed_weights(name):
    k = get_kernel(name)
    rng = np.random.default_rng(3)
    x = np.sort(rng.normal(size=150))
    w = signed_weights(rng, 150)
    h = 0.3
    grid = np.linspace(x[0] - h, x[-1] + h, 40_001)
    spec, tw = make(k, 0, w, h)
    assert trapezoid(estimate(spec, x, tw, grid).values, grid) == pytest.approx(1.0, abs=1e-3)


def test_fit_estimate_end_to_end():
    k = get_kernel("biweight")
    x = NORMAL.sampler(12, 0).sample(20_000)
    spec = EstimatorSpec(kernel=k, r=2, s=0, tilt=TiltConfig(mode="oracle"))
    q = np.array([-1.0, 0.0, 1.0])
    res = fit_estimate(spec, x[::-1], q, truth=NORMAL)
    assert res.h_used == pytest.approx(20_000 ** -0.2)
    # sd of the estimate is about sqrt(f * int K^2 / (n h)) < 0.01 here
    np.testing.assert_allclose(res.values, NORMAL.pdf(q), atol=0.03)
    lo, hi, neg = res.weights_summary
    assert lo <= hi and neg >= 0


def test_uniform_weights_helper():
    w = uniform_weights(np.zeros(4), 0.5)
    assert np.all(w.weights == 0.25) and w.h == 0.5
