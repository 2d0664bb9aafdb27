"""Tilted kernel estimator of a density and its derivatives.

    fhat^{(s)}(x) = h^{-(s+1)} sum_i p_i K^{(s)}((x - X_i)/h)

with p the tilted weights from :mod:`tiltkde.tilt`. The conventional
estimator is the special case p_i = 1/n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .errors import InvalidConfigError, InvalidInputError, UnsupportedDerivativeError
from .evaluation import kernel_sum
from .kernels import Kernel
from .tilt import DensitySource, TiltConfig, TiltWeights, build_weights


@dataclass(frozen=True)
class BandwidthRule:
    """h_n = c0 * n^{-1/(2r+1)}, with r taken from the estimator spec."""

    c0: float = 1.0


def bandwidth_rate(n: int, r: int, c0: float = 1.0) -> float:
    """c0 * n^{-1/(2r+1)}."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    if r < 2 or r % 2:
        raise InvalidConfigError(f"r must be an even integer >= 2, got {r}")
    if not c0 > 0:
        raise InvalidConfigError(f"c0 must be positive, got {c0}")
    k = 2 * r + 1
    root = round(n ** (1.0 / k))
    if root**k == n:
        # exact for perfect powers, e.g. 1024^(-1/5) = 1/4
        return c0 / root
    return c0 * n ** (-1.0 / k)


@dataclass(frozen=True)
class EstimatorSpec:
    kernel: Kernel
    r: int = 2
    s: int = 0
    bandwidth: Union[float, BandwidthRule] = field(default_factory=BandwidthRule)
    tilt: TiltConfig = field(default_factory=TiltConfig)

    def __post_init__(self):
        if self.r < 2 or self.r % 2:
            raise InvalidConfigError(f"r must be an even integer >= 2, got {self.r}")
        if self.s < 0 or self.s > self.r:
            raise InvalidConfigError(f"s must satisfy 0 <= s <= r={self.r}, got {self.s}")
        if self.s > self.kernel.smoothness:
            raise UnsupportedDerivativeError(
                f"s exceeds kernel smoothness ({self.kernel.name}: {self.kernel.smoothness})"
            )
        if not isinstance(self.bandwidth, BandwidthRule) and not self.bandwidth > 0:
            raise InvalidConfigError(f"bandwidth must be positive, got {self.bandwidth!r}")

    def bandwidth_for(self, n: int) -> float:
        if isinstance(self.bandwidth, BandwidthRule):
            return bandwidth_rate(n, self.r, self.bandwidth.c0)
        return float(self.bandwidth)

    @property
    def truncated_tilt(self) -> bool:
        """True when the tilt omits terms the bias order r would need."""
        return self.tilt.mode != "none" and self.r > 2 and self.tilt.extra is None


@dataclass(frozen=True)
class EstimateResult:
    points: np.ndarray
    values: np.ndarray
    h_used: float
    delta: float
    weights_summary: Tuple[float, float, int]


def estimate(
    spec: EstimatorSpec,
    sample,
    weights: TiltWeights,
    queries,
    method: str = "auto",
) -> EstimateResult:
    """Evaluate the s-th derivative estimate at ``queries``.

    The bandwidth is the one the weights were built with.
    """
    sample = np.asarray(sample, dtype=float)
    p = np.asarray(weights.weights, dtype=float)
    if p.shape != sample.shape:
        raise InvalidInputError(
            f"weights length {p.size} does not match sample length {sample.size}"
        )
    points = np.atleast_1d(np.asarray(queries, dtype=float))
    values = kernel_sum(spec.kernel, spec.s, weights.h, sample, p, points, method=method)
    return EstimateResult(points, values, weights.h, weights.delta, weights.summary)


def uniform_weights(sample, h: float) -> TiltWeights:
    n = np.size(sample)
    if n == 0:
        raise InvalidInputError("sample must be non-empty")
    w = np.full(n, 1.0 / n)
    return TiltWeights(weights=w, delta=0.0, raw=w.copy(), policy_applied="signed", h=h)


def conventional_estimate(sample, kernel: Kernel, h: float, s: int, queries, method: str = "auto") -> EstimateResult:
    """Equal-weight kernel estimate of f^{(s)}."""
    if s > kernel.smoothness:
        raise UnsupportedDerivativeError(
            f"s exceeds kernel smoothness ({kernel.name}: {kernel.smoothness})"
        )
    spec = EstimatorSpec(kernel=kernel, r=max(2, s + s % 2), s=s, bandwidth=h, tilt=TiltConfig(mode="none"))
    return estimate(spec, sample, uniform_weights(sample, h), queries, method=method)


def fit_estimate(spec: EstimatorSpec, sample, queries, truth: Optional[DensitySource] = None) -> EstimateResult:
    """Bandwidth, tilt weights and evaluation in one call.

    ``sample`` is sorted here; ``truth`` is only needed for oracle tilting.
    """
    sample = np.sort(np.asarray(sample, dtype=float))
    h = spec.bandwidth_for(sample.size)
    weights = build_weights(spec.tilt, spec.kernel, sample, h, truth)
    return estimate(spec, sample, weights, queries)
