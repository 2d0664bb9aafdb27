"""Tilted probability weights.

For a tilt function g and bandwidth h the weights are

    raw_i = (1 + h^2 g(X_i)) / n
    delta = (h^2 / n) sum_i g(X_i)
    p_i   = raw_i / (1 + delta)

With g = 0 they reduce to the conventional 1/n. The leading-order tilt is
g = c f''/f, clipped to [-G_max, G_max]. ``c = -mu_2(K)/2`` cancels the h^2
bias term of the kernel estimator (mu_2 the kernel's second moment); the
``bias-oracle`` command checks this numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

import numpy as np

from .errors import InvalidConfigError, InvalidInputError, TiltOverflowError, UnsupportedDerivativeError
from .evaluation import kernel_sum
from .kernels import Kernel, get_kernel

TILT_MODES = ("oracle", "plugin", "none")
WEIGHT_POLICIES = ("signed", "clamp")
DEFAULT_CLIP = 50.0


class DensitySource(Protocol):
    """Anything that can report f and its derivatives at query points."""

    def pdf(self, x): ...

    def pdf_derivative(self, s: int, x): ...


def default_lead_constant(kernel: Kernel) -> float:
    """Coefficient of f''/f that cancels the h^2 bias for ``kernel``."""
    return -kernel.moment(2) / 2.0


@dataclass(frozen=True)
class TiltConfig:
    mode: str = "oracle"
    lead_constant: Optional[float] = None  # None -> default_lead_constant(kernel)
    clip: float = DEFAULT_CLIP
    weight_policy: str = "signed"
    pilot_bandwidth: Optional[float] = None
    pilot_kernel: str = "triweight"
    # hook for the higher-order terms h^2 e_2/f + ...; added to g before clipping
    extra: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.mode not in TILT_MODES:
            raise InvalidConfigError(f"tilt mode must be one of {TILT_MODES}, got {self.mode!r}")
        if self.weight_policy not in WEIGHT_POLICIES:
            raise InvalidConfigError(
                f"weight policy must be one of {WEIGHT_POLICIES}, got {self.weight_policy!r}"
            )
        if not (self.clip > 0):
            raise InvalidConfigError(f"clip bound must be positive, got {self.clip!r}")
        if self.mode == "plugin":
            if self.pilot_bandwidth is None or not self.pilot_bandwidth > 0:
                raise InvalidConfigError("plugin tilt needs a positive pilot bandwidth")
            if get_kernel(self.pilot_kernel).smoothness < 2:
                raise UnsupportedDerivativeError(
                    f"pilot kernel {self.pilot_kernel!r} cannot estimate f''"
                )

    def resolved_constant(self, kernel: Optional[Kernel]) -> float:
        if self.lead_constant is not None:
            return float(self.lead_constant)
        if kernel is None:
            raise InvalidConfigError("no lead constant given and no kernel to derive it from")
        return default_lead_constant(kernel)


@dataclass(frozen=True)
class TiltWeights:
    weights: np.ndarray
    delta: float
    raw: np.ndarray
    policy_applied: str
    h: float

    @property
    def summary(self):
        """(min, max, number of negative weights)."""
        w = self.weights
        return float(w.min()), float(w.max()), int(np.count_nonzero(w < 0))


def tilt_g(source: Optional[DensitySource], config: TiltConfig, x, kernel: Optional[Kernel] = None):
    """clip(c f''(x)/f(x) [+ extra(x)], -G_max, G_max); zero for mode none.

    Where f(x) <= 0 the ratio is replaced by the clip bound carrying the sign
    of f''(x) (zero if f'' is zero too).
    """
    xa = np.asarray(x, dtype=float)
    if config.mode == "none":
        out = np.zeros_like(xa)
        return float(out) if xa.ndim == 0 else out
    if source is None:
        raise InvalidConfigError(f"tilt mode {config.mode!r} needs a density source")
    c = config.resolved_constant(kernel)
    f = np.asarray(source.pdf(xa), dtype=float)
    f2 = np.asarray(source.pdf_derivative(2, xa), dtype=float)
    positive = f > 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = np.where(positive, f2 / np.where(positive, f, 1.0), 0.0)
    g = c * ratio
    if config.extra is not None:
        g = g + np.asarray(config.extra(xa), dtype=float)
    g = np.clip(g, -config.clip, config.clip)
    # f vanished: take the clip extreme with the sign the ratio would have had
    g = np.where(positive, g, np.sign(c * f2) * config.clip)
    return float(g) if xa.ndim == 0 else g


def compute_delta(sample, g_values, h: float) -> float:
    """(h^2 / n) sum_i g(X_i)."""
    g_values = np.asarray(g_values, dtype=float)
    if np.size(sample) == 0 or g_values.size == 0:
        raise InvalidInputError("delta needs a non-empty sample")
    if g_values.shape != np.shape(sample):
        raise InvalidInputError("g values must align with the sample")
    return h * h * math.fsum(g_values) / g_values.size


def compute_weights(sample, g_values, h: float, policy: str = "signed") -> TiltWeights:
    """Standardised tilted weights; raises TiltOverflowError if |delta| >= 1."""
    if policy not in WEIGHT_POLICIES:
        raise InvalidConfigError(f"weight policy must be one of {WEIGHT_POLICIES}, got {policy!r}")
    g_values = np.asarray(g_values, dtype=float)
    delta = compute_delta(sample, g_values, h)
    if not abs(delta) < 1.0:
        raise TiltOverflowError(
            f"|delta_n| = {abs(delta):.6g} >= 1 (h={h:.6g}); reduce the clip bound or bandwidth"
        )
    n = g_values.size
    raw = (1.0 + h * h * g_values) / n
    weights = raw / (1.0 + delta)
    if policy == "clamp" and np.any(weights < 0):
        weights = np.maximum(weights, 0.0)
        total = math.fsum(weights)
        if total <= 0:
            raise TiltOverflowError("every tilted weight is non-positive; nothing to renormalise")
        weights = weights / total
    return TiltWeights(weights=weights, delta=delta, raw=raw, policy_applied=policy, h=h)


class PilotEstimates:
    """Plug-in density source from conventional (equal-weight) kernel estimates.

    f and f'' are computed lazily at whatever points are queried.
    """

    def __init__(self, sample, pilot_bandwidth: float, kernel: Kernel):
        if kernel.smoothness < 2:
            raise UnsupportedDerivativeError(
                f"pilot kernel {kernel.name} has smoothness {kernel.smoothness}; f'' needs 2"
            )
        if not pilot_bandwidth > 0:
            raise InvalidInputError(f"pilot bandwidth must be positive, got {pilot_bandwidth!r}")
        self.sample = np.asarray(sample, dtype=float)
        self.h = float(pilot_bandwidth)
        self.kernel = kernel
        self._uniform = np.full(self.sample.size, 1.0 / self.sample.size)

    def pdf(self, x):
        return self.pdf_derivative(0, x)

    def pdf_derivative(self, s: int, x):
        xa = np.asarray(x, dtype=float)
        values = kernel_sum(self.kernel, s, self.h, self.sample, self._uniform, xa.ravel())
        return float(values[0]) if xa.ndim == 0 else values.reshape(xa.shape)


def pilot_estimates(sample, pilot_bandwidth: float, kernel: Kernel) -> PilotEstimates:
    return PilotEstimates(sample, pilot_bandwidth, kernel)


def build_weights(
    config: TiltConfig,
    kernel: Kernel,
    sample,
    h: float,
    truth: Optional[DensitySource] = None,
) -> TiltWeights:
    """Tilt values at the sample points followed by :func:`compute_weights`.

    ``truth`` is required in oracle mode; plugin mode builds its own pilot.
    """
    sample = np.asarray(sample, dtype=float)
    if config.mode == "oracle":
        if truth is None:
            raise InvalidConfigError("oracle tilt needs the true density")
        source: Optional[DensitySource] = truth
    elif config.mode == "plugin":
        source = pilot_estimates(sample, config.pilot_bandwidth, get_kernel(config.pilot_kernel))
    else:
        source = None
    g = tilt_g(source, config, sample, kernel)
    return compute_weights(sample, np.atleast_1d(g), h, config.weight_policy)
