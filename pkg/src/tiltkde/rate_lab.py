"""Bias oracle and Monte Carlo convergence-rate experiments.

The expectation of the non-standardised tilted estimator is an ordinary
integral,

    E ftilde^{(s)}(x) = h^{-s} int K^{(s)}(u) (1 + h^2 g(x - h u)) f(x - h u) du,

which :func:`expectation_quadrature` evaluates by adaptive Simpson over the
kernel support. :func:`run_experiment` measures the error of the
standardised estimator across sample sizes and fits the log-log slope that
should approach -(r - s)/(2r + 1) when h = n^{-1/(2r+1)}.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .densities import ReferenceDensity
from .errors import InvalidConfigError, InvalidInputError, InvalidPlanError, TiltOverflowError
from .estimator import EstimatorSpec
from .evaluation import kernel_sum
from .kernels import Kernel
from .quadrature import adaptive_simpson
from .tilt import TiltConfig, build_weights, tilt_g

log = logging.getLogger(__name__)

ERROR_STATISTICS = ("median-abs", "mean-abs", "rmse")
DEFAULT_EVAL_POINTS = (0.0, 0.5, 1.0)
MAX_OVERFLOW_FRACTION = 0.01
_Z975 = 1.959963984540054


def theoretical_slope(r: int, s: int) -> float:
    """-(r - s)/(2r + 1), formed exactly before conversion to float."""
    return float(Fraction(-(r - s), 2 * r + 1))


# ---------------------------------------------------------------------------
# quadrature oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BiasReport:
    h: float
    x: float
    s: int
    expected_value: float
    truth: float
    bias: float
    bias_over_h2: float


def expectation_quadrature(
    density: ReferenceDensity,
    kernel: Kernel,
    tilt: TiltConfig,
    h: float,
    s: int,
    x: float,
    tol: float = 1e-10,
) -> BiasReport:
    """Expected value and bias of the non-standardised tilted estimator at x."""
    if tilt.mode == "plugin":
        raise InvalidConfigError("the expectation oracle needs an oracle or untilted configuration")
    if not h > 0:
        raise InvalidInputError(f"bandwidth must be positive, got {h!r}")
    ks = kernel.derivative_function(s)
    h2 = h * h
    source = density if tilt.mode == "oracle" else None

    def integrand(u: float) -> float:
        y = x - h * u
        g = tilt_g(source, tilt, y, kernel)
        return float(ks(u)) * (1.0 + h2 * g) * density.pdf(y)

    a = kernel.quad_half_width
    # tolerance applies to the final value, after the h^{-s} scaling
    integral = adaptive_simpson(integrand, -a, a, tol=tol * h**s)
    expected = integral / h**s
    truth = density.pdf_derivative(s, x)
    bias = expected - truth
    return BiasReport(h, x, s, expected, truth, bias, bias / h2)


def monte_carlo_expectation(
    density: ReferenceDensity,
    kernel: Kernel,
    tilt: TiltConfig,
    h: float,
    s: int,
    x: float,
    n: int,
    reps: int,
    seed: int,
) -> Tuple[float, float]:
    """Mean and standard error of the non-standardised estimator over ``reps`` samples.

    Independent of the quadrature path: it only draws data and sums kernels.
    """
    values = np.empty(reps)
    xs = np.array([x])
    for k in range(reps):
        sample = density.sampler(seed, k).sample(n)
        g = np.atleast_1d(tilt_g(density if tilt.mode == "oracle" else None, tilt, sample, kernel))
        raw = (1.0 + h * h * g) / n
        values[k] = kernel_sum(kernel, s, h, sample, raw, xs)[0]
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(reps))


# ---------------------------------------------------------------------------
# slope fitting
# ---------------------------------------------------------------------------


def fit_loglog_slope(points: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """OLS slope of log(error) on log(n) and its standard error."""
    n = np.array([p[0] for p in points], dtype=float)
    err = np.array([p[1] for p in points], dtype=float)
    if np.any(~(err > 0)):
        raise InvalidInputError("errors must be strictly positive for a log-log fit")
    if np.any(~(n > 0)):
        raise InvalidInputError("sample sizes must be positive")
    if np.unique(n).size < 2:
        raise InvalidInputError("need at least two distinct sample sizes")
    lx, ly = np.log(n), np.log(err)
    xc = lx - lx.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (ly - ly.mean())) / sxx
    if lx.size <= 2:
        return slope, 0.0
    resid = ly - ly.mean() - slope * xc
    sigma2 = float(resid @ resid) / (lx.size - 2)
    return slope, math.sqrt(sigma2 / sxx)


# ---------------------------------------------------------------------------
# Monte Carlo experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentPlan:
    density: ReferenceDensity
    spec: EstimatorSpec
    n_grid: Tuple[int, ...]
    replications: int = 200
    eval_points: Tuple[float, ...] = DEFAULT_EVAL_POINTS
    base_seed: int = 0
    error_statistic: str = "median-abs"
    tolerance: float = 0.12

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "eval_points", tuple(float(x) for x in self.eval_points))
        if len(grid) < 4:
            raise InvalidPlanError(f"n_grid needs at least 4 sizes, got {len(grid)}")
        if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise InvalidPlanError("n_grid must be strictly increasing positive integers")
        if self.replications < 50:
            raise InvalidPlanError(f"slope fits need at least 50 replications, got {self.replications}")
        if not self.eval_points:
            raise InvalidPlanError("at least one evaluation point is required")
        if self.error_statistic not in ERROR_STATISTICS:
            raise InvalidPlanError(f"error statistic must be one of {ERROR_STATISTICS}")
        if self.spec.tilt.mode == "plugin" and self.spec.tilt.pilot_bandwidth is None:
            raise InvalidPlanError("plugin tilt needs a pilot bandwidth")
        if not self.tolerance > 0:
            raise InvalidPlanError("tolerance must be positive")


@dataclass(frozen=True)
class RateRow:
    n: int
    x: float
    h: float
    truth: float
    error: float
    mc_se: float
    valid_reps: int
    overflow_reps: int


@dataclass
class RateReport:
    rows: List[RateRow]
    point_slopes: List[Tuple[float, float, float]]  # (x, slope, stderr)
    fitted_slope: float
    slope_stderr: float
    theoretical_slope: float
    tolerance: float
    passed: bool
    flags: List[str] = field(default_factory=list)


def _aggregate(abs_errors: np.ndarray, statistic: str) -> Tuple[float, float]:
    """Statistic over replications and its Monte Carlo standard error."""
    e = np.sort(abs_errors)
    r = e.size
    if statistic == "mean-abs":
        return float(e.mean()), float(e.std(ddof=1) / math.sqrt(r))
    if statistic == "rmse":
        sq = e * e
        rmse = math.sqrt(sq.mean())
        se = float(sq.std(ddof=1) / math.sqrt(r)) / (2.0 * rmse) if rmse > 0 else 0.0
        return rmse, se
    # distribution-free: 95% order-statistic interval for the median, halved
    half = _Z975 * math.sqrt(r) / 2.0
    lo = max(int(math.floor(r / 2.0 - half)), 0)
    hi = min(int(math.ceil(r / 2.0 + half)), r - 1)
    return float(np.median(e)), float((e[hi] - e[lo]) / (2.0 * _Z975))


def _replication(plan: ExperimentPlan, n: int, k: int, h: float) -> Optional[np.ndarray]:
    sample = plan.density.sampler(plan.base_seed, k).sample(n)
    try:
        weights = build_weights(plan.spec.tilt, plan.spec.kernel, sample, h, plan.density)
    except TiltOverflowError:
        return None
    est = kernel_sum(plan.spec.kernel, plan.spec.s, h, sample, weights.weights, plan.eval_points)
    return est


def run_experiment(plan: ExperimentPlan, threads: Optional[int] = None) -> RateReport:
    """Monte Carlo rate study; the report does not depend on ``threads``."""
    spec = plan.spec
    points = np.array(plan.eval_points)
    truths = np.asarray(plan.density.pdf_derivative(spec.s, points), dtype=float)
    workers = threads or os.cpu_count() or 1
    tasks = [(n, k) for n in plan.n_grid for k in range(plan.replications)]
    hs = {n: spec.bandwidth_for(n) for n in plan.n_grid}

    def work(task):
        n, k = task
        return _replication(plan, n, k, hs[n])

    if workers == 1:
        results = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, tasks))

    rows: List[RateRow] = []
    by_point = {x: [] for x in plan.eval_points}
    cap = int(math.floor(MAX_OVERFLOW_FRACTION * plan.replications))
    for i, n in enumerate(plan.n_grid):
        chunk = results[i * plan.replications:(i + 1) * plan.replications]
        good = [r for r in chunk if r is not None]
        overflow = len(chunk) - len(good)
        if overflow > cap:
            raise TiltOverflowError(
                f"{overflow} of {plan.replications} replications at n={n} overflowed "
                f"(limit {cap})"
            )
        if overflow:
            log.warning("n=%d: %d replication(s) excluded after tilt overflow", n, overflow)
        est = np.vstack(good)
        for j, x in enumerate(plan.eval_points):
            stat, se = _aggregate(np.abs(est[:, j] - truths[j]), plan.error_statistic)
            rows.append(RateRow(n, x, hs[n], float(truths[j]), stat, se, len(good), overflow))
            by_point[x].append((n, stat))

    point_slopes = []
    for x in plan.eval_points:
        slope, se = fit_loglog_slope(by_point[x])
        point_slopes.append((x, slope, se))
    fitted = math.fsum(p[1] for p in point_slopes) / len(point_slopes)
    stderr = math.sqrt(math.fsum(p[2] ** 2 for p in point_slopes)) / len(point_slopes)
    target = theoretical_slope(spec.r, spec.s)
    flags = []
    if spec.truncated_tilt:
        flags.append("tilt truncated")
    if not spec.kernel.compact:
        flags.append("kernel not compactly supported")
    return RateReport(
        rows=rows,
        point_slopes=point_slopes,
        fitted_slope=fitted,
        slope_stderr=stderr,
        theoretical_slope=target,
        tolerance=plan.tolerance,
        passed=abs(fitted - target) <= plan.tolerance,
        flags=flags,
    )
