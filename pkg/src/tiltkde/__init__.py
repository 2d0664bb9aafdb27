"""Tilted kernel estimation of a density and its derivatives."""

__version__ = "0.1.0"

from .densities import DENSITIES, ReferenceDensity, SeededSampler, get_density
from .errors import (
    InvalidConfigError,
    InvalidInputError,
    InvalidPlanError,
    QuadratureError,
    TiltKDEError,
    TiltOverflowError,
    UnsupportedDerivativeError,
)
from .estimator import (
    BandwidthRule,
    EstimateResult,
    EstimatorSpec,
    bandwidth_rate,
    conventional_estimate,
    estimate,
    fit_estimate,
)
from .kernels import KERNELS, Kernel, get_kernel
from .rate_lab import (
    BiasReport,
    ExperimentPlan,
    RateReport,
    expectation_quadrature,
    fit_loglog_slope,
    run_experiment,
    theoretical_slope,
)
from .tilt import (
    TiltConfig,
    TiltWeights,
    build_weights,
    compute_delta,
    compute_weights,
    default_lead_constant,
    pilot_estimates,
    tilt_g,
)
