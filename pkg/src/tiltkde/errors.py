"""Exception types raised across the package."""


class TiltKDEError(Exception):
    """Base class for all package errors."""


class InvalidInputError(TiltKDEError, ValueError):
    """Malformed arguments (empty samples, mismatched lengths, bad values)."""


class InvalidConfigError(TiltKDEError, ValueError):
    """Inconsistent estimator or tilt configuration."""


class InvalidPlanError(InvalidConfigError):
    """Experiment plan violates its invariants."""


class UnsupportedDerivativeError(TiltKDEError, ValueError):
    """Requested derivative order exceeds what the kernel supports."""


class QuadratureError(TiltKDEError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class TiltOverflowError(TiltKDEError, ArithmeticError):
    """|delta_n| >= 1, so the tilted weights cannot be standardised."""
