"""Symmetric smoothing kernels with closed-form derivatives.

Available kernels:
    - ``epanechnikov``  3/4 (1 - u^2) on [-1, 1], smoothness 0
    - ``biweight``      15/16 (1 - u^2)^2 on [-1, 1], smoothness 1
    - ``triweight``     35/32 (1 - u^2)^3 on [-1, 1], smoothness 2
    - ``gaussian``      standard normal density, unbounded support

``smoothness`` is the largest derivative order that is continuous on the
whole real line, support endpoints included. Estimating the s-th density
derivative needs ``smoothness >= s``.
"""

from __future__ import annotations

import math
from typing import Callable, Dict

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite_e import hermeval

from .errors import QuadratureError, UnsupportedDerivativeError
from .quadrature import adaptive_simpson

MOMENT_TOL = 1e-12
CACHED_MOMENTS = 8
GAUSSIAN_QUAD_HALF_WIDTH = 40.0


def _as_output(values, u):
    return float(values) if np.ndim(u) == 0 else values


class Kernel:
    """Base class. Subclasses supply ``_derivative(s, u)`` on float arrays."""

    name: str
    smoothness: float
    support: float | None  # half-width a of [-a, a]; None when unbounded

    def __init__(self) -> None:
        # filled eagerly so instances are read-only after construction
        self._moments: Dict[int, float] = {}
        for j in range(CACHED_MOMENTS + 1):
            self._moments[j] = self._compute_moment(j)

    def __repr__(self) -> str:
        return f"<Kernel {self.name}>"

    @property
    def compact(self) -> bool:
        return self.support is not None

    @property
    def quad_half_width(self) -> float:
        """Half-width of the interval used when integrating against K."""
        return self.support if self.support is not None else GAUSSIAN_QUAD_HALF_WIDTH

    def eval(self, u):
        """K(u), exactly zero outside a compact support."""
        u = np.asarray(u, dtype=float)
        return _as_output(self._derivative(0, u), u)

    def eval_derivative(self, s: int, u, piecewise: bool = False):
        """K^{(s)}(u) from the closed form.

        Orders above ``smoothness`` raise unless ``piecewise`` is set, in
        which case the derivative of the polynomial piece is returned inside
        the support (the endpoints are jump points for these orders).
        """
        if s < 0:
            raise UnsupportedDerivativeError(f"derivative order must be >= 0, got {s}")
        if s > self.smoothness and not piecewise:
            raise UnsupportedDerivativeError(
                f"{self.name} kernel has smoothness {self.smoothness}; "
                f"derivative order {s} is not supported"
            )
        u = np.asarray(u, dtype=float)
        return _as_output(self._derivative(s, u), u)

    def derivative_function(self, s: int) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorised K^{(s)} with the order check done once up front."""
        if s > self.smoothness or s < 0:
            self.eval_derivative(s, 0.0)  # raises
        return lambda u: self._derivative(s, np.asarray(u, dtype=float))

    def moment(self, j: int) -> float:
        """Integral of u^j K(u) du."""
        if j < 0:
            raise ValueError(f"moment order must be >= 0, got {j}")
        if j in self._moments:
            return self._moments[j]
        return self._compute_moment(j)

    def _compute_moment(self, j: int) -> float:
        if j % 2 == 1:
            return 0.0
        a = self.quad_half_width
        value = adaptive_simpson(
            lambda t: t**j * float(self._derivative(0, np.asarray(t))), -a, a, tol=MOMENT_TOL
        )
        if j == 0:
            # normalisation is exact by construction; quadrature only confirms it
            if abs(value - 1.0) > 1e-10:
                raise QuadratureError(f"{self.name}: integral of K is {value!r}, not 1")
            return 1.0
        return value

    def _derivative(self, s: int, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class PolynomialKernel(Kernel):
    """C (1 - u^2)^k on [-1, 1], normalised to integrate to one."""

    support = 1.0

    def __init__(self, name: str, power: int, constant: float) -> None:
        self.name = name
        self.power = power
        self.smoothness = power - 1
        base = constant * Polynomial([1.0, 0.0, -1.0]) ** power
        self._polys = [base]
        while self._polys[-1].degree() > 0:
            self._polys.append(self._polys[-1].deriv())
        super().__init__()

    def _derivative(self, s: int, u: np.ndarray) -> np.ndarray:
        if s >= len(self._polys):
            return np.zeros_like(u, dtype=float)
        inside = np.abs(u) <= 1.0
        return np.where(inside, self._polys[s](np.where(inside, u, 0.0)), 0.0)


class GaussianKernel(Kernel):
    """Standard normal density.

    Violates the compact-support assumption; kept for comparison runs.
    K^{(s)}(u) = (-1)^s He_s(u) phi(u) with He_s the probabilists' Hermite
    polynomial.
    """

    name = "gaussian"
    smoothness = math.inf
    support = None

    def _derivative(self, s: int, u: np.ndarray) -> np.ndarray:
        phi = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
        if s == 0:
            return phi
        coeffs = np.zeros(s + 1)
        coeffs[s] = (-1.0) ** s
        return hermeval(u, coeffs) * phi


KERNELS: Dict[str, Kernel] = {
    "epanechnikov": PolynomialKernel("epanechnikov", 1, 3 / 4),
    "biweight": PolynomialKernel("biweight", 2, 15 / 16),
    "triweight": PolynomialKernel("triweight", 3, 35 / 32),
    "gaussian": GaussianKernel(),
}


def get_kernel(name: str) -> Kernel:
    try:
        return KERNELS[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown kernel {name!r}; choose from {', '.join(KERNELS)}"
        ) from None
