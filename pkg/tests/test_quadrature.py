import math

import pytest

from tiltkde.errors import QuadratureError
from tiltkde.quadrature import adaptive_simpson


@pytest.mark.parametrize(
    "func, a, b, exact",
    [
        (math.sin, 0.0, math.pi, 2.0),
        (math.exp, -1.0, 2.0, math.e**2 - math.exp(-1.0)),
        (lambda x: x**5 - 3 * x, -2.0, 1.0, (1 - 64) / 6 - 1.5 * (1 - 4)),
        (lambda x: abs(x - 0.3), -1.0, 1.0, 1.09),
    ],
)
def test_known_integrals(func, a, b, exact):
    assert adaptive_simpson(func, a, b, tol=1e-11) == pytest.approx(exact, abs=1e-10)


def test_empty_interval():
    assert adaptive_simpson(math.exp, 1.0, 1.0) == 0.0


def test_reversed_limits_change_sign():
    fwd = adaptive_simpson(math.cos, 0.0, 1.0)
    assert adaptive_simpson(math.cos, 1.0, 0.0) == pytest.approx(-fwd, abs=1e-12)


def test_nonconvergence_raises():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: 1.0 if x > 0.3 else 0.0, 0.0, 1.0, tol=1e-14, max_depth=10)


def test_nonfinite_integrand_raises():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: 1.0 / x if x else float("inf"), 0.0, 1.0)
