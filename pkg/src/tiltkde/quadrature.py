"""Adaptive Simpson quadrature.

Iterative (explicit stack) so deep refinement cannot hit Python's recursion
limit. Each accepted panel carries the Richardson correction ``(S2 - S1)/15``.
"""

from __future__ import annotations

import math
from typing import Callable

from .errors import QuadratureError

MAX_DEPTH = 50
MAX_PANELS = 2_000_000


def adaptive_simpson(
    func: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = MAX_DEPTH,
    initial_panels: int = 8,
) -> float:
    """Integrate ``func`` over ``[a, b]`` to absolute tolerance ``tol``.

    The interval is first split into ``initial_panels`` equal pieces so that
    narrow features are not missed by the first five-point estimate. Raises
    :class:`QuadratureError` if any panel needs more than ``max_depth``
    bisections or the integrand returns a non-finite value.
    """
    if a == b:
        return 0.0
    if not (math.isfinite(a) and math.isfinite(b)):
        raise QuadratureError("integration limits must be finite")
    if tol <= 0:
        raise ValueError("tol must be positive")

    def f(x: float) -> float:
        y = float(func(x))
        if not math.isfinite(y):
            raise QuadratureError(f"integrand is not finite at x={x!r}")
        return y

    edges = [a + (b - a) * k / initial_panels for k in range(initial_panels + 1)]
    panel_tol = tol / initial_panels
    stack = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        flo, fmid, fhi = f(lo), f(mid), f(hi)
        whole = (hi - lo) * (flo + 4.0 * fmid + fhi) / 6.0
        stack.append((lo, hi, flo, fmid, fhi, whole, panel_tol, 0))

    pieces = []
    evaluated = 0
    while stack:
        lo, hi, flo, fmid, fhi, whole, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lmid, rmid = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lmid), f(rmid)
        evaluated += 2
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        diff = left + right - whole
        if abs(diff) <= 15.0 * eps:
            pieces.append(left + right + diff / 15.0)
            continue
        if depth >= max_depth or evaluated > MAX_PANELS:
            raise QuadratureError(
                f"no convergence on [{lo!r}, {hi!r}] after {depth} bisections "
                f"(estimate change {abs(diff):.3e}, target {15.0 * eps:.3e})"
            )
        stack.append((mid, hi, fmid, frm, fhi, right, eps / 2.0, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, eps / 2.0, depth + 1))
    return math.fsum(pieces)
