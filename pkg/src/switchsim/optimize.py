"""Small deterministic 1-D maximizer shared by the curve generators."""

from __future__ import annotations

import math
from typing import Callable

from .tolerances import GOLDEN_TOL

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, tol: float = GOLDEN_TOL
) -> tuple[float, float]:
    """Maximize a unimodal function on [lo, hi] by golden-section search.

    Returns (argmax, max).  Deterministic; tol bounds the abscissa error.
    """
    if hi < lo:
        raise ValueError("need lo <= hi")
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def grid_then_golden_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    n_grid: int = 2000,
    tol: float = GOLDEN_TOL,
) -> tuple[float, float]:
    """Coarse grid presearch followed by golden-section refinement.

    Robust against multiple local maxima as long as the grid resolves them.
    """
    if n_grid < 3:
        raise ValueError("n_grid must be >= 3")
    step = (hi - lo) / (n_grid - 1)
    best_i, best_v = 0, -math.inf
    for i in range(n_grid):
        v = f(lo + i * step)
        if v > best_v:
            best_i, best_v = i, v
    a = lo + max(best_i - 1, 0) * step
    b = lo + min(best_i + 1, n_grid - 1) * step
    return golden_section_max(f, a, b, tol)
