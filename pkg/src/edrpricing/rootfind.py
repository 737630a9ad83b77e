"""Bracketed scalar root finding: bisection with a secant polish."""

from __future__ import annotations

import math
from typing import Callable

from .errors import NoRealSolutionError


def expand_bracket(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    factor: float = 2.0,
    max_hi: float = 1e6,
) -> tuple[float, float]:
    """Grow ``hi`` geometrically until ``f`` changes sign on ``[lo, hi]``."""
    f_lo = f(lo)
    while f_lo * f(hi) > 0:
        if hi >= max_hi:
            raise NoRealSolutionError(
                "no sign change found while expanding bracket", lo=lo, hi=hi
            )
        hi = lo + (hi - lo) * factor
    return lo, hi


def bisect_secant(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    xtol: float = 1e-12,
    max_iter: int = 500,
) -> float:
    """Root of ``f`` on ``[lo, hi]``; the bracket must straddle a sign change.

    Bisection does the work and guarantees convergence; once the bracket is
    narrow a secant step is tried and kept only if it stays inside.
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if math.isnan(f_lo) or math.isnan(f_hi) or f_lo * f_hi > 0:
        raise NoRealSolutionError("bracket does not straddle a root", lo=lo, hi=hi)

    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        # secant polish inside the current bracket
        if hi - lo < 1e-4 and f_hi != f_lo:
            guess = hi - f_hi * (hi - lo) / (f_hi - f_lo)
            if lo < guess < hi:
                f_guess = f(guess)
                if f_guess == 0.0:
                    return guess
                if (f_guess < 0) == (f_lo < 0):
                    lo, f_lo = guess, f_guess
                else:
                    hi, f_hi = guess, f_guess
    return lo if abs(f_lo) <= abs(f_hi) else hi
