"""Leverage under margin calls, and the power-law frontier optimum.

A position levered ``1 + x`` is liquidated once its return reaches the
floor ``-1 + m``, so the levered distribution is truncated there. The
truncation is the ground truth; the tail-probability/CVaR decomposition
is reported alongside and reconciles with it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, NoOptimumError, NoRealSolutionError
from .returns_core import EmpiricalDistribution
from .rootfind import bisect_secant, expand_bracket


@dataclass(frozen=True)
class LeverageSpec:
    """Extra leverage ``x_lev`` (multiple ``1 + x_lev``), borrowing rate, margin."""

    x_lev: float
    r_c: float = 0.0
    m: float = 0.5

    def __post_init__(self):
        if not self.x_lev >= 0:
            raise DomainError("extra leverage must be non-negative", x_lev=self.x_lev)
        if not 0 < self.m < 1:
            raise DomainError("margin fraction must lie in (0, 1)", m=self.m)
        if not self.r_c >= 0:
            raise DomainError("borrowing rate must be non-negative", r_c=self.r_c)

    @property
    def floor(self) -> float:
        return -1.0 + self.m

    @property
    def multiple(self) -> float:
        return 1.0 + self.x_lev


@dataclass(frozen=True)
class LeverageBreakdown:
    e_lev: float
    plain_leverage_term: float
    financing_cost: float
    tail_probability: float
    tail_cvar: Optional[float]
    floor: float
    truncation_gain: float

    @property
    def decomposed(self) -> float:
        """Expected return rebuilt from its components."""
        return self.plain_leverage_term - self.financing_cost + self.truncation_gain

    def as_dict(self) -> dict:
        return asdict(self)


def leveraged_expected_return(dist: EmpiricalDistribution, spec: LeverageSpec) -> LeverageBreakdown:
    """Expected return of a margin-protected levered position.

    ``dist`` holds unlevered returns. Levered outcomes below the floor are
    replaced by the floor and financing ``r_c * x_lev`` is always charged.
    """
    levered = dist.outcomes * spec.multiple
    probs = dist.probabilities
    floor = spec.floor
    financing = spec.r_c * spec.x_lev
    e_lev = float(np.dot(np.maximum(levered, floor), probs)) - financing

    tail = levered < floor
    p_tail = float(probs[tail].sum())
    if p_tail > 0:
        tail_cvar = float(np.dot(levered[tail], probs[tail]) / p_tail)
        gain = p_tail * (floor - tail_cvar)
    else:
        tail_cvar, gain = None, 0.0
    return LeverageBreakdown(
        e_lev=e_lev,
        plain_leverage_term=dist.mean() * spec.multiple,
        financing_cost=financing,
        tail_probability=p_tail,
        tail_cvar=tail_cvar,
        floor=floor,
        truncation_gain=gain,
    )


def dominance_gap(dist_a: EmpiricalDistribution, dist_b: EmpiricalDistribution, spec: LeverageSpec) -> float:
    """``E_L(B) - E_L(A)``; positive when B wins once both are levered."""
    return leveraged_expected_return(dist_b, spec).e_lev - leveraged_expected_return(dist_a, spec).e_lev


@dataclass(frozen=True)
class PowerFrontierSpec:
    """Frontier ``E = (sigma - beta_shift)**alpha_exp + gamma_level``.

    ``gamma_level`` shifts returns only and does not move the optimum.
    """

    alpha_exp: float
    beta_shift: float
    a: float
    L: float = 1.0
    gamma_level: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha_exp < 1:
            raise DomainError("exponent must lie in (0, 1)", alpha_exp=self.alpha_exp)
        if not self.beta_shift > 0:
            raise DomainError("risk offset must be positive", beta_shift=self.beta_shift)
        if not self.a > 0:
            raise DomainError("risk aversion must be positive", a=self.a)
        if not self.L >= 1:
            raise DomainError("leverage multiple must be at least 1", L=self.L)


@dataclass(frozen=True)
class PowerFrontierOptimum:
    sigma_opt: float
    sigma_lev_literal: float
    sigma_lev_fixedpoint: float


def _first_order_root(alpha: float, beta: float, scale: float) -> float:
    """Root of ``sigma - alpha (sigma - beta)**(alpha - 1) / scale`` above ``beta``.

    Solved for ``log(sigma - beta)`` so roots hugging ``beta`` keep full
    relative precision in the offset.
    """

    def f(t: float) -> float:
        u = math.exp(t)
        return beta + u - alpha * u ** (alpha - 1.0) / scale

    try:
        lo, hi = expand_bracket(f, -690.0, 0.0, max_hi=700.0)
    except NoRealSolutionError as exc:
        raise NoOptimumError("first-order condition has no root", alpha=alpha, beta=beta) from exc
    return beta + math.exp(bisect_secant(f, lo, hi, xtol=1e-14))


def power_frontier_optimum(spec: PowerFrontierSpec) -> PowerFrontierOptimum:
    """Optimal risk on a power-law frontier, unlevered and levered.

    The levered optimum is returned in two readings: ``sigma_opt / L`` and
    the self-consistent root of ``sigma = alpha (sigma - beta)**(alpha-1) / (L a)``.
    """
    sigma_opt = _first_order_root(spec.alpha_exp, spec.beta_shift, spec.a)
    fixed = _first_order_root(spec.alpha_exp, spec.beta_shift, spec.L * spec.a)
    return PowerFrontierOptimum(sigma_opt, sigma_opt / spec.L, fixed)
