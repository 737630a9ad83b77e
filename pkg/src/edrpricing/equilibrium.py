"""Value-weighted aggregation of required returns and the AS-AD price path."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, EmptyResultError, NoEquilibriumError


@dataclass(frozen=True)
class InvestorView:
    invested_value: float
    required_return: float

    def __post_init__(self):
        if not self.invested_value > 0:
            raise DomainError("invested value must be positive", invested_value=self.invested_value)


def aggregate_required_return(views: Sequence[InvestorView]) -> float:
    """Invested-value weighted mean of the investors' required returns."""
    if not views:
        raise EmptyResultError("no investor views to aggregate")
    values = np.array([v.invested_value for v in views])
    returns = np.array([v.required_return for v in views])
    agg = float(np.dot(values, returns) / values.sum())
    # keep rounding from stepping outside the inputs' range
    return min(max(agg, float(returns.min())), float(returns.max()))


@dataclass(frozen=True)
class AsAdSpec:
    """Linear curves ``P_S = supply_slope Q + supply_intercept`` and the demand analogue."""

    supply_slope: float = 2.0
    supply_intercept: float = 0.0
    demand_slope: float = -2.0
    demand_intercept: float = 5.0
    growth_rate: float = 0.2
    horizon: float = 1.0
    steps: int = 11

    def __post_init__(self):
        if self.supply_slope == self.demand_slope:
            raise NoEquilibriumError("supply and demand curves are parallel")
        if not self.supply_slope > 0:
            raise DomainError("supply must slope upwards", supply_slope=self.supply_slope)
        if not self.demand_slope < 0:
            raise DomainError("demand must slope downwards", demand_slope=self.demand_slope)
        if self.steps < 1:
            raise DomainError("steps must be at least 1", steps=self.steps)
        if self.horizon < 0:
            raise DomainError("horizon must be non-negative", horizon=self.horizon)
        q, p = self.equilibrium()
        if not (q > 0 and p > 0):
            raise NoEquilibriumError("curves do not intersect at positive quantity and price", q=q, p=p)

    def equilibrium(self) -> tuple[float, float]:
        q = (self.demand_intercept - self.supply_intercept) / (self.supply_slope - self.demand_slope)
        return q, self.supply_slope * q + self.supply_intercept


def as_ad_price_path(spec: AsAdSpec) -> list[tuple[float, float, float]]:
    """Equilibrium ``(t, Q, P)`` on a uniform time grid.

    Both curves are scaled by ``exp(growth_rate t)``, so the quantity stays
    put and the price grows at the required return.
    """
    q0, p0 = spec.equilibrium()
    times = np.linspace(0.0, spec.horizon, spec.steps) if spec.steps > 1 else np.array([0.0])
    path = []
    for t in times:
        g = math.exp(spec.growth_rate * float(t))
        # solve g*(s Q + s0) = g*(d Q + d0)
        q = (g * spec.demand_intercept - g * spec.supply_intercept) / (g * spec.supply_slope - g * spec.demand_slope)
        path.append((float(t), q, p0 * g))
    return path
