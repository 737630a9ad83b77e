"""Tail and downside risk measures on empirical return distributions.

All measures are in return space: VaR is the lower alpha-quantile of
returns and CVaR the mean of returns at or below it, so ``CVaR <= VaR``.
Expected Downside Risk (EDR) is the CVaR taken at the probability level
where VaR equals the mean return; Prospect is its upside mirror.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    AlignmentError,
    DomainError,
    InsufficientDataError,
    UndefinedBetaError,
    UndefinedProspectError,
)
from .returns_core import EmpiricalDistribution, ReturnSeries, empirical_quantile

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# outcomes within this relative distance of the mean count as "at the mean"
_MEAN_TIE_RTOL = 1e-12


def value_at_risk(dist: EmpiricalDistribution, alpha: float) -> float:
    return empirical_quantile(dist, alpha)


def conditional_value_at_risk(dist: EmpiricalDistribution, alpha: float) -> float:
    """Probability-weighted mean of outcomes at or below ``VaR_alpha``."""
    var = value_at_risk(dist, alpha)
    mask = dist.outcomes <= var
    mass = dist.probabilities[mask].sum()
    # a one-atom tail can round a hair above VaR
    return min(float(np.dot(dist.outcomes[mask], dist.probabilities[mask]) / mass), var)


def _downside_mask(dist: EmpiricalDistribution, mean: float) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(dist.outcomes))))
    return dist.outcomes <= mean + _MEAN_TIE_RTOL * scale


def expected_downside_risk(dist: EmpiricalDistribution) -> tuple[float, float]:
    """Return ``(edr, alpha_below)``.

    ``alpha_below`` is the probability mass at or below the mean and ``edr``
    the mass-weighted mean of those outcomes.
    """
    mean = dist.mean()
    mask = _downside_mask(dist, mean)
    alpha_below = float(dist.probabilities[mask].sum())
    edr = float(np.dot(dist.outcomes[mask], dist.probabilities[mask]) / alpha_below)
    if len(dist) == 1:
        edr = float(dist.outcomes[0])
    return min(edr, mean), min(alpha_below, 1.0)


def prospect(dist: EmpiricalDistribution) -> float:
    """Conditional mean above the expected return, via ``(E - a*EDR)/(1 - a)``."""
    edr, alpha = expected_downside_risk(dist)
    if alpha >= 1.0:
        raise UndefinedProspectError(
            "no probability mass above the mean; prospect is undefined"
        )
    return (dist.mean() - alpha * edr) / (1.0 - alpha)


def gaussian_edr(mean: float, sigma: float) -> float:
    """EDR of a normal distribution: ``mean - sqrt(2/pi) * sigma``."""
    if sigma < 0 or math.isnan(sigma):
        raise DomainError("sigma must be non-negative", sigma=sigma)
    return mean - SQRT_2_OVER_PI * sigma


@dataclass(frozen=True)
class RiskReport:
    label: str
    n: int
    expected_return: float
    volatility: float
    semivariance: float
    edr: float
    prospect: Optional[float]
    alpha_below: float
    var_at: Optional[tuple[float, float]] = None
    cvar_at: Optional[tuple[float, float]] = None

    # serialized field order is part of the external interface
    FIELDS = (
        "label",
        "n",
        "mean",
        "volatility",
        "semivariance",
        "edr",
        "prospect",
        "alpha_below",
        "var",
        "cvar",
    )

    def as_row(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "mean": self.expected_return,
            "volatility": self.volatility,
            "semivariance": self.semivariance,
            "edr": self.edr,
            "prospect": self.prospect,
            "alpha_below": self.alpha_below,
            "var": None if self.var_at is None else self.var_at[1],
            "cvar": None if self.cvar_at is None else self.cvar_at[1],
        }

    def as_dict(self) -> dict:
        out = self.as_row()
        out["var_alpha"] = None if self.var_at is None else self.var_at[0]
        return out


def risk_report(series: ReturnSeries, alpha: Optional[float] = None) -> RiskReport:
    """Mean, population volatility, semivariance, EDR, Prospect for one series.

    If ``alpha`` is given, VaR and CVaR at that level are attached.
    """
    values = series.values
    if len(values) < 2:
        raise InsufficientDataError(
            "risk report needs at least two observations", label=series.label, n=len(values)
        )
    dist = EmpiricalDistribution.from_samples(values)
    mean = dist.mean()
    shortfall = np.minimum(values - mean, 0.0)
    edr, alpha_below = expected_downside_risk(dist)
    try:
        pr = prospect(dist)
    except UndefinedProspectError:
        pr = None
    var_at = cvar_at = None
    if alpha is not None:
        var_at = (alpha, value_at_risk(dist, alpha))
        cvar_at = (alpha, conditional_value_at_risk(dist, alpha))
    return RiskReport(
        label=series.label,
        n=len(values),
        expected_return=mean,
        volatility=float(np.sqrt(np.mean((values - mean) ** 2))),
        semivariance=float(np.mean(shortfall**2)),
        edr=edr,
        prospect=pr,
        alpha_below=alpha_below,
        var_at=var_at,
        cvar_at=cvar_at,
    )


def beta_measures(asset: ReturnSeries, market: ReturnSeries) -> tuple[float, float]:
    """Return ``(beta, downside_beta)`` of ``asset`` against ``market``.

    Downside beta is the co-semivariance form
    ``E[min(ra-mu_a,0) min(rm-mu_m,0)] / E[min(rm-mu_m,0)^2]``.
    """
    if len(asset) != len(market) or asset.dates != market.dates:
        raise AlignmentError(
            "asset and market must share dates", asset=asset.label, market=market.label
        )
    if len(asset) < 3:
        raise InsufficientDataError("beta needs at least three observations", n=len(asset))
    ra = asset.values - asset.values.mean()
    rm = market.values - market.values.mean()
    var_m = float(np.mean(rm * rm))
    if var_m == 0.0:
        raise UndefinedBetaError("market variance is zero", market=market.label)
    beta = float(np.mean(ra * rm)) / var_m
    da, dm = np.minimum(ra, 0.0), np.minimum(rm, 0.0)
    down_var = float(np.mean(dm * dm))
    if down_var == 0.0:
        raise UndefinedBetaError("market has no downside mass", market=market.label)
    return beta, float(np.mean(da * dm)) / down_var
