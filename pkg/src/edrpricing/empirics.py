"""Statistical kernel and the three empirical study procedures.

* volatility event study after extreme period returns,
* t-test p-value curve of a companion series over lower-tail quantiles,
* cross-sectional regression of mean return on a risk measure.

The t distribution is evaluated through the regularized incomplete beta
function, so p-values do not depend on a statistics package.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    AlignmentError,
    DegenerateTestError,
    DomainError,
    EDRError,
    InsufficientDataError,
    SingularDesignError,
)
from .returns_core import (
    EmpiricalDistribution,
    Granularity,
    PeriodSpec,
    ReturnSeries,
    aggregate_periods,
    empirical_quantile,
    period_buckets,
)
from .risk_measures import beta_measures, risk_report

logger = logging.getLogger(__name__)

CF_TOL = 1e-12
CF_MAX_ITER = 10_000
_TINY = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOL:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """``I_x(a, b)`` for ``a, b > 0`` and ``0 <= x <= 1``."""
    if not (a > 0 and b > 0):
        raise DomainError("beta parameters must be positive", a=a, b=b)
    if not 0.0 <= x <= 1.0:
        raise DomainError("x must lie in [0, 1]", x=x)
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_continued_fraction(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """Upper tail probability ``P(T > t)``."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t))
    return tail if t >= 0 else 1.0 - tail


def t_pvalue(t: float, df: float, alternative: str = "two-sided") -> float:
    if alternative == "two-sided":
        if math.isinf(t):
            return 0.0
        return min(1.0, regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t)))
    if alternative == "greater":
        return student_t_sf(t, df)
    if alternative == "less":
        return student_t_sf(-t, df)
    raise DomainError("alternative must be two-sided, greater or less", alternative=alternative)


@dataclass(frozen=True)
class TTestResult:
    mean: float
    p_value: float
    statistic: float
    df: int
    n: int


def student_t_test(values: Iterable[float], alternative: str = "two-sided") -> TTestResult:
    """One-sample t-test of a zero mean."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    n = arr.size
    if n < 2:
        raise InsufficientDataError("t-test needs at least two values", n=n)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1))
    if sd == 0.0:
        raise DegenerateTestError("zero sample variance", n=n, mean=mean)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(mean, t_pvalue(t, n - 1, alternative), t, n - 1, n)


@dataclass(frozen=True)
class RegressionResult:
    coefficient: float
    intercept: float
    coef_p_value: float
    r_squared: float
    n: int
    std_error: float = math.nan
    t_statistic: float = math.nan
    measure: Optional[str] = None
    n_excluded: int = 0

    def as_row(self) -> dict:
        return {
            "measure": self.measure,
            "coefficient": self.coefficient,
            "intercept": self.intercept,
            "p_value": self.coef_p_value,
            "r_squared": self.r_squared,
            "n": self.n,
            "n_excluded": self.n_excluded,
        }


def ols_fit(x: Sequence[float], y: Sequence[float]) -> RegressionResult:
    """Simple OLS of ``y`` on ``x`` with intercept.

    The slope p-value is two-sided with ``n - 2`` degrees of freedom.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n != y.size:
        raise DomainError("x and y differ in length", n_x=n, n_y=y.size)
    if n < 3:
        raise InsufficientDataError("regression needs at least three points", n=n)
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(np.dot(dx, dx))
    if sxx <= 0.0 or sxx <= 1e-28 * max(1.0, float(np.dot(x, x))):
        raise SingularDesignError("regressor has zero variance", n=n)
    slope = float(np.dot(dx, dy)) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    ssr = float(np.dot(resid, resid))
    sst = float(np.dot(dy, dy))
    r2 = 0.0 if sst == 0.0 else min(1.0, max(0.0, 1.0 - ssr / sst))
    se = math.sqrt(ssr / (n - 2) / sxx)
    if se == 0.0:
        t = math.copysign(math.inf, slope) if slope != 0 else 0.0
        p = 0.0 if slope != 0 else 1.0
    else:
        t = slope / se
        p = t_pvalue(t, n - 2)
    return RegressionResult(slope, intercept, p, r2, n, se, t)


# --- volatility event study -------------------------------------------------


@dataclass(frozen=True)
class EventStudyResult:
    label: str
    mean_vol_change: float
    p_value: float
    n_events: int

    def as_row(self) -> dict:
        return {
            "condition": self.label,
            "average": self.mean_vol_change,
            "p_value": self.p_value,
            "n_events": self.n_events,
        }


MIN_EVENT_PERIODS = 50


def event_study_volatility(
    daily: ReturnSeries,
    granularity: Granularity | str,
    *,
    alternative: str = "two-sided",
    fall_level: float = 0.1,
    jump_level: float = 0.9,
) -> list[EventStudyResult]:
    """Log volatility change in the period after a price fall or jump.

    A fall is a period return at or below the lower 10% quantile of period
    returns, a jump one strictly above the 90% quantile. Period volatility
    is the population standard deviation of the daily returns inside the
    period. Uptrend and downtrend rows split events by the sign of the next
    period's return; aggregate rows pool both.
    """
    granularity = Granularity(granularity)
    if granularity is Granularity.YEARLY:
        raise DomainError("event study is weekly or monthly", granularity=granularity.value)
    buckets = period_buckets(daily, granularity)
    if len(buckets) < MIN_EVENT_PERIODS:
        raise InsufficientDataError(
            "too few periods for an event study", n_periods=len(buckets), needed=MIN_EVENT_PERIODS
        )
    period_ret = np.array([np.prod(1.0 + v) - 1.0 for _, v in buckets])
    vol = np.array([v.std() if v.size >= 2 else math.nan for _, v in buckets])
    dist = EmpiricalDistribution.from_samples(period_ret)
    lo_thr = empirical_quantile(dist, fall_level)
    hi_thr = empirical_quantile(dist, jump_level)

    groups: dict[tuple[str, str], list[float]] = {}
    for t in range(len(buckets) - 1):
        v0, v1 = vol[t], vol[t + 1]
        if not (v0 > 0 and v1 > 0):
            continue
        if period_ret[t] <= lo_thr:
            kind = "fall"
        elif period_ret[t] > hi_thr:
            kind = "jump"
        else:
            continue
        change = math.log(v1 / v0)
        groups.setdefault((kind, "aggregate"), []).append(change)
        nxt = period_ret[t + 1]
        if nxt > 0:
            groups.setdefault((kind, "uptrend"), []).append(change)
        elif nxt < 0:
            groups.setdefault((kind, "downtrend"), []).append(change)

    g = granularity.value
    rows = []
    order = [
        ("jump", "uptrend"),
        ("jump", "downtrend"),
        ("fall", "uptrend"),
        ("fall", "downtrend"),
        ("jump", "aggregate"),
        ("fall", "aggregate"),
    ]
    for kind, trend in order:
        if trend == "aggregate":
            label = f"Avg vol change after price {kind} {g}"
        else:
            label = f"Volatility change after price {kind} in {g} {trend}"
        changes = groups.get((kind, trend), [])
        try:
            res = student_t_test(changes, alternative)
        except EDRError as exc:
            logger.info("skipping %s: %s", label, exc)
            continue
        rows.append(EventStudyResult(label, res.mean, res.p_value, res.n))
    return rows


# --- quantile t-test curve --------------------------------------------------


@dataclass(frozen=True)
class QuantileTestPoint:
    alpha: float
    p_value: Optional[float]
    n: int
    mean: Optional[float] = None
    skipped: bool = False

    def as_row(self) -> dict:
        return {"alpha": self.alpha, "p_value": self.p_value, "n": self.n, "mean": self.mean, "skipped": self.skipped}


def log_changes(levels: ReturnSeries) -> ReturnSeries:
    """Daily log changes of a level series such as a volatility index.

    The ``values`` of ``levels`` are read as positive index levels.
    """
    lv = levels.values
    if np.any(lv <= 0):
        raise DomainError("levels must be positive", label=levels.label)
    return ReturnSeries(levels.label, levels.dates[1:], np.diff(np.log(lv)))


def quantile_ttest_curve(
    index_returns: ReturnSeries,
    companion_changes: ReturnSeries,
    alphas: Sequence[float],
    *,
    bucket: bool = False,
    alternative: str = "two-sided",
) -> list[QuantileTestPoint]:
    """p-value of the companion's mean change on days in the index's lower tail.

    Cumulative mode selects days whose index return is at or below the
    alpha-quantile. Bucket mode selects days between the previous grid
    quantile (exclusive) and the current one.
    """
    if index_returns.dates != companion_changes.dates:
        raise AlignmentError(
            "index and companion series must share dates",
            index=index_returns.label,
            companion=companion_changes.label,
        )
    alphas = [float(a) for a in alphas]
    if any(not 0.0 < a <= 1.0 for a in alphas):
        raise DomainError("alphas must lie in (0, 1]")
    idx = index_returns.values
    comp = companion_changes.values
    dist = EmpiricalDistribution.from_samples(idx)
    out = []
    prev_q = -math.inf
    for a in sorted(alphas):
        q = empirical_quantile(dist, a)
        mask = idx <= q
        if bucket:
            mask &= idx > prev_q
        prev_q = q
        sel = comp[mask]
        try:
            res = student_t_test(sel, alternative)
        except EDRError:
            out.append(QuantileTestPoint(a, None, int(sel.size), None, skipped=True))
            continue
        out.append(QuantileTestPoint(a, res.p_value, res.n, res.mean))
    return out


# --- cross-sectional regression ---------------------------------------------

MEASURES = ("volatility", "semivariance", "beta", "downside_beta", "edr")


def _overlapping_yearly(series: ReturnSeries) -> ReturnSeries:
    return aggregate_periods(series, PeriodSpec(Granularity.YEARLY, overlap=True))


def asset_measure(asset_yearly: ReturnSeries, market_yearly: Optional[ReturnSeries], measure: str) -> float:
    if measure in ("beta", "downside_beta"):
        if market_yearly is None:
            raise DomainError("beta measures need a market series")
        beta, dbeta = beta_measures(asset_yearly, market_yearly)
        return beta if measure == "beta" else dbeta
    report = risk_report(asset_yearly)
    return float(getattr(report, measure))


def cross_section_regression(
    assets: Sequence[ReturnSeries],
    market: Optional[ReturnSeries],
    measure: str,
) -> RegressionResult:
    """Regress each asset's mean overlapping yearly return on a risk measure.

    Assets whose measure is undefined are dropped and counted in
    ``n_excluded``.
    """
    if measure not in MEASURES:
        raise DomainError("unknown risk measure", measure=measure, allowed=list(MEASURES))
    if market is None and measure in ("beta", "downside_beta"):
        raise DomainError("beta measures need a market series", measure=measure)
    if len(assets) < 3:
        raise InsufficientDataError("cross-section needs at least three assets", n=len(assets))
    market_yearly = _overlapping_yearly(market) if market is not None else None
    xs, ys, excluded = [], [], 0
    for asset in assets:
        try:
            yearly = _overlapping_yearly(asset)
            xs.append(asset_measure(yearly, market_yearly, measure))
        except EDRError as exc:
            logger.info("excluding %s from %s regression: %s", asset.label, measure, exc)
            excluded += 1
            continue
        ys.append(float(yearly.values.mean()))
    res = ols_fit(xs, ys)
    return RegressionResult(
        res.coefficient,
        res.intercept,
        res.coef_p_value,
        res.r_squared,
        res.n,
        res.std_error,
        res.t_statistic,
        measure=measure,
        n_excluded=excluded,
    )
