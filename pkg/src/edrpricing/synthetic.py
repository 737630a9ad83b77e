"""Seeded synthetic data sets with known structure.

These back the test suite, the acceptance checks and the CLI fixtures.
Every generator is deterministic given its seed.
"""

from __future__ import annotations

import csv
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .returns_core import (
    EmpiricalDistribution,
    Granularity,
    PeriodSpec,
    ReturnSeries,
    aggregate_periods,
    empirical_quantile,
    write_returns_csv,
)
from .risk_measures import risk_report
from .rootfind import bisect_secant


def business_days(n: int, start: date = date(1990, 1, 1)) -> tuple[date, ...]:
    out = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return tuple(out)


def month_ends(n: int, year: int = 2009, month: int = 10) -> tuple[date, ...]:
    out = []
    for i in range(n):
        y, m = year + (month - 1 + i) // 12, (month - 1 + i) % 12 + 1
        nxt = date(y + (m == 12), m % 12 + 1, 1)
        out.append(nxt - timedelta(days=1))
    return tuple(out)


def normal_daily(label: str, n: int, mu: float, sigma: float, seed: int) -> ReturnSeries:
    rng = np.random.default_rng(seed)
    values = np.clip(rng.normal(mu, sigma, n), -0.99, None)
    return ReturnSeries(label, business_days(n), values)


def three_asset_universe(seed: int = 7, n: int = 1000) -> list[ReturnSeries]:
    """Three correlated assets: a bond-like, a balanced and an equity-like one."""
    rng = np.random.default_rng(seed)
    mu = np.array([0.0002, 0.0009, 0.0020])
    vol = np.array([0.002, 0.008, 0.016])
    corr = np.array([[1.0, 0.2, 0.1], [0.2, 1.0, 0.5], [0.1, 0.5, 1.0]])
    cov = corr * np.outer(vol, vol)
    draws = rng.multivariate_normal(mu, cov, size=n)
    # fat left tail on the equity-like asset
    crash = rng.random(n) < 0.01
    draws[crash, 2] -= rng.uniform(0.03, 0.08, crash.sum())
    dates = business_days(n, date(2010, 1, 1))
    return [ReturnSeries(lbl, dates, draws[:, j]) for j, lbl in enumerate(("bond", "balanced", "equity"))]


def regime_volatility_series(
    seed: int = 11,
    n_months: int = 480,
    base_vol: float = 0.01,
    fall_level: float = 0.1,
) -> ReturnSeries:
    """Daily returns whose volatility doubles in the month after a fall.

    Each month's compounded return is fixed in advance, independent of its
    volatility: daily returns are ``exp(mu/n + vol * e) - 1`` with the
    shocks ``e`` summing to zero. A fall month is one at or below the lower
    ``fall_level`` quantile of monthly returns.
    """
    rng = np.random.default_rng(seed)
    days = business_days(int(n_months * 23), date(1970, 1, 1))
    months: list[list[date]] = []
    for d in days:
        if not months or (months[-1][0].year, months[-1][0].month) != (d.year, d.month):
            months.append([])
        months[-1].append(d)
    months = months[:n_months]
    drift = rng.normal(0.005, 0.04, len(months))
    monthly = np.expm1(drift)
    threshold = empirical_quantile(EmpiricalDistribution.from_samples(monthly), fall_level)
    vols = np.empty(len(months))
    vols[0] = base_vol
    for t in range(1, len(months)):
        vols[t] = 2.0 * vols[t - 1] if monthly[t - 1] <= threshold else base_vol
    dates, values = [], []
    for t, mdays in enumerate(months):
        e = rng.standard_normal(len(mdays))
        e -= e.mean()
        values.extend(np.expm1(drift[t] / len(mdays) + vols[t] * e))
        dates.extend(mdays)
    return ReturnSeries("regime", tuple(dates), np.array(values))


def vix_like_pair(
    seed: int = 3,
    n: int = 5000,
    coupling: float = 1.0,
    noise: float = 3.0,
) -> tuple[ReturnSeries, ReturnSeries]:
    """Index returns and companion log changes ``-coupling * r + noise``.

    ``noise`` is in units of the index volatility; ``coupling = 0`` gives an
    independent companion.
    """
    rng = np.random.default_rng(seed)
    sigma = 0.01
    r = rng.normal(0.0003, sigma, n)
    changes = -coupling * r + noise * sigma * rng.standard_normal(n)
    dates = business_days(n)
    return ReturnSeries("index", dates, r), ReturnSeries("companion", dates, changes)


def cross_section_universe(
    seed: int = 5,
    n_assets: int = 300,
    n_months: int = 60,
    intercept: float = 0.15,
    slope: float = 0.56,
    noise: float = 0.005,
    vol: float = 0.03,
) -> list[ReturnSeries]:
    """Monthly assets whose mean overlapping yearly return tracks EDR linearly.

    Every asset has normal monthly shocks plus one jump of random sign and
    size, which spreads the skew of yearly returns across assets. Its drift
    is then solved so that ``mean = intercept + slope * EDR + noise`` holds
    on the overlapping yearly returns.
    """
    rng = np.random.default_rng(seed)
    dates = month_ends(n_months)
    yearly = PeriodSpec(Granularity.YEARLY, overlap=True)
    assets = []
    for i in range(n_assets):
        xi = rng.standard_normal(n_months)
        xi[rng.integers(n_months)] += rng.uniform(-12.0, 12.0)
        eps = rng.normal(0.0, noise)

        def build(mu: float, xi=xi, i=i) -> ReturnSeries:
            return ReturnSeries(f"asset_{i:03d}", dates, np.clip(mu + vol * xi, -0.95, None))

        def miss(mu: float, build=build, eps=eps) -> float:
            rep = risk_report(aggregate_periods(build(mu), yearly))
            return rep.expected_return - (intercept + slope * rep.edr + eps)

        assets.append(build(bisect_secant(miss, -0.3, 0.3, xtol=1e-10)))
    return assets


def market_from(assets: list[ReturnSeries], label: str = "market") -> ReturnSeries:
    """Equal-weighted market over aligned assets."""
    matrix = np.column_stack([a.values for a in assets])
    return ReturnSeries(label, assets[0].dates, matrix.mean(axis=1))


def levels_from_changes(changes: ReturnSeries, start_level: float = 20.0) -> ReturnSeries:
    """Rebuild a positive level series from log changes (one extra leading date)."""
    first = changes.dates[0] - timedelta(days=1)
    levels = start_level * np.exp(np.concatenate([[0.0], np.cumsum(changes.values)]))
    return ReturnSeries(changes.label, (first,) + changes.dates, levels)


def write_fixtures(directory: str | Path, *, n_cross_section: int = 40) -> dict[str, Path]:
    """Write the CLI fixture files and return their paths by name."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    def put(name: str, series: ReturnSeries) -> None:
        path = directory / f"{name}.csv"
        write_returns_csv(series, path)
        paths[name] = path

    for s in three_asset_universe():
        put(s.label, s)
    put("sp_daily", normal_daily("sp_daily", 2600, 0.0003, 0.01, seed=19))
    put("regime_daily", regime_volatility_series(n_months=120))
    index, companion = vix_like_pair(n=2000)
    put("index_daily", index)
    put("companion_changes", companion)
    put("companion_levels", levels_from_changes(companion))
    cs_dir = directory / "cross_section"
    cs_dir.mkdir(exist_ok=True)
    cs = cross_section_universe(n_assets=n_cross_section)
    for s in cs:
        path = cs_dir / f"{s.label}.csv"
        write_returns_csv(s, path)
    paths["cross_section"] = cs_dir
    put("market_monthly", market_from(cs))

    views = directory / "views.csv"
    with views.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["invested_value", "required_return"])
        for value, ret in [(100.0, 0.10), (300.0, 0.02), (50.0, 0.07), (550.0, 0.05)]:
            w.writerow([value, ret])
    paths["views"] = views
    return paths


if __name__ == "__main__":
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent / "data"
    for name, path in write_fixtures(target).items():
        print(f"{name}: {path}")
