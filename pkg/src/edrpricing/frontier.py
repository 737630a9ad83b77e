"""Monte Carlo portfolio clouds, Pareto frontiers and optimal choices.

Portfolios are long-only with weights drawn uniformly from the simplex.
Sampling is split into fixed-size blocks, each with its own RNG stream
seeded by ``(seed, block)``, so output does not depend on thread count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import AlignmentError, DegenerateReferenceError, DomainError, EmptyResultError
from .prospect_utility import (
    KTUtilityParams,
    RiskNeutralPoint,
    risk_neutral_amplitude,
    solve_shrink,
    utility_score,
)
from .returns_core import ReturnSeries
from .risk_measures import RiskReport, risk_report
from .rootfind import bisect_secant

logger = logging.getLogger(__name__)

BLOCK_SIZE = 512


class RiskSpace(str, Enum):
    SIGMA = "sigma_space"
    EDR = "edr_space"

    @classmethod
    def parse(cls, value: "RiskSpace | str") -> "RiskSpace":
        if isinstance(value, cls):
            return value
        aliases = {"sigma": cls.SIGMA, "edr": cls.EDR}
        return aliases.get(value) or cls(value)


@dataclass(frozen=True)
class PortfolioSample:
    weights: np.ndarray
    series: ReturnSeries
    report: RiskReport


@dataclass(frozen=True)
class FrontierPoint:
    risk_coord: float
    expected_return: float
    portfolio_index: int = -1
    weights: Optional[np.ndarray] = None


def _asset_matrix(assets: Sequence[ReturnSeries]) -> np.ndarray:
    if len(assets) < 2:
        raise DomainError("portfolio sampling needs at least two assets", n_assets=len(assets))
    dates = assets[0].dates
    for s in assets[1:]:
        if s.dates != dates:
            raise AlignmentError("asset series must share identical dates", label=s.label)
    return np.column_stack([s.values for s in assets])


def _block_weights(seed: int, block: int, count: int, n_assets: int) -> np.ndarray:
    rng = np.random.default_rng([seed, block])
    raw = rng.standard_exponential((count, n_assets))
    return raw / raw.sum(axis=1, keepdims=True)


def sample_weights(n: int, n_assets: int, seed: int, threads: Optional[int] = None) -> np.ndarray:
    """Uniform simplex weights, ``(n, n_assets)``, reproducible for a seed."""
    if n < 1:
        raise DomainError("portfolio count must be positive", n=n)
    blocks = [(b, min(BLOCK_SIZE, n - b * BLOCK_SIZE)) for b in range(-(-n // BLOCK_SIZE))]
    job = lambda bc: _block_weights(seed, bc[0], bc[1], n_assets)
    workers = threads or os.cpu_count() or 1
    if workers == 1 or len(blocks) == 1:
        parts = [job(bc) for bc in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))
    return np.vstack(parts)


def sample_portfolios(
    assets: Sequence[ReturnSeries],
    n: int,
    seed: int,
    *,
    threads: Optional[int] = None,
) -> list[PortfolioSample]:
    """Draw ``n`` random long-only portfolios and attach a risk report to each."""
    matrix = _asset_matrix(assets)
    weights = sample_weights(n, matrix.shape[1], seed, threads)
    returns = weights @ matrix.T
    dates = assets[0].dates

    def build(i: int) -> PortfolioSample:
        w = weights[i]
        w.setflags(write=False)
        series = ReturnSeries(f"portfolio_{i}", dates, returns[i])
        return PortfolioSample(w, series, risk_report(series))

    workers = threads or os.cpu_count() or 1
    if workers == 1:
        return [build(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(build, range(n), chunksize=256))


def pareto_mask(risk: np.ndarray, ret: np.ndarray, space: RiskSpace | str) -> np.ndarray:
    """Boolean mask of non-dominated points.

    In sigma space lower risk is better, in EDR space higher EDR is better;
    higher return is always better. A point is dominated when another is at
    least as good on both axes and strictly better on one.
    """
    space = RiskSpace.parse(space)
    safety = np.asarray(risk, dtype=float)
    if space is RiskSpace.SIGMA:
        safety = -safety
    ret = np.asarray(ret, dtype=float)
    keep = np.zeros(safety.size, dtype=bool)
    order = np.lexsort((-ret, -safety))
    best_safer = -np.inf  # best return among strictly safer points
    i = 0
    while i < order.size:
        j = i
        s = safety[order[i]]
        while j < order.size and safety[order[j]] == s:
            j += 1
        group = order[i:j]
        g_max = ret[group[0]]
        if g_max > best_safer:
            keep[group[ret[group] == g_max]] = True
        best_safer = max(best_safer, g_max)
        i = j
    return keep


def frontier_from_points(
    risk: Sequence[float],
    ret: Sequence[float],
    space: RiskSpace | str,
    weights: Optional[Sequence[np.ndarray]] = None,
) -> list[FrontierPoint]:
    risk = np.asarray(risk, dtype=float)
    ret = np.asarray(ret, dtype=float)
    if risk.size == 0:
        raise EmptyResultError("frontier needs at least one point")
    idx = np.flatnonzero(pareto_mask(risk, ret, space))
    idx = idx[np.lexsort((idx, risk[idx]))]
    return [
        FrontierPoint(
            float(risk[i]),
            float(ret[i]),
            int(i),
            None if weights is None else weights[i],
        )
        for i in idx
    ]


def efficiency_frontier(samples: Sequence[PortfolioSample], space: RiskSpace | str) -> list[FrontierPoint]:
    """Pareto frontier of sampled portfolios, sorted by risk coordinate."""
    space = RiskSpace.parse(space)
    if not samples:
        raise EmptyResultError("frontier needs at least one sample")
    attr = "volatility" if space is RiskSpace.SIGMA else "edr"
    risk = [getattr(s.report, attr) for s in samples]
    ret = [s.report.expected_return for s in samples]
    return frontier_from_points(risk, ret, space, [s.weights for s in samples])


def refrontier(points: Sequence[FrontierPoint], space: RiskSpace | str) -> list[FrontierPoint]:
    """Frontier of an existing point set, keeping provenance."""
    kept = frontier_from_points(
        [p.risk_coord for p in points], [p.expected_return for p in points], space
    )
    return [points[k.portfolio_index] for k in kept]


def optimal_risk_averse(frontier: Sequence[FrontierPoint], a: float) -> FrontierPoint:
    """Frontier point maximising the mean-EDR utility; ties go to higher EDR."""
    if not frontier:
        raise EmptyResultError("frontier is empty")
    if not a > 0:
        raise DomainError("risk aversion must be positive", a=a)
    return max(frontier, key=lambda p: (utility_score(a, p.expected_return, p.risk_coord), p.risk_coord))


@dataclass(frozen=True)
class RiskSeekingChoice:
    """Choice of an investor anchored after a loss.

    ``intersection`` holds the (EDR, E) crossing of the RNC with the
    interpolated frontier, or ``None`` for a boundary outcome, in which case
    ``boundary`` names which side the RNC lies on.
    """

    point: FrontierPoint
    intersection: Optional[tuple[float, float]]
    boundary: Optional[str] = None


class _FrontierCurve:
    """Piecewise-linear E(EDR) through frontier points."""

    def __init__(self, frontier: Sequence[FrontierPoint]):
        pts = sorted(frontier, key=lambda p: p.risk_coord)
        self.x = np.array([p.risk_coord for p in pts])
        self.y = np.array([p.expected_return for p in pts])

    def __call__(self, edr: float) -> Optional[float]:
        if edr < self.x[0] or edr > self.x[-1]:
            return None
        return float(np.interp(edr, self.x, self.y))


def optimal_risk_seeking(
    frontier: Sequence[FrontierPoint],
    params: KTUtilityParams,
    *,
    n_grid: int = 401,
    tol: float = 1e-12,
) -> RiskSeekingChoice:
    """Highest-return frontier portfolio reachable on the investor's RNC.

    The RNC is walked in (EDR, E) coordinates and compared with the
    frontier's linear interpolation; the crossing is refined by bisection
    on the RNC's expected return. When the curves coincide the crossing at
    the riskless end of the RNC is used.
    """
    if not frontier:
        raise EmptyResultError("frontier is empty")
    x = params.prior_loss
    if x <= 0:
        raise DegenerateReferenceError(
            "risk-seeking choice needs a prior loss; use optimal_risk_averse", reference=params.reference
        )
    y = risk_neutral_amplitude(params)
    curve = _FrontierCurve(frontier)

    def point_at(c1: float) -> RiskNeutralPoint:
        return RiskNeutralPoint.build(x, y, c1, solve_shrink(params, x, y, c1))

    def gap(c1: float) -> Optional[float]:
        p = point_at(c1)
        f = curve(p.edr_coordinate)
        return None if f is None else f - p.expected_return

    grid = np.linspace(0.0, x, n_grid)
    gaps = [gap(float(c)) for c in grid]
    scale = max(1.0, float(np.max(np.abs(curve.y))))
    eps = tol * scale
    defined = [(i, g) for i, g in enumerate(gaps) if g is not None]

    if not defined or all(g < -eps for _, g in defined):
        best = max(frontier, key=lambda p: (p.expected_return, p.risk_coord))
        return RiskSeekingChoice(best, None, "rnc_above_frontier")

    if all(g >= -eps for _, g in defined):
        end = point_at(x)
        if gaps[-1] is not None and abs(gaps[-1]) <= eps:
            # coincident at the riskless end of the RNC
            return RiskSeekingChoice(_nearest(frontier, end.edr_coordinate, end.expected_return), (end.edr_coordinate, end.expected_return))
        lo_edr, hi_edr = point_at(0.0).edr_coordinate, end.edr_coordinate
        inside = [p for p in frontier if lo_edr <= p.risk_coord <= hi_edr] or list(frontier)
        best = max(inside, key=lambda p: (p.expected_return, p.risk_coord))
        return RiskSeekingChoice(best, None, "rnc_below_frontier")

    # highest-E crossing from on-or-below the frontier to above it
    (i, gi), (j, _) = [pair for pair in zip(defined, defined[1:]) if pair[0][1] >= -eps and pair[1][1] < -eps][-1]
    if j != i + 1 or gi <= 0.0:
        c_star = float(grid[i])
    else:
        c_star = bisect_secant(gap, float(grid[i]), float(grid[j]), xtol=1e-14)
    p = point_at(c_star)
    return RiskSeekingChoice(_nearest(frontier, p.edr_coordinate, p.expected_return), (p.edr_coordinate, p.expected_return))


def _nearest(frontier: Sequence[FrontierPoint], edr: float, e: float) -> FrontierPoint:
    return min(frontier, key=lambda p: ((p.risk_coord - edr) ** 2 + (p.expected_return - e) ** 2, -p.expected_return))
