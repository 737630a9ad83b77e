"""Return series ingestion, period aggregation and empirical distributions.

Returns are simple periodic returns throughout. Risk measures that the
literature states on a loss function ``f`` are computed here in return
space via ``f = -r``.
"""

from __future__ import annotations

import csv
import math
import operator
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, EmptyResultError, OrderingError, ParseError

# probabilities must sum to one within this tolerance
PROB_TOL = 1e-12


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ReturnSeries:
    """Dated sequence of simple returns.

    Dates must be strictly increasing and every value must exceed -1.
    """

    label: str
    dates: tuple[date, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = _frozen(self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))
        if len(self.dates) == 0:
            raise EmptyResultError("return series must not be empty", label=self.label)
        if len(self.dates) != len(values):
            raise DomainError(
                "dates and values differ in length",
                label=self.label,
                n_dates=len(self.dates),
                n_values=len(values),
            )
        if not all(map(operator.lt, self.dates, self.dates[1:])):
            i = next(i for i in range(1, len(self.dates)) if self.dates[i] <= self.dates[i - 1])
            raise OrderingError(
                "dates must be strictly increasing",
                label=self.label,
                index=i,
                date=self.dates[i].isoformat(),
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("return values must be finite", label=self.label)
        if np.any(values <= -1.0):
            raise DomainError(
                "return values must exceed -1",
                label=self.label,
                minimum=float(values.min()),
            )

    def __len__(self) -> int:
        return len(self.dates)

    def compounded(self) -> float:
        """Total compounded return over the whole series."""
        return float(np.prod(1.0 + self.values) - 1.0)


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Discrete distribution over return outcomes, sorted ascending.

    Equal outcomes are merged with their probabilities summed.
    """

    outcomes: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        outcomes = np.asarray(self.outcomes, dtype=float)
        probs = np.asarray(self.probabilities, dtype=float)
        if outcomes.ndim != 1 or outcomes.shape != probs.shape:
            raise DomainError("outcomes and probabilities must be matching 1-d arrays")
        if outcomes.size == 0:
            raise EmptyResultError("distribution needs at least one atom")
        if not (np.all(np.isfinite(outcomes)) and np.all(np.isfinite(probs))):
            raise DomainError("atoms must be finite")
        if np.any(probs < 0) or np.any(probs > 1):
            raise DomainError("probabilities must lie in [0, 1]")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise DomainError("probabilities must sum to 1", total=float(probs.sum()))
        if outcomes.size > 1 and not np.all(np.diff(outcomes) > 0):
            order = np.argsort(outcomes, kind="stable")
            outcomes, inverse = np.unique(outcomes[order], return_inverse=True)
            probs = np.bincount(inverse, weights=probs[order])
        object.__setattr__(self, "outcomes", _frozen(outcomes))
        object.__setattr__(self, "probabilities", _frozen(probs))

    @classmethod
    def from_samples(cls, samples: Iterable[float]) -> "EmpiricalDistribution":
        """Uniform-weight distribution over observed samples."""
        arr = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=float)
        if arr.size == 0:
            raise EmptyResultError("cannot build a distribution from no samples")
        outcomes, counts = np.unique(arr, return_counts=True)
        return cls(outcomes, counts / arr.size)

    @classmethod
    def from_atoms(
        cls,
        outcomes: Sequence[float],
        probabilities: Sequence[float],
        *,
        normalize: bool = False,
    ) -> "EmpiricalDistribution":
        probs = np.asarray(probabilities, dtype=float)
        if normalize:
            total = probs.sum()
            if total <= 0:
                raise DomainError("probabilities must have positive total mass")
            probs = probs / total
        return cls(np.asarray(outcomes, dtype=float), probs)

    @classmethod
    def from_series(cls, series: ReturnSeries) -> "EmpiricalDistribution":
        return cls.from_samples(series.values)

    def __len__(self) -> int:
        return self.outcomes.size

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probabilities)

    def mean(self) -> float:
        return float(np.dot(self.outcomes, self.probabilities))

    def shifted(self, c: float) -> "EmpiricalDistribution":
        return EmpiricalDistribution(self.outcomes + c, self.probabilities)

    def scaled(self, k: float) -> "EmpiricalDistribution":
        if k <= 0:
            raise DomainError("scale factor must be positive", k=k)
        return EmpiricalDistribution(self.outcomes * k, self.probabilities)


def empirical_quantile(dist: EmpiricalDistribution, alpha: float) -> float:
    """Lower empirical quantile: smallest outcome whose CDF reaches ``alpha``.

    No interpolation is done, so the result is always one of the atoms.
    """
    if not (0.0 < alpha <= 1.0) or math.isnan(alpha):
        raise DomainError("alpha must lie in (0, 1]", alpha=alpha)
    cdf = dist.cdf()
    # cumulative sums may land a hair below an exact level
    idx = int(np.searchsorted(cdf, alpha - 1e-12, side="left"))
    return float(dist.outcomes[min(idx, len(dist) - 1)])


class Granularity(str, Enum):
    WEEKLY = "weekly"
    MONTHLY = "monthly"
    YEARLY = "yearly"


@dataclass(frozen=True)
class PeriodSpec:
    """Aggregation window. ``overlap`` applies to yearly windows only."""

    granularity: Granularity
    overlap: bool = False

    def __post_init__(self):
        object.__setattr__(self, "granularity", Granularity(self.granularity))
        if self.overlap and self.granularity is not Granularity.YEARLY:
            raise DomainError(
                "overlapping windows are only defined for yearly granularity",
                granularity=self.granularity.value,
            )


def _period_key(d: date, granularity: Granularity) -> tuple[int, int]:
    if granularity is Granularity.WEEKLY:
        iso = d.isocalendar()
        return (iso[0], iso[1])
    if granularity is Granularity.MONTHLY:
        return (d.year, d.month)
    return (d.year, 0)


def period_buckets(series: ReturnSeries, granularity: Granularity | str) -> list[tuple[date, np.ndarray]]:
    """Split a series into disjoint calendar buckets.

    Weeks are ISO weeks, months are calendar months. Each bucket is returned
    as ``(last_date_in_bucket, values)`` in chronological order.
    """
    granularity = Granularity(granularity)
    buckets: list[tuple[date, np.ndarray]] = []
    start = 0
    keys = [_period_key(d, granularity) for d in series.dates]
    for i in range(1, len(keys) + 1):
        if i == len(keys) or keys[i] != keys[start]:
            buckets.append((series.dates[i - 1], series.values[start:i]))
            start = i
    return buckets


def aggregate_periods(series: ReturnSeries, spec: PeriodSpec) -> ReturnSeries:
    """Compound returns over calendar windows.

    Disjoint mode emits one compounded return per week, month or year,
    dated at the last observation in the window. Overlapping yearly mode
    first compounds to calendar months and then emits the trailing
    12-month compounded return ending at each month from the twelfth on.
    """
    if len(series) == 0:
        raise EmptyResultError("cannot aggregate an empty series")
    if spec.overlap:
        monthly = period_buckets(series, Granularity.MONTHLY)
        month_growth = np.array([np.prod(1.0 + v) for _, v in monthly])
        dates, values = [], []
        for end in range(12, len(monthly) + 1):
            dates.append(monthly[end - 1][0])
            values.append(float(np.prod(month_growth[end - 12 : end]) - 1.0))
    else:
        buckets = period_buckets(series, spec.granularity)
        dates = [d for d, _ in buckets]
        values = [float(np.prod(1.0 + v) - 1.0) for _, v in buckets]
    if not values:
        raise EmptyResultError(
            "aggregation produced no windows",
            label=series.label,
            granularity=spec.granularity.value,
        )
    return ReturnSeries(series.label, tuple(dates), np.array(values))


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def _looks_like_header(d_text: str, v_text: str) -> bool:
    try:
        date.fromisoformat(d_text)
        return False
    except ValueError:
        pass
    try:
        float(v_text)
        return False
    except ValueError:
        return True


def load_returns_csv(path: str | Path, mode: str = "returns", label: str | None = None) -> ReturnSeries:
    """Read a ``date,value`` CSV into a :class:`ReturnSeries`.

    Args:
        path: CSV file with ISO-8601 dates and decimal values. A header row
            is detected by a non-numeric value in the second column.
        mode: ``"returns"`` passes values through; ``"prices"`` converts
            consecutive prices to simple returns, consuming the first row.
        label: series label, defaults to the file stem.

    Raises:
        ParseError: malformed row, reported with its line number.
        OrderingError: dates not strictly increasing.
        DomainError: a non-positive price in prices mode.
    """
    if mode not in ("returns", "prices"):
        raise DomainError("mode must be 'returns' or 'prices'", mode=mode)
    path = Path(path)
    label = label or path.stem
    dates: list[date] = []
    values: list[float] = []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ParseError(
                    f"line {lineno}: expected 2 columns, got {len(row)}",
                    path=str(path),
                    line=lineno,
                )
            d_text, v_text = row[0].strip(), row[1].strip()
            if lineno == 1 and _looks_like_header(d_text, v_text):
                continue
            try:
                d = date.fromisoformat(d_text)
                v = _parse_float(v_text)
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}", path=str(path), line=lineno) from None
            if dates and d <= dates[-1]:
                raise OrderingError(
                    f"line {lineno}: date {d_text} does not follow {dates[-1].isoformat()}",
                    path=str(path),
                    line=lineno,
                )
            if mode == "prices" and v <= 0:
                raise DomainError(
                    f"line {lineno}: price must be positive, got {v_text}",
                    path=str(path),
                    line=lineno,
                )
            dates.append(d)
            values.append(v)

    if mode == "prices":
        if len(values) < 2:
            raise EmptyResultError("prices mode needs at least two rows", path=str(path))
        prices = np.array(values)
        return ReturnSeries(label, tuple(dates[1:]), prices[1:] / prices[:-1] - 1.0)
    if not values:
        raise EmptyResultError("no data rows", path=str(path))
    return ReturnSeries(label, tuple(dates), np.array(values))


def write_returns_csv(series: ReturnSeries, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "value"])
        for d, v in zip(series.dates, series.values):
            writer.writerow([d.isoformat(), repr(float(v))])
