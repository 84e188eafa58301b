"""Daily price/return series: CSV ingestion, log-returns, calendar alignment
and descriptive statistics."""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


class LoadError(ValueError):
    """CSV could not be turned into a valid price series."""


class DuplicateDateError(LoadError):
    """Two rows share a calendar day; deduplication is never silent."""


class AlignmentError(ValueError):
    """Series share no common dates."""


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Dated daily closing prices for one index, strictly ascending dates."""

    ticker: str
    dates: tuple[dt.date, ...]
    closes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        closes = np.asarray(self.closes, dtype=float)
        closes.flags.writeable = False
        object.__setattr__(self, "closes", closes)
        if len(self.dates) != closes.shape[0]:
            raise ValueError("dates and closes must have equal length")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(closes)) or not np.all(closes > 0):
            raise ValueError("closing prices must be strictly positive and finite")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Dated daily percentage log-returns, one fewer observation than prices."""

    ticker: str
    dates: tuple[dt.date, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if len(self.dates) != values.shape[0]:
            raise ValueError("dates and values must have equal length")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("returns must be finite")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class SummaryStats:
    """Descriptive statistics of a return series.

    Kurtosis is reported in both conventions; ``kurtosis`` is the excess
    value (normal -> 0) and ``kurtosis_raw`` the plain moment ratio
    (normal -> 3). Shape moments use the biased n-denominator ratios
    m3/m2^(3/2) and m4/m2^2; ``shape_defined`` is False for a constant
    series, where both are NaN.
    """

    mean: float
    stdev: float
    skewness: float
    kurtosis: float
    kurtosis_raw: float
    n: int
    shape_defined: bool = True

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not self.stdev >= 0:
            raise ValueError("stdev must be >= 0")


def load_prices(
    path,
    ticker: str,
    date_column: str = "Date",
    price_column: str = "Close",
    date_format: str = "%Y-%m-%d",
) -> PriceSeries:
    """Load one index's closing prices from a headered CSV.

    Rows whose price field is missing or not a positive finite number are
    dropped and counted in the load report (a structured log line); rows are
    sorted by date. Duplicate dates are an error, never a silent dedup.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise LoadError(f"{path}: empty file, expected a CSV header row")
        for col in (date_column, price_column):
            if col not in reader.fieldnames:
                raise LoadError(
                    f"{path}: missing column {col!r} (found {reader.fieldnames})"
                )
        rows: list[tuple[dt.date, float]] = []
        dropped = 0
        for lineno, row in enumerate(reader, start=2):
            raw_date = row.get(date_column)
            raw_price = row.get(price_column)
            if raw_date is None or raw_price is None:
                raise LoadError(f"{path}:{lineno}: short row")
            try:
                day = dt.datetime.strptime(raw_date.strip(), date_format).date()
            except ValueError as exc:
                raise LoadError(f"{path}:{lineno}: bad date {raw_date!r}") from exc
            try:
                price = float(raw_price)
            except ValueError:
                dropped += 1
                continue
            if not (math.isfinite(price) and price > 0):
                dropped += 1
                continue
            rows.append((day, price))

    if not rows:
        raise LoadError(f"{path}: no valid price rows")
    rows.sort(key=lambda r: r[0])
    for (d0, _), (d1, _) in zip(rows, rows[1:]):
        if d0 == d1:
            raise DuplicateDateError(f"{path}: duplicate date {d0.isoformat()}")

    logger.info(
        "load_prices ticker=%s path=%s kept=%d dropped=%d", ticker, path, len(rows), dropped
    )
    return PriceSeries(
        ticker=ticker,
        dates=tuple(r[0] for r in rows),
        closes=np.array([r[1] for r in rows]),
    )


def log_returns(prices: PriceSeries) -> ReturnSeries:
    """Percentage log-returns 100*(ln P_t - ln P_{t-1}), dated by the later day."""
    if len(prices) < 2:
        raise ValueError("need at least 2 price observations")
    values = 100.0 * np.diff(np.log(prices.closes))
    return ReturnSeries(ticker=prices.ticker, dates=prices.dates[1:], values=values)


def align(series: list[ReturnSeries]) -> list[ReturnSeries]:
    """Restrict every series to the intersection of their dates.

    Idempotent; raises AlignmentError when the intersection is empty.
    """
    if len(series) < 2:
        raise ValueError("align needs at least 2 series")
    common = set(series[0].dates)
    for s in series[1:]:
        common &= set(s.dates)
    if not common:
        raise AlignmentError(
            "no common dates across " + ", ".join(s.ticker for s in series)
        )
    out = []
    for s in series:
        keep = [i for i, d in enumerate(s.dates) if d in common]
        out.append(
            ReturnSeries(
                ticker=s.ticker,
                dates=tuple(s.dates[i] for i in keep),
                values=s.values[keep],
            )
        )
    return out


def window(series: PriceSeries, start: dt.date | None, end: dt.date | None) -> PriceSeries:
    """Restrict a price series to start <= date <= end (either bound optional)."""
    keep = [
        i
        for i, d in enumerate(series.dates)
        if (start is None or d >= start) and (end is None or d <= end)
    ]
    if not keep:
        raise LoadError(f"{series.ticker}: no observations inside the window")
    return PriceSeries(
        ticker=series.ticker,
        dates=tuple(series.dates[i] for i in keep),
        closes=series.closes[keep],
    )


def as_values(returns) -> np.ndarray:
    """Accept a ReturnSeries or any array-like of returns."""
    if isinstance(returns, ReturnSeries):
        return returns.values
    return np.asarray(returns, dtype=float)


def summary_stats(returns: ReturnSeries) -> SummaryStats:
    """Sample mean, standard deviation (ddof=1) and moment-ratio shape stats."""
    r = returns.values
    n = r.shape[0]
    if n < 4:
        raise ValueError(f"need n >= 4 for kurtosis, got {n}")
    mean = float(np.mean(r))
    d = r - mean
    m2 = float(np.mean(d**2))
    stdev = float(np.std(r, ddof=1))
    if m2 == 0.0:
        return SummaryStats(
            mean=mean,
            stdev=0.0,
            skewness=float("nan"),
            kurtosis=float("nan"),
            kurtosis_raw=float("nan"),
            n=n,
            shape_defined=False,
        )
    skew = float(np.mean(d**3) / m2**1.5)
    kur_raw = float(np.mean(d**4) / m2**2)
    return SummaryStats(
        mean=mean,
        stdev=stdev,
        skewness=skew,
        kurtosis=kur_raw - 3.0,
        kurtosis_raw=kur_raw,
        n=n,
    )
