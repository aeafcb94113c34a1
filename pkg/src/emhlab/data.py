"""Price data loading, validation, and return computation.

Raw input is one CSV per security with daily OHLCV bars plus an adjusted
close.  Everything downstream consumes the types defined here: validated
``PriceSeries`` for indicators and trading, ``ReturnSeries`` (daily log
returns on adjusted close) for the econometric tests.  Only the adjusted
close feeds returns and trade prices; high/low/close exist for the
indicators that need them.

A ``Fetcher`` abstraction decouples the pipeline from the data source.
The shipped implementation reads local CSV files; network sources can be
added by implementing the same two-method contract.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("date", "open", "high", "low", "close", "adj_close", "volume")


class DataError(ValueError):
    """Raised when price input violates the documented schema or invariants."""


@dataclass(frozen=True)
class PriceBar:
    """One trading day of a single security."""

    date: dt.date
    open: float
    high: float
    low: float
    close: float
    adj_close: float
    volume: int


@dataclass
class PriceSeries:
    """Date-ordered daily bars for one security.

    Invariants: dates strictly increasing, at least one bar, every bar
    satisfying ``low <= min(open, close) <= max(open, close) <= high`` and
    ``adj_close > 0``.  Construction via :func:`load_csv` or
    :func:`make_series` enforces them.
    """

    ticker: str
    bars: list[PriceBar]

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> list[dt.date]:
        return [b.date for b in self.bars]

    def column(self, name: str) -> np.ndarray:
        """Return one bar field as a float array (volume included)."""
        return np.array([getattr(b, name) for b in self.bars], dtype=np.float64)

    def slice_dates(self, start: dt.date | None, end: dt.date | None) -> "PriceSeries":
        """Return the sub-series with start <= date <= end (either bound optional)."""
        bars = [
            b
            for b in self.bars
            if (start is None or b.date >= start) and (end is None or b.date <= end)
        ]
        if not bars:
            raise DataError(f"{self.ticker}: no bars in range {start}..{end}")
        return PriceSeries(self.ticker, bars)


@dataclass
class QualityReport:
    """Report-only validation outcome; the harness decides rejection."""

    ticker: str
    missing_dates: list[tuple[dt.date, dt.date, int]] = field(default_factory=list)
    malformed_rows: list[tuple[int, str]] = field(default_factory=list)
    outlier_flags: list[tuple[dt.date, str, float]] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not (self.missing_dates or self.malformed_rows or self.outlier_flags)


@dataclass
class ReturnSeries:
    """Daily log returns ``x_t = ln(adj_close_t / adj_close_{t-1})``.

    ``dates[i]`` is the later day of the pair that produced ``values[i]``,
    so the series is one element shorter than its source.
    """

    ticker: str
    dates: list[dt.date]
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


def _check_bar(row_no: int, bar: PriceBar) -> None:
    lo_ok = bar.low <= min(bar.open, bar.close)
    hi_ok = max(bar.open, bar.close) <= bar.high
    if not (lo_ok and hi_ok):
        raise DataError(f"row {row_no}: OHLC ordering violated (low {bar.low}, high {bar.high})")
    if not bar.adj_close > 0:
        raise DataError(f"row {row_no}: adj_close must be positive, got {bar.adj_close}")
    if bar.volume < 0:
        raise DataError(f"row {row_no}: negative volume {bar.volume}")


def _parse_row(row_no: int, row: dict) -> PriceBar:
    try:
        date = dt.date.fromisoformat(row["date"].strip())
    except ValueError as exc:
        raise DataError(f"row {row_no}: bad date {row['date']!r}: {exc}") from None
    vals = {}
    for name in ("open", "high", "low", "close", "adj_close"):
        raw = row[name].strip()
        try:
            vals[name] = float(raw)
        except ValueError:
            raise DataError(f"row {row_no}: non-numeric {name} {raw!r}") from None
        if not math.isfinite(vals[name]):
            raise DataError(f"row {row_no}: non-finite {name} {raw!r}")
    try:
        volume = int(float(row["volume"].strip()))
    except ValueError:
        raise DataError(f"row {row_no}: non-numeric volume {row['volume']!r}") from None
    bar = PriceBar(date=date, volume=volume, **vals)
    _check_bar(row_no, bar)
    return bar


def _finish_series(ticker: str, bars: list[PriceBar]) -> PriceSeries:
    if not bars:
        raise DataError(f"{ticker}: no valid rows")
    bars = sorted(bars, key=lambda b: b.date)
    for a, b in zip(bars, bars[1:]):
        if a.date == b.date:
            raise DataError(f"{ticker}: duplicate date {a.date}")
    return PriceSeries(ticker, bars)


def load_csv(path: str | Path) -> PriceSeries:
    """Load one security from CSV, strictly.

    The header must contain (at least) the documented columns; rows may be
    out of order and are sorted.  The first malformed row aborts the load
    with an error naming the row.  The ticker is the filename stem.
    """
    path = Path(path)
    series, malformed = scan_csv(path)
    if malformed:
        row_no, reason = malformed[0]
        raise DataError(f"{path.name}: {reason}")
    if series is None:
        raise DataError(f"{path.name}: no valid rows")
    return series


def scan_csv(path: str | Path) -> tuple[PriceSeries | None, list[tuple[int, str]]]:
    """Lenient variant of :func:`load_csv` for quality reporting.

    Returns the series built from the parseable rows (or None if none
    parse) together with a list of (row number, reason) for the rows that
    did not.  Row numbers count data rows starting at 1.  Structural
    problems (unreadable file, missing column) still raise.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    bars: list[PriceBar] = []
    malformed: list[tuple[int, str]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise DataError(f"{path.name}: missing required column(s) {', '.join(missing)}")
        for row_no, row in enumerate(reader, start=1):
            try:
                bars.append(_parse_row(row_no, row))
            except DataError as exc:
                malformed.append((row_no, str(exc)))
    if not bars:
        return None, malformed
    try:
        series = _finish_series(path.stem, bars)
    except DataError as exc:
        return None, malformed + [(0, str(exc))]
    return series, malformed


def save_csv(series: PriceSeries, path: str | Path) -> None:
    """Write a series in the same schema :func:`load_csv` reads (round-trips)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for b in series.bars:
            writer.writerow(
                [
                    b.date.isoformat(),
                    repr(float(b.open)),
                    repr(float(b.high)),
                    repr(float(b.low)),
                    repr(float(b.close)),
                    repr(float(b.adj_close)),
                    b.volume,
                ]
            )


def make_series(ticker: str, bars: list[PriceBar]) -> PriceSeries:
    """Build a series from bars, sorting and enforcing the invariants."""
    for i, bar in enumerate(bars, start=1):
        _check_bar(i, bar)
    return _finish_series(ticker, bars)


def validate(
    series: PriceSeries,
    z_threshold: float = 10.0,
    max_gap_days: int = 7,
    malformed: list[tuple[int, str]] | None = None,
) -> QualityReport:
    """Screen a series for gaps and price outliers; report, never reject.

    Outliers are bars whose adjusted-close log return sits more than
    ``z_threshold`` robust z-scores (median / MAD scale) from the series'
    own return distribution.  When the MAD degenerates to zero (over half
    the returns identical) the mean absolute deviation about the median
    is used instead; both denominators resist inflation by the outliers
    being hunted, which a plain standard deviation would not.  Gaps are
    pairs of consecutive bars more than ``max_gap_days`` calendar days
    apart; weekend and holiday gaps stay below the default of 7.
    ``malformed`` carries through rows rejected by :func:`scan_csv` so
    the report is complete.
    """
    report = QualityReport(ticker=series.ticker, malformed_rows=list(malformed or []))
    bars = series.bars
    for a, b in zip(bars, bars[1:]):
        gap = (b.date - a.date).days
        if gap > max_gap_days:
            report.missing_dates.append((a.date, b.date, gap))
    if len(bars) >= 3:
        prices = series.column("adj_close")
        rets = np.log(prices[1:] / prices[:-1])
        med = float(np.median(rets))
        mad = float(np.median(np.abs(rets - med)))
        scale = 1.4826 * mad
        if scale == 0.0:
            scale = 1.2533 * float(np.mean(np.abs(rets - med)))
        if scale > 0.0:
            z = np.abs(rets - med) / scale
            for i in np.nonzero(z > z_threshold)[0]:
                report.outlier_flags.append((bars[i + 1].date, "adj_close", float(z[i])))
    return report


def log_returns(series: PriceSeries) -> ReturnSeries:
    """Daily log returns on adjusted close; length is series length minus 1."""
    if len(series) < 2:
        raise DataError(f"{series.ticker}: need at least 2 bars for returns")
    for bar in series.bars:
        if not bar.adj_close > 0:
            raise DataError(f"{series.ticker}: non-positive adj_close on {bar.date}")
    prices = series.column("adj_close")
    values = np.log(prices[1:] / prices[:-1])
    return ReturnSeries(series.ticker, series.dates[1:], values)


class Fetcher:
    """Source-agnostic access contract: ticker + date range -> PriceSeries."""

    def fetch(
        self, ticker: str, start: dt.date | None = None, end: dt.date | None = None
    ) -> PriceSeries:
        raise NotImplementedError


class CsvFetcher(Fetcher):
    """Fetcher over a directory of ``<ticker>.csv`` files."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def fetch(
        self, ticker: str, start: dt.date | None = None, end: dt.date | None = None
    ) -> PriceSeries:
        series = load_csv(self.directory / f"{ticker}.csv")
        if start is None and end is None:
            return series
        return series.slice_dates(start, end)


def trading_dates(start: dt.date, n_days: int) -> list[dt.date]:
    """First ``n_days`` weekdays on or after ``start`` (no holiday calendar)."""
    out: list[dt.date] = []
    day = start
    while len(out) < n_days:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def synthetic_series(
    ticker: str,
    n_days: int,
    seed: int,
    start_date: dt.date = dt.date(2008, 1, 2),
    s0: float = 100.0,
    drift: float = 0.0002,
    vol: float = 0.015,
) -> PriceSeries:
    """Generate a geometric-random-walk series with believable OHLC bars.

    Close follows ``S_{t+1} = S_t * exp(drift + vol * z_t)`` with standard
    normal ``z_t``; high/low bracket each day's open/close by a small
    random range.  Adjusted close equals close (no corporate actions).
    Deterministic for a given seed; intended for tests, benchmarks, and
    self-contained demos.
    """
    rng = np.random.default_rng(seed)
    steps = drift + vol * rng.standard_normal(n_days)
    closes = s0 * np.exp(np.concatenate([[0.0], np.cumsum(steps[:-1])]))
    spread = np.abs(rng.standard_normal(n_days)) * vol * closes
    opens = np.concatenate([[closes[0]], closes[:-1]])
    highs = np.maximum(opens, closes) + spread
    lows = np.minimum(opens, closes) - 0.8 * spread
    lows = np.maximum(lows, 0.01)
    volumes = rng.integers(100_000, 5_000_000, n_days)
    dates = trading_dates(start_date, n_days)
    bars = [
        PriceBar(
            date=dates[i],
            open=float(opens[i]),
            high=float(highs[i]),
            low=float(lows[i]),
            close=float(closes[i]),
            adj_close=float(closes[i]),
            volume=int(volumes[i]),
        )
        for i in range(n_days)
    ]
    return PriceSeries(ticker, bars)
