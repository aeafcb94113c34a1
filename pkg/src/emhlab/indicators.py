"""Technical indicators, trend encoding, and labeled feature tables.

Ten indicators over a common window ``n`` (default 10): simple and
weighted moving averages, momentum, stochastic K% and D%, RSI, MACD,
Williams R%, the accumulation/distribution oscillator, and CCI, computed
with the window conventions of the Kara feature set that this line of
momentum studies shares.  Note two departures from the forms some charting
references use: Williams R% is kept positive (``100 - K%``, so K% + R% =
100), and the A/D oscillator is the single-bar ratio
``(H_t - C_{t-1}) / (H_t - L_t)``, not the cumulative Chaikin line.

Each indicator also has a trend encoding to {-1, +1} capturing its
buy/sell reading; all tie and zero cases encode as +1, matching the label
convention that breaking even counts as up.

Feature rows pair day-t indicators with the day-(t+1) momentum label, so
a model scoring a row sees nothing dated after t except through its
training label, which is exactly the information a daily trader has at
the close.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from emhlab.data import DataError, PriceSeries

INDICATOR_NAMES = (
    "sma10",
    "wma10",
    "momentum",
    "stoch_k",
    "stoch_d",
    "rsi",
    "macd",
    "williams_r",
    "ad_osc",
    "cci",
)

#: indices into an indicator row, for readers of the encoding rules below
_RSI = INDICATOR_NAMES.index("rsi")
_CCI = INDICATOR_NAMES.index("cci")


@dataclass(frozen=True)
class IndicatorVector:
    """One day's ten indicator values (continuous or trend-encoded)."""

    sma10: float
    wma10: float
    momentum: float
    stoch_k: float
    stoch_d: float
    rsi: float
    macd: float
    williams_r: float
    ad_osc: float
    cci: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in INDICATOR_NAMES], dtype=np.float64)


@dataclass
class IndicatorTable:
    """Per-day indicator matrix aligned with the source series.

    ``values`` has one row per bar and one column per indicator; rows
    inside the warm-up period (or, in trend mode, rows whose encoding
    needs an undefined previous day) hold NaN.
    """

    ticker: str
    mode: str
    dates: list[dt.date]
    values: np.ndarray
    columns: tuple[str, ...] = INDICATOR_NAMES

    def first_complete_row(self) -> int:
        ok = ~np.isnan(self.values).any(axis=1)
        idx = np.nonzero(ok)[0]
        if idx.size == 0:
            raise DataError(f"{self.ticker}: no complete indicator rows")
        return int(idx[0])


@dataclass
class FeatureTable:
    """Date-ordered feature rows with next-day momentum labels.

    ``X`` is (rows, 10) float64, ``y`` holds labels with 1 = up (next
    day's adjusted close at or above today's) and 0 = down.  Rows dropped
    because indicators were still warming up are counted in
    ``warmup_rows_dropped``; the final bar never yields a row because its
    label would need a day that does not exist.
    """

    ticker: str
    mode: str
    dates: list[dt.date]
    X: np.ndarray
    y: np.ndarray
    warmup_rows_dropped: int
    columns: tuple[str, ...] = INDICATOR_NAMES

    def __len__(self) -> int:
        return len(self.dates)

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(("date",) + self.columns + ("label",))
            for i, d in enumerate(self.dates):
                writer.writerow(
                    [d.isoformat()] + [repr(float(v)) for v in self.X[i]] + [int(self.y[i])]
                )

    @classmethod
    def from_csv(cls, path: str | Path, ticker: str, mode: str,
                 warmup_rows_dropped: int = 0) -> "FeatureTable":
        path = Path(path)
        dates: list[dt.date] = []
        xs: list[list[float]] = []
        ys: list[int] = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in ("date",) + INDICATOR_NAMES + ("label",)
                       if c not in (reader.fieldnames or [])]
            if missing:
                raise DataError(f"{path.name}: missing column(s) {', '.join(missing)}")
            for row in reader:
                dates.append(dt.date.fromisoformat(row["date"]))
                xs.append([float(row[c]) for c in INDICATOR_NAMES])
                ys.append(int(row["label"]))
        X = np.array(xs, dtype=np.float64) if xs else np.empty((0, 10))
        y = np.array(ys, dtype=np.int8)
        return cls(ticker, mode, dates, X, y, warmup_rows_dropped)


def _ema(values: np.ndarray, period: int) -> np.ndarray:
    """EMA seeded with the simple mean of the first ``period`` values.

    Output is NaN before index ``period - 1``.  Input may itself lead
    with NaNs (e.g. an EMA of a difference series); the seed window then
    starts at the first finite value.
    """
    n = values.shape[0]
    out = np.full(n, np.nan)
    finite = np.nonzero(~np.isnan(values))[0]
    if finite.size < period:
        return out
    start = int(finite[0])
    seed_end = start + period - 1
    out[seed_end] = np.mean(values[start : seed_end + 1])
    k = 2.0 / (period + 1.0)
    for t in range(seed_end + 1, n):
        out[t] = out[t - 1] + k * (values[t] - out[t - 1])
    return out


def _rolling(values: np.ndarray, n: int, fn) -> np.ndarray:
    """Apply ``fn`` over each trailing window of length ``n`` (NaN before)."""
    T = values.shape[0]
    out = np.full(T, np.nan)
    for t in range(n - 1, T):
        out[t] = fn(values[t - n + 1 : t + 1])
    return out


def compute_continuous_indicators(series: PriceSeries, n: int = 10) -> IndicatorTable:
    """Compute the ten indicators in their continuous form.

    Formulas over the trailing window of length ``n`` ending at day t
    (C = close, H = high, L = low, HH/LL = extremes of high/low over the
    window, M = (H + L + C) / 3):

    - SMA, WMA: plain and linearly weighted close averages, weights 1..n
      with the heaviest on today
    - Momentum: ``C_t - C_{t-(n-1)}``
    - Stochastic K%: ``100 (C_t - LL) / (HH - LL)``; D%: mean of the last
      n K% values
    - RSI: ``100 - 100 / (1 + avgGain / avgLoss)`` with simple means of
      the last n close-to-close gains and losses
    - MACD: EMA over period n of (12-day EMA - 26-day EMA) of close
    - Williams R%: ``100 (HH - C_t) / (HH - LL)`` (positive convention)
    - A/D oscillator: ``(H_t - C_{t-1}) / (H_t - L_t)``
    - CCI: ``(M_t - SMA_n(M)) / (0.015 meanAbsDev)``

    Degenerate windows are mapped to neutral values rather than dropped:
    ``HH == LL`` gives K% = R% = 50; RSI is 100 when avgLoss is 0 with
    gains present and 50 when the window is flat; ``H == L`` gives
    A/D = 0.5; a zero mean absolute deviation gives CCI = 0.

    Rows without enough history are NaN; MACD has the longest warm-up
    (26-day EMA plus the n-day smoothing seed).
    """
    T = len(series)
    if T <= 26 + n:
        raise DataError(
            f"{series.ticker}: need more than {26 + n} bars for indicators, have {T}"
        )
    close = series.column("close")
    high = series.column("high")
    low = series.column("low")

    weights = np.arange(1, n + 1, dtype=np.float64)
    sma = _rolling(close, n, np.mean)
    wma = _rolling(close, n, lambda w: float(np.dot(weights, w)) / float(weights.sum()))

    momentum = np.full(T, np.nan)
    momentum[n - 1 :] = close[n - 1 :] - close[: T - (n - 1)]

    hh = _rolling(high, n, np.max)
    ll = _rolling(low, n, np.min)
    stoch_k = np.full(T, np.nan)
    williams = np.full(T, np.nan)
    for t in range(n - 1, T):
        span = hh[t] - ll[t]
        if span == 0.0:
            stoch_k[t] = 50.0
            williams[t] = 50.0
        else:
            stoch_k[t] = 100.0 * (close[t] - ll[t]) / span
            williams[t] = 100.0 * (hh[t] - close[t]) / span
    # D% windows overlapping the K% warm-up stay NaN via propagation
    stoch_d = _rolling(stoch_k, n, np.mean)

    delta = np.diff(close)
    gains = np.where(delta > 0, delta, 0.0)
    losses = np.where(delta < 0, -delta, 0.0)
    rsi = np.full(T, np.nan)
    for t in range(n, T):
        avg_gain = float(np.mean(gains[t - n : t]))
        avg_loss = float(np.mean(losses[t - n : t]))
        if avg_loss == 0.0:
            rsi[t] = 50.0 if avg_gain == 0.0 else 100.0
        else:
            rsi[t] = 100.0 - 100.0 / (1.0 + avg_gain / avg_loss)

    diff = _ema(close, 12) - _ema(close, 26)
    macd = _ema(diff, n)

    ad = np.full(T, np.nan)
    for t in range(1, T):
        rng_t = high[t] - low[t]
        ad[t] = 0.5 if rng_t == 0.0 else (high[t] - close[t - 1]) / rng_t

    m = (high + low + close) / 3.0
    cci = np.full(T, np.nan)
    for t in range(n - 1, T):
        window = m[t - n + 1 : t + 1]
        sma_m = float(np.mean(window))
        mad = float(np.mean(np.abs(window - sma_m)))
        cci[t] = 0.0 if mad == 0.0 else (m[t] - sma_m) / (0.015 * mad)

    values = np.column_stack(
        [sma, wma, momentum, stoch_k, stoch_d, rsi, macd, williams, ad, cci]
    )
    return IndicatorTable(series.ticker, "continuous", series.dates, values)


def trend_transform(continuous: IndicatorTable, closes: np.ndarray) -> IndicatorTable:
    """Encode continuous indicators as {-1, +1} buy/sell signals.

    Rules (value_t means the continuous indicator at day t):

    - sma10, wma10: +1 when today's close is at or above the average
    - momentum: +1 when non-negative
    - stoch_k, stoch_d, macd, ad_osc: +1 when the value did not fall
      versus the previous day
    - williams_r: encoded in the buy-strength direction; under the
      positive convention used here a falling R% means strengthening, so
      +1 when the value did not rise
    - rsi: -1 above 70 (overbought), +1 below 30 (oversold), otherwise
      +1 when it did not fall
    - cci: same shape with bands at +200 / -200

    Every tie encodes as +1.  Rows whose rule needs an undefined previous
    day stay NaN and count as warm-up downstream.
    """
    if continuous.mode != "continuous":
        raise DataError("trend_transform expects a continuous table")
    v = continuous.values
    T = v.shape[0]
    out = np.full_like(v, np.nan)
    close = np.asarray(closes, dtype=np.float64)
    if close.shape[0] != T:
        raise DataError("closes not aligned with indicator table")

    def up(flag: np.ndarray) -> np.ndarray:
        return np.where(flag, 1.0, -1.0)

    prev = np.full_like(v, np.nan)
    prev[1:] = v[:-1]
    defined = ~np.isnan(v)
    prev_defined = ~np.isnan(prev)

    for j, name in enumerate(INDICATOR_NAMES):
        col = v[:, j]
        if name in ("sma10", "wma10"):
            sig = up(close >= col)
            ok = defined[:, j]
        elif name == "momentum":
            sig = up(col >= 0.0)
            ok = defined[:, j]
        elif name in ("stoch_k", "stoch_d", "macd", "ad_osc"):
            sig = up(col >= prev[:, j])
            ok = defined[:, j] & prev_defined[:, j]
        elif name == "williams_r":
            sig = up(col <= prev[:, j])
            ok = defined[:, j] & prev_defined[:, j]
        elif name == "rsi":
            sig = up(col >= prev[:, j])
            sig = np.where(col > 70.0, -1.0, sig)
            sig = np.where(col < 30.0, 1.0, sig)
            ok = defined[:, j] & prev_defined[:, j]
        else:  # cci
            sig = up(col >= prev[:, j])
            sig = np.where(col > 200.0, -1.0, sig)
            sig = np.where(col < -200.0, 1.0, sig)
            ok = defined[:, j] & prev_defined[:, j]
        out[ok, j] = sig[ok]

    return IndicatorTable(continuous.ticker, "trend", list(continuous.dates), out)


def build_feature_table(series: PriceSeries, mode: str, n: int = 10) -> FeatureTable:
    """Build the labeled feature table for one security.

    Label for day t is 1 (up) when ``adj_close_{t+1} >= adj_close_t``,
    else 0; the comparison uses adjusted close even though indicators use
    raw close/high/low, since the label mirrors what a holder of the
    security would experience.  Warm-up rows (undefined indicators, plus
    one more in trend mode for the previous-day rules) are dropped and
    counted.
    """
    if mode not in ("continuous", "trend"):
        raise DataError(f"unknown feature mode {mode!r}")
    table = compute_continuous_indicators(series, n)
    if mode == "trend":
        table = trend_transform(table, series.column("close"))
    adj = series.column("adj_close")
    first = table.first_complete_row()
    T = len(series)
    rows = list(range(first, T - 1))
    if not rows:
        raise DataError(f"{series.ticker}: series shorter than warm-up horizon")
    X = table.values[first : T - 1].copy()
    labels = (adj[first + 1 : T] >= adj[first : T - 1]).astype(np.int8)
    dates = series.dates[first : T - 1]
    return FeatureTable(
        ticker=series.ticker,
        mode=mode,
        dates=dates,
        X=X,
        y=labels,
        warmup_rows_dropped=first,
    )
