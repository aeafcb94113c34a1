"""Rule-based long-only trading on daily direction signals.

The simulator walks the signal sequence one day at a time.  Idle cash
earns the daily risk-free rate, compounded at the start of every day
after the first (N days of prices means N - 1 accruals).  A signal of 1
(up) while in cash buys as many shares as the cash net of the flat
transaction cost affords, whole shares by default; a signal of 0 (down)
while invested sells the entire position.  Each executed buy or sell
pays the flat cost.  Trades that cannot be afforded are skipped and
flagged: "insufficient_cash" when not even one share (or any positive
fractional amount) is affordable, "sell_below_cost" when selling would
leave negative cash after the fee.  Positions are marked to market
daily; nothing is force-liquidated at the end.

The buy-and-hold benchmark invests everything on the first day, pays
the transaction cost once, and lets leftover cash earn interest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

TRADE_COLUMNS = ("date", "action", "price", "shares", "cash", "value", "cost_paid")


class TradingError(ValueError):
    """Raised on malformed simulator inputs."""


@dataclass(frozen=True)
class TraderConfig:
    principal: float = 100_000.0
    cost_per_trade: float = 4.95
    rf_annual: float = 0.02
    allow_fractional_shares: bool = False

    def __post_init__(self):
        if not self.principal > 0:
            raise TradingError(f"principal must be positive, got {self.principal!r}")
        if self.cost_per_trade < 0:
            raise TradingError(f"cost must be non-negative, got {self.cost_per_trade!r}")

    @property
    def rf_daily(self) -> float:
        """Daily rate that compounds to the annual rate over 252 days."""
        return (1.0 + self.rf_annual) ** (1.0 / 252.0) - 1.0


@dataclass(frozen=True)
class TradeRow:
    date: str
    action: str
    price: float
    shares: float
    cash: float
    value: float
    cost_paid: float


@dataclass
class TradeLedger:
    ticker: Optional[str]
    rows: list
    flags: list = field(default_factory=list)
    trade_count: int = 0

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows], dtype=np.float64)

    @property
    def dates(self) -> list:
        return [r.date for r in self.rows]

    @property
    def final_value(self) -> float:
        return self.rows[-1].value if self.rows else 0.0

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(TRADE_COLUMNS) + "\n")
            for r in self.rows:
                fh.write(f"{r.date},{r.action},{r.price!r},{r.shares!r},"
                         f"{r.cash!r},{r.value!r},{r.cost_paid!r}\n")


@dataclass
class BenchmarkTrack:
    ticker: Optional[str]
    dates: list
    values: np.ndarray
    shares: float
    cost_paid: float

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("date,value\n")
            for d, v in zip(self.dates, self.values):
                fh.write(f"{d},{float(v)!r}\n")


def _check_inputs(dates, prices, signals=None):
    prices = np.asarray(prices, dtype=np.float64)
    if prices.ndim != 1 or prices.size < 1:
        raise TradingError("prices must be a non-empty 1-D array")
    if not np.all(np.isfinite(prices)) or not np.all(prices > 0):
        raise TradingError("prices must be finite and positive")
    if len(dates) != prices.size:
        raise TradingError("dates not aligned with prices")
    if signals is not None:
        signals = np.asarray(signals)
        if signals.shape != prices.shape:
            raise TradingError("signals not aligned with prices")
        if not np.all(np.isin(signals, (0, 1))):
            raise TradingError("signals must be 0 (down) or 1 (up)")
    return prices, signals


def _buy_quantity(budget: float, price: float, fractional: bool) -> float:
    """Largest affordable quantity with qty * price <= budget in float
    arithmetic, so the cash left after a buy can never round negative."""
    if budget <= 0.0:
        return 0.0
    qty = budget / price if fractional else float(math.floor(budget / price))
    while qty > 0.0 and qty * price > budget:
        qty = math.nextafter(qty, 0.0) if fractional else qty - 1.0
    return qty


def simulate(dates: Sequence[str], prices: Sequence[float], signals: Sequence[int],
             config: TraderConfig, ticker: Optional[str] = None) -> TradeLedger:
    """Run the long-only rule over one aligned (date, price, signal) track."""
    prices, signals = _check_inputs(dates, prices, signals)
    rf = config.rf_daily
    cost = config.cost_per_trade
    cash = config.principal
    shares = 0.0
    rows = []
    flags = []
    trade_count = 0

    for i in range(prices.size):
        if i > 0:
            cash *= 1.0 + rf
        price = float(prices[i])
        action = "hold"
        cost_paid = 0.0

        if signals[i] == 1 and shares == 0.0:
            budget = cash - cost
            qty = _buy_quantity(budget, price, config.allow_fractional_shares)
            if qty > 0.0:
                shares = qty
                cash = budget - qty * price
                action = "buy"
                cost_paid = cost
                trade_count += 1
            else:
                flags.append((dates[i], "insufficient_cash"))
        elif signals[i] == 0 and shares > 0.0:
            proceeds = shares * price
            if cash + proceeds - cost < 0.0:
                flags.append((dates[i], "sell_below_cost"))
            else:
                cash = cash + proceeds - cost
                shares = 0.0
                action = "sell"
                cost_paid = cost
                trade_count += 1

        value = cash + shares * price
        rows.append(TradeRow(date=str(dates[i]), action=action, price=price,
                             shares=shares, cash=cash, value=value,
                             cost_paid=cost_paid))

    return TradeLedger(ticker=ticker, rows=rows, flags=flags, trade_count=trade_count)


def benchmark(dates: Sequence[str], prices: Sequence[float], config: TraderConfig,
              ticker: Optional[str] = None) -> BenchmarkTrack:
    """Buy-and-hold track: all-in on day one, one transaction cost."""
    prices, _ = _check_inputs(dates, prices)
    cost = config.cost_per_trade
    rf = config.rf_daily
    budget = config.principal - cost
    if budget <= 0.0:
        raise TradingError("principal does not cover the transaction cost")
    shares = _buy_quantity(budget, float(prices[0]), config.allow_fractional_shares)
    if shares > 0.0:
        cost_paid = cost
        cash = budget - shares * float(prices[0])
    else:
        cost_paid = 0.0
        cash = config.principal

    values = np.empty(prices.size, dtype=np.float64)
    for i in range(prices.size):
        if i > 0:
            cash *= 1.0 + rf
        values[i] = cash + shares * float(prices[i])
    return BenchmarkTrack(ticker=ticker, dates=[str(d) for d in dates],
                          values=values, shares=shares, cost_paid=cost_paid)


def risk_free_track(config: TraderConfig, n_days: int) -> np.ndarray:
    """Principal compounding at the daily risk-free rate, no trades.

    Matches what :func:`simulate` produces for an all-down signal
    sequence: N days means N - 1 accruals.
    """
    if n_days < 1:
        raise TradingError("n_days must be >= 1")
    k = np.arange(n_days, dtype=np.float64)
    return config.principal * (1.0 + config.rf_daily) ** k
