"""Classification ratios and portfolio performance statistics.

The eight confusion-matrix ratios here follow the source conventions of
this momentum-study lineage, which differ from the textbook ones: the
rate called TPR is computed as TP/(TP+FP), and so on around the matrix.
They are kept verbatim because the pair identities TPR+FPR = TNR+FNR =
PPV+FDR = NPV+FOR = 1 only hold for these forms.  The mapping to
conventional names:

    name here   formula         conventional name
    ---------   -------------   -----------------------------
    tpr         TP/(TP+FP)      precision (PPV)
    fpr         FP/(FP+TP)      false discovery rate
    tnr         TN/(TN+FN)      negative predictive value
    fnr         FN/(FN+TN)      false omission rate
    ppv         TP/(TP+FN)      recall / true positive rate
    fdr         FN/(TP+FN)      false negative rate
    npv         TN/(TN+FP)      specificity / true negative rate
    for_        FP/(TN+FP)      false positive rate

In each pair the two members share a denominator, so the second is
computed as one minus the first; that keeps the pair sums exactly 1 in
floating point, which the formulas evaluated independently do not
guarantee.  A zero denominator leaves both members of the pair None.

Portfolio metrics follow the definitions used alongside the trading
simulator: daily arithmetic returns, population variance and covariance,
beta as Cov(R_p, R_m)/Var(R_m), alpha as the period sum of portfolio
returns in excess of the beta-adjusted benchmark line, Sharpe and
Sortino as daily mean excess return over total and downside deviation.
Nothing is annualized unless requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class MetricsError(ValueError):
    """Raised on degenerate metric inputs (e.g. an all-zero matrix)."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with positive = price-up; rows are predictions, columns actuals."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise MetricsError(f"negative count {name}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ClassificationReport:
    """The eight ratios plus accuracy and F1; None marks an undefined ratio."""

    tpr: float | None
    fnr: float | None
    tnr: float | None
    fpr: float | None
    ppv: float | None
    fdr: float | None
    npv: float | None
    for_: float | None
    accuracy: float
    f1: float | None

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in
             ("tpr", "fnr", "tnr", "fpr", "ppv", "fdr", "npv", "for_", "accuracy", "f1")}
        return {("for" if k == "for_" else k): v for k, v in d.items()}


@dataclass(frozen=True)
class PortfolioReport:
    """Period-level portfolio statistics; None marks an undefined metric."""

    total_return: float
    alpha: float | None
    beta: float | None
    volatility: float
    sharpe: float | None
    sortino: float | None
    trade_count: int

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("total_return", "alpha", "beta", "volatility", "sharpe",
                 "sortino", "trade_count")}


def classification_report(cm: ConfusionMatrix) -> ClassificationReport:
    """Compute the eight ratios, accuracy, and F1 from a confusion matrix.

    See the module docstring for the exact (non-standard) ratio
    conventions and the complement trick that makes the four pair sums
    exactly 1 whenever defined.
    """
    if cm.total == 0:
        raise MetricsError("all-zero confusion matrix")

    def pair(num: int, den: int) -> tuple[float | None, float | None]:
        if den == 0:
            return None, None
        first = num / den
        return first, 1.0 - first

    tpr, fpr = pair(cm.tp, cm.tp + cm.fp)
    tnr, fnr = pair(cm.tn, cm.tn + cm.fn)
    ppv, fdr = pair(cm.tp, cm.tp + cm.fn)
    npv, for_ = pair(cm.tn, cm.tn + cm.fp)
    accuracy = (cm.tp + cm.tn) / cm.total
    f1_den = 2 * cm.tp + cm.fp + cm.fn
    f1 = (2 * cm.tp) / f1_den if f1_den > 0 else None
    return ClassificationReport(
        tpr=tpr, fnr=fnr, tnr=tnr, fpr=fpr,
        ppv=ppv, fdr=fdr, npv=npv, for_=for_,
        accuracy=accuracy, f1=f1,
    )


def daily_returns(values: np.ndarray) -> np.ndarray:
    """Arithmetic day-over-day returns of a value track."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] < 2:
        raise MetricsError("need at least 2 daily values for returns")
    if np.any(values[:-1] <= 0):
        raise MetricsError("non-positive portfolio value")
    return values[1:] / values[:-1] - 1.0


def portfolio_report(
    ledger_values: np.ndarray,
    benchmark_values: np.ndarray,
    rf_daily: float,
    trade_count: int = 0,
    annualize: bool = False,
) -> PortfolioReport:
    """Portfolio statistics of a ledger track against a benchmark track.

    ``ledger_values`` and ``benchmark_values`` are aligned daily value
    series (same dates).  Returns are arithmetic; moments are population
    form.  Alpha aggregates arithmetically over the period: with N daily
    returns, ``alpha = sum(R_p) - [N rf_daily + (sum(R_m) - N rf_daily)
    beta]``, so adding a constant c to every portfolio return moves alpha
    by exactly c*N.  Downside deviation for Sortino sums squared
    shortfalls below ``rf_daily`` over all N days.  With ``annualize``
    volatility, Sharpe, and Sortino scale by sqrt(252) and alpha by
    252/N.
    """
    rp = daily_returns(ledger_values)
    rm = daily_returns(benchmark_values)
    if rp.shape[0] != rm.shape[0]:
        raise MetricsError("ledger and benchmark tracks differ in length")
    n = rp.shape[0]

    total_return = float(ledger_values[-1] / ledger_values[0] - 1.0)
    mean_p = float(np.mean(rp))
    dev_p = rp - mean_p
    sigma = math.sqrt(float(dev_p @ dev_p) / n)

    dev_m = rm - float(np.mean(rm))
    var_m = float(dev_m @ dev_m) / n
    if var_m > 0.0:
        beta = (float(dev_p @ dev_m) / n) / var_m
        rf_total = rf_daily * n
        alpha = float(np.sum(rp)) - (rf_total + (float(np.sum(rm)) - rf_total) * beta)
    else:
        beta = None
        alpha = None

    sharpe = (mean_p - rf_daily) / sigma if sigma > 0.0 else None
    short = rp[rp < rf_daily] - rf_daily
    sigma_d = math.sqrt(float(short @ short) / n)
    sortino = (mean_p - rf_daily) / sigma_d if sigma_d > 0.0 else None

    if annualize:
        root = math.sqrt(252.0)
        sigma *= root
        sharpe = None if sharpe is None else sharpe * root
        sortino = None if sortino is None else sortino * root
        alpha = None if alpha is None else alpha * (252.0 / n)

    return PortfolioReport(
        total_return=total_return,
        alpha=alpha,
        beta=beta,
        volatility=sigma,
        sharpe=sharpe,
        sortino=sortino,
        trade_count=trade_count,
    )
