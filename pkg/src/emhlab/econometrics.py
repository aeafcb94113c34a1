"""Unit-root and variance-ratio tests on daily log returns.

Two classical instruments for the random-walk question:

* an augmented Dickey-Fuller test regressing the differenced series on a
  constant, an optional time trend, the lagged level, and lagged
  differences, with the lag count chosen by AIC below Schwert's maximum;
* the Lo-MacKinlay variance-ratio test with the heteroskedasticity-robust
  M2 statistic, whose asymptotic variance phi* uses the Lo-MacKinlay
  (1988) estimator (the delta_j weights below).

ADF p-values are interpolated from the published Dickey-Fuller
critical-value table (constant and constant+trend cases, finite-sample
rows through the asymptotic row, linear in 1/T and in the statistic).
Values falling outside the tabulated 1%..99% probability span are
reported clamped at those bounds; response-surface precision is out of
scope and the rejection decisions in ``reject_at`` compare against the
interpolated critical values directly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from emhlab.data import ReturnSeries


class EconError(ValueError):
    """Raised when a test's preconditions fail or its design degenerates."""


@dataclass
class AdfResult:
    ticker: str
    t_stat: float
    lags_used: int
    max_lag: int
    p_value: float
    reject_at: tuple[float, ...]
    trend: str
    nobs: int
    aic: float


@dataclass
class VrResult:
    ticker: str
    k: int
    vr: float
    m2: float
    phi_star: float
    p_value: float


@dataclass
class BatchTestReport:
    adf: list[AdfResult] = field(default_factory=list)
    vr: list[VrResult] = field(default_factory=list)
    failures: list[tuple[str, str, str]] = field(default_factory=list)
    histograms: dict = field(default_factory=dict)

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["ticker", "test", "k_or_lags", "statistic", "p_value"])
            for r in self.adf:
                writer.writerow([r.ticker, "adf", r.lags_used, repr(r.t_stat), repr(r.p_value)])
            for r in self.vr:
                writer.writerow([r.ticker, "vr", r.k, repr(r.m2), repr(r.p_value)])

    def to_json(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "adf": [vars(r) | {"reject_at": list(r.reject_at)} for r in self.adf],
            "vr": [vars(r) for r in self.vr],
            "failures": [list(f) for f in self.failures],
            "histograms": self.histograms,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)


_DF_PROBS = np.array([0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99])
_DF_SIZES = np.array([25.0, 50.0, 100.0, 250.0, 500.0, np.inf])

# Dickey-Fuller tau critical values (Fuller's tables as standardly
# reproduced): rows are the sample sizes above, columns the probabilities.
_DF_TABLE = {
    "c": np.array(
        [
            [-3.75, -3.33, -3.00, -2.62, -0.37, 0.00, 0.34, 0.72],
            [-3.58, -3.22, -2.93, -2.60, -0.40, -0.03, 0.29, 0.66],
            [-3.51, -3.17, -2.89, -2.58, -0.42, -0.05, 0.26, 0.63],
            [-3.46, -3.14, -2.88, -2.57, -0.42, -0.06, 0.24, 0.62],
            [-3.44, -3.13, -2.87, -2.57, -0.43, -0.07, 0.24, 0.61],
            [-3.43, -3.12, -2.86, -2.57, -0.44, -0.07, 0.23, 0.60],
        ]
    ),
    "ct": np.array(
        [
            [-4.38, -3.95, -3.60, -3.24, -1.14, -0.80, -0.50, -0.15],
            [-4.15, -3.80, -3.50, -3.18, -1.19, -0.87, -0.58, -0.24],
            [-4.04, -3.73, -3.45, -3.15, -1.22, -0.90, -0.62, -0.28],
            [-3.99, -3.69, -3.43, -3.13, -1.23, -0.92, -0.64, -0.31],
            [-3.98, -3.68, -3.42, -3.13, -1.24, -0.93, -0.65, -0.32],
            [-3.96, -3.66, -3.41, -3.12, -1.25, -0.94, -0.66, -0.33],
        ]
    ),
}


def _as_values(x, ticker: str | None) -> tuple[np.ndarray, str]:
    if isinstance(x, ReturnSeries):
        return np.asarray(x.values, dtype=np.float64), ticker or x.ticker
    return np.asarray(x, dtype=np.float64), ticker or ""


def _df_cvs(trend: str, nobs: int) -> np.ndarray:
    """Critical values for all tabulated probabilities at sample size nobs."""
    if trend not in _DF_TABLE:
        raise EconError(f"unknown trend spec {trend!r} (use 'c' or 'ct')")
    table = _DF_TABLE[trend]
    # interpolate across rows linearly in 1/T; the asymptotic row is 1/T = 0
    inv_sizes = 1.0 / _DF_SIZES
    r = 1.0 / max(float(nobs), float(_DF_SIZES[0]))
    xp = inv_sizes[::-1]
    out = np.empty(len(_DF_PROBS))
    for j in range(len(_DF_PROBS)):
        out[j] = np.interp(r, xp, table[::-1, j])
    return out


def critical_value(trend: str, prob: float, nobs: int) -> float:
    """Interpolated Dickey-Fuller critical value at a left-tail probability."""
    cvs = _df_cvs(trend, nobs)
    return float(np.interp(prob, _DF_PROBS, cvs))


def df_p_value(t_stat: float, trend: str, nobs: int) -> float:
    """Interpolated p-value for an ADF t-statistic (clamped to [0.01, 0.99])."""
    cvs = _df_cvs(trend, nobs)
    return float(np.interp(t_stat, cvs, _DF_PROBS))


def schwert_max_lag(T: int, rounding: str = "floor") -> int:
    """Schwert's lag ceiling ``12 (T/100)^(1/4)``, floored by default.

    The rounding toggle exists because the literature is not unanimous:
    ``ceil`` raises the 2520-day value from 26 to 27.
    """
    if T < 1:
        raise EconError(f"sample size must be positive, got {T}")
    raw = 12.0 * (T / 100.0) ** 0.25
    if rounding == "floor":
        return int(math.floor(raw))
    if rounding == "ceil":
        return int(math.ceil(raw))
    raise EconError(f"unknown rounding {rounding!r}")


def adf_test(x, max_lag: int | None = None, trend: str = "ct",
             ticker: str | None = None) -> AdfResult:
    """Augmented Dickey-Fuller test with AIC lag selection.

    For each candidate lag count p in 0..max_lag, regresses the first
    difference on a constant, a time trend (when ``trend='ct'``), the
    lagged level, and p lagged differences, using every observation the
    candidate permits (so each candidate's AIC is a function of the data
    and p alone, and enlarging ``max_lag`` can only improve the selected
    AIC).  AIC is the OLS form ``nobs ln(SSR/nobs) + 2 #params``; ties
    prefer fewer lags.  The reported statistic is the t-ratio of the
    lagged-level coefficient at the selected lag, from a rank-checked
    least-squares fit.
    """
    vals, tick = _as_values(x, ticker)
    T = vals.shape[0]
    if max_lag is None:
        max_lag = schwert_max_lag(T)
    if max_lag < 0:
        raise EconError(f"max_lag must be non-negative, got {max_lag}")
    if T <= max_lag + 2:
        raise EconError(f"{tick or 'series'}: length {T} too short for max_lag {max_lag}")

    dy = np.diff(vals)
    nrows = T - 1
    base = 2 if trend == "c" else 3
    if trend not in ("c", "ct"):
        raise EconError(f"unknown trend spec {trend!r} (use 'c' or 'ct')")
    C = np.zeros((nrows, base + max_lag))
    C[:, 0] = 1.0
    if trend == "ct":
        C[:, 1] = np.arange(1, nrows + 1, dtype=np.float64)
    C[:, base - 1] = vals[:-1]
    for j in range(1, max_lag + 1):
        C[j:, base + j - 1] = dy[: nrows - j]

    best_p = -1
    best_aic = math.inf
    for p in range(max_lag + 1):
        k = base + p
        nobs = nrows - p
        if nobs < k + 2:
            break
        Z = np.ascontiguousarray(C[p:, :k])
        yv = np.ascontiguousarray(dy[p:])
        G = Z.T @ Z
        c = Z.T @ yv
        try:
            beta = np.linalg.solve(G, c)
        except np.linalg.LinAlgError:
            continue
        ssr = float(yv @ yv - c @ beta)
        if not ssr > 0.0:
            continue
        aic = nobs * math.log(ssr / nobs) + 2.0 * k
        if aic < best_aic:
            best_aic = aic
            best_p = p
    if best_p < 0:
        raise EconError(f"{tick or 'series'}: singular design matrix "
                        "(constant or degenerate series)")

    p = best_p
    k = base + p
    nobs = nrows - p
    Z = np.ascontiguousarray(C[p:, :k])
    yv = dy[p:]
    beta, _, rank, _ = np.linalg.lstsq(Z, yv, rcond=None)
    if rank < k:
        raise EconError(f"{tick or 'series'}: singular design matrix at lag {p}")
    resid = yv - Z @ beta
    ssr = float(resid @ resid)
    dof = nobs - k
    sigma2 = ssr / dof
    cov = sigma2 * np.linalg.inv(Z.T @ Z)
    alpha_idx = base - 1
    t_stat = float(beta[alpha_idx] / math.sqrt(cov[alpha_idx, alpha_idx]))

    p_value = df_p_value(t_stat, trend, nobs)
    reject_at = tuple(
        lvl for lvl in (0.01, 0.025, 0.05, 0.10)
        if t_stat < critical_value(trend, lvl, nobs)
    )
    return AdfResult(
        ticker=tick,
        t_stat=t_stat,
        lags_used=p,
        max_lag=max_lag,
        p_value=p_value,
        reject_at=reject_at,
        trend=trend,
        nobs=nobs,
        aic=best_aic,
    )


def variance_ratio(x, k: int, ticker: str | None = None) -> float:
    """Variance ratio VR(k) with overlapping sums and unbiased corrections.

    The variance of overlapping k-period sums (with denominator
    ``k (T-k+1)(1 - k/T)``) is divided by the unbiased one-period
    variance; both use the estimated mean.  VR(1) is exactly 1 by
    construction.
    """
    vals, tick = _as_values(x, ticker)
    T = vals.shape[0]
    if k < 1:
        raise EconError(f"horizon k must be >= 1, got {k}")
    if T < 2 * k:
        raise EconError(f"{tick or 'series'}: need length >= 2k = {2 * k}, have {T}")
    mu = float(np.mean(vals))
    dev = vals - mu
    s2_short = float(dev @ dev) / (T - 1)
    if s2_short == 0.0:
        raise EconError(f"{tick or 'series'}: zero single-period variance")
    sums = np.convolve(vals, np.ones(k), mode="valid")
    m = (k * (T - k + 1) * (T - k)) / T
    dev_k = sums - k * mu
    s2_long = float(dev_k @ dev_k) / m
    return s2_long / s2_short


def vr_test_m2(x, k: int, ticker: str | None = None) -> VrResult:
    """Heteroskedasticity-robust variance-ratio test.

    ``M2(k) = (VR(k) - 1) / sqrt(phi*)`` with
    ``phi* = sum_j [2(k-j)/k]^2 delta_j`` and delta_j the ratio of the
    lag-j sum of squared-deviation products to the squared total sum of
    squared deviations (Lo-MacKinlay 1988).  M2 is asymptotically
    standard normal under the martingale null; the p-value is two-sided.
    """
    vals, tick = _as_values(x, ticker)
    if k < 2:
        raise EconError(f"M2 needs k >= 2, got {k}")
    vr = variance_ratio(vals, k, tick)
    mu = float(np.mean(vals))
    dev2 = (vals - mu) ** 2
    denom = float(dev2.sum()) ** 2
    phi = 0.0
    for j in range(1, k):
        delta_j = float(dev2[j:] @ dev2[:-j]) / denom
        w = 2.0 * (k - j) / k
        phi += w * w * delta_j
    if not phi > 0.0:
        raise EconError(f"{tick or 'series'}: degenerate robust variance")
    m2 = (vr - 1.0) / math.sqrt(phi)
    p_value = math.erfc(abs(m2) / math.sqrt(2.0))
    return VrResult(ticker=tick, k=k, vr=vr, m2=m2, phi_star=phi, p_value=p_value)


def _hist(values, lo: float, hi: float, width: float) -> dict:
    """Fixed-width histogram with clipping into the edge bins."""
    edges = np.arange(lo, hi + width / 2, width)
    if len(values) == 0:
        return {"edges": edges.tolist(), "counts": [0] * (len(edges) - 1)}
    clipped = np.clip(np.asarray(values, dtype=np.float64), lo, np.nextafter(hi, lo))
    counts, _ = np.histogram(clipped, bins=edges)
    return {"edges": edges.tolist(), "counts": counts.tolist()}


def run_batch(
    securities: list[ReturnSeries],
    k_set: tuple[int, ...] = (2, 5, 10, 30),
    trend: str = "ct",
    max_lag_multiplier: float = 1.0,
    lag_rounding: str = "floor",
) -> BatchTestReport:
    """Run ADF and VR tests over a list of return series.

    Per-security failures are recorded and do not stop the batch.
    ``max_lag_multiplier`` scales the Schwert maximum (floored, min 1)
    for the sensitivity check on lag depth.  Results keep input order.
    """
    if not securities:
        raise EconError("empty security list")
    report = BatchTestReport()
    for series in securities:
        T = len(series.values)
        try:
            ml = max(1, int(schwert_max_lag(T, lag_rounding) * max_lag_multiplier))
            report.adf.append(adf_test(series, max_lag=ml, trend=trend))
        except EconError as exc:
            report.failures.append((series.ticker, "adf", str(exc)))
        for k in k_set:
            try:
                report.vr.append(vr_test_m2(series, k))
            except EconError as exc:
                report.failures.append((series.ticker, f"vr[{k}]", str(exc)))
    report.histograms = {
        "adf_t": _hist([r.t_stat for r in report.adf], -8.0, 2.0, 0.25),
        "adf_p": _hist([r.p_value for r in report.adf], 0.0, 1.0, 0.05),
        "vr_p": _hist([r.p_value for r in report.vr], 0.0, 1.0, 0.05),
    }
    return report
