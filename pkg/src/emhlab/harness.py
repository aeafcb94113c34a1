"""Experiment orchestration: securities x specs x feature modes.

A run is described by a flat key-value config file (grammar in the
README), hashed together with the global seed into a stable run id.
All artifacts land under ``<out_dir>/run_<id>/``:

    master_log.json     every config field, per-run results, averages
    result_log.csv      one row per (security, mode, spec) run
    ingest_report.json  data-quality findings per security
    econ/               stationarity-test batch output
    predictions/        walk-forward logs, one CSV per run
    trades/             trade ledgers, one CSV per run
    benchmarks/         buy-and-hold tracks per (security, mode)
    report/             histograms, equity curves, plain-text summary

Individual (security, mode, spec) runs are independent: they execute in
a process pool when ``jobs`` allows and a failure in one is recorded in
its result row without disturbing the others.  Results are gathered in
input order, so logs are byte-identical for a given config + seed no
matter the parallelism (timestamps live only under master_log "meta").
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields
from datetime import date, datetime
from typing import Optional

import numpy as np

from . import __version__, backends
from .classifiers import DEFAULT_SPECS, FAMILIES, ModelSpec, enumerate_grid
from .data import DataError, log_returns, scan_csv, synthetic_series, validate
from .econometrics import EconError, run_batch
from .indicators import build_feature_table
from .metrics import MetricsError, classification_report, portfolio_report
from .trading import TraderConfig, benchmark, simulate
from .walkforward import WalkForwardConfig, run_walk_forward, summarize

log = logging.getLogger(__name__)

STAGES = ("ingest", "econ", "backtest", "report")

RESULT_COLUMNS = (
    "ticker", "mode", "spec", "family", "status", "reason", "days", "accuracy",
    "tpr", "fnr", "tnr", "fpr", "ppv", "fdr", "npv", "for", "f1",
    "total_return", "alpha", "beta", "volatility", "sharpe", "sortino",
    "trade_count", "final_value", "benchmark_final", "pred_flags", "trade_flags",
)


class ConfigError(ValueError):
    """Raised on unparseable or invalid experiment configs."""


# ---------------------------------------------------------------------------
# config


def parse_config_text(text: str) -> dict:
    """Parse the flat ``key = value`` grammar into a raw string dict.

    Blank lines and lines starting with ``#`` are ignored.  Values run to
    the end of the line; lists are comma-separated within the value.
    """
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    return raw


def _as_bool(key, value):
    low = value.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _as_list(value):
    return tuple(part.strip() for part in value.split(",") if part.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    securities: tuple = ()
    synthetic_securities: tuple = ()
    universe_file: str = ""
    sample_size: int = 0
    data_dir: str = "."
    date_start: str = ""
    date_end: str = ""
    mode: str = "trend"
    families: tuple = FAMILIES
    grid: str = "default"
    indicator_period: int = 10
    initial_training_days: int = 250
    refit_every: int = 1
    principal: float = 100_000.0
    cost_per_trade: float = 4.95
    rf_annual: float = 0.02
    fractional_shares: bool = False
    trading: bool = True
    annualize: bool = False
    econ: bool = True
    k_set: tuple = (2, 5, 10, 30)
    adf_trend: str = "ct"
    max_lag_multiplier: float = 1.0
    lag_rounding: str = "floor"
    z_threshold: float = 10.0
    max_gap_days: int = 7
    out_dir: str = "runs"
    seed: int = 0
    jobs: int = 0

    def __post_init__(self):
        if self.mode not in ("trend", "continuous", "both"):
            raise ConfigError(f"mode must be trend, continuous or both, got {self.mode!r}")
        if self.grid not in ("default", "full"):
            raise ConfigError(f"grid must be default or full, got {self.grid!r}")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ConfigError(f"unknown model family {fam!r}")
        if self.lag_rounding not in ("floor", "ceil"):
            raise ConfigError(f"lag_rounding must be floor or ceil, got {self.lag_rounding!r}")
        if self.adf_trend not in ("c", "ct"):
            raise ConfigError(f"adf_trend must be c or ct, got {self.adf_trend!r}")
        if not (self.securities or self.synthetic_securities or self.universe_file):
            raise ConfigError("no securities configured")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    @classmethod
    def from_dict(cls, raw: dict, overrides: Optional[dict] = None) -> "ExperimentConfig":
        known = {f.name: f for f in dc_fields(cls)}
        unknown = set(raw) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs = {}
        for key, value in raw.items():
            kind = known[key].type
            if key in ("securities", "synthetic_securities", "families"):
                kwargs[key] = _as_list(value)
            elif key == "k_set":
                try:
                    kwargs[key] = tuple(int(v) for v in _as_list(value))
                except ValueError:
                    raise ConfigError(f"k_set: expected integers, got {value!r}")
            elif kind == "bool":
                kwargs[key] = _as_bool(key, value)
            elif kind == "int":
                try:
                    kwargs[key] = int(value)
                except ValueError:
                    raise ConfigError(f"{key}: expected an integer, got {value!r}")
            elif kind == "float":
                try:
                    kwargs[key] = float(value)
                except ValueError:
                    raise ConfigError(f"{key}: expected a number, got {value!r}")
            else:
                kwargs[key] = value
        if overrides:
            kwargs.update(overrides)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path, overrides: Optional[dict] = None) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        return cls.from_dict(parse_config_text(text), overrides)

    def to_dict(self) -> dict:
        out = {}
        for f in dc_fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def canonical_text(self) -> str:
        # jobs and out_dir cannot change results, so they do not feed the
        # run id; rerunning the same science with different parallelism
        # or output root maps to the same run
        skip = {"jobs", "out_dir"}
        lines = []
        for key in sorted(f.name for f in dc_fields(self)):
            if key in skip:
                continue
            value = getattr(self, key)
            if isinstance(value, tuple):
                text = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"

    def run_id(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:10]

    def modes(self) -> tuple:
        return ("trend", "continuous") if self.mode == "both" else (self.mode,)

    def specs(self) -> list:
        out = []
        for fam in self.families:
            if self.grid == "full":
                fam_specs = enumerate_grid(fam)
            else:
                fam_specs = [DEFAULT_SPECS[fam]]
            for spec in fam_specs:
                out.append(spec.with_seed(self.seed) if fam == "RF" else spec)
        return out

    def trader_config(self) -> TraderConfig:
        return TraderConfig(principal=self.principal, cost_per_trade=self.cost_per_trade,
                            rf_annual=self.rf_annual,
                            allow_fractional_shares=self.fractional_shares)


# ---------------------------------------------------------------------------
# security resolution


def _parse_date(text: str, key: str) -> Optional[date]:
    if not text:
        return None
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise ConfigError(f"{key}: expected YYYY-MM-DD, got {text!r}")


def resolve_securities(config: ExperimentConfig):
    """Load every configured security; returns (loaded, failures).

    ``loaded`` is a list of (ticker, PriceSeries, QualityReport); failures
    are (ticker, reason) pairs.  Synthetic entries have the form
    ``TICKER:days`` or ``TICKER:days:seed`` (seed defaults to the global
    seed).  A universe file plus sample_size draws a seeded sample of
    tickers resolved against data_dir.
    """
    entries = []
    for entry in config.securities:
        entries.append(("file", entry))
    if config.universe_file:
        try:
            with open(config.universe_file, "r", encoding="utf-8") as fh:
                universe = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        except OSError as exc:
            raise ConfigError(f"cannot read universe file: {exc}")
        if config.sample_size > 0:
            if config.sample_size > len(universe):
                raise ConfigError(
                    f"sample_size {config.sample_size} exceeds universe of {len(universe)}")
            rng = np.random.default_rng(np.random.SeedSequence((config.seed, 101)))
            picks = rng.choice(len(universe), size=config.sample_size, replace=False)
            universe = [universe[i] for i in picks]
        for ticker in universe:
            entries.append(("file", ticker))
    for entry in config.synthetic_securities:
        entries.append(("synthetic", entry))

    start = _parse_date(config.date_start, "date_start")
    end = _parse_date(config.date_end, "date_end")

    loaded, failures = [], []
    seen = set()
    for kind, entry in entries:
        try:
            if kind == "synthetic":
                parts = entry.split(":")
                if len(parts) not in (2, 3):
                    raise DataError(f"synthetic entry must be TICKER:days[:seed], got {entry!r}")
                ticker = parts[0]
                days = int(parts[1])
                seed = int(parts[2]) if len(parts) == 3 else config.seed
                series = synthetic_series(ticker, days, seed=seed)
                malformed = []
            else:
                if os.sep in entry or entry.lower().endswith(".csv"):
                    path = entry
                    ticker = os.path.splitext(os.path.basename(entry))[0]
                else:
                    ticker = entry
                    path = os.path.join(config.data_dir, f"{entry}.csv")
                series, malformed = scan_csv(path)
                if series is None:
                    raise DataError(f"no usable rows in {path}")
            if ticker in seen:
                raise DataError(f"duplicate security {ticker!r}")
            seen.add(ticker)
            if start or end:
                series = series.slice_dates(start, end)
                if len(series.bars) == 0:
                    raise DataError("empty after date-range filter")
            quality = validate(series, z_threshold=config.z_threshold,
                               max_gap_days=config.max_gap_days, malformed=malformed)
            loaded.append((ticker, series, quality))
        except (DataError, ValueError, OSError) as exc:
            ticker = entry.split(":")[0] if kind == "synthetic" else entry
            log.warning("ingest failed for %s: %s", ticker, exc)
            failures.append((ticker, str(exc)))
    return loaded, failures


# ---------------------------------------------------------------------------
# one (security, mode, spec) run


def _run_one(job: dict) -> dict:
    """Worker for one (security, mode, spec) walk-forward + trading run.

    Takes and returns picklable values only; never raises.
    """
    ticker = job["ticker"]
    mode = job["mode"]
    spec = job["spec"]
    out = {"ticker": ticker, "mode": mode, "spec": spec, "status": "ok", "reason": ""}
    try:
        table = build_feature_table(job["series"], mode, n=job["indicator_period"])
        wf = WalkForwardConfig(spec=spec, mode=mode,
                               initial_training_days=job["initial_training_days"],
                               refit_every=job["refit_every"])
        plog = run_walk_forward(table, wf, ticker=ticker)
        out["prediction_log"] = plog
        out["confusion"] = summarize(plog)

        if job["trading"]:
            price_by_date = {str(b.date): b.adj_close for b in job["series"].bars}
            prices = np.array([price_by_date[d] for d in plog.dates])
            trader = TraderConfig(**job["trader"])
            ledger = simulate(plog.dates, prices, plog.predicted, trader, ticker=ticker)
            track = benchmark(plog.dates, prices, trader, ticker=ticker)
            out["ledger"] = ledger
            out["benchmark"] = track
            out["portfolio"] = portfolio_report(
                ledger.values, track.values, trader.rf_daily,
                trade_count=ledger.trade_count, annualize=job["annualize"])
    except Exception as exc:
        out["status"] = "failed"
        out["reason"] = f"{type(exc).__name__}: {exc}"
    return out


def _jobs_for(config: ExperimentConfig, loaded) -> list:
    trader = config.trader_config()
    trader_kwargs = {
        "principal": trader.principal, "cost_per_trade": trader.cost_per_trade,
        "rf_annual": trader.rf_annual,
        "allow_fractional_shares": trader.allow_fractional_shares,
    }
    jobs = []
    for ticker, series, _quality in loaded:
        for mode in config.modes():
            for spec in config.specs():
                jobs.append({
                    "ticker": ticker, "series": series, "mode": mode, "spec": spec,
                    "indicator_period": config.indicator_period,
                    "initial_training_days": config.initial_training_days,
                    "refit_every": config.refit_every,
                    "trading": config.trading, "trader": trader_kwargs,
                    "annualize": config.annualize,
                })
    return jobs


# ---------------------------------------------------------------------------
# aggregation


def select_best_spec(results: list) -> dict:
    """Best spec per family by mean alpha across securities.

    ``results`` are completed run dicts carrying ``spec``, ``mode`` and a
    ``portfolio`` report.  Candidates are (spec, mode) groups; the winner
    maximizes mean alpha, ties broken by fewer mean trades, then by
    lexicographic spec order.  Families without any alpha-bearing run are
    omitted with a warning.
    """
    groups = {}
    for res in results:
        report = res.get("portfolio")
        if res["status"] != "ok" or report is None or report.alpha is None:
            continue
        key = (res["spec"].family, res["spec"].label(), res["mode"])
        entry = groups.setdefault(key, {"spec": res["spec"], "mode": res["mode"],
                                        "alphas": [], "trades": []})
        entry["alphas"].append(report.alpha)
        entry["trades"].append(report.trade_count)

    best = {}
    for family in FAMILIES:
        candidates = []
        for (fam, _label, _mode), entry in groups.items():
            if fam != family:
                continue
            mean_alpha = float(np.mean(entry["alphas"]))
            mean_trades = float(np.mean(entry["trades"]))
            candidates.append((-mean_alpha, mean_trades, entry["spec"].sort_key(),
                               entry["mode"], entry["spec"]))
        if not candidates:
            continue
        candidates.sort(key=lambda c: c[:4])
        _neg_alpha, trades, _key, mode, spec = candidates[0]
        best[family] = {"spec": spec, "label": spec.label(), "mode": mode,
                        "mean_alpha": -candidates[0][0], "mean_trades": trades}
    for family in FAMILIES:
        if family not in best and any(r["spec"].family == family for r in results):
            log.warning("family %s has no completed run with a defined alpha; omitted", family)
    return best


def _family_averages(results: list) -> dict:
    by_family = {}
    for res in results:
        fam = res["spec"].family
        agg = by_family.setdefault(fam, {"n_runs": 0, "n_failed": 0, "accuracy": [],
                                         "alpha": [], "trades": []})
        agg["n_runs"] += 1
        if res["status"] != "ok":
            agg["n_failed"] += 1
            continue
        agg["accuracy"].append(res["prediction_log"].accuracy)
        report = res.get("portfolio")
        if report is not None:
            if report.alpha is not None:
                agg["alpha"].append(report.alpha)
            agg["trades"].append(report.trade_count)
    out = {}
    for fam, agg in sorted(by_family.items()):
        out[fam] = {
            "n_runs": agg["n_runs"],
            "n_failed": agg["n_failed"],
            "mean_accuracy": float(np.mean(agg["accuracy"])) if agg["accuracy"] else None,
            "mean_alpha": float(np.mean(agg["alpha"])) if agg["alpha"] else None,
            "mean_trades": float(np.mean(agg["trades"])) if agg["trades"] else None,
        }
    return out


# ---------------------------------------------------------------------------
# serialization helpers


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _result_row(res: dict) -> dict:
    spec = res["spec"]
    row = {c: "" for c in RESULT_COLUMNS}
    row.update(ticker=res["ticker"], mode=res["mode"], spec=spec.label(),
               family=spec.family, status=res["status"], reason=res["reason"])
    plog = res.get("prediction_log")
    if plog is not None:
        row["days"] = str(len(plog))
        row["pred_flags"] = str(sum(1 for f in plog.flags if f))
        try:
            cls = classification_report(res["confusion"])
            row["accuracy"] = _fmt(cls.accuracy)
            for name, value in cls.as_dict().items():
                if name in row:
                    row[name] = _fmt(value)
        except MetricsError:
            pass
    report = res.get("portfolio")
    if report is not None:
        for name, value in report.as_dict().items():
            if name in row:
                row[name] = _fmt(value)
    ledger = res.get("ledger")
    if ledger is not None:
        row["trade_flags"] = str(len(ledger.flags))
        row["final_value"] = _fmt(ledger.final_value)
    track = res.get("benchmark")
    if track is not None:
        row["benchmark_final"] = _fmt(float(track.values[-1]))
    return row


def _portfolio_json(report) -> Optional[dict]:
    return None if report is None else report.as_dict()


def _classification_json(res) -> Optional[dict]:
    if "confusion" not in res:
        return None
    cm = res["confusion"]
    try:
        cls = classification_report(cm)
    except MetricsError:
        return None
    out = {"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn}
    out.update(cls.as_dict())
    return out


def _run_json(res: dict) -> dict:
    entry = {
        "ticker": res["ticker"], "mode": res["mode"], "spec": res["spec"].label(),
        "family": res["spec"].family, "hyperparameters": res["spec"].as_dict(),
        "status": res["status"], "reason": res["reason"],
    }
    plog = res.get("prediction_log")
    if plog is not None:
        entry["days"] = len(plog)
        entry["accuracy"] = plog.accuracy
        entry["pred_flags"] = sum(1 for f in plog.flags if f)
        entry["classification"] = _classification_json(res)
    if res.get("portfolio") is not None:
        entry["portfolio"] = _portfolio_json(res["portfolio"])
    ledger = res.get("ledger")
    if ledger is not None:
        entry["trade_flags"] = [[d, f] for d, f in ledger.flags[:20]]
        entry["final_value"] = ledger.final_value
    return entry


def _artifact_name(res: dict) -> str:
    return f"{res['ticker']}_{res['mode']}_{res['spec'].label()}"


# ---------------------------------------------------------------------------
# the experiment


@dataclass
class MasterLog:
    run_id: str
    run_dir: str
    config: dict
    meta: dict
    ingest: list = field(default_factory=list)
    ingest_failures: list = field(default_factory=list)
    econ: Optional[dict] = None
    runs: list = field(default_factory=list)
    family_averages: dict = field(default_factory=dict)
    best_specs: dict = field(default_factory=dict)

    def counts(self) -> tuple:
        ok = sum(1 for r in self.runs if r["status"] == "ok")
        failed = sum(1 for r in self.runs if r["status"] != "ok")
        failed += len(self.ingest_failures)
        if self.econ is not None:
            failed += len(self.econ.get("failures", []))
            ok += self.econ.get("n_tested", 0)
        ok += len(self.ingest)
        return ok, failed

    def exit_code(self) -> int:
        ok, failed = self.counts()
        if failed == 0:
            return 0
        return 1 if ok > 0 else 2

    def as_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "meta": self.meta,
            "config": self.config,
            "ingest": self.ingest,
            "ingest_failures": [list(f) for f in self.ingest_failures],
            "econ": self.econ,
            "runs": self.runs,
            "family_averages": self.family_averages,
            "best_specs": self.best_specs,
        }

    def save(self) -> None:
        path = os.path.join(self.run_dir, "master_log.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.as_dict(), fh, indent=2)
            fh.write("\n")


def _quality_json(ticker, series, quality) -> dict:
    return {
        "ticker": ticker,
        "rows": len(series.bars),
        "first_date": str(series.bars[0].date),
        "last_date": str(series.bars[-1].date),
        "clean": quality.clean,
        "missing_dates": [[str(a), str(b), n] for a, b, n in quality.missing_dates],
        "malformed_rows": [[i, reason] for i, reason in quality.malformed_rows],
        "outlier_flags": [[str(d), f, z] for d, f, z in quality.outlier_flags],
    }


def run_experiment(config: ExperimentConfig, stages=STAGES) -> MasterLog:
    """Execute the configured stages and write all artifacts.

    ``stages`` is any subset of ("ingest", "econ", "backtest", "report");
    ingest runs implicitly when econ or backtest need data.
    """
    t0 = time.perf_counter()
    stages = tuple(stages)
    for stage in stages:
        if stage not in STAGES:
            raise ConfigError(f"unknown stage {stage!r}")
    run_dir = os.path.join(config.out_dir, f"run_{config.run_id()}")
    os.makedirs(run_dir, exist_ok=True)

    master = MasterLog(
        run_id=config.run_id(), run_dir=run_dir, config=config.to_dict(),
        meta={"created": datetime.now().isoformat(timespec="seconds"),
              "package_version": __version__, "backend": backends.BACKEND},
    )

    need_data = any(s in stages for s in ("ingest", "econ", "backtest"))
    loaded = []
    if need_data:
        loaded, failures = resolve_securities(config)
        master.ingest_failures = failures
        master.ingest = [_quality_json(t, s, q) for t, s, q in loaded]
        log.info("ingest: %d securities loaded, %d failed", len(loaded), len(failures))
        if "ingest" in stages:
            with open(os.path.join(run_dir, "ingest_report.json"), "w", encoding="utf-8") as fh:
                json.dump({"securities": master.ingest,
                           "failures": [list(f) for f in failures]}, fh, indent=2)
                fh.write("\n")

    if "econ" in stages and config.econ and loaded:
        econ_dir = os.path.join(run_dir, "econ")
        os.makedirs(econ_dir, exist_ok=True)
        returns = []
        for ticker, series, _quality in loaded:
            try:
                returns.append(log_returns(series))
            except (DataError, EconError) as exc:
                master.ingest_failures.append((ticker, f"returns: {exc}"))
        if returns:
            batch = run_batch(returns, k_set=config.k_set, trend=config.adf_trend,
                              max_lag_multiplier=config.max_lag_multiplier,
                              lag_rounding=config.lag_rounding)
            batch.to_csv(os.path.join(econ_dir, "econ_results.csv"))
            batch.to_json(os.path.join(econ_dir, "econ_report.json"))
            n_tested = len({r.ticker for r in batch.adf} | {r.ticker for r in batch.vr})
            master.econ = {
                "n_tested": n_tested,
                "n_adf": len(batch.adf),
                "n_vr": len(batch.vr),
                "failures": [list(f) for f in batch.failures],
                "adf_reject_5pct": sum(1 for r in batch.adf if 0.05 in r.reject_at),
                "vr_reject_5pct": sum(1 for r in batch.vr if r.p_value < 0.05),
                "histograms": batch.histograms,
            }
            log.info("econ: %d securities tested, %d failures",
                     n_tested, len(batch.failures))

    if "backtest" in stages and loaded:
        jobs = _jobs_for(config, loaded)
        n_jobs = config.jobs if config.jobs > 0 else (os.cpu_count() or 1)
        log.info("backtest: %d runs on %d workers", len(jobs), n_jobs)
        if n_jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                results = list(pool.map(_run_one, jobs))
        else:
            results = [_run_one(job) for job in jobs]

        pred_dir = os.path.join(run_dir, "predictions")
        os.makedirs(pred_dir, exist_ok=True)
        if config.trading:
            trade_dir = os.path.join(run_dir, "trades")
            bench_dir = os.path.join(run_dir, "benchmarks")
            os.makedirs(trade_dir, exist_ok=True)
            os.makedirs(bench_dir, exist_ok=True)
        bench_written = set()
        result_rows = []
        for res in results:
            if res["status"] != "ok":
                log.warning("run failed: %s %s %s: %s", res["ticker"], res["mode"],
                            res["spec"].label(), res["reason"])
            name = _artifact_name(res)
            if res.get("prediction_log") is not None:
                res["prediction_log"].to_csv(os.path.join(pred_dir, f"{name}.csv"))
            if res.get("ledger") is not None:
                res["ledger"].to_csv(os.path.join(trade_dir, f"{name}.csv"))
            track = res.get("benchmark")
            if track is not None and (res["ticker"], res["mode"]) not in bench_written:
                track.to_csv(os.path.join(
                    bench_dir, f"{res['ticker']}_{res['mode']}.csv"))
                bench_written.add((res["ticker"], res["mode"]))
            result_rows.append(_result_row(res))
            master.runs.append(_run_json(res))

        with open(os.path.join(run_dir, "result_log.csv"), "w", encoding="utf-8") as fh:
            fh.write(",".join(RESULT_COLUMNS) + "\n")
            for row in result_rows:
                fh.write(",".join(row[c] for c in RESULT_COLUMNS) + "\n")

        master.family_averages = _family_averages(results)
        best = select_best_spec(results)
        master.best_specs = {
            fam: {"spec": entry["label"], "mode": entry["mode"],
                  "hyperparameters": entry["spec"].as_dict(),
                  "mean_alpha": entry["mean_alpha"], "mean_trades": entry["mean_trades"]}
            for fam, entry in best.items()
        }

    master.meta["elapsed_seconds"] = round(time.perf_counter() - t0, 3)
    master.save()

    if "report" in stages:
        emit_report(run_dir)

    ok, failed = master.counts()
    log.info("experiment done: %d ok, %d failed, exit %d", ok, failed, master.exit_code())
    return master


# ---------------------------------------------------------------------------
# report emission (reads a finished run directory)


def _histogram(values, width: float) -> list:
    """(bin_left, bin_right, count) rows covering the data range.

    Bins are half-open [left, right), so a value sitting exactly on the
    top edge opens a new bin rather than merging into the one below.
    """
    values = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if values.size == 0:
        return []
    lo = np.floor(values.min() / width) * width
    idx = np.floor((values - lo) / width).astype(np.int64)
    idx = np.maximum(idx, 0)
    n_bins = int(idx.max()) + 1
    edges = lo + width * np.arange(n_bins + 1)
    counts = np.bincount(idx, minlength=n_bins)
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(n_bins)]


def _write_hist(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bin_left,bin_right,count\n")
        for left, right, count in rows:
            fh.write(f"{left!r},{right!r},{count}\n")


def emit_report(run_dir) -> list:
    """Build report/ summaries from a finished run directory.

    Reads master_log.json and the trade/benchmark CSVs, so it can be
    re-run on an existing run directory without recomputing anything.
    Returns the list of files written.
    """
    master_path = os.path.join(run_dir, "master_log.json")
    try:
        with open(master_path, "r", encoding="utf-8") as fh:
            master = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read master log: {exc}")
    report_dir = os.path.join(run_dir, "report")
    os.makedirs(report_dir, exist_ok=True)
    written = []

    runs = master.get("runs", [])
    done = [r for r in runs if r["status"] == "ok"]
    accuracies = [r["accuracy"] for r in done if r.get("accuracy") is not None]
    alphas = [r["portfolio"]["alpha"] for r in done
              if r.get("portfolio") and r["portfolio"].get("alpha") is not None]

    if accuracies:
        path = os.path.join(report_dir, "accuracy_hist.csv")
        _write_hist(path, _histogram(accuracies, 0.02))
        written.append(path)
    if alphas:
        path = os.path.join(report_dir, "alpha_hist.csv")
        _write_hist(path, _histogram(alphas, 0.02))
        written.append(path)

    econ = master.get("econ")
    if econ and econ.get("histograms"):
        for key, fname in (("adf_t", "adf_t_hist.csv"), ("vr_p", "vr_p_hist.csv")):
            hist = econ["histograms"].get(key)
            if hist and hist.get("counts"):
                edges, counts = hist["edges"], hist["counts"]
                rows = [(float(edges[i]), float(edges[i + 1]), int(counts[i]))
                        for i in range(len(counts))]
                path = os.path.join(report_dir, fname)
                _write_hist(path, rows)
                written.append(path)

    # equity curve for the best completed run of each security
    best_by_ticker = {}
    for r in done:
        alpha = (r.get("portfolio") or {}).get("alpha")
        if alpha is None:
            continue
        cur = best_by_ticker.get(r["ticker"])
        if cur is None or alpha > cur[0]:
            best_by_ticker[r["ticker"]] = (alpha, r)
    for ticker, (_alpha, r) in sorted(best_by_ticker.items()):
        name = f"{ticker}_{r['mode']}_{r['spec']}"
        trade_path = os.path.join(run_dir, "trades", f"{name}.csv")
        bench_path = os.path.join(run_dir, "benchmarks", f"{ticker}_{r['mode']}.csv")
        if not (os.path.exists(trade_path) and os.path.exists(bench_path)):
            continue
        with open(trade_path, "r", encoding="utf-8") as fh:
            trade_lines = fh.read().splitlines()[1:]
        with open(bench_path, "r", encoding="utf-8") as fh:
            bench_lines = fh.read().splitlines()[1:]
        path = os.path.join(report_dir, f"equity_{ticker}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("date,portfolio,benchmark\n")
            for tline, bline in zip(trade_lines, bench_lines):
                tparts = tline.split(",")
                bparts = bline.split(",")
                fh.write(f"{tparts[0]},{tparts[5]},{bparts[1]}\n")
        written.append(path)

    summary_path = os.path.join(report_dir, "summary.txt")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(f"run {master['run_id']}\n")
        fh.write(f"securities loaded: {len(master.get('ingest', []))}, "
                 f"ingest failures: {len(master.get('ingest_failures', []))}\n")
        fh.write(f"runs: {len(runs)} total, {len(done)} ok, {len(runs) - len(done)} failed\n")
        if accuracies:
            fh.write(f"accuracy: mean {np.mean(accuracies):.4f} over {len(accuracies)} runs\n")
        if alphas:
            fh.write(f"alpha: mean {np.mean(alphas):.6f} over {len(alphas)} runs\n")
        if econ:
            fh.write(f"econometrics: {econ['n_adf']} ADF fits "
                     f"({econ['adf_reject_5pct']} reject at 5%), "
                     f"{econ['n_vr']} VR tests ({econ['vr_reject_5pct']} reject at 5%)\n")
        else:
            fh.write("econometrics: not run; histograms omitted\n")
        for fam, avg in master.get("family_averages", {}).items():
            fh.write(f"family {fam}: runs {avg['n_runs']} "
                     f"(failed {avg['n_failed']}), mean accuracy "
                     f"{_fmt_or_na(avg['mean_accuracy'])}, mean alpha "
                     f"{_fmt_or_na(avg['mean_alpha'])}\n")
        for fam, entry in master.get("best_specs", {}).items():
            fh.write(f"best {fam}: {entry['spec']} ({entry['mode']}) "
                     f"mean alpha {_fmt_or_na(entry['mean_alpha'])}\n")
    written.append(summary_path)
    return written


def _fmt_or_na(value) -> str:
    return "n/a" if value is None else f"{value:.6f}"
