"""Experiment harness: config grammar, run identity, security resolution,
aggregation rules, artifact layout, and reporting."""

from __future__ import annotations

import json
import os

import numpy as np
import pytest

from emhlab.classifiers import ModelSpec
from emhlab.data import save_csv, synthetic_series
from emhlab.harness import (
    RESULT_COLUMNS,
    ConfigError,
    ExperimentConfig,
    _family_averages,
    _histogram,
    emit_report,
    parse_config_text,
    resolve_securities,
    run_experiment,
    select_best_spec,
)
from emhlab.metrics import PortfolioReport

BASE = {"synthetic_securities": "HS1:320:11", "families": "GNB"}


def _config(**kw):
    raw = dict(BASE)
    raw.update({k: str(v) for k, v in kw.items()})
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# config grammar


def test_parse_config_text_grammar():
    raw = parse_config_text(
        "# comment\n"
        "\n"
        "securities = AAA, BBB\n"
        "principal = 50000\n"
        "  mode =  both  \n")
    assert raw == {"securities": "AAA, BBB", "principal": "50000", "mode": "both"}


@pytest.mark.parametrize("text", [
    "no equals sign here",
    "= value",
    "seed = 1\nseed = 2",
])
def test_parse_config_text_rejects(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_from_dict_types_and_unknown_keys():
    cfg = ExperimentConfig.from_dict({
        "synthetic_securities": "S:300",
        "families": "KNN, GNB",
        "k_set": "2, 5",
        "trading": "off",
        "fractional_shares": "yes",
        "principal": "2e5",
        "seed": "7",
    })
    assert cfg.families == ("KNN", "GNB")
    assert cfg.k_set == (2, 5)
    assert cfg.trading is False
    assert cfg.fractional_shares is True
    assert cfg.principal == 200000.0
    assert cfg.seed == 7
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"synthetic_securities": "S:300",
                                    "fee_schedule": "flat"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"synthetic_securities": "S:300",
                                    "seed": "many"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"synthetic_securities": "S:300",
                                    "trading": "maybe"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"synthetic_securities": "S:300",
                                    "k_set": "2, five"})


def test_config_validation_rules():
    with pytest.raises(ConfigError):
        _config(mode="hourly")
    with pytest.raises(ConfigError):
        _config(grid="everything")
    with pytest.raises(ConfigError):
        _config(families="HMM")
    with pytest.raises(ConfigError):
        _config(seed=-1)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"families": "GNB"})  # no securities at all


def test_run_id_identifies_the_science():
    a = _config(seed=1)
    assert a.run_id() == _config(seed=1).run_id()
    assert a.run_id() != _config(seed=2).run_id()
    assert a.run_id() != _config(seed=1, families="KNN").run_id()
    # parallelism and output root cannot change results
    assert a.run_id() == _config(seed=1, jobs=4).run_id()
    assert a.run_id() == _config(seed=1, out_dir="elsewhere").run_id()


def test_specs_default_and_full():
    cfg = _config(families="LOG, SVM, RF, KNN, GNB")
    assert len(cfg.specs()) == 5
    full = ExperimentConfig.from_dict({
        "synthetic_securities": "S:300", "families": "LOG, SVM, RF, KNN, GNB",
        "grid": "full"})
    assert len(full.specs()) == 12 + 18 + 5 + 7 + 1
    rf = [s for s in ExperimentConfig.from_dict(
        {"synthetic_securities": "S:300", "families": "RF", "seed": "9"}).specs()]
    assert all(s.seed == 9 for s in rf)


def test_modes_expansion():
    assert _config(mode="trend").modes() == ("trend",)
    assert _config(mode="both").modes() == ("trend", "continuous")


# ---------------------------------------------------------------------------
# security resolution


def test_resolve_synthetic_entries():
    cfg = _config(synthetic_securities="GOOD:300:5, BAD:nope, DUP:300, DUP:300")
    loaded, failures = resolve_securities(cfg)
    assert [t for t, _, _ in loaded] == ["GOOD", "DUP"]
    assert sorted(t for t, _ in failures) == ["BAD", "DUP"]
    ticker, series, quality = loaded[0]
    assert len(series.bars) == 300
    assert quality.clean


def test_resolve_missing_file_is_isolated(tmp_path):
    cfg = _config(securities="NOPE", data_dir=str(tmp_path),
                  synthetic_securities="OK:300")
    loaded, failures = resolve_securities(cfg)
    assert [t for t, _, _ in loaded] == ["OK"]
    assert failures[0][0] == "NOPE"


def test_resolve_csv_files_and_date_slice(tmp_path):
    series = synthetic_series("DISK", 400, seed=4)
    save_csv(series, tmp_path / "DISK.csv")
    first = str(series.bars[100].date)
    last = str(series.bars[299].date)
    cfg = _config(securities="DISK", data_dir=str(tmp_path),
                  synthetic_securities="", date_start=first, date_end=last)
    loaded, failures = resolve_securities(cfg)
    assert not failures
    _, sliced, _ = loaded[0]
    assert str(sliced.bars[0].date) == first
    assert str(sliced.bars[-1].date) == last
    assert len(sliced.bars) == 200


def test_universe_sampling_is_seeded(tmp_path):
    tickers = [f"U{i}" for i in range(8)]
    for i, t in enumerate(tickers):
        save_csv(synthetic_series(t, 300, seed=20 + i), tmp_path / f"{t}.csv")
    (tmp_path / "universe.txt").write_text("\n".join(tickers) + "\n")
    cfg = _config(universe_file=str(tmp_path / "universe.txt"), sample_size=3,
                  data_dir=str(tmp_path), synthetic_securities="", seed=5)
    loaded_a, _ = resolve_securities(cfg)
    loaded_b, _ = resolve_securities(cfg)
    picks_a = [t for t, _, _ in loaded_a]
    assert picks_a == [t for t, _, _ in loaded_b]
    assert len(picks_a) == 3
    other = _config(universe_file=str(tmp_path / "universe.txt"), sample_size=3,
                    data_dir=str(tmp_path), synthetic_securities="", seed=6)
    assert picks_a != [t for t, _, _ in resolve_securities(other)[0]]
    with pytest.raises(ConfigError):
        resolve_securities(_config(universe_file=str(tmp_path / "universe.txt"),
                                   sample_size=99, data_dir=str(tmp_path),
                                   synthetic_securities=""))


# ---------------------------------------------------------------------------
# aggregation


def _fake_result(family, label_spec, mode, alpha, trades, status="ok"):
    report = PortfolioReport(total_return=0.1, alpha=alpha, beta=1.0,
                             volatility=0.01, sharpe=0.5, sortino=0.7,
                             trade_count=trades)
    return {"ticker": "T", "mode": mode, "spec": label_spec, "status": status,
            "portfolio": None if alpha is None else report}


def test_select_best_spec_mean_alpha_and_ties():
    knn20 = ModelSpec("KNN", K=20)
    knn40 = ModelSpec("KNN", K=40)
    results = [
        _fake_result("KNN", knn20, "trend", 0.05, 10),
        _fake_result("KNN", knn20, "trend", 0.01, 10),   # mean 0.03
        _fake_result("KNN", knn40, "trend", 0.04, 2),
        _fake_result("KNN", knn40, "trend", 0.04, 2),    # mean 0.04 wins
    ]
    best = select_best_spec(results)
    assert best["KNN"]["spec"] == knn40
    assert abs(best["KNN"]["mean_alpha"] - 0.04) < 1e-15

    # equal mean alpha: fewer mean trades wins
    results = [
        _fake_result("KNN", knn20, "trend", 0.03, 30),
        _fake_result("KNN", knn40, "trend", 0.03, 4),
    ]
    assert select_best_spec(results)["KNN"]["spec"] == knn40

    # equal alpha and trades: lexicographic spec order (smaller K first)
    results = [
        _fake_result("KNN", knn40, "trend", 0.03, 5),
        _fake_result("KNN", knn20, "trend", 0.03, 5),
    ]
    assert select_best_spec(results)["KNN"]["spec"] == knn20

    # failed and alpha-less runs are ignored entirely
    results = [
        _fake_result("KNN", knn20, "trend", 0.5, 1, status="failed"),
        _fake_result("KNN", knn40, "trend", None, 1),
    ]
    assert "KNN" not in select_best_spec(results)


def test_family_averages_counts_failures():
    knn = ModelSpec("KNN", K=20)
    results = [
        _fake_result("KNN", knn, "trend", 0.02, 4),
        {"ticker": "T", "mode": "trend", "spec": knn, "status": "failed"},
    ]
    results[0]["prediction_log"] = type("L", (), {"accuracy": 0.5})()
    avg = _family_averages(results)
    assert avg["KNN"]["n_runs"] == 2
    assert avg["KNN"]["n_failed"] == 1
    assert avg["KNN"]["mean_accuracy"] == 0.5
    assert avg["KNN"]["mean_alpha"] == 0.02


def test_histogram_bins():
    rows = _histogram([0.5, 0.52, 0.54], width=0.02)
    occupied = [r for r in rows if r[2] > 0]
    assert len(occupied) == 3
    assert sum(r[2] for r in rows) == 3
    for left, right, _ in rows:
        assert abs(right - left - 0.02) < 1e-12
    assert _histogram([], 0.02) == []
    assert _histogram([None, None], 0.02) == []
    one = _histogram([0.31], 0.02)
    assert sum(r[2] for r in one) == 1


# ---------------------------------------------------------------------------
# end-to-end runs


@pytest.fixture(scope="module")
def run_once(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    cfg = ExperimentConfig.from_dict({
        "synthetic_securities": "HS1:320:11, HS2:320:12",
        "families": "KNN, GNB",
        "mode": "trend",
        "out_dir": str(out),
        "seed": "3",
    })
    master = run_experiment(cfg, stages=("ingest", "econ", "backtest"))
    return cfg, master


def test_experiment_artifact_tree(run_once):
    cfg, master = run_once
    run_dir = master.run_dir
    assert os.path.basename(run_dir) == f"run_{cfg.run_id()}"
    for rel in ("master_log.json", "result_log.csv", "ingest_report.json",
                "econ/econ_results.csv", "econ/econ_report.json"):
        assert os.path.exists(os.path.join(run_dir, rel)), rel
    # 2 securities x (KNN default + GNB) x 1 mode
    lines = open(os.path.join(run_dir, "result_log.csv")).read().strip().split("\n")
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 1 + 4
    preds = os.listdir(os.path.join(run_dir, "predictions"))
    trades = os.listdir(os.path.join(run_dir, "trades"))
    benches = os.listdir(os.path.join(run_dir, "benchmarks"))
    assert len(preds) == 4 and len(trades) == 4
    # one benchmark per (ticker, mode), shared across specs
    assert len(benches) == 2
    assert master.exit_code() == 0


def test_master_log_contents(run_once):
    cfg, master = run_once
    with open(os.path.join(master.run_dir, "master_log.json")) as fh:
        doc = json.load(fh)
    assert doc["run_id"] == cfg.run_id()
    assert doc["config"]["seed"] == 3
    assert len(doc["runs"]) == 4
    assert all(r["status"] == "ok" for r in doc["runs"])
    assert doc["econ"]["n_tested"] == 2
    assert set(doc["family_averages"]) == {"GNB", "KNN"}
    assert "meta" in doc and "elapsed_seconds" in doc["meta"]
    ok, failed = master.counts()
    assert failed == 0 and ok > 0


def test_experiment_is_deterministic(run_once, tmp_path):
    cfg, master = run_once
    cfg2 = ExperimentConfig.from_dict({
        "synthetic_securities": "HS1:320:11, HS2:320:12",
        "families": "KNN, GNB",
        "mode": "trend",
        "out_dir": str(tmp_path),
        "seed": "3",
    })
    master2 = run_experiment(cfg2, stages=("ingest", "econ", "backtest"))
    assert os.path.basename(master2.run_dir) == os.path.basename(master.run_dir)
    for rel in ("result_log.csv", "econ/econ_results.csv"):
        a = open(os.path.join(master.run_dir, rel), "rb").read()
        b = open(os.path.join(master2.run_dir, rel), "rb").read()
        assert a == b, rel
    for sub in ("predictions", "trades", "benchmarks"):
        names = sorted(os.listdir(os.path.join(master.run_dir, sub)))
        assert names == sorted(os.listdir(os.path.join(master2.run_dir, sub)))
        for name in names:
            a = open(os.path.join(master.run_dir, sub, name), "rb").read()
            b = open(os.path.join(master2.run_dir, sub, name), "rb").read()
            assert a == b, f"{sub}/{name}"


def test_parallel_schedule_does_not_change_results(run_once, tmp_path):
    cfg, master = run_once
    cfg_par = ExperimentConfig.from_dict({
        "synthetic_securities": "HS1:320:11, HS2:320:12",
        "families": "KNN, GNB",
        "mode": "trend",
        "out_dir": str(tmp_path),
        "seed": "3",
        "jobs": "2",
    })
    assert cfg_par.run_id() == cfg.run_id()
    master_par = run_experiment(cfg_par, stages=("ingest", "econ", "backtest"))
    a = open(os.path.join(master.run_dir, "result_log.csv"), "rb").read()
    b = open(os.path.join(master_par.run_dir, "result_log.csv"), "rb").read()
    assert a == b


def test_emit_report_standalone(run_once):
    _, master = run_once
    written = emit_report(master.run_dir)
    names = {os.path.basename(p) for p in written}
    assert "summary.txt" in names
    assert "accuracy_hist.csv" in names
    assert "adf_t_hist.csv" in names
    report_dir = os.path.join(master.run_dir, "report")
    equity = [n for n in os.listdir(report_dir) if n.startswith("equity_")]
    assert sorted(equity) == ["equity_HS1.csv", "equity_HS2.csv"]
    head = open(os.path.join(report_dir, equity[0])).readline().strip()
    assert head == "date,portfolio,benchmark"
    summary = open(os.path.join(report_dir, "summary.txt")).read()
    assert "KNN" in summary and "GNB" in summary


def test_emit_report_requires_run_dir(tmp_path):
    with pytest.raises(ConfigError):
        emit_report(str(tmp_path / "nowhere"))


def test_partial_failure_counts(tmp_path):
    cfg = _config(synthetic_securities="OK:320:1, BAD:nope",
                  out_dir=str(tmp_path))
    master = run_experiment(cfg, stages=("ingest", "backtest"))
    assert master.exit_code() == 1
    with open(os.path.join(master.run_dir, "master_log.json")) as fh:
        doc = json.load(fh)
    assert doc["ingest_failures"] and doc["ingest_failures"][0][0] == "BAD"


def test_total_failure_exit_code(tmp_path):
    cfg = _config(synthetic_securities="BAD:nope", out_dir=str(tmp_path))
    master = run_experiment(cfg, stages=("ingest", "backtest"))
    assert master.exit_code() == 2
