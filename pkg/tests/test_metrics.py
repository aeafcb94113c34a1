"""Confusion-matrix ratios and portfolio statistics against exact
rational-arithmetic oracles and algebraic invariants."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from emhlab.metrics import (
    ClassificationReport,
    ConfusionMatrix,
    MetricsError,
    classification_report,
    daily_returns,
    portfolio_report,
)

PAIRS = (("tpr", "fpr"), ("tnr", "fnr"), ("ppv", "fdr"), ("npv", "for_"))


def test_negative_counts_rejected():
    with pytest.raises(MetricsError):
        ConfusionMatrix(tp=-1, fp=0, fn=0, tn=0)
    with pytest.raises(MetricsError):
        classification_report(ConfusionMatrix(0, 0, 0, 0))


def test_hand_worked_matrix():
    cm = ConfusionMatrix(tp=50, fp=10, fn=5, tn=35)
    rep = classification_report(cm)
    assert rep.tpr == 50 / 60
    assert rep.fpr == 1.0 - 50 / 60
    assert rep.tnr == 35 / 40
    assert rep.fnr == 1.0 - 35 / 40
    assert rep.ppv == 50 / 55
    assert rep.fdr == 1.0 - 50 / 55
    assert rep.npv == 35 / 45
    assert rep.for_ == 1.0 - 35 / 45
    assert rep.accuracy == 85 / 100
    assert rep.f1 == 100 / 115
    assert cm.total == 100


def test_pair_sums_exactly_one_on_random_matrices(rng):
    checked = 0
    for _ in range(300):
        tp, fp, fn, tn = (int(v) for v in rng.integers(0, 60, size=4))
        cm = ConfusionMatrix(tp, fp, fn, tn)
        if cm.total == 0:
            continue
        rep = classification_report(cm)
        for a, b in PAIRS:
            va, vb = getattr(rep, a), getattr(rep, b)
            assert (va is None) == (vb is None)
            if va is not None:
                assert va + vb == 1.0  # exact, not approximate
                checked += 1
    assert checked > 500


def test_accuracy_and_f1_match_rational_arithmetic(rng):
    for _ in range(200):
        tp, fp, fn, tn = (int(v) for v in rng.integers(0, 40, size=4))
        cm = ConfusionMatrix(tp, fp, fn, tn)
        if cm.total == 0:
            continue
        rep = classification_report(cm)
        acc = Fraction(tp + tn, cm.total)
        assert abs(rep.accuracy - float(acc)) < 1e-15
        if 2 * tp + fp + fn > 0:
            f1 = Fraction(2 * tp, 2 * tp + fp + fn)
            assert abs(rep.f1 - float(f1)) < 1e-15
        else:
            assert rep.f1 is None


def test_undefined_ratios_are_none():
    # no negative predictions: tn + fn = 0
    rep = classification_report(ConfusionMatrix(tp=3, fp=2, fn=0, tn=0))
    assert rep.tnr is None and rep.fnr is None
    assert rep.tpr == 0.6
    # everything true negative: F1 undefined, accuracy perfect
    rep = classification_report(ConfusionMatrix(tp=0, fp=0, fn=0, tn=9))
    assert rep.f1 is None
    assert rep.accuracy == 1.0
    assert rep.tpr is None and rep.ppv is None


def test_as_dict_uses_plain_for_key():
    rep = classification_report(ConfusionMatrix(1, 1, 1, 1))
    d = rep.as_dict()
    assert "for" in d and "for_" not in d
    assert set(d) == {"tpr", "fnr", "tnr", "fpr", "ppv", "fdr", "npv", "for",
                      "accuracy", "f1"}


def test_daily_returns_values_and_errors():
    np.testing.assert_allclose(
        daily_returns(np.array([100.0, 110.0, 99.0])),
        [0.1, -0.1], rtol=1e-15)
    with pytest.raises(MetricsError):
        daily_returns(np.array([100.0]))
    with pytest.raises(MetricsError):
        daily_returns(np.array([0.0, 1.0]))


def _track(returns, principal=100_000.0):
    return principal * np.cumprod(np.concatenate([[1.0], 1.0 + np.asarray(returns)]))


def test_beta_of_identical_tracks_is_one(rng):
    r = rng.normal(0.0005, 0.01, size=60)
    v = _track(r)
    rep = portfolio_report(v, v, rf_daily=0.0001)
    assert rep.beta == 1.0
    assert rep.alpha == 0.0
    assert rep.total_return == float(v[-1] / v[0] - 1.0)


def test_beta_against_rational_oracle(rng):
    vp = _track([0.10, -0.10, 0.055, -0.01])
    vm = _track([0.05, -0.02, 0.03, 0.01])
    rep = portfolio_report(vp, vm, rf_daily=0.0)
    rp = [Fraction(float(a)) / Fraction(float(b)) - 1
          for a, b in zip(vp[1:], vp[:-1])]
    rm = [Fraction(float(a)) / Fraction(float(b)) - 1
          for a, b in zip(vm[1:], vm[:-1])]
    n = len(rp)
    mp = sum(rp) / n
    mm = sum(rm) / n
    cov = sum((a - mp) * (b - mm) for a, b in zip(rp, rm)) / n
    var = sum((b - mm) ** 2 for b in rm) / n
    beta = cov / var
    alpha = sum(rp) - beta * sum(rm)
    assert abs(rep.beta - float(beta)) < 1e-12
    assert abs(rep.alpha - float(alpha)) < 1e-12


def test_leveraged_track_has_matching_beta(rng):
    rm = rng.normal(0.0, 0.01, size=500)
    rp = 1.7 * rm + 0.0002 * rng.normal(size=500) * 0.0
    rep = portfolio_report(_track(rp), _track(rm), rf_daily=0.0)
    assert abs(rep.beta - 1.7) < 1e-6


def test_alpha_shifts_by_c_times_n(rng):
    rm = rng.normal(0.0, 0.01, size=100)
    rp = 0.8 * rm + rng.normal(0.0, 0.002, size=100)
    base = portfolio_report(_track(rp), _track(rm), rf_daily=0.0001)
    c = 0.0003
    shifted = portfolio_report(_track(rp + c), _track(rm), rf_daily=0.0001)
    # same benchmark, near-identical beta, alpha moves by about c*N
    assert abs(shifted.alpha - base.alpha - c * 100) < 5e-4 * abs(c * 100) + 1e-7


def test_sharpe_sortino_invariant_under_principal_rescale(rng):
    r = rng.normal(0.0002, 0.012, size=80)
    m = rng.normal(0.0001, 0.01, size=80)
    a = portfolio_report(_track(r, 100_000.0), _track(m, 100_000.0), 1e-4)
    b = portfolio_report(_track(r, 200_000.0), _track(m, 200_000.0), 1e-4)
    assert a.sharpe == b.sharpe
    assert a.sortino == b.sortino
    assert a.volatility == b.volatility
    assert a.beta == b.beta


def test_sortino_uses_full_day_count():
    # two of four returns fall below the daily rate; the denominator still
    # divides by all four days
    rp = np.array([0.02, -0.01, 0.03, -0.02])
    rf = 0.0
    rep = portfolio_report(_track(rp), _track(rp * 0.5 + 0.001), rf_daily=rf)
    down = np.array([-0.01, -0.02])
    # recovered returns differ from rp only by float rounding
    want = (np.mean(rp) - rf) / math.sqrt(float(down @ down) / 4)
    assert abs(rep.sortino - want) < 1e-9


def test_flat_benchmark_leaves_beta_alpha_undefined():
    flat = np.full(30, 50_000.0)
    rep = portfolio_report(_track(np.full(29, 0.001)), flat, rf_daily=0.0)
    assert rep.beta is None and rep.alpha is None
    assert rep.volatility >= 0.0


def test_flat_portfolio_leaves_sharpe_sortino_undefined(rng):
    flat = np.full(30, 100_000.0)
    bench = _track(rng.normal(0, 0.01, 29))
    rep = portfolio_report(flat, bench, rf_daily=0.0)
    assert rep.sharpe is None
    assert rep.sortino is None
    assert rep.volatility == 0.0
    assert rep.total_return == 0.0


def test_annualization_scales(rng):
    r = rng.normal(0.0003, 0.01, size=120)
    m = rng.normal(0.0002, 0.009, size=120)
    day = portfolio_report(_track(r), _track(m), 1e-4, trade_count=7)
    ann = portfolio_report(_track(r), _track(m), 1e-4, trade_count=7,
                           annualize=True)
    root = math.sqrt(252.0)
    assert abs(ann.volatility - day.volatility * root) < 1e-15
    assert abs(ann.sharpe - day.sharpe * root) < 1e-15
    assert abs(ann.sortino - day.sortino * root) < 1e-15
    assert abs(ann.alpha - day.alpha * 252.0 / 120.0) < 1e-15
    assert ann.beta == day.beta
    assert ann.trade_count == day.trade_count == 7


def test_track_length_mismatch_raises(rng):
    with pytest.raises(MetricsError):
        portfolio_report(_track(rng.normal(0, 0.01, 10)),
                         _track(rng.normal(0, 0.01, 11)), 0.0)


def test_portfolio_as_dict_keys():
    rep = portfolio_report(_track([0.01, 0.02]), _track([0.02, 0.01]), 0.0)
    assert set(rep.as_dict()) == {"total_return", "alpha", "beta", "volatility",
                                  "sharpe", "sortino", "trade_count"}
