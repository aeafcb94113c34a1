"""Shared fixtures: deterministic synthetic market data and small tables."""

from __future__ import annotations

import numpy as np
import pytest

from emhlab.data import synthetic_series
from emhlab.indicators import build_feature_table


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def series_400():
    return synthetic_series("FIX400", 400, seed=5)


@pytest.fixture(scope="session")
def series_900():
    return synthetic_series("FIX900", 900, seed=9)


@pytest.fixture(scope="session")
def trend_table_400(series_400):
    return build_feature_table(series_400, "trend")


@pytest.fixture(scope="session")
def continuous_table_400(series_400):
    return build_feature_table(series_400, "continuous")


@pytest.fixture
def blob_data(rng):
    """Linearly separable two-class points, shuffled."""
    X = np.vstack([rng.normal(-2.0, 1.0, (60, 4)), rng.normal(2.0, 1.0, (60, 4))])
    y = np.r_[np.zeros(60), np.ones(60)].astype(int)
    order = rng.permutation(120)
    return X[order], y[order]
