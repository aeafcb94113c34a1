"""Nearest-neighbour and Gaussian naive Bayes classifiers against
brute-force and hand-computed oracles."""

from __future__ import annotations

import math

import numpy as np
import pytest

from emhlab.classifiers import ClassifierError, Dataset, ModelSpec, fit_model
from emhlab.classifiers.gnb import fit_gnb
from emhlab.classifiers.knn import fit_knn, predict_knn, squared_distances


def brute_force_knn(X, y, K, query):
    """Exhaustive scan: per-query python loop, stable sort, lowest-index
    tie-break, majority vote with exact ties counted as up."""
    preds = []
    for q in query:
        dist = [(float(np.sum((q - X[i]) ** 2)), i) for i in range(len(X))]
        dist.sort(key=lambda t: (t[0], t[1]))
        votes = sum(int(y[i]) for _, i in dist[:K])
        preds.append(1 if 2 * votes >= K else 0)
    return np.array(preds, dtype=np.int8)


def test_knn_matches_exhaustive_scan(rng):
    X = rng.normal(size=(60, 4))
    y = (rng.random(60) < 0.5).astype(np.int8)
    Q = rng.normal(size=(25, 4))
    for K in (1, 7, 20):
        got = predict_knn(Dataset(X, y), K, Q)
        np.testing.assert_array_equal(got, brute_force_knn(X, y, K, Q))


def test_knn_with_duplicate_rows_and_ties(rng):
    # duplicated rows force exact zero distances and index tie-breaks
    base = rng.normal(size=(10, 3))
    X = np.vstack([base, base, base])
    y = np.array([0] * 10 + [1] * 10 + [0] * 10, dtype=np.int8)
    Q = base[:5] + 0.0
    for K in (2, 3, 6):
        got = predict_knn(Dataset(X, y), K, Q)
        np.testing.assert_array_equal(got, brute_force_knn(X, y, K, Q))


def test_knn_self_distance_is_exact_zero(rng):
    X = rng.normal(size=(8, 5)) * 1e3
    d = squared_distances(X, X)
    assert np.all(np.diag(d) == 0.0)


def test_knn_even_k_tie_votes_up():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    y = np.array([0, 0, 1, 1], dtype=np.int8)
    # query at the midpoint sees two of each class with K=4
    got = predict_knn(Dataset(X, y), 4, np.array([[0.5]]))
    assert got.tolist() == [1]


def test_knn_k_bounds(rng):
    X = rng.normal(size=(5, 2))
    y = np.array([0, 1, 0, 1, 0])
    with pytest.raises(ClassifierError):
        fit_knn(Dataset(X, y), 0)
    with pytest.raises(ClassifierError):
        fit_knn(Dataset(X, y), 6)
    fit_knn(Dataset(X, y), 5)


def test_knn_kneighbors_ordering(rng):
    X = np.array([[0.0], [2.0], [1.0], [3.0]])
    y = np.array([0, 1, 0, 1])
    model = fit_knn(Dataset(X, y), 3)
    idx = model.kneighbors(np.array([[0.9]]))
    assert idx[0].tolist() == [2, 0, 1]


def _gauss_logpdf(x, mu, var):
    return -0.5 * math.log(2 * math.pi * var) - (x - mu) ** 2 / (2 * var)


def test_gnb_against_hand_computed_posteriors():
    # class 0 drawn around -1 and 1, class 1 around 1 and 3 in one feature;
    # moments and posteriors are then simple closed forms
    X = np.array([[-1.0], [1.0], [1.0], [3.0]])
    y = np.array([0, 0, 1, 1], dtype=np.int8)
    model = fit_gnb(Dataset(X, y))
    # population moments: mean 0 var 1 for class 0, mean 2 var 1 for class 1
    np.testing.assert_allclose(model.mean[0], [0.0], atol=1e-15)
    np.testing.assert_allclose(model.mean[1], [2.0], atol=1e-15)
    np.testing.assert_allclose(model.var[0], [1.0], atol=1e-15)
    np.testing.assert_allclose(model.var[1], [1.0], atol=1e-15)
    np.testing.assert_allclose(np.exp(model.log_priors), [0.5, 0.5], atol=1e-15)

    for q in (-2.0, 0.0, 0.5, 1.0, 1.5, 4.0):
        j0 = math.log(0.5) + _gauss_logpdf(q, 0.0, 1.0)
        j1 = math.log(0.5) + _gauss_logpdf(q, 2.0, 1.0)
        z = max(j0, j1)
        p1 = math.exp(j1 - z) / (math.exp(j0 - z) + math.exp(j1 - z))
        got = model.posterior(np.array([[q]]))
        assert abs(got[0, 1] - p1) < 1e-9
        assert abs(got[0, 0] + got[0, 1] - 1.0) < 1e-12
    # the symmetric midpoint is an exact tie and votes up
    assert model.predict(np.array([[1.0]])).tolist() == [1]
    assert model.predict(np.array([[0.9]])).tolist() == [0]
    assert model.predict(np.array([[1.1]])).tolist() == [1]


def test_gnb_multifeature_matches_log_space_oracle(rng):
    X = rng.normal(size=(50, 3)) + np.where(rng.random((50, 1)) < 0.5, 0.0, 1.5)
    y = (rng.random(50) < 0.6).astype(np.int8)
    model = fit_gnb(Dataset(X, y))
    Q = rng.normal(size=(10, 3))
    jll = model.joint_log_likelihood(Q)
    for qi in range(10):
        for c in (0, 1):
            want = float(model.log_priors[c])
            for j in range(3):
                want += _gauss_logpdf(Q[qi, j], model.mean[c, j], model.var[c, j])
            assert abs(jll[qi, c] - want) < 1e-9


def test_gnb_unbalanced_priors(rng):
    X = rng.normal(size=(10, 2))
    y = np.array([1, 1, 1, 1, 1, 1, 1, 0, 0, 0], dtype=np.int8)
    model = fit_gnb(Dataset(X, y))
    np.testing.assert_allclose(np.exp(model.log_priors), [0.3, 0.7], atol=1e-15)


def test_gnb_constant_feature_is_floored(rng):
    X = np.column_stack([rng.normal(size=20), np.full(20, 3.0)])
    y = (rng.random(20) < 0.5).astype(np.int8)
    model = fit_gnb(Dataset(X, y))
    assert np.all(model.var > 0.0)
    p = model.posterior(X)
    assert np.all(np.isfinite(p))


def test_gnb_requires_both_classes(rng):
    X = rng.normal(size=(6, 2))
    with pytest.raises(ClassifierError):
        fit_gnb(Dataset(X, np.ones(6)))


def test_dispatch_reaches_knn_and_gnb(blob_data):
    X, y = blob_data
    knn = fit_model(ModelSpec("KNN", K=20), Dataset(X, y))
    assert knn.K == 20
    gnb = fit_model(ModelSpec("GNB"), Dataset(X, y))
    assert gnb.mean.shape == (2, X.shape[1])
    # both separate the blobs
    assert np.array_equal(knn.predict(X), y)
    assert np.array_equal(gnb.predict(X), y)
