"""SVM training via sequential minimal optimization: KKT conditions, kernels,
kernel caching, and warm restarts."""

from __future__ import annotations

import numpy as np
import pytest

from emhlab.classifiers import ClassifierError, Dataset, ModelSpec, fit_model
from emhlab.classifiers.svm import (
    KernelCache,
    fit_svm,
    poly_kernel,
    rbf_kernel,
)

KKT_TOL = 1e-3


def kkt_violations(model) -> tuple[float, float, int]:
    """Return (max box excess, |sum alpha_i y_i|, count of KKT-margin breaches).

    At a solution of the soft-margin dual every multiplier lies in [0, C],
    the equality constraint sum alpha_i y_i = 0 holds, and each point
    satisfies the margin condition matching its multiplier:
      alpha = 0  ->  y f(x) >= 1 - tol
      0 < alpha < C  ->  |y f(x) - 1| <= tol
      alpha = C  ->  y f(x) <= 1 + tol
    """
    a, y, C = model.alpha, model.y_pm, model.C
    box = max(float(np.max(-a, initial=0.0)), float(np.max(a - C, initial=0.0)))
    eq = abs(float(a @ y))
    yf = y * model.decision_function(model.X)
    lower = a <= KKT_TOL * C
    upper = a >= (1 - KKT_TOL) * C
    middle = ~(lower | upper)
    bad = int(np.sum(lower & (yf < 1 - KKT_TOL)))
    bad += int(np.sum(middle & (np.abs(yf - 1) > KKT_TOL)))
    bad += int(np.sum(upper & (yf > 1 + KKT_TOL)))
    return box, eq, bad


def test_rbf_kernel_against_direct_formula(rng):
    A = rng.normal(size=(6, 3))
    B = rng.normal(size=(4, 3))
    K = rbf_kernel(A, B, gamma=0.7)
    for i in range(6):
        for j in range(4):
            want = np.exp(-0.7 * float(np.sum((A[i] - B[j]) ** 2)))
            assert abs(K[i, j] - want) < 1e-12
    # self-similarity is one up to the norm-expansion rounding
    np.testing.assert_allclose(np.diag(rbf_kernel(A, A, 0.7)), 1.0,
                               rtol=0, atol=1e-12)


def test_poly_kernel_against_direct_formula(rng):
    A = rng.normal(size=(5, 3))
    B = rng.normal(size=(3, 3))
    for degree in (1, 2, 3):
        K = poly_kernel(A, B, degree)
        for i in range(5):
            for j in range(3):
                want = float(A[i] @ B[j]) ** degree
                assert abs(K[i, j] - want) < 1e-10


@pytest.mark.parametrize("kernel,kw", [
    ("rbf", {"gamma": "auto"}),
    ("rbf", {"gamma": 1.0}),
    # degree 3 preserves sign symmetry; an even degree maps x and -x to the
    # same feature vector and cannot separate mirrored blobs
    ("poly", {"degree": 3}),
])
def test_kkt_conditions_hold_at_solution(rng, kernel, kw, blob_data):
    X, y = blob_data
    for C in (0.5, 5.0):
        model = fit_svm(Dataset(X, y), kernel, C, **kw)
        assert model.converged
        box, eq, bad = kkt_violations(model)
        assert box <= 1e-12
        assert eq <= 1e-9
        assert bad == 0


def test_separable_blobs_classified_perfectly(blob_data):
    X, y = blob_data
    model = fit_svm(Dataset(X, y), "rbf", 5.0, gamma="auto")
    assert np.array_equal(model.predict(X), y)


def test_gamma_auto_uses_feature_count(blob_data):
    X, y = blob_data
    model = fit_svm(Dataset(X, y), "rbf", 1.0, gamma="auto")
    assert model.kernel_param == 1.0 / X.shape[1]


def test_kernel_cache_grow_matches_full_recompute(rng):
    X = rng.normal(size=(30, 4))
    cache = KernelCache("rbf", 0.5, capacity=4)
    K1 = cache.grow(X[:10]).copy()
    K2 = cache.grow(X[:25]).copy()
    K3 = cache.grow(X).copy()
    # the first block is computed in one shot and matches bitwise
    np.testing.assert_array_equal(K1, rbf_kernel(X[:10], X[:10], 0.5))
    # grown blocks mirror the transpose, so the cache is exactly symmetric
    # even where a one-shot GEMM would not be
    np.testing.assert_array_equal(K2, K2.T)
    np.testing.assert_array_equal(K3, K3.T)
    np.testing.assert_allclose(K2, rbf_kernel(X[:25], X[:25], 0.5),
                               rtol=0, atol=1e-13)
    np.testing.assert_allclose(K3, rbf_kernel(X, X, 0.5), rtol=0, atol=1e-13)
    # growth preserves previously computed entries
    np.testing.assert_array_equal(K3[:10, :10], K1)


def test_warm_restart_gives_same_answer_in_fewer_steps(rng):
    X = rng.normal(size=(80, 4))
    y = (X[:, 0] + X[:, 1] > 0).astype(np.int8)
    day1 = Dataset(X[:60], y[:60])
    day2 = Dataset(X, y)
    cold_prev = fit_svm(day1, "rbf", 1.0, gamma=1.0)
    warm = fit_svm(day2, "rbf", 1.0, gamma=1.0, warm=cold_prev)
    cold = fit_svm(day2, "rbf", 1.0, gamma=1.0)
    assert warm.steps <= cold.steps
    assert np.array_equal(warm.predict(X), cold.predict(X))
    box, eq, bad = kkt_violations(warm)
    assert box <= 1e-12 and eq <= 1e-9 and bad == 0


def test_warm_state_rejected_when_prefix_changed(rng):
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] > 0).astype(np.int8)
    prev = fit_svm(Dataset(X[:30], y[:30]), "rbf", 1.0, gamma=1.0)
    X_mut = X.copy()
    X_mut[5, 0] += 1.0
    warm = fit_svm(Dataset(X_mut, y), "rbf", 1.0, gamma=1.0, warm=prev)
    cold = fit_svm(Dataset(X_mut, y), "rbf", 1.0, gamma=1.0)
    # A changed prefix must invalidate the cached state entirely.
    assert warm.steps == cold.steps
    np.testing.assert_array_equal(warm.alpha, cold.alpha)
    assert warm.b == cold.b


def test_warm_state_rejected_on_parameter_change(rng):
    X = rng.normal(size=(30, 3))
    y = (X[:, 0] > 0).astype(np.int8)
    prev = fit_svm(Dataset(X[:20], y[:20]), "rbf", 1.0, gamma=1.0)
    for kw in ({"gamma": 2.0}, {}):
        kwargs = {"gamma": 1.0}
        kwargs.update(kw)
        C = 5.0 if kw == {} else 1.0
        warm = fit_svm(Dataset(X, y), "rbf", C, warm=prev, **kwargs)
        cold = fit_svm(Dataset(X, y), "rbf", C, **kwargs)
        np.testing.assert_array_equal(warm.alpha, cold.alpha)


def test_invalid_arguments_raise():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    with pytest.raises(ClassifierError):
        fit_svm(Dataset(X, y), "sigmoid", 1.0)
    with pytest.raises(ClassifierError):
        fit_svm(Dataset(X, y), "rbf", -1.0, gamma=1.0)
    with pytest.raises(ClassifierError):
        fit_svm(Dataset(X, y), "rbf", 1.0, gamma=-2.0)
    with pytest.raises(ClassifierError):
        fit_svm(Dataset(np.zeros((3, 1)), np.array([1, 1, 1])), "rbf", 1.0)


def test_dispatch_reaches_svm(blob_data):
    X, y = blob_data
    spec = ModelSpec("SVM", kernel="poly", degree=2, C=1.0)
    model = fit_model(spec, Dataset(X, y))
    assert model.kernel == "poly" and model.kernel_param == 2.0
