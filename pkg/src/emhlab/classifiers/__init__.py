"""Five from-scratch daily-direction classifiers behind one interface.

Families: penalized logistic regression (LOG), kernel SVM via SMO (SVM),
random forest (RF), K-nearest neighbours (KNN), and Gaussian naive Bayes
(GNB).  :func:`fit_model` dispatches a :class:`ModelSpec` to the right
trainer and handles the degenerate single-class training set by
returning a :class:`ConstantModel` that always predicts the only class
seen.  Every fitted model exposes ``predict`` (0 = down, 1 = up),
``spec``, ``flag`` and ``summary()``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import (
    DEFAULT_SPECS,
    FAMILIES,
    KNN_K,
    LOG_C,
    LOG_PENALTIES,
    RF_TREES,
    SVM_C,
    SVM_DEGREE,
    SVM_GAMMA,
    ClassifierError,
    Dataset,
    ModelSpec,
    enumerate_grid,
)
from .forest import ForestModel, Tree, fit_random_forest
from .gnb import GnbModel, fit_gnb
from .knn import KnnModel, fit_knn, predict_knn
from .logistic import LogisticModel, fit_logistic, smooth_grad, smooth_loss
from .scaling import Scaler
from .svm import KernelCache, SvmModel, fit_svm, poly_kernel, rbf_kernel

__all__ = [
    "ClassifierError", "Dataset", "ModelSpec", "ConstantModel",
    "enumerate_grid", "fit_model", "DEFAULT_SPECS", "FAMILIES",
    "LOG_PENALTIES", "LOG_C", "SVM_C", "SVM_GAMMA", "SVM_DEGREE",
    "RF_TREES", "KNN_K",
    "Scaler",
    "LogisticModel", "fit_logistic", "smooth_loss", "smooth_grad",
    "SvmModel", "fit_svm", "rbf_kernel", "poly_kernel", "KernelCache",
    "ForestModel", "Tree", "fit_random_forest",
    "GnbModel", "fit_gnb",
    "KnnModel", "fit_knn", "predict_knn",
]


@dataclass
class ConstantModel:
    """Stand-in fitted on a single-class training set; predicts that class."""

    spec: Optional[ModelSpec]
    label: int
    flag: str = "single_class"

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.full(X.shape[0], self.label, dtype=np.int8)

    def summary(self) -> dict:
        return {"family": "CONST", "label": self.label}


def fit_model(spec: ModelSpec, data: Dataset, warm=None):
    """Train one model described by ``spec`` on ``data``.

    ``warm`` may be the model fitted on a prefix of the same training
    rows; LOG reuses its weights as the starting iterate and SVM reuses
    its multipliers and kernel cache.  Other families ignore it.
    Single-class training data yields a :class:`ConstantModel` for the
    families whose objective is undefined without both classes (LOG,
    SVM, GNB); RF and KNN handle it natively.
    """
    spec.validate()
    single = len(np.unique(data.y)) < 2

    if spec.family == "LOG":
        if single:
            return ConstantModel(spec, int(data.y[0]))
        w0 = b0 = None
        if isinstance(warm, LogisticModel) and warm.w.shape == (data.d,):
            w0, b0 = warm.w, warm.b
        return fit_logistic(data, spec.penalty, spec.C, spec=spec,
                            w0=w0, b0=b0 if b0 is not None else 0.0)
    if spec.family == "SVM":
        if single:
            return ConstantModel(spec, int(data.y[0]))
        return fit_svm(data, spec.kernel, spec.C, gamma=spec.gamma,
                       degree=spec.degree, spec=spec,
                       warm=warm if isinstance(warm, SvmModel) else None)
    if spec.family == "RF":
        return fit_random_forest(data, spec.trees, seed=spec.seed, spec=spec)
    if spec.family == "KNN":
        return fit_knn(data, spec.K, spec=spec)
    if spec.family == "GNB":
        if single:
            return ConstantModel(spec, int(data.y[0]))
        return fit_gnb(data, spec=spec)
    raise ClassifierError(f"unknown family {spec.family!r}")
