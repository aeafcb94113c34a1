"""Gaussian naive Bayes with per-class diagonal variances.

Class priors are empirical frequencies; each feature gets a class-
conditional normal with the population (ddof 0) mean and variance.  All
variances receive an additive floor of 1e-9 times the largest overall
feature variance (or 1e-9 outright when every feature is constant) so
zero-variance features cannot produce infinite densities.  Scoring is
done in log space and equal posteriors classify as class 1 (up).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import ClassifierError, Dataset, ModelSpec

VAR_FLOOR_RATIO = 1e-9


@dataclass
class GnbModel:
    spec: Optional[ModelSpec]
    log_priors: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    flag: Optional[str] = None
    classes: tuple = (0, 1)

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty((X.shape[0], 2), dtype=np.float64)
        for c in (0, 1):
            dev = X - self.mean[c]
            out[:, c] = self.log_priors[c] - 0.5 * np.sum(
                np.log(2.0 * np.pi * self.var[c]) + dev * dev / self.var[c], axis=1
            )
        return out

    def posterior(self, X: np.ndarray) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        jll = jll - jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X: np.ndarray) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return (jll[:, 1] >= jll[:, 0]).astype(np.int8)

    def summary(self) -> dict:
        return {
            "family": "GNB",
            "prior_up": float(np.exp(self.log_priors[1])),
            "min_variance": float(self.var.min()),
        }


def fit_gnb(data: Dataset, spec: Optional[ModelSpec] = None) -> GnbModel:
    X, y = data.X, data.y
    counts = np.array([(y == 0).sum(), (y == 1).sum()], dtype=np.int64)
    if (counts == 0).any():
        raise ClassifierError("GNB training requires both classes")

    overall_var = X.var(axis=0)
    top = float(overall_var.max()) if overall_var.size else 0.0
    floor = VAR_FLOOR_RATIO * top if top > 0.0 else VAR_FLOOR_RATIO

    mean = np.empty((2, X.shape[1]), dtype=np.float64)
    var = np.empty((2, X.shape[1]), dtype=np.float64)
    for c in (0, 1):
        rows = X[y == c]
        mean[c] = rows.mean(axis=0)
        var[c] = rows.var(axis=0) + floor

    log_priors = np.log(counts / counts.sum())
    return GnbModel(spec=spec, log_priors=log_priors, mean=mean, var=var)
