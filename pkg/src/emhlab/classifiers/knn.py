"""K-nearest-neighbours vote on squared Euclidean distance.

Distances are computed elementwise as sum((q - x)^2) rather than via the
expanded dot-product identity, so identical rows get a distance of
exactly zero and distance ties are exact.  Neighbour order on ties is
earlier-training-row-first (stable argsort), the vote is unweighted, and
an even split classifies as class 1 (up).  K must not exceed the number
of training rows; that is checked at fit time so a walk-forward run
fails fast on the first day rather than at predict time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import ClassifierError, Dataset, ModelSpec


def squared_distances(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    """(q, n) matrix of exact elementwise squared distances."""
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    diff = Q[:, None, :] - X[None, :, :]
    return np.einsum("qnd,qnd->qn", diff, diff)


@dataclass
class KnnModel:
    spec: Optional[ModelSpec]
    X: np.ndarray
    y: np.ndarray
    K: int
    flag: Optional[str] = None
    classes: tuple = (0, 1)

    def kneighbors(self, Q: np.ndarray) -> np.ndarray:
        """(q, K) neighbour row indices, nearest first, ties by row order."""
        d2 = squared_distances(Q, self.X)
        order = np.argsort(d2, axis=1, kind="stable")
        return order[:, : self.K]

    def predict(self, Q: np.ndarray) -> np.ndarray:
        idx = self.kneighbors(Q)
        votes = self.y[idx].astype(np.int64).sum(axis=1)
        return (2 * votes >= self.K).astype(np.int8)

    def summary(self) -> dict:
        return {"family": "KNN", "K": self.K, "train_rows": self.X.shape[0]}


def fit_knn(data: Dataset, K: int, spec: Optional[ModelSpec] = None) -> KnnModel:
    if K < 1:
        raise ClassifierError(f"K must be >= 1, got {K!r}")
    if K > data.n:
        raise ClassifierError(f"K={K} exceeds {data.n} training rows")
    return KnnModel(spec=spec, X=data.X, y=data.y, K=int(K))


def predict_knn(train: Dataset, K: int, query: np.ndarray) -> np.ndarray:
    """One-shot convenience wrapper around fit + predict."""
    return fit_knn(train, K).predict(query)
