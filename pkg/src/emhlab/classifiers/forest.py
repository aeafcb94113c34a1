"""Random forest of Gini-grown CART trees with majority vote.

Each tree draws a bootstrap sample (with replacement, same size as the
training set) and grows unpruned with a fresh feature subsample of size
ceil(sqrt(d)) at every node.  Tree growth runs in the compiled kernel
when available and in the numpy fallback otherwise; both produce
bit-identical trees for the same seed.  Per-tree randomness is derived
from ``SeedSequence((seed, tree_index))`` so the forest is reproducible
regardless of how many trees run or in what order.  Vote ties go to
class 1 (up).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import backends
from .base import ClassifierError, Dataset, ModelSpec


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            inner = np.nonzero(f >= 0)[0]
            if inner.size == 0:
                break
            at = node[inner]
            go_left = X[inner, f[inner]] <= self.threshold[at]
            node[inner] = np.where(go_left, self.left[at], self.right[at])
        return self.value[node]


@dataclass
class ForestModel:
    spec: Optional[ModelSpec]
    trees: list
    n_features: int
    max_features: int
    flag: Optional[str] = None
    classes: tuple = field(default=(0, 1))

    def vote_counts(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        votes = np.zeros(X.shape[0], dtype=np.int64)
        for tree in self.trees:
            votes += tree.predict(X).astype(np.int64)
        return votes

    def predict(self, X: np.ndarray) -> np.ndarray:
        votes = self.vote_counts(X)
        # ties (possible only for even forests) go to class 1
        return (2 * votes >= len(self.trees)).astype(np.int8)

    def summary(self) -> dict:
        return {
            "family": "RF",
            "trees": len(self.trees),
            "max_features": self.max_features,
            "total_nodes": int(sum(t.n_nodes for t in self.trees)),
        }


def fit_random_forest(data: Dataset, trees: int, seed: int = 0,
                      max_features: Optional[int] = None, min_leaf: int = 1,
                      spec: Optional[ModelSpec] = None) -> ForestModel:
    if trees < 1:
        raise ClassifierError(f"trees must be >= 1, got {trees!r}")
    if seed < 0:
        raise ClassifierError(f"seed must be non-negative, got {seed!r}")
    n, d = data.X.shape
    mf = max_features if max_features is not None else math.ceil(math.sqrt(d))
    mf = max(1, min(int(mf), d))
    XT = np.ascontiguousarray(data.X.T)
    y = data.y

    grown = []
    for i in range(int(trees)):
        boot_ss, node_ss = np.random.SeedSequence((int(seed), i)).spawn(2)
        idx = np.random.default_rng(boot_ss).integers(0, n, size=n, dtype=np.int64)
        node_seed = int(node_ss.generate_state(1, np.uint64)[0])
        arrays = backends.grow_tree(XT, y, idx, mf, node_seed, int(min_leaf))
        grown.append(Tree(*arrays))

    return ForestModel(spec=spec, trees=grown, n_features=d, max_features=mf)
