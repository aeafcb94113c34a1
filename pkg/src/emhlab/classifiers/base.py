"""Shared classifier types: datasets, model specifications, and the grid.

Every family consumes a ``Dataset`` (rows = days, columns = the ten
indicators, labels 0 = down / 1 = up) and is addressed by a ``ModelSpec``
naming the family and only the hyperparameters that family uses.
``enumerate_grid`` produces the full search grid; ``ModelSpec.validate``
checks shape and positivity but deliberately not grid membership, so
off-grid values remain usable for experiments and tests.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

FAMILIES = ("LOG", "SVM", "RF", "KNN", "GNB")

LOG_PENALTIES = ("l1", "l2")
LOG_C = (0.01, 1.0, 5.0, 10.0, 50.0, 100.0)
SVM_C = (0.5, 1.0, 5.0)
SVM_GAMMA = ("auto", 1.0, 4.0)
SVM_DEGREE = (1, 2, 3)
RF_TREES = (20, 40, 60, 80, 100)
KNN_K = (20, 40, 60, 80, 100, 120, 140)


class ClassifierError(ValueError):
    """Raised on invalid specs, malformed datasets, or unfittable inputs."""


@dataclass
class Dataset:
    """Feature matrix plus binary labels; validates on construction."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y)
        if self.X.ndim != 2 or self.X.shape[0] < 1:
            raise ClassifierError("feature matrix must be 2-D with at least one row")
        if self.y.shape != (self.X.shape[0],):
            raise ClassifierError("labels not aligned with feature rows")
        if np.isnan(self.X).any():
            raise ClassifierError("feature matrix contains missing values")
        # accept {-1,+1} at the boundary, store {0,1}
        if np.all(np.isin(self.y, (-1, 1))) and (self.y == -1).any():
            self.y = (self.y > 0).astype(np.int8)
        else:
            if not np.all(np.isin(self.y, (0, 1))):
                raise ClassifierError("labels must be in {0,1} (or {-1,+1})")
            self.y = self.y.astype(np.int8)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_table(cls, table) -> "Dataset":
        return cls(table.X, table.y)


@dataclass(frozen=True)
class ModelSpec:
    """Family name plus the hyperparameters that family reads.

    ``seed`` only matters for RF.  ``gamma`` is "auto" (1 / number of
    features) or a positive number, rbf only; ``degree`` is poly only and
    the polynomial kernel uses the raw inner product (offset 0).
    """

    family: str
    penalty: Optional[str] = None
    C: Optional[float] = None
    kernel: Optional[str] = None
    gamma: Optional[object] = None
    degree: Optional[int] = None
    trees: Optional[int] = None
    K: Optional[int] = None
    seed: int = 0

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ClassifierError(f"unknown family {self.family!r}")
        if self.family == "LOG":
            if self.penalty not in LOG_PENALTIES:
                raise ClassifierError(f"LOG penalty must be l1 or l2, got {self.penalty!r}")
            if self.C is None or not self.C > 0:
                raise ClassifierError(f"LOG C must be positive, got {self.C!r}")
        elif self.family == "SVM":
            if self.kernel not in ("rbf", "poly"):
                raise ClassifierError(f"SVM kernel must be rbf or poly, got {self.kernel!r}")
            if self.C is None or not self.C > 0:
                raise ClassifierError(f"SVM C must be positive, got {self.C!r}")
            if self.kernel == "rbf":
                if self.gamma != "auto" and (self.gamma is None or not float(self.gamma) > 0):
                    raise ClassifierError(f"rbf gamma must be 'auto' or positive, got {self.gamma!r}")
            else:
                if self.degree is None or int(self.degree) < 1:
                    raise ClassifierError(f"poly degree must be >= 1, got {self.degree!r}")
        elif self.family == "RF":
            if self.trees is None or int(self.trees) < 1:
                raise ClassifierError(f"RF trees must be >= 1, got {self.trees!r}")
            if int(self.seed) < 0:
                raise ClassifierError(f"RF seed must be non-negative, got {self.seed!r}")
        elif self.family == "KNN":
            if self.K is None or int(self.K) < 1:
                raise ClassifierError(f"KNN K must be >= 1, got {self.K!r}")

    def label(self) -> str:
        """Filesystem-safe identifier, e.g. ``svm_rbf_gauto_C1``."""
        def num(v):
            f = float(v)
            return str(int(f)) if f == int(f) else str(f).replace(".", "p")

        if self.family == "LOG":
            return f"log_{self.penalty}_C{num(self.C)}"
        if self.family == "SVM":
            if self.kernel == "rbf":
                g = "auto" if self.gamma == "auto" else num(self.gamma)
                return f"svm_rbf_g{g}_C{num(self.C)}"
            return f"svm_poly_d{int(self.degree)}_C{num(self.C)}"
        if self.family == "RF":
            return f"rf_t{int(self.trees)}"
        if self.family == "KNN":
            return f"knn_K{int(self.K)}"
        return "gnb"

    def sort_key(self) -> tuple:
        """Deterministic lexicographic order used for tie-breaking."""
        return (
            self.family,
            self.penalty or "",
            self.kernel or "",
            "" if self.gamma is None else str(self.gamma),
            -1 if self.degree is None else int(self.degree),
            -1.0 if self.C is None else float(self.C),
            -1 if self.trees is None else int(self.trees),
            -1 if self.K is None else int(self.K),
        )

    def as_dict(self) -> dict:
        out = {"family": self.family}
        for name in ("penalty", "C", "kernel", "gamma", "degree", "trees", "K"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        if self.family == "RF":
            out["seed"] = self.seed
        return out

    def with_seed(self, seed: int) -> "ModelSpec":
        return replace(self, seed=seed)


def enumerate_grid(family: str) -> list[ModelSpec]:
    """The full hyperparameter grid for one family, in table order."""
    if family == "LOG":
        return [ModelSpec("LOG", penalty=p, C=c) for p in LOG_PENALTIES for c in LOG_C]
    if family == "SVM":
        rbf = [ModelSpec("SVM", kernel="rbf", gamma=g, C=c) for g in SVM_GAMMA for c in SVM_C]
        poly = [ModelSpec("SVM", kernel="poly", degree=d, C=c) for d in SVM_DEGREE for c in SVM_C]
        return rbf + poly
    if family == "RF":
        return [ModelSpec("RF", trees=t) for t in RF_TREES]
    if family == "KNN":
        return [ModelSpec("KNN", K=k) for k in KNN_K]
    if family == "GNB":
        return [ModelSpec("GNB")]
    raise ClassifierError(f"unknown family {family!r}")


#: one representative spec per family, used when a run asks for the
#: "default" grid instead of the full cross-product
DEFAULT_SPECS = {
    "LOG": ModelSpec("LOG", penalty="l2", C=1.0),
    "SVM": ModelSpec("SVM", kernel="rbf", gamma="auto", C=1.0),
    "RF": ModelSpec("RF", trees=20),
    "KNN": ModelSpec("KNN", K=20),
    "GNB": ModelSpec("GNB"),
}
