"""Soft-margin kernel SVM trained by Platt-style sequential minimal
optimization.

The dual is solved by the two-variable SMO kernel in
:mod:`emhlab.backends` over a precomputed training kernel matrix.  The
matrix lives in a capacity-doubling :class:`KernelCache` so that a
walk-forward refit, whose training set is yesterday's plus one row, only
computes the new row/column block.  Warm starts reuse the previous day's
multipliers (zero-padded for the new row) after verifying the old
training rows are an exact prefix of the new ones.

Kernels: rbf ``exp(-gamma * ||a - b||^2)`` with gamma = "auto" meaning
1 / n_features, and polynomial ``(a . b)^degree`` with no additive
offset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import backends
from .base import ClassifierError, Dataset, ModelSpec

TOL = 1e-3


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    aa = np.einsum("ij,ij->i", A, A)
    bb = np.einsum("ij,ij->i", B, B)
    sq = aa[:, None] + bb[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def poly_kernel(A: np.ndarray, B: np.ndarray, degree: int) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    return (A @ B.T) ** int(degree)


def _kernel_block(kernel: str, param: float, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if kernel == "rbf":
        return rbf_kernel(A, B, param)
    return poly_kernel(A, B, int(param))


class KernelCache:
    """Symmetric training kernel matrix with amortized row appends."""

    def __init__(self, kernel: str, param: float, capacity: int = 256):
        self.kernel = kernel
        self.param = param
        self.n = 0
        self._buf = np.zeros((capacity, capacity), dtype=np.float64)

    def _ensure_capacity(self, n: int) -> None:
        cap = self._buf.shape[0]
        if n <= cap:
            return
        while cap < n:
            cap *= 2
        new = np.zeros((cap, cap), dtype=np.float64)
        new[: self.n, : self.n] = self._buf[: self.n, : self.n]
        self._buf = new

    def grow(self, X: np.ndarray) -> np.ndarray:
        """Extend the cache to cover ``X`` and return the (n, n) view.

        Rows 0..self.n of ``X`` are assumed identical to the rows the
        cache was built from; the caller enforces that.
        """
        n = X.shape[0]
        if n < self.n:
            raise ClassifierError("kernel cache cannot shrink")
        self._ensure_capacity(n)
        if n > self.n:
            block = _kernel_block(self.kernel, self.param, X[self.n:n], X[:n])
            self._buf[self.n:n, :n] = block
            self._buf[:self.n, self.n:n] = block[:, :self.n].T
            self.n = n
        return self._buf[:n, :n]


@dataclass
class SvmModel:
    spec: Optional[ModelSpec]
    kernel: str
    kernel_param: float
    C: float
    X: np.ndarray
    y_pm: np.ndarray
    alpha: np.ndarray
    b: float
    steps: int
    converged: bool
    flag: Optional[str] = None
    cache: Optional[KernelCache] = field(default=None, repr=False)

    def decision_function(self, Q: np.ndarray) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        sv = self.alpha > 0.0
        if not sv.any():
            return np.full(Q.shape[0], self.b)
        Kq = _kernel_block(self.kernel, self.kernel_param, Q, self.X[sv])
        return Kq @ (self.alpha[sv] * self.y_pm[sv]) + self.b

    def predict(self, Q: np.ndarray) -> np.ndarray:
        return (self.decision_function(Q) >= 0.0).astype(np.int8)

    def summary(self) -> dict:
        return {
            "family": "SVM",
            "converged": self.converged,
            "steps": self.steps,
            "support_vectors": int(np.count_nonzero(self.alpha > 0.0)),
            "bound_support_vectors": int(np.count_nonzero(self.alpha >= self.C)),
        }


def _warm_state(warm: Optional[SvmModel], kernel: str, param: float, C: float,
                X: np.ndarray, y_pm: np.ndarray):
    """Previous-day state if it is reusable for this training set."""
    if warm is None or not isinstance(warm, SvmModel):
        return None
    if warm.kernel != kernel or warm.kernel_param != param or warm.C != C:
        return None
    m = warm.X.shape[0]
    if m > X.shape[0] or warm.cache is None:
        return None
    if not (np.array_equal(warm.X, X[:m]) and np.array_equal(warm.y_pm, y_pm[:m])):
        return None
    alpha = np.zeros(X.shape[0], dtype=np.float64)
    alpha[:m] = warm.alpha
    return warm.cache, alpha, warm.b


def fit_svm(data: Dataset, kernel: str, C: float, gamma=None, degree=None,
            spec: Optional[ModelSpec] = None, warm: Optional[SvmModel] = None,
            tol: float = TOL, max_steps: Optional[int] = None) -> SvmModel:
    if kernel not in ("rbf", "poly"):
        raise ClassifierError(f"kernel must be rbf or poly, got {kernel!r}")
    if not C > 0:
        raise ClassifierError(f"C must be positive, got {C!r}")
    X, y01 = data.X, data.y
    n = X.shape[0]
    if len(np.unique(y01)) < 2:
        raise ClassifierError("SVM training requires both classes")
    y_pm = np.where(y01 > 0, 1.0, -1.0)

    if kernel == "rbf":
        param = 1.0 / data.d if gamma in (None, "auto") else float(gamma)
        if not param > 0:
            raise ClassifierError(f"gamma must be positive, got {gamma!r}")
    else:
        param = float(int(degree if degree is not None else 1))
        if param < 1:
            raise ClassifierError(f"degree must be >= 1, got {degree!r}")

    state = _warm_state(warm, kernel, param, C, X, y_pm)
    if state is not None:
        cache, alpha, b0 = state
    else:
        cache, alpha, b0 = KernelCache(kernel, param), np.zeros(n), 0.0
    K = np.ascontiguousarray(cache.grow(X))
    E = K @ (alpha * y_pm) + b0 - y_pm

    if max_steps is None:
        max_steps = 50 * n + 1000
    b, steps, converged = backends.smo_solve(K, y_pm, C, tol, alpha, E, b0, max_steps)

    return SvmModel(
        spec=spec, kernel=kernel, kernel_param=param, C=float(C),
        X=X, y_pm=y_pm, alpha=alpha, b=b, steps=steps,
        converged=converged, flag=None if converged else "non_converged",
        cache=cache,
    )
