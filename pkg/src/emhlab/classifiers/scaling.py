"""Feature standardization fitted on training rows only.

Continuous indicators live on wildly different scales (price levels vs
oscillators bounded in [0, 100]), so distance- and margin-based models
need standardization.  The scaler memorizes training-column means and
standard deviations; constant columns get scale 1 so they map to zero
instead of dividing by zero.  Trend-encoded features are already in
{-1, +1} and are used unscaled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        scale = np.where(std > 0.0, std, 1.0)
        return cls(mean=mean, scale=scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale
