from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class Scaler:
    """Per-feature standardisation. Constant features keep std 1 and are flagged."""

    means: np.ndarray
    stds: np.ndarray
    zero_variance: np.ndarray = field(default=None)

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.stds = np.asarray(self.stds, dtype=np.float64)
        if self.zero_variance is None:
            self.zero_variance = np.zeros(self.means.shape, dtype=bool)
        self.zero_variance = np.asarray(self.zero_variance, dtype=bool)
        if np.any(self.stds <= 0):
            raise ValueError("scaler stds must be positive")

    @property
    def n_features(self) -> int:
        return self.means.shape[0]

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.means) / self.stds


def fit_scaler(X) -> Scaler:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError(f"fit_scaler needs a 2-D array with at least 2 rows, got shape {X.shape}")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    flat = stds <= 1e-12 * np.maximum(1.0, np.abs(means))
    if flat.any():
        logger.debug("%d zero-variance feature(s) left unscaled", int(flat.sum()))
    stds = np.where(flat, 1.0, stds)
    return Scaler(means, stds, flat)


def apply_scaler(scaler: Scaler, x) -> np.ndarray:
    return scaler.transform(x)
