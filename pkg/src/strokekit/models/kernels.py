from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KernelSpec:
    type: str = "rbf"  # "rbf" or "linear"
    gamma: float = 1.0

    def __post_init__(self):
        if self.type not in ("rbf", "linear"):
            raise ValueError(f"unknown kernel type {self.type!r}")

    def __call__(self, A, B) -> np.ndarray:
        return kernel_matrix(self, A, B)


def resolve_gamma(gamma, X: np.ndarray) -> float:
    """``"scale"`` gives 1 / (n_features * var(X)) over the (scaled) training data."""
    if gamma == "scale":
        var = float(np.var(X))
        return 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    gamma = float(gamma)
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return gamma


def kernel_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    dot = A @ B.T
    if spec.type == "linear":
        return dot
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * dot
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-spec.gamma * sq)
