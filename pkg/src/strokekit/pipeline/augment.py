from __future__ import annotations

from dataclasses import replace
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from ..types import IMU_RATE_HZ, StrokeSegment

N_VARIANTS = 3
MAX_SHIFT_MS = 100.0
SCALE_RANGE = (0.9, 1.1)
NOISE_FRACTION = 0.02


def time_shift(imu: np.ndarray, shift_samples: int) -> np.ndarray:
    """Delay (positive) or advance the window, holding the edge values."""
    if shift_samples == 0:
        return imu.copy()
    n = imu.shape[1]
    src = np.clip(np.arange(n) - shift_samples, 0, n - 1)
    return imu[:, src]


def time_scale(imu: np.ndarray, scale: float) -> np.ndarray:
    """Stretch (scale > 1) or compress the window about its centre sample."""
    if scale == 1.0:
        return imu.copy()
    n = imu.shape[1]
    t = np.arange(n, dtype=np.float64)
    centre = n // 2
    src = np.clip(centre + (t - centre) / scale, 0, n - 1)
    return CubicSpline(t, imu, axis=1, bc_type="natural")(src)


def augment_segment(segment: StrokeSegment, rng: np.random.Generator, n_variants: int = N_VARIANTS,
                    shift_ms: Optional[float] = None, scale: Optional[float] = None,
                    noise_fraction: float = NOISE_FRACTION) -> list[StrokeSegment]:
    """Labelled variants of one stroke for training.

    Each variant is shifted by up to +-100 ms, time-scaled by a factor in
    [0.9, 1.1] and gets Gaussian noise with std ``noise_fraction`` x the
    per-axis std. Fixed ``shift_ms`` / ``scale`` override the random draws.
    Only the IMU channels are modified; labels, user and source are kept.
    """
    out = []
    axis_std = segment.imu.std(axis=1, keepdims=True)
    for _ in range(n_variants):
        s_ms = rng.uniform(-MAX_SHIFT_MS, MAX_SHIFT_MS) if shift_ms is None else shift_ms
        k = scale if scale is not None else rng.uniform(*SCALE_RANGE)
        imu = time_shift(segment.imu, int(round(s_ms * IMU_RATE_HZ / 1000.0)))
        imu = time_scale(imu, k)
        if noise_fraction > 0:
            imu = imu + rng.normal(size=imu.shape) * (noise_fraction * axis_std)
        out.append(replace(segment, imu=imu, augmented=True))
    return out


def augment_corpus(segments, rng: np.random.Generator, n_variants: int = N_VARIANTS) -> list[StrokeSegment]:
    """Originals followed by their variants (4x the input for the default 3 variants)."""
    out = list(segments)
    for seg in segments:
        out.extend(augment_segment(seg, rng, n_variants))
    return out
