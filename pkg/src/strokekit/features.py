"""Feature extraction for classification, quality rating and impact location.

Feature layouts are frozen; :data:`SCHEMAS` lists them with a version so that a
model trained on one layout refuses input built with another.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import find_peaks

from .signal import (
    Signal1D,
    fft_magnitude,
    lowpass_butterworth,
    resample_rows,
    stft_array,
    welch_psd,
)
from .types import AUDIO_RATE_HZ, IMU_RATE_HZ, StrokeSegment

SCHEMA_VERSION = 1

CLASS_TRIM = 20  # samples at 100 Hz
CLASS_CUTOFF_HZ = 20.0
CLASS_FILTER_ORDER = 2
WELCH_SEG_LEN = 64
WELCH_OVERLAP = 0.5
PEAK_PROMINENCE = 0.1  # fraction of the signal range

RATING_RATE_HZ = 500.0
RATING_TRIM = 100  # samples at 500 Hz
RATING_COLUMNS = 800

IMPACT_RATE_HZ = 500.0
IMPACT_CROP = 100  # central samples at 500 Hz (200 ms)
IMPACT_WIN = 50
IMPACT_HOP = 6
AUDIO_CROP_MS = 200.0
AUDIO_WIN = 256
AUDIO_HOP = 128

CLASS_FEATURE_NAMES = (
    "sum", "mean", "var", "std", "skew", "kurtosis", "min", "max", "p25", "p75", "peak_count",
    "d_mean", "d_std", "d_skew", "d_kurtosis", "d_max_abs", "d_peak_count",
    "spec_energy", "spec_mean", "spec_std", "spec_centroid", "welch_max", "welch_mean",
)
assert len(CLASS_FEATURE_NAMES) == 23


@dataclass
class ClassFeatures:
    values: np.ndarray  # (6, 23)


@dataclass
class RatingInput:
    values: np.ndarray  # (6, 800)


@dataclass
class ImpactFeatureMap:
    imu_map: np.ndarray  # (6, 9, 26)
    audio_map: Optional[np.ndarray] = None  # (frames, bins)


def _schema_hash(description: dict) -> str:
    blob = json.dumps(description, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


SCHEMAS = {
    "classify": {
        "version": SCHEMA_VERSION, "kind": "class", "shape": [6, 23],
        "features": list(CLASS_FEATURE_NAMES), "trim": CLASS_TRIM,
        "lowpass": [CLASS_CUTOFF_HZ, CLASS_FILTER_ORDER, "steady-start"], "welch": [WELCH_SEG_LEN, WELCH_OVERLAP],
        "peak_prominence": PEAK_PROMINENCE,
    },
    "rate": {
        "version": SCHEMA_VERSION, "kind": "rating", "shape": [6, RATING_COLUMNS],
        "rate_hz": RATING_RATE_HZ, "trim": RATING_TRIM, "spline": "natural",
    },
    "impact": {
        "version": SCHEMA_VERSION, "kind": "impact", "shape": [6, 9, 26],
        "rate_hz": IMPACT_RATE_HZ, "crop": IMPACT_CROP, "stft": [IMPACT_WIN, IMPACT_HOP, "hann"],
    },
    "impact+audio": {
        "version": SCHEMA_VERSION, "kind": "impact", "shape": [6, 9, 26],
        "rate_hz": IMPACT_RATE_HZ, "crop": IMPACT_CROP, "stft": [IMPACT_WIN, IMPACT_HOP, "hann"],
        "audio": [AUDIO_CROP_MS, AUDIO_WIN, AUDIO_HOP, "hann"],
    },
}
SCHEMA_HASHES = {name: _schema_hash(desc) for name, desc in SCHEMAS.items()}


def impact_schema(include_audio: bool) -> str:
    return "impact+audio" if include_audio else "impact"


def _check_segment(segment: StrokeSegment, min_len: int):
    imu = segment.imu
    if imu.ndim != 2 or imu.shape[0] != 6:
        raise ValueError(f"imu window must have shape (6, W), got {imu.shape}")
    if imu.shape[1] < min_len:
        raise ValueError(f"imu window has {imu.shape[1]} samples, need at least {min_len}")
    if not np.all(np.isfinite(imu)):
        raise ValueError("imu window contains NaN or Inf")


def _moments(x: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, std, skewness and excess kurtosis; higher moments are 0 for flat input."""
    mean = float(x.mean())
    dev = x - mean
    var = float(np.mean(dev * dev))
    std = float(np.sqrt(var))
    if std <= 1e-12 * max(1.0, abs(mean)):
        return mean, 0.0, 0.0, 0.0
    z = dev / std
    return mean, std, float(np.mean(z**3)), float(np.mean(z**4) - 3.0)


def _peak_count(x: np.ndarray) -> int:
    span = float(x.max() - x.min())
    if span <= 0:
        return 0
    peaks, _ = find_peaks(x, prominence=PEAK_PROMINENCE * span)
    return int(peaks.size)


def axis_features(x: np.ndarray, fs: float = IMU_RATE_HZ) -> np.ndarray:
    """The 23 per-axis descriptors of an already trimmed and filtered signal."""
    mean, std, skew, kurt = _moments(x)
    p25, p75 = np.percentile(x, [25, 75])
    raw = [x.sum(), mean, std * std, std, skew, kurt, x.min(), x.max(), p25, p75, _peak_count(x)]

    d = np.diff(x) * fs
    d_mean, d_std, d_skew, d_kurt = _moments(d)
    deriv = [d_mean, d_std, d_skew, d_kurt, np.abs(d).max(), _peak_count(d)]

    sig = Signal1D(x, fs)
    spec = fft_magnitude(sig)
    m = spec.magnitudes
    power = m * m
    total_power = power.sum()
    centroid = float((spec.frequencies * power).sum() / total_power) if total_power > 0 else 0.0
    psd = welch_psd(sig, min(WELCH_SEG_LEN, x.size), WELCH_OVERLAP).magnitudes
    freq = [total_power / x.size, m.mean(), m.std(), centroid, psd.max(), psd.mean()]
    return np.asarray(raw + deriv + freq, dtype=np.float64)


def extract_class_features(segment: StrokeSegment, trim: int = CLASS_TRIM) -> ClassFeatures:
    """Trim both ends, low-pass each axis at 20 Hz, then compute 23 descriptors per axis.

    The filter starts settled on each axis's first retained sample, so a
    constant axis stays constant.
    """
    _check_segment(segment, 2 * trim + WELCH_SEG_LEN)
    x = segment.imu[:, trim:-trim] if trim else segment.imu
    rows = []
    for axis in x:
        filtered = lowpass_butterworth(Signal1D(axis, IMU_RATE_HZ), CLASS_CUTOFF_HZ, CLASS_FILTER_ORDER,
                                       steady_start=True)
        rows.append(axis_features(filtered.samples))
    return ClassFeatures(np.vstack(rows))


def extract_rating_input(segment: StrokeSegment) -> RatingInput:
    """Upsample 100 -> 500 Hz with a natural cubic spline, drop 200 ms at each end."""
    _check_segment(segment, 4)
    up = resample_rows(segment.imu, IMU_RATE_HZ, RATING_RATE_HZ)
    values = up[:, RATING_TRIM:-RATING_TRIM]
    if values.shape[1] != RATING_COLUMNS:
        raise ValueError(
            f"segment of {segment.imu.shape[1]} samples yields {values.shape[1]} columns, "
            f"expected {RATING_COLUMNS}; rating input needs a 2000 ms window"
        )
    return RatingInput(values)


def audio_impact_map(audio: np.ndarray, rate_hz: float = AUDIO_RATE_HZ) -> np.ndarray:
    n = int(round(AUDIO_CROP_MS * rate_hz / 1000.0))
    mid = audio.shape[0] // 2
    crop = audio[mid - n // 2 : mid - n // 2 + n]
    if crop.shape[0] != n:
        raise ValueError(f"audio window too short for a {AUDIO_CROP_MS} ms crop")
    return stft_array(crop, AUDIO_WIN, AUDIO_HOP)


def extract_impact_features(segment: StrokeSegment, include_audio: bool = False) -> ImpactFeatureMap:
    """STFT maps of the central 200 ms around the impact.

    The IMU is upsampled to 500 Hz, the central 100 samples are cropped, and a
    50-sample Hann STFT with hop 6 gives 9 frames x 26 bins per axis.
    """
    _check_segment(segment, 4)
    up = resample_rows(segment.imu, IMU_RATE_HZ, IMPACT_RATE_HZ)
    mid = up.shape[1] // 2
    crop = up[:, mid - IMPACT_CROP // 2 : mid + IMPACT_CROP // 2]
    if crop.shape[1] != IMPACT_CROP:
        raise ValueError(f"segment too short for a {IMPACT_CROP}-sample impact crop")
    imu_map = stft_array(crop, IMPACT_WIN, IMPACT_HOP)
    audio_map = audio_impact_map(segment.audio) if include_audio else None
    return ImpactFeatureMap(imu_map, audio_map)


def flatten(feature) -> np.ndarray:
    """Row-major flattening; impact maps append the audio map after the IMU map."""
    if isinstance(feature, (ClassFeatures, RatingInput)):
        return feature.values.reshape(-1).copy()
    if isinstance(feature, ImpactFeatureMap):
        parts = [feature.imu_map.reshape(-1)]
        if feature.audio_map is not None:
            parts.append(feature.audio_map.reshape(-1))
        return np.concatenate(parts)
    raise TypeError(f"cannot flatten {type(feature).__name__}")


def unflatten(vector: np.ndarray, kind: str, audio_shape=None):
    v = np.asarray(vector, dtype=np.float64)
    if kind == "class":
        return ClassFeatures(v.reshape(6, 23).copy())
    if kind == "rating":
        return RatingInput(v.reshape(6, RATING_COLUMNS).copy())
    if kind == "impact":
        imu = v[: 6 * 9 * 26].reshape(6, 9, 26).copy()
        audio = None
        if audio_shape is not None:
            audio = v[6 * 9 * 26 :].reshape(audio_shape).copy()
        elif v.size != 6 * 9 * 26:
            raise ValueError("audio_shape is required to unflatten an impact map with audio")
        return ImpactFeatureMap(imu, audio)
    raise ValueError(f"unknown feature kind {kind!r}")


def feature_vector(segment: StrokeSegment, schema: str) -> np.ndarray:
    """Flat feature vector for ``schema`` (a key of :data:`SCHEMAS`)."""
    if schema == "classify":
        return flatten(extract_class_features(segment))
    if schema == "rate":
        return flatten(extract_rating_input(segment))
    if schema == "impact":
        return flatten(extract_impact_features(segment, include_audio=False))
    if schema == "impact+audio":
        return flatten(extract_impact_features(segment, include_audio=True))
    raise ValueError(f"unknown feature schema {schema!r}")
