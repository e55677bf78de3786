"""Core records passed between pipeline stages."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

IMU_RATE_HZ = 100.0
AUDIO_RATE_HZ = 16000.0
IMU_CHANNELS = ("ax", "ay", "az", "gx", "gy", "gz")
GY = IMU_CHANNELS.index("gy")
NS_PER_S = 1_000_000_000
NS_PER_MS = 1_000_000


class StrokeType(str, enum.Enum):
    BOC = "BOC"  # backhand overhead clear
    FOC = "FOC"  # forehand overhead clear
    FOS = "FOS"  # forehand overhead smash
    FOD = "FOD"  # forehand overhead drop

    @classmethod
    def ordered(cls) -> list["StrokeType"]:
        return [cls.BOC, cls.FOC, cls.FOS, cls.FOD]


def clamp_quality(value: float) -> float:
    return float(min(5.0, max(1.0, value)))


@dataclass(frozen=True)
class ImpactPoint:
    """Contact point on the string face; origin at the racket throat.

    ``x`` runs from -0.5 (left edge) to 0.5 (right edge); ``y`` from 0 (throat)
    to 1 (top of the head). Out-of-range values are clamped on construction.
    """

    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(min(0.5, max(-0.5, self.x))))
        object.__setattr__(self, "y", float(min(1.0, max(0.0, self.y))))

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class SessionRecording:
    """Aligned IMU and audio streams for one practice session.

    imu_t_ns: (n,) int64 sample timestamps, strictly increasing
    imu: (n, 6) float64 in IMU_CHANNELS order (m/s^2, rad/s)
    audio: (m,) float64 PCM normalised to [-1, 1]
    audio_t0_ns: timestamp of audio[0]
    """

    imu_t_ns: np.ndarray
    imu: np.ndarray
    audio: np.ndarray
    audio_t0_ns: int = 0
    audio_rate_hz: float = AUDIO_RATE_HZ
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.imu_t_ns = np.asarray(self.imu_t_ns, dtype=np.int64).reshape(-1)
        self.imu = np.asarray(self.imu, dtype=np.float64).reshape(-1, 6)
        self.audio = np.asarray(self.audio, dtype=np.float64).reshape(-1)
        self.audio_t0_ns = int(self.audio_t0_ns)
        if self.imu.shape[0] != self.imu_t_ns.shape[0]:
            raise ValueError(
                f"imu has {self.imu.shape[0]} rows but {self.imu_t_ns.shape[0]} timestamps"
            )
        if self.imu_t_ns.size > 1 and np.any(np.diff(self.imu_t_ns) <= 0):
            raise ValueError("imu timestamps must be strictly increasing")
        if not (np.all(np.isfinite(self.imu)) and np.all(np.isfinite(self.audio))):
            raise ValueError("session contains NaN or Inf samples")
        if self.imu_t_ns.size and self.audio.size:
            a0, a1 = self.audio_t0_ns, self.audio_end_ns
            if a1 <= self.imu_t_ns[0] or a0 >= self.imu_t_ns[-1]:
                raise ValueError("imu and audio time ranges do not overlap")

    @property
    def audio_end_ns(self) -> int:
        return self.audio_t0_ns + int(round(self.audio.size * NS_PER_S / self.audio_rate_hz))

    @property
    def duration_s(self) -> float:
        if self.imu_t_ns.size == 0:
            return 0.0
        return (self.imu_t_ns[-1] - self.imu_t_ns[0]) / NS_PER_S + 1.0 / IMU_RATE_HZ

    @property
    def is_empty(self) -> bool:
        return self.imu_t_ns.size == 0

    @classmethod
    def empty(cls) -> "SessionRecording":
        return cls(np.zeros(0, np.int64), np.zeros((0, 6)), np.zeros(0))


@dataclass
class StrokeLabels:
    stroke_type: Optional[StrokeType] = None
    quality: Optional[float] = None
    impact: Optional[ImpactPoint] = None


@dataclass
class StrokeSegment:
    """A 2000 ms window centred on one impact.

    imu: (6, 200) at 100 Hz; audio: (32000,) at 16 kHz. ``padded`` marks windows
    that ran past the recording and were zero-filled. ``user_id`` and
    ``source_id`` group strokes for cross-validation (augmented copies keep the
    source_id of their original).
    """

    imu: np.ndarray
    audio: np.ndarray
    impact_time_ns: int = 0
    labels: StrokeLabels = field(default_factory=StrokeLabels)
    padded: bool = False
    user_id: Optional[int] = None
    source_id: Optional[int] = None
    augmented: bool = False

    def __post_init__(self):
        self.imu = np.asarray(self.imu, dtype=np.float64)
        self.audio = np.asarray(self.audio, dtype=np.float64).reshape(-1)
        if self.imu.ndim != 2 or self.imu.shape[0] != 6:
            raise ValueError(f"imu window must have shape (6, W), got {self.imu.shape}")

    def with_imu(self, imu: np.ndarray, **changes) -> "StrokeSegment":
        return replace(self, imu=imu, **changes)
