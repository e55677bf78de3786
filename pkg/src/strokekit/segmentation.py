"""Two-step stroke segmentation.

Step one scans the squared y-axis gyroscope for peaks that dominate a 2000 ms
neighbourhood. Step two keeps only candidates whose audio energy envelope also
peaks near the window centre, which rejects swings that never touch the
shuttle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d

from .errors import CoverageError
from .signal import Signal1D, energy_envelope
from .types import GY, IMU_RATE_HZ, NS_PER_MS, NS_PER_S, SessionRecording, StrokeSegment

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SegmentationConfig:
    window_ms: float = 2000.0
    threshold: float = 21.0  # on gy**2, (rad/s)^2
    offset_ms: float = 100.0  # the gyro peak leads the impact by this much
    audio_frame_ms: float = 10.0
    audio_threshold_factor: float = 5.0  # x median envelope over the session
    center_tolerance_ms: float = 150.0


@dataclass(frozen=True)
class CandidateWindow:
    t_start_ns: int
    t_end_ns: int
    peak_value: float
    peak_time_ns: int

    @property
    def center_ns(self) -> int:
        return (self.t_start_ns + self.t_end_ns) // 2

    def overlaps(self, other: "CandidateWindow") -> bool:
        return self.t_start_ns < other.t_end_ns and other.t_start_ns < self.t_end_ns


@dataclass
class SegmentationResult:
    segments: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    accepted: list = field(default_factory=list)

    @property
    def rejected_count(self) -> int:
        return len(self.candidates) - len(self.accepted)


def _non_max_suppression(cands: list[CandidateWindow]) -> list[CandidateWindow]:
    kept: list[CandidateWindow] = []
    for c in sorted(cands, key=lambda c: (-c.peak_value, c.peak_time_ns)):
        if not any(c.overlaps(k) for k in kept):
            kept.append(c)
    return sorted(kept, key=lambda c: c.t_start_ns)


def detect_candidates(
    gyro_y: Signal1D,
    window_ms: float = 2000.0,
    threshold: float = 21.0,
    offset_ms: float = 100.0,
    timestamps_ns=None,
) -> list[CandidateWindow]:
    """Find windows whose squared-gyro maximum sits at the window centre.

    A sample qualifies when its square exceeds ``threshold`` and is the largest
    value within +-window/2. The window is then shifted forward by
    ``offset_ms`` so that it is centred on the impact rather than the peak.
    """
    x = gyro_y.samples
    n = x.shape[0]
    w = int(round(window_ms * gyro_y.sample_rate_hz / 1000.0))
    if n < w or n == 0:
        return []
    if timestamps_ns is None:
        timestamps_ns = gyro_y.time_ns(np.arange(n))
    sq = x * x
    half = w // 2
    neighbourhood_max = maximum_filter1d(sq, size=2 * half + 1, mode="constant", cval=-np.inf)
    peaks = np.flatnonzero((sq > threshold) & (sq >= neighbourhood_max))

    half_ns = int(round(window_ms * NS_PER_MS / 2))
    offset_ns = int(round(offset_ms * NS_PER_MS))
    cands = []
    for i in peaks:
        impact = int(timestamps_ns[i]) + offset_ns
        cands.append(CandidateWindow(impact - half_ns, impact + half_ns, float(sq[i]), int(timestamps_ns[i])))
    return _non_max_suppression(cands)


def audio_threshold(envelope: Signal1D, factor: float = 5.0) -> float:
    if len(envelope) == 0:
        return 0.0
    return factor * float(np.median(envelope.samples))


def verify_audio(
    candidates: list[CandidateWindow],
    audio: Signal1D,
    frame_ms: float = 10.0,
    threshold_factor: float = 5.0,
    center_tolerance_ms: float = 150.0,
) -> list[CandidateWindow]:
    """Keep candidates whose audio envelope peaks within tolerance of the centre.

    The envelope maximum over the candidate window must exceed
    ``threshold_factor`` x the session-wide median envelope. Raises
    :class:`CoverageError` if the audio does not span a candidate's centre
    region.
    """
    if not candidates:
        return []
    env = energy_envelope(audio, frame_ms)
    thr = audio_threshold(env, threshold_factor)
    frame_ns = frame_ms * NS_PER_MS
    # timestamp of each envelope frame's centre
    frame_t = audio.t0_ns + (np.arange(len(env)) + 0.5) * frame_ns
    audio_end = audio.t0_ns + len(audio) * NS_PER_S / audio.sample_rate_hz
    tol_ns = center_tolerance_ms * NS_PER_MS

    kept = []
    for c in candidates:
        if c.center_ns - tol_ns < audio.t0_ns or c.center_ns + tol_ns > audio_end:
            raise CoverageError(
                f"audio [{audio.t0_ns}, {int(audio_end)}) ns does not cover candidate centred "
                f"at {c.center_ns} ns (+-{center_tolerance_ms} ms)",
                candidate=c,
            )
        lo, hi = np.searchsorted(frame_t, [c.t_start_ns, c.t_end_ns])
        if hi <= lo:
            continue
        j = lo + int(np.argmax(env.samples[lo:hi]))
        if env.samples[j] > thr and abs(frame_t[j] - c.center_ns) <= tol_ns:
            kept.append(c)
    return kept


def _cut(x: np.ndarray, start: int, length: int) -> tuple[np.ndarray, bool]:
    """Slice ``length`` items from ``start`` along the last axis, zero-filling outside."""
    n = x.shape[-1]
    out = np.zeros(x.shape[:-1] + (length,), dtype=np.float64)
    lo, hi = max(start, 0), min(start + length, n)
    if hi > lo:
        out[..., lo - start : hi - start] = x[..., lo:hi]
    return out, (start < 0 or start + length > n)


def cut_segment(session: SessionRecording, impact_ns: int, window_ms: float = 2000.0) -> StrokeSegment:
    """Window both streams symmetrically around ``impact_ns``."""
    w_imu = int(round(window_ms * IMU_RATE_HZ / 1000.0))
    centre = int(np.searchsorted(session.imu_t_ns, impact_ns))
    # pick whichever neighbour is nearer to the impact
    if 0 < centre < session.imu_t_ns.size:
        if impact_ns - session.imu_t_ns[centre - 1] < session.imu_t_ns[centre] - impact_ns:
            centre -= 1
    imu, pad_imu = _cut(session.imu.T, centre - w_imu // 2, w_imu)

    w_audio = int(round(window_ms * session.audio_rate_hz / 1000.0))
    a_start = int(round((impact_ns - window_ms * NS_PER_MS / 2 - session.audio_t0_ns)
                        * session.audio_rate_hz / NS_PER_S))
    audio, pad_audio = _cut(session.audio, a_start, w_audio)
    return StrokeSegment(imu=imu, audio=audio, impact_time_ns=int(impact_ns), padded=pad_imu or pad_audio)


def segment_session_detailed(session: SessionRecording, config: SegmentationConfig | None = None) -> SegmentationResult:
    config = config or SegmentationConfig()
    if session.is_empty:
        return SegmentationResult()
    t0 = int(session.imu_t_ns[0])
    gy = Signal1D(session.imu[:, GY], IMU_RATE_HZ, t0)
    cands = detect_candidates(gy, config.window_ms, config.threshold, config.offset_ms,
                              timestamps_ns=session.imu_t_ns)
    if session.audio.size == 0:
        accepted = []
    else:
        audio = Signal1D(session.audio, session.audio_rate_hz, session.audio_t0_ns)
        accepted = verify_audio(cands, audio, config.audio_frame_ms,
                                config.audio_threshold_factor, config.center_tolerance_ms)
    segments = []
    for c in accepted:
        seg = cut_segment(session, c.center_ns, config.window_ms)
        if seg.padded:
            logger.info("stroke at %d ns runs past the recording; window zero-padded", c.center_ns)
        segments.append(seg)
    return SegmentationResult(segments, cands, accepted)


def segment_session(session: SessionRecording, config: SegmentationConfig | None = None) -> list[StrokeSegment]:
    """Detect, verify and cut every stroke in a session, ordered by impact time."""
    return segment_session_detailed(session, config).segments
