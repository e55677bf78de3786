"""Parametric generator of labelled synthetic strokes and sessions.

A stroke is five smooth bumps (backward swing, forward swing, impact,
follow-through, retraction) per IMU axis, with sign/amplitude tables that
differ by stroke type. The impact bump on the y-gyro peaks 100 ms before the
shuttle contact; contact itself adds a damped racket vibration and a short
audio burst. Air swings carry the motion but neither vibration nor sound.

Quality q in [1, 5] acts on the motion in three documented ways:

* every bump is scaled by ``0.75 + 0.1 q`` (see :func:`quality_gain`);
* bump widths shrink by ``1.2 - 0.05 q`` (crisper phases);
* phase timing jitter has std ``0.04 (5 - q) / 4`` s (less regular at low q).

The impact point sets the vibration. With ``d`` the normalised distance from
the face centre (0, 0.65), the main mode on ax has frequency
``f0 (1 + 0.5 d)``, amplitude ``A0 (1 - 0.8 d)`` and decay
``tau0 (1 - 0.5 d)``. Two further modes encode direction by amplitude
balance: ``x + 0.5`` on gx against ``0.5 - x`` on az, and ``y`` on ay
against ``1 - y`` on gz. The audio burst rises in pitch with ``d`` and in
energy with ``quality_gain``.

These tables are test fixtures chosen so that type, quality and location are
recoverable. They make no claim about real racket physics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .types import (
    AUDIO_RATE_HZ,
    GY,
    IMU_RATE_HZ,
    NS_PER_S,
    ImpactPoint,
    SessionRecording,
    StrokeLabels,
    StrokeSegment,
    StrokeType,
)

WINDOW_S = 2.0
IMU_WINDOW = int(WINDOW_S * IMU_RATE_HZ)
AUDIO_WINDOW = int(WINDOW_S * AUDIO_RATE_HZ)
FACE_CENTER = (0.0, 0.65)
GRAVITY = 9.81
MIN_ONSET_GAP_S = 2.5

PHASES = ("backward_swing", "forward_swing", "impact", "follow_through", "retraction")
# phase centre (s, relative to contact) and width (s)
PHASE_CENTERS = np.array([-0.55, -0.28, -0.10, 0.12, 0.50])
PHASE_WIDTHS = np.array([0.10, 0.07, 0.035, 0.06, 0.12])
IMPACT_PHASE = PHASES.index("impact")

# per type: 5 phases x 6 axes (ax, ay, az, gx, gy, gz)
TEMPLATES = {
    StrokeType.BOC: np.array([
        [3, -2, 4, 2, 3, -2],
        [-6, 4, -3, -3, -4, 3],
        [-8, 6, 5, -4, -8, 5],
        [4, -3, -4, 2, 3, -3],
        [2, 1, -2, 1, 1, -1],
    ], dtype=float),
    StrokeType.FOC: np.array([
        [-3, 2, -4, -2, -3, 2],
        [6, -5, 4, 4, 5, -3],
        [9, -7, -5, 5, 9, -5],
        [-4, 3, 4, -2, -3, 3],
        [-2, -1, 2, -1, -1, 1],
    ], dtype=float),
    StrokeType.FOS: np.array([
        [-3, 2, -5, -2, -3, 3],
        [7, -5, 5, 5, 6, -4],
        [12, -9, -6, 6, 12, -7],
        [-6, 5, 5, -3, -5, 4],
        [-2, -1, 2, -1, -1, 1],
    ], dtype=float),
    StrokeType.FOD: np.array([
        [-3, 2, -4, -2, -3, 2],
        [5, -4, 3, 3, 4, -2],
        [6, -5, 4, 4, 8, -3],
        [-2, 2, -3, -1, -2, 1],
        [-1, -1, 1, -1, -1, 1],
    ], dtype=float),
}
# per-type time scale on phase offsets and widths: smashes are quicker, drops slower
TYPE_TEMPO = {StrokeType.BOC: 1.0, StrokeType.FOC: 1.0, StrokeType.FOS: 0.85, StrokeType.FOD: 1.2}


@dataclass(frozen=True)
class StrokeSpec:
    stroke_type: StrokeType
    quality: float = 4.0
    impact: ImpactPoint = field(default_factory=lambda: ImpactPoint(*FACE_CENTER))
    onset_time_s: float = 0.0  # contact time within a session
    is_air_swing: bool = False
    user_id: int = 0

    def __post_init__(self):
        if not 1.0 <= self.quality <= 5.0:
            raise ValueError(f"quality must be in [1, 5], got {self.quality}")
        if not isinstance(self.impact, ImpactPoint):
            object.__setattr__(self, "impact", ImpactPoint(*self.impact))
        object.__setattr__(self, "stroke_type", StrokeType(self.stroke_type))


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    imu_noise: float = 0.05
    audio_noise: float = 0.005
    jitter_s: float = 0.04
    user_gain_spread: float = 0.15
    user_tempo_spread: float = 0.08
    vib_f0_hz: float = 22.0
    vib_amp: float = 3.0
    vib_tau_s: float = 0.08
    dir_amp: float = 2.0
    dir_tau_s: float = 0.06
    torsion_hz: float = 18.0
    bending_hz: float = 26.0
    audio_amp: float = 0.3
    audio_tau_s: float = 0.006


def quality_gain(quality: float) -> float:
    return 0.75 + 0.1 * quality


def impact_distance(impact: ImpactPoint) -> float:
    cx, cy = FACE_CENTER
    dy = (impact.y - cy) / (cy if impact.y < cy else 1.0 - cy)
    return float(min(1.0, np.hypot((impact.x - cx) / 0.5, dy)))


def user_profile(user_id: int, config: SynthConfig) -> tuple[np.ndarray, float]:
    """Per-axis gain and tempo factor of a synthetic user."""
    rng = np.random.default_rng([config.seed, 7919, int(user_id)])
    gain = 1.0 + rng.uniform(-config.user_gain_spread, config.user_gain_spread, size=6)
    tempo = 1.0 + rng.uniform(-config.user_tempo_spread, config.user_tempo_spread)
    return gain, tempo


def quality_statistic(quality: float, stroke_type: StrokeType = StrokeType.FOS) -> float:
    """Noise-free |gy| at the impact phase peak for a neutral user; increasing in quality."""
    return quality_gain(quality) * abs(TEMPLATES[StrokeType(stroke_type)][IMPACT_PHASE, GY])


def _motion(spec: StrokeSpec, config: SynthConfig, rng: np.random.Generator, t: np.ndarray) -> np.ndarray:
    table = TEMPLATES[spec.stroke_type]
    gain, tempo = user_profile(spec.user_id, config)
    tempo *= TYPE_TEMPO[spec.stroke_type]
    q = spec.quality
    jitter = rng.normal(0.0, config.jitter_s * (5.0 - q) / 4.0, size=len(PHASES))
    jitter[IMPACT_PHASE] = 0.0
    # phases keep their order relative to the impact peak, scaled by tempo
    peak = PHASE_CENTERS[IMPACT_PHASE]
    centers = peak + (PHASE_CENTERS - peak) * tempo + jitter
    widths = PHASE_WIDTHS * tempo * (1.2 - 0.05 * q)
    widths[IMPACT_PHASE] = PHASE_WIDTHS[IMPACT_PHASE] * (1.2 - 0.05 * q)
    bumps = np.exp(-0.5 * ((t[None, :] - centers[:, None]) / widths[:, None]) ** 2)  # (5, T)
    return quality_gain(q) * gain[:, None] * (table.T @ bumps)  # (6, T)


def _damped(t, amp, freq, tau):
    out = np.zeros_like(t)
    on = t >= 0
    out[on] = amp * np.exp(-t[on] / tau) * np.sin(2 * np.pi * freq * t[on])
    return out


def _vibration(spec: StrokeSpec, config: SynthConfig, t: np.ndarray) -> np.ndarray:
    d = impact_distance(spec.impact)
    x, y = spec.impact.x, spec.impact.y
    s = quality_gain(spec.quality)
    v = np.zeros((6, t.size))
    v[0] = _damped(t, config.vib_amp * (1 - 0.8 * d), config.vib_f0_hz * (1 + 0.5 * d),
                   config.vib_tau_s * (1 - 0.5 * d))
    torsion = _damped(t, config.dir_amp, config.torsion_hz, config.dir_tau_s)
    bending = _damped(t, config.dir_amp, config.bending_hz, config.dir_tau_s)
    v[3] = (x + 0.5) * torsion
    v[2] = (0.5 - x) * torsion
    v[1] = y * bending
    v[5] = (1.0 - y) * bending
    return s * v


def _audio_burst(spec: StrokeSpec, config: SynthConfig, rng: np.random.Generator, t: np.ndarray) -> np.ndarray:
    d = impact_distance(spec.impact)
    freq = 1500.0 + 2500.0 * d
    on = t >= 0
    burst = np.zeros_like(t)
    tt = t[on]
    env = config.audio_amp * quality_gain(spec.quality) * np.exp(-tt / config.audio_tau_s)
    burst[on] = env * (0.7 * np.sin(2 * np.pi * freq * tt) + 0.3 * rng.standard_normal(tt.size))
    return burst


def render_stroke(spec: StrokeSpec, config: SynthConfig, rng: np.random.Generator):
    """Noise-free (imu (6, 200), audio (32000,)) with contact at sample 100 / 16000."""
    t_imu = (np.arange(IMU_WINDOW) - IMU_WINDOW // 2) / IMU_RATE_HZ
    imu = _motion(spec, config, rng, t_imu)
    t_audio = (np.arange(AUDIO_WINDOW) - AUDIO_WINDOW // 2) / AUDIO_RATE_HZ
    if spec.is_air_swing:
        audio = np.zeros(AUDIO_WINDOW)
    else:
        imu = imu + _vibration(spec, config, t_imu)
        audio = _audio_burst(spec, config, rng, t_audio)
    return imu, audio


def _background_imu(n: int, config: SynthConfig, rng) -> np.ndarray:
    imu = rng.normal(0.0, config.imu_noise, size=(6, n))
    imu[2] += GRAVITY
    return imu


def quantize_imu(imu: np.ndarray) -> np.ndarray:
    """Round to float32, the wire/storage precision."""
    return np.asarray(imu, dtype=np.float32).astype(np.float64)


def quantize_audio(audio: np.ndarray) -> np.ndarray:
    """Round to 16-bit PCM levels."""
    pcm = np.clip(np.round(np.asarray(audio) * 32767.0), -32768, 32767)
    return pcm / 32767.0


def gen_stroke(spec: StrokeSpec, config: SynthConfig | None = None,
               rng: Optional[np.random.Generator] = None, source_id: Optional[int] = None) -> StrokeSegment:
    """A labelled 2000 ms segment with contact at the window centre."""
    config = config or SynthConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    imu, audio = render_stroke(spec, config, rng)
    imu = quantize_imu(imu + _background_imu(IMU_WINDOW, config, rng))
    audio = quantize_audio(audio + rng.normal(0.0, config.audio_noise, AUDIO_WINDOW))
    labels = StrokeLabels(spec.stroke_type, float(spec.quality), spec.impact)
    return StrokeSegment(imu=imu, audio=audio, impact_time_ns=int(round(spec.onset_time_s * NS_PER_S)),
                         labels=labels, user_id=spec.user_id, source_id=source_id)


def _add_window(dst: np.ndarray, src: np.ndarray, start: int):
    n = dst.shape[-1]
    lo, hi = max(start, 0), min(start + src.shape[-1], n)
    if hi > lo:
        dst[..., lo:hi] += src[..., lo - start : hi - start]


def gen_session(specs: Sequence[StrokeSpec], duration_s: float, config: SynthConfig | None = None,
                session_id: str = "synthetic", t0_ns: int = 0) -> tuple[SessionRecording, list[dict]]:
    """Continuous 100 Hz IMU + 16 kHz audio with strokes at their onsets.

    Onsets are snapped to the 10 ms IMU grid. Returns the recording and the
    ground-truth list written to ``truth.json``.
    """
    config = config or SynthConfig()
    specs = sorted(specs, key=lambda s: s.onset_time_s)
    for a, b in zip(specs, specs[1:]):
        if b.onset_time_s - a.onset_time_s < MIN_ONSET_GAP_S:
            raise ValueError(
                f"onsets {a.onset_time_s:.3f}s and {b.onset_time_s:.3f}s are closer than {MIN_ONSET_GAP_S}s"
            )
    rng = np.random.default_rng(config.seed)
    n_imu = int(round(duration_s * IMU_RATE_HZ))
    n_audio = int(round(duration_s * AUDIO_RATE_HZ))
    imu = _background_imu(n_imu, config, rng)
    audio = rng.normal(0.0, config.audio_noise, n_audio)
    truth = []
    for spec in specs:
        k = int(round(spec.onset_time_s * IMU_RATE_HZ))
        s_imu, s_audio = render_stroke(spec, config, rng)
        _add_window(imu, s_imu, k - IMU_WINDOW // 2)
        _add_window(audio, s_audio, int(round(k * AUDIO_RATE_HZ / IMU_RATE_HZ)) - AUDIO_WINDOW // 2)
        truth.append({
            "onset": k / IMU_RATE_HZ,
            "type": spec.stroke_type.value,
            "quality": float(spec.quality),
            "impact": [spec.impact.x, spec.impact.y],
            "air_swing": bool(spec.is_air_swing),
            "user_id": int(spec.user_id),
        })
    t_ns = t0_ns + np.arange(n_imu, dtype=np.int64) * (NS_PER_S // int(IMU_RATE_HZ))
    session = SessionRecording(
        imu_t_ns=t_ns, imu=quantize_imu(imu.T), audio=quantize_audio(audio), audio_t0_ns=t0_ns,
        meta={"session_id": session_id, "device_id": "synth", "wall_clock_start": 0.0,
              "synth_seed": config.seed},
    )
    return session, truth


def random_spec(rng: np.random.Generator, stroke_type=None, user_id: int = 0, onset_time_s: float = 0.0,
                is_air_swing: bool = False) -> StrokeSpec:
    if stroke_type is None:
        stroke_type = StrokeType.ordered()[int(rng.integers(4))]
    return StrokeSpec(
        stroke_type=stroke_type,
        quality=float(rng.uniform(1.0, 5.0)),
        impact=ImpactPoint(float(rng.uniform(-0.5, 0.5)), float(rng.uniform(0.0, 1.0))),
        onset_time_s=onset_time_s,
        is_air_swing=is_air_swing,
        user_id=user_id,
    )


def random_onsets(n: int, duration_s: float, rng: np.random.Generator, margin_s: float = 1.5,
                  min_gap_s: float = 3.0) -> np.ndarray:
    """``n`` sorted onsets in [margin, duration - margin] at least ``min_gap_s`` apart."""
    span = duration_s - 2 * margin_s - (n - 1) * min_gap_s
    if span < 0:
        raise ValueError(f"cannot fit {n} strokes {min_gap_s}s apart into {duration_s}s")
    base = np.sort(rng.uniform(0.0, span, size=n))
    onsets = margin_s + base + np.arange(n) * min_gap_s
    return np.round(onsets * IMU_RATE_HZ) / IMU_RATE_HZ


def random_session(n_strokes: int = 10, n_air: int = 3, duration_s: float = 60.0, seed: int = 0,
                   user_id: int = 0, config: SynthConfig | None = None, session_id: str | None = None):
    """A seeded session with ``n_strokes`` hits and ``n_air`` air swings in random order."""
    config = config or SynthConfig(seed=seed)
    rng = np.random.default_rng([seed, 1])
    onsets = random_onsets(n_strokes + n_air, duration_s, rng)
    air = np.zeros(onsets.size, dtype=bool)
    air[rng.choice(onsets.size, size=n_air, replace=False)] = True
    specs = [random_spec(rng, user_id=user_id, onset_time_s=float(o), is_air_swing=bool(a))
             for o, a in zip(onsets, air)]
    return gen_session(specs, duration_s, config, session_id=session_id or f"synth-{seed}")


def make_corpus(n_per_type: int, n_users: int = 12, seed: int = 0,
                config: SynthConfig | None = None, types: Sequence[StrokeType] | None = None) -> list[StrokeSegment]:
    """Labelled strokes spread evenly over ``n_users`` users and the given types."""
    config = config or SynthConfig(seed=seed)
    types = list(types or StrokeType.ordered())
    rng = np.random.default_rng([seed, 2])
    corpus = []
    for i in range(n_per_type):
        for st in types:
            spec = random_spec(rng, stroke_type=st, user_id=(i * len(types) + types.index(st)) % n_users)
            corpus.append(gen_stroke(spec, config, rng, source_id=len(corpus)))
    return corpus


def write_truth(path, truth: list[dict]):
    Path(path).write_text(json.dumps(truth, indent=2))


def read_truth(path) -> list[dict]:
    return json.loads(Path(path).read_text())
