import numpy as np
import pytest

from strokekit.features import extract_class_features, extract_impact_features
from strokekit.signal import Signal1D, energy_envelope
from strokekit.synth import (
    StrokeSpec,
    SynthConfig,
    gen_session,
    gen_stroke,
    make_corpus,
    quality_statistic,
    random_session,
    read_truth,
    write_truth,
)
from strokekit.types import GY, ImpactPoint, StrokeType


def _burst_energy(audio):
    return float(np.sum(audio[16000 - 160 : 16000 + 1600] ** 2))


def test_hit_has_gyro_peak_and_audio_burst():
    s = gen_stroke(StrokeSpec(StrokeType.FOS, 5.0, ImpactPoint(0.0, 0.65)))
    assert np.max(s.imu[GY] ** 2) > 21
    env = energy_envelope(Signal1D(s.audio, 16000.0)).samples
    assert env.max() > 50 * np.median(env)
    assert abs(int(np.argmax(env)) - 100) <= 3


def test_air_swing_has_no_burst():
    s = gen_stroke(StrokeSpec(StrokeType.FOS, 5.0, ImpactPoint(0.0, 0.65), is_air_swing=True))
    env = energy_envelope(Signal1D(s.audio, 16000.0)).samples
    assert env.max() < 5 * np.median(env)


def test_impact_x_changes_stft_map():
    a = gen_stroke(StrokeSpec(StrokeType.FOC, 3.0, ImpactPoint(-0.2, 0.6)))
    b = gen_stroke(StrokeSpec(StrokeType.FOC, 3.0, ImpactPoint(0.2, 0.6)))
    assert np.linalg.norm(extract_impact_features(a).imu_map - extract_impact_features(b).imu_map) > 0


def test_quality_statistic_strictly_increasing():
    for t in StrokeType.ordered():
        q = np.linspace(1, 5, 41)
        assert np.all(np.diff([quality_statistic(v, t) for v in q]) > 0)


def test_quality_raises_gyro_peak_on_average():
    rng = np.random.default_rng(0)
    peaks = {}
    for q in (1.0, 3.0, 5.0):
        peaks[q] = np.mean([np.max(np.abs(gen_stroke(StrokeSpec(StrokeType.FOD, q), rng=rng).imu[GY]))
                            for _ in range(20)])
    assert peaks[1.0] < peaks[3.0] < peaks[5.0]


def test_session_shape_truth_and_determinism(tmp_path):
    s1, t1 = random_session(10, 0, 60.0, seed=5)
    s2, t2 = random_session(10, 0, 60.0, seed=5)
    assert s1.duration_s == pytest.approx(60.0)
    assert len(t1) == 10 and t1 == t2
    assert np.array_equal(s1.imu, s2.imu) and np.array_equal(s1.audio, s2.audio)
    assert np.all(np.diff(s1.imu_t_ns) > 0)
    assert s1.audio_t0_ns <= s1.imu_t_ns[-1]
    write_truth(tmp_path / "truth.json", t1)
    assert read_truth(tmp_path / "truth.json") == t1
    assert set(t1[0]) >= {"onset", "type", "quality", "impact", "air_swing"}


def test_overlapping_onsets_rejected():
    specs = [StrokeSpec(StrokeType.FOS, onset_time_s=5.0), StrokeSpec(StrokeType.FOC, onset_time_s=6.0)]
    with pytest.raises(ValueError):
        gen_session(specs, 20.0)


def test_spec_ranges_enforced():
    with pytest.raises(ValueError):
        StrokeSpec(StrokeType.FOS, quality=6.0)
    assert StrokeSpec(StrokeType.FOS, impact=(0.9, 2.0)).impact.as_tuple() == (0.5, 1.0)


def test_nearest_centroid_separates_types():
    corpus = make_corpus(100, seed=3)
    X = np.array([extract_class_features(s).values.reshape(-1) for s in corpus])
    y = np.array([s.labels.stroke_type.value for s in corpus])
    mu, sd = X.mean(axis=0), X.std(axis=0) + 1e-12
    Z = (X - mu) / sd
    rng = np.random.default_rng(0)
    test = rng.random(len(y)) < 0.3
    labels = sorted(set(y))
    centroids = np.array([Z[~test & (y == c)].mean(axis=0) for c in labels])
    pred = np.array(labels)[np.argmin(((Z[test, None, :] - centroids[None]) ** 2).sum(-1), axis=1)]
    assert np.mean(pred == y[test]) >= 0.90


def test_config_seed_controls_noise():
    spec = StrokeSpec(StrokeType.BOC)
    a = gen_stroke(spec, SynthConfig(seed=1))
    b = gen_stroke(spec, SynthConfig(seed=2))
    assert not np.array_equal(a.imu, b.imu)
