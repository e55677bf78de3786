
import numpy as np
import pytest

from oracles import ADVICE_CELLS, advice_cell, normalize_ratings_reference
from strokekit.errors import ConfigurationError, SchemaError
from strokekit.features import SCHEMA_HASHES
from strokekit.models import TrainConfig, train_svr
from strokekit.pipeline import (
    DEFAULT_RULES,
    analyze_segment,
    analyze_session,
    augment_corpus,
    augment_segment,
    classify_stroke,
    estimate_impact,
    fire_rules,
    generate_advice,
    load_bundle,
    normalize_ratings,
    rate_stroke,
    save_bundle,
)
from strokekit.report import StrokeResult
from strokekit.segmentation import detect_candidates
from strokekit.signal import Signal1D
from strokekit.pipeline.training import build_table, fit_raters
from strokekit.synth import StrokeSpec, gen_session, gen_stroke, make_corpus, random_session
from strokekit.types import NS_PER_MS, ImpactPoint, SessionRecording, StrokeSegment, StrokeType

# -- advice ---------------------------------------------------------------------

@pytest.mark.parametrize("stroke,h,v,q", ADVICE_CELLS)
def test_advice_table(stroke, h, v, q):
    impact, expected = advice_cell(stroke, h, v, q)
    assert fire_rules(StrokeType(stroke), q, impact) == expected
    advice = generate_advice(StrokeType(stroke), q, impact)
    assert len(advice) == len(expected) and all(advice)


def test_advice_examples():
    assert fire_rules(StrokeType.FOS, 4.5, ImpactPoint(0.0, 0.60)) == ["praise"]
    for y in (0.50, 0.62, 0.75):
        assert not any(k.startswith("location") for k in fire_rules(StrokeType.FOS, 4.0, ImpactPoint(0, y)))
    assert fire_rules(StrokeType.FOD, 4.0, ImpactPoint(0.0, 0.55)) == ["location.higher"]
    assert "technique.FOC" in fire_rules(StrokeType.FOC, 2.1, ImpactPoint(0.0, 0.60))
    assert "higher" in generate_advice(StrokeType.FOD, 4.0, ImpactPoint(0.0, 0.55))[0]


def test_advice_rule_table_is_replaceable():
    rules = dict(DEFAULT_RULES, praise="nice {name}")
    assert generate_advice(StrokeType.BOC, 4.0, ImpactPoint(0.0, 0.4), rules=rules) == [
        "nice backhand overhead clear"]


# -- rating normalisation ----------------------------------------------------------

def test_offset_assessor_gets_identical_scores():
    a = np.array([1, 2, 3, 4, 2, 3], dtype=float)
    r = normalize_ratings(np.column_stack([a, a + 1]))
    np.testing.assert_allclose(r.assessor_scores[:, 0], r.assessor_scores[:, 1], atol=1e-12, rtol=0)


def test_identical_assessors_reproduce_raw_ratings():
    a = np.array([1, 5, 3, 4, 2, 3], dtype=float)
    r = normalize_ratings(np.column_stack([a, a, a]))
    np.testing.assert_allclose(r.targets, a, atol=1e-12)


def test_normalisation_matches_reference(rng):
    raw = rng.integers(1, 6, size=(12, 3)).astype(float)
    raw[2, 1] = np.nan
    raw[7, 0] = np.nan
    raw[:, 2] = 4.0  # one assessor never varies: centred only
    raw[5, 2] = np.nan
    r = normalize_ratings(raw)
    np.testing.assert_allclose(r.targets, normalize_ratings_reference(raw), atol=1e-12, rtol=0)


def test_column_offset_leaves_consensus_unchanged(rng):
    raw = rng.integers(1, 5, size=(10, 4)).astype(float)
    shifted = raw.copy()
    shifted[:, 2] += 1.0
    a, b = normalize_ratings(raw), normalize_ratings(shifted)
    np.testing.assert_allclose(a.consensus, b.consensus, atol=1e-12)
    np.testing.assert_allclose(np.diff(a.targets), np.diff(b.targets), atol=1e-12)


def test_normalisation_errors():
    with pytest.raises(ValueError):
        normalize_ratings(np.array([[3.0, np.nan], [np.nan, np.nan]]))
    with pytest.raises(ValueError):
        normalize_ratings(np.array([[6.0, 3.0]]))


# -- augmentation -------------------------------------------------------------------

def _stroke(t=StrokeType.FOS, q=4.0, impact=(0.0, 0.65), seed=0):
    rng = np.random.default_rng(seed)
    return gen_stroke(StrokeSpec(t, q, ImpactPoint(*impact)), rng=rng, source_id=0)


def test_augment_counts_labels_and_determinism():
    s = _stroke()
    out = augment_corpus([s], np.random.default_rng(1))
    assert len(out) == 4 and out[0] is s
    for v in out[1:]:
        assert v.augmented and v.labels == s.labels and v.source_id == s.source_id
        assert v.imu.shape == s.imu.shape
    a = augment_segment(s, np.random.default_rng(5))
    b = augment_segment(s, np.random.default_rng(5))
    assert all(np.array_equal(x.imu, y.imu) for x, y in zip(a, b))


def test_augment_identity_parameters():
    s = _stroke()
    (v,) = augment_segment(s, np.random.default_rng(0), 1, shift_ms=0.0, scale=1.0, noise_fraction=0.0)
    np.testing.assert_array_equal(v.imu, s.imu)


def test_augmented_variants_stay_centred():
    s = _stroke()
    for v in augment_segment(s, np.random.default_rng(2), n_variants=10):
        (c,) = detect_candidates(Signal1D(v.imu[4], 100.0))
        centre_ns = 1000 * NS_PER_MS  # window midpoint
        assert abs(c.center_ns - centre_ns) <= 150 * NS_PER_MS


# -- per-stroke analysis -------------------------------------------------------------

def test_classify_and_confidence(bundle):
    st, conf = classify_stroke(_stroke(StrokeType.FOS, seed=3), bundle.classifier)
    assert st is StrokeType.FOS and 0.0 <= conf <= 1.0
    zero = StrokeSegment(np.zeros((6, 200)), np.zeros(32000))
    st0, conf0 = classify_stroke(zero, bundle.classifier)
    assert st0 in StrokeType.ordered() and conf0 < 0.3
    r = analyze_segment(zero, bundle)
    assert r.low_confidence


def test_classifier_batch_accuracy(bundle):
    rng = np.random.default_rng(77)
    hits = 0
    types = StrokeType.ordered()
    for i in range(40):
        t = types[i % 4]
        s = gen_stroke(StrokeSpec(t, float(rng.uniform(1, 5)), ImpactPoint(0, 0.6), user_id=i % 6), rng=rng)
        hits += classify_stroke(s, bundle.classifier)[0] is t
    assert hits / 40 >= 0.95


def test_rating_is_close_clamped_and_deterministic(bundle):
    corpus = make_corpus(150, seed=31, types=[StrokeType.FOC])
    raters = {StrokeType.FOC: train_bundle_raters(corpus)}
    s = _stroke(StrokeType.FOC, q=4.0, seed=8)
    q1 = rate_stroke(s, StrokeType.FOC, raters)
    assert q1 == rate_stroke(s, StrokeType.FOC, raters)
    assert abs(q1 - 4.0) <= 0.5
    X = np.random.default_rng(0).normal(size=(5, 4800))
    high = train_svr(X, np.full(5, 5.7), schema_hash=SCHEMA_HASHES["rate"])
    assert rate_stroke(s, StrokeType.FOC, {StrokeType.FOC: high}) == 5.0
    with pytest.raises(ConfigurationError):
        rate_stroke(s, StrokeType.BOC, {})


def test_impact_centre_and_clamp(bundle):
    s = _stroke(StrokeType.FOS, impact=(0.0, 0.65), seed=4)
    p = estimate_impact(s, bundle.impact_x, bundle.impact_y)
    assert abs(p.x) <= 0.15 and abs(p.y - 0.65) <= 0.15
    X = np.random.default_rng(0).normal(size=(5, 1404))
    mx = train_svr(X, np.full(5, 0.8), schema_hash=SCHEMA_HASHES["impact"], task="impact", axis="x")
    my = train_svr(X, np.full(5, 0.5), schema_hash=SCHEMA_HASHES["impact"], task="impact", axis="y")
    assert estimate_impact(s, mx, my).x == 0.5
    ma = train_svr(np.zeros((2, 3)), [0, 1], schema_hash=SCHEMA_HASHES["impact+audio"], task="impact")
    with pytest.raises(ConfigurationError):
        estimate_impact(s, mx, ma)
    with pytest.raises(ConfigurationError):
        estimate_impact(s, mx, my, include_audio=True)


def test_wrong_schema_rejected(bundle):
    s = _stroke()
    with pytest.raises(SchemaError):
        rate_stroke(s, StrokeType.FOS, {StrokeType.FOS: bundle.impact_x})


def test_stroke_result_needs_advice():
    with pytest.raises(ValueError):
        StrokeResult(StrokeType.FOS, 0.5, 3.0, ImpactPoint(0, 0.5), [], 0)


def train_bundle_raters(corpus):
    table = build_table(corpus, "rate", augment=False)
    return fit_raters(table, np.arange(len(corpus)))[StrokeType.FOC]


# -- session analysis ------------------------------------------------------------------

def test_analyze_session_matches_truth(bundle):
    session, truth = random_session(n_strokes=10, n_air=3, duration_s=60.0, seed=21)
    report = analyze_session(session, bundle)
    assert report.stroke_count == 10
    assert report.rejected_candidates == 3
    hits = [t for t in sorted(truth, key=lambda t: t["onset"]) if not t["air_swing"]]
    agree = sum(r.stroke_type.value == t["type"] for r, t in zip(report.timeline, hits))
    assert agree >= 9
    assert sum(report.type_counts.values()) == report.stroke_count


def test_analyze_empty_and_air_swing_only(bundle):
    empty = analyze_session(SessionRecording.empty(), bundle)
    assert empty.stroke_count == 0 and empty.type_counts == {}
    spec = StrokeSpec(StrokeType.FOC, 3.0, ImpactPoint(0, 0.6), onset_time_s=4.0, is_air_swing=True)
    session, _ = gen_session([spec], duration_s=8.0)
    report = analyze_session(session, bundle)
    assert report.stroke_count == 0 and report.rejected_candidates == 1


def test_bundle_round_trip(bundle, tmp_path):
    save_bundle(bundle, tmp_path / "m")
    back = load_bundle(tmp_path / "m")
    s = _stroke(seed=5)
    a, b = analyze_segment(s, bundle), analyze_segment(s, back)
    assert a.to_dict() == b.to_dict()
    with pytest.raises(ConfigurationError):
        load_bundle(tmp_path / "nothing")
