"""Per-stroke analysis: classify, rate, locate the impact, advise."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from ..features import SCHEMA_HASHES, feature_vector, impact_schema
from ..models import (
    SvmModel,
    SvrModel,
    load_model,
    predict_svc,
    predict_svr,
    save_model,
    vote_margin,
)
from ..report import SessionReport, StrokeResult
from ..segmentation import SegmentationConfig, segment_session_detailed
from ..types import ImpactPoint, SessionRecording, StrokeSegment, StrokeType, clamp_quality
from .advice import DEFAULT_REGIONS, DEFAULT_RULES, generate_advice

logger = logging.getLogger(__name__)

LOW_CONFIDENCE = 0.3


@dataclass
class ModelBundle:
    classifier: SvmModel
    raters: dict  # StrokeType -> SvrModel
    impact_x: SvrModel
    impact_y: SvrModel
    regions: dict = field(default_factory=lambda: dict(DEFAULT_REGIONS))
    rules: dict = field(default_factory=lambda: dict(DEFAULT_RULES))

    @property
    def include_audio(self) -> bool:
        return self.impact_x.schema_hash == SCHEMA_HASHES["impact+audio"]


BUNDLE_FILES = {"classifier": "classify.json", "impact_x": "impact_x.json", "impact_y": "impact_y.json"}


def rater_file(stroke_type: StrokeType) -> str:
    return f"rate_{StrokeType(stroke_type).value}.json"


def save_bundle(bundle: ModelBundle, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_model(bundle.classifier, d / BUNDLE_FILES["classifier"])
    save_model(bundle.impact_x, d / BUNDLE_FILES["impact_x"])
    save_model(bundle.impact_y, d / BUNDLE_FILES["impact_y"])
    for st, model in bundle.raters.items():
        save_model(model, d / rater_file(st))
    return d


def load_bundle(directory) -> ModelBundle:
    d = Path(directory)
    missing = [name for name in BUNDLE_FILES.values() if not (d / name).exists()]
    if missing:
        raise ConfigurationError(f"model directory {d} is missing {', '.join(missing)}")
    classifier = load_model(d / BUNDLE_FILES["classifier"], SCHEMA_HASHES["classify"])
    raters = {}
    for st in StrokeType.ordered():
        path = d / rater_file(st)
        if path.exists():
            raters[st] = load_model(path, SCHEMA_HASHES["rate"])
    return ModelBundle(classifier, raters, load_model(d / BUNDLE_FILES["impact_x"]),
                       load_model(d / BUNDLE_FILES["impact_y"]))


def classify_stroke(segment: StrokeSegment, svm: SvmModel) -> tuple[StrokeType, float]:
    """Stroke type and normalised vote margin.

    A window without any motion (every axis constant) gets confidence 0.
    """
    x = feature_vector(segment, "classify")
    label, votes = predict_svc(svm, x, SCHEMA_HASHES["classify"])
    confidence = vote_margin(votes)
    if np.all(np.ptp(segment.imu, axis=1) == 0):
        confidence = 0.0
    return StrokeType(label), confidence


def rate_stroke(segment: StrokeSegment, stroke_type: StrokeType, models: dict) -> float:
    stroke_type = StrokeType(stroke_type)
    model = models.get(stroke_type)
    if model is None:
        raise ConfigurationError(f"no rating model for stroke type {stroke_type.value}")
    x = feature_vector(segment, "rate")
    return clamp_quality(predict_svr(model, x, SCHEMA_HASHES["rate"]))


def estimate_impact(segment: StrokeSegment, model_x: SvrModel, model_y: SvrModel,
                    include_audio: Optional[bool] = None) -> ImpactPoint:
    if model_x.schema_hash != model_y.schema_hash:
        raise ConfigurationError(
            f"impact models were trained on different features ({model_x.schema_hash} vs {model_y.schema_hash})"
        )
    model_audio = model_x.schema_hash == SCHEMA_HASHES["impact+audio"]
    if include_audio is not None and include_audio != model_audio:
        raise ConfigurationError(
            f"impact models were trained {'with' if model_audio else 'without'} audio features"
        )
    schema = impact_schema(model_audio)
    x = feature_vector(segment, schema)
    return ImpactPoint(predict_svr(model_x, x, SCHEMA_HASHES[schema]),
                       predict_svr(model_y, x, SCHEMA_HASHES[schema]))


def analyze_segment(segment: StrokeSegment, bundle: ModelBundle) -> StrokeResult:
    stroke_type, confidence = classify_stroke(segment, bundle.classifier)
    quality = rate_stroke(segment, stroke_type, bundle.raters)
    impact = estimate_impact(segment, bundle.impact_x, bundle.impact_y)
    advice = generate_advice(stroke_type, quality, impact, bundle.regions, bundle.rules)
    return StrokeResult(stroke_type, confidence, quality, impact, advice, segment.impact_time_ns,
                        padded=segment.padded, low_confidence=confidence < LOW_CONFIDENCE)


def analyze_session(session: SessionRecording, bundle: ModelBundle,
                    config: SegmentationConfig | None = None) -> SessionReport:
    """Segment a session and analyse every stroke.

    A stroke whose analysis raises is recorded under ``failures`` and left out
    of the timeline; the rest of the session is still processed.
    """
    seg = segment_session_detailed(session, config)
    report = SessionReport(str(session.meta.get("session_id", "")), rejected_candidates=seg.rejected_count)
    for segment in seg.segments:
        try:
            report.timeline.append(analyze_segment(segment, bundle))
        except Exception as exc:  # recorded, never aborts the session
            logger.warning("stroke at %d ns failed: %s", segment.impact_time_ns, exc)
            report.failures.append({"impact_time_ns": int(segment.impact_time_ns), "error": f"{type(exc).__name__}: {exc}"})
    return report
