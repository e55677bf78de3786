"""Model training from labelled stroke segments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..features import SCHEMA_HASHES, feature_vector, impact_schema
from ..models import TrainConfig, grid_search, train_svc, train_svr
from ..types import StrokeSegment, StrokeType
from .analysis import BUNDLE_FILES, ModelBundle, rater_file
from .augment import augment_segment


@dataclass
class FeatureTable:
    """Feature rows for originals and their augmented variants, with labels."""

    X: np.ndarray
    source: np.ndarray  # index of the original segment each row came from
    augmented: np.ndarray
    user: np.ndarray
    stroke_type: np.ndarray  # str labels ("" when unlabelled)
    quality: np.ndarray
    impact: np.ndarray  # (n, 2)
    schema: str

    def rows(self, sources, include_augmented: bool) -> np.ndarray:
        mask = np.isin(self.source, np.asarray(list(sources)))
        if not include_augmented:
            mask &= ~self.augmented
        return np.flatnonzero(mask)


def with_augmentations(segments: Sequence[StrokeSegment], augment: bool, seed: int):
    """(segment, source index) pairs; variants are seeded per source so folds agree."""
    out = []
    for i, seg in enumerate(segments):
        out.append((seg, i))
        if augment:
            rng = np.random.default_rng([seed, 3, i])
            out.extend((v, i) for v in augment_segment(seg, rng))
    return out


def build_table(segments: Sequence[StrokeSegment], schema: str, augment: bool = True, seed: int = 0) -> FeatureTable:
    items = with_augmentations(segments, augment, seed)
    X = np.array([feature_vector(seg, schema) for seg, _ in items])
    labels = [seg.labels for seg, _ in items]
    return FeatureTable(
        X=X,
        source=np.array([i for _, i in items]),
        augmented=np.array([seg.augmented for seg, _ in items], dtype=bool),
        user=np.array([-1 if seg.user_id is None else seg.user_id for seg, _ in items]),
        stroke_type=np.array(["" if l.stroke_type is None else StrokeType(l.stroke_type).value for l in labels]),
        quality=np.array([np.nan if l.quality is None else l.quality for l in labels], dtype=float),
        impact=np.array([(np.nan, np.nan) if l.impact is None else l.impact.as_tuple() for l in labels], dtype=float),
        schema=schema,
    )


def fit_classifier(table: FeatureTable, rows, config: TrainConfig | None = None, search: bool = False):
    X, y = table.X[rows], table.stroke_type[rows]
    if search:
        config, _ = grid_search(X, y, "classify", config, groups=table.source[rows])
    return train_svc(X, y, config, SCHEMA_HASHES[table.schema], classes=[t.value for t in StrokeType.ordered()])


def fit_raters(table: FeatureTable, rows, config: TrainConfig | None = None, search: bool = False,
               targets: Optional[np.ndarray] = None, target_params: Optional[dict] = None) -> dict:
    """One regressor per stroke type present in ``rows``."""
    q = table.quality if targets is None else targets
    raters = {}
    for st in StrokeType.ordered():
        r = rows[table.stroke_type[rows] == st.value]
        if r.size < 2:
            continue
        cfg = config
        if search:
            cfg, _ = grid_search(table.X[r], q[r], "rate", config, groups=table.source[r])
        raters[st] = train_svr(table.X[r], q[r], cfg, SCHEMA_HASHES["rate"], task="rate", axis=st.value,
                               target_transform=target_params)
    return raters


def fit_impact(table: FeatureTable, rows, config: TrainConfig | None = None, search: bool = False):
    models = []
    for k, axis in enumerate(("x", "y")):
        cfg = config
        if search:
            cfg, _ = grid_search(table.X[rows], table.impact[rows, k], "impact", config, groups=table.source[rows])
        models.append(train_svr(table.X[rows], table.impact[rows, k], cfg, SCHEMA_HASHES[table.schema],
                                task="impact", axis=axis))
    return tuple(models)


def train_bundle(segments: Sequence[StrokeSegment], config: TrainConfig | None = None, augment: bool = True,
                 include_audio: bool = False, seed: int = 0, search: bool = False) -> ModelBundle:
    """Train every model the session analysis needs from one labelled corpus."""
    cls_table = build_table(segments, "classify", augment, seed)
    all_rows = np.arange(cls_table.X.shape[0])
    classifier = fit_classifier(cls_table, all_rows, config, search)
    rate_table = build_table(segments, "rate", augment, seed)
    raters = fit_raters(rate_table, all_rows, config, search)
    imp_table = build_table(segments, impact_schema(include_audio), augment, seed)
    mx, my = fit_impact(imp_table, all_rows, config, search)
    return ModelBundle(classifier, raters, mx, my)


def train_task(segments: Sequence[StrokeSegment], task: str, config: TrainConfig | None = None,
               augment: bool = True, include_audio: bool = False, seed: int = 0, search: bool = False) -> dict:
    """Models for one task keyed by their bundle file name."""
    if task == "classify":
        table = build_table(segments, "classify", augment, seed)
        return {BUNDLE_FILES["classifier"]: fit_classifier(table, np.arange(table.X.shape[0]), config, search)}
    if task == "rate":
        table = build_table(segments, "rate", augment, seed)
        raters = fit_raters(table, np.arange(table.X.shape[0]), config, search)
        return {rater_file(st): m for st, m in raters.items()}
    if task == "impact":
        table = build_table(segments, impact_schema(include_audio), augment, seed)
        mx, my = fit_impact(table, np.arange(table.X.shape[0]), config, search)
        return {BUNDLE_FILES["impact_x"]: mx, BUNDLE_FILES["impact_y"]: my}
    raise ValueError(f"unknown task {task!r} (expected classify, rate or impact)")
