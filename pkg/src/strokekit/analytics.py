"""Cross-session statistics, rating reliability and model evaluation."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .features import impact_schema
from .models import TrainConfig, kfold_indices, predict_svc_batch, predict_svr_raw
from .pipeline.training import build_table, fit_classifier, fit_impact, fit_raters
from .report import SessionReport
from .types import StrokeSegment, StrokeType

logger = logging.getLogger(__name__)


# -- cumulative statistics ---------------------------------------------------

@dataclass
class CumulativeStats:
    session_count: int = 0
    stroke_count: int = 0
    mean_rating: Optional[float] = None
    type_proportion: dict = field(default_factory=dict)  # omitted types have no strokes
    type_mean_rating: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "session_count": self.session_count,
            "stroke_count": self.stroke_count,
            "mean_rating": self.mean_rating,
            "type_proportion": dict(self.type_proportion),
            "type_mean_rating": dict(self.type_mean_rating),
        }


def summarize(reports: Sequence[SessionReport]) -> CumulativeStats:
    strokes = [r for rep in reports for r in rep.timeline]
    stats = CumulativeStats(session_count=len(reports), stroke_count=len(strokes))
    if not strokes:
        return stats
    stats.mean_rating = sum(r.quality for r in strokes) / len(strokes)
    for st in StrokeType.ordered():
        q = [r.quality for r in strokes if r.stroke_type == st]
        if q:
            stats.type_proportion[st.value] = len(q) / len(strokes)
            stats.type_mean_rating[st.value] = sum(q) / len(q)
    return stats


# -- rating reliability ------------------------------------------------------

def mean_squares(matrix) -> tuple[float, float, float]:
    """(MS_rows, MS_columns, MS_error) of a complete two-way layout without replication."""
    X = np.asarray(matrix, dtype=np.float64)
    n, k = X.shape
    grand = X.mean()
    row_means = X.mean(axis=1)
    col_means = X.mean(axis=0)
    ss_rows = k * np.sum((row_means - grand) ** 2)
    ss_cols = n * np.sum((col_means - grand) ** 2)
    ss_total = np.sum((X - grand) ** 2)
    ss_err = ss_total - ss_rows - ss_cols
    return ss_rows / (n - 1), ss_cols / (k - 1), ss_err / ((n - 1) * (k - 1))


def icc_consistency_k(matrix) -> float:
    """ICC(C,k): two-way model, consistency, mean of k raters.

    ``matrix`` is strokes x assessors and must be complete.
    """
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 2:
        raise ValueError(f"need at least a 2 x 2 ratings matrix, got shape {X.shape}")
    if np.isnan(X).any():
        raise ValueError("ratings matrix has missing entries; ICC(C,k) needs a complete matrix")
    ms_rows, _, ms_err = mean_squares(X)
    if ms_rows == 0:
        raise ValueError("ICC is undefined when every stroke has the same mean rating")
    return float((ms_rows - ms_err) / ms_rows)


# -- classification / regression metrics ------------------------------------

def classification_metrics(y_true, y_pred) -> dict:
    """Accuracy and macro precision / recall / F1.

    Labels are those occurring in either array. A label never predicted (or
    never present) contributes 0 for the undefined ratio, with a warning.
    """
    y_true = np.asarray([str(v) for v in y_true])
    y_pred = np.asarray([str(v) for v in y_pred])
    labels = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
    prec, rec, f1 = [], [], []
    for lab in labels:
        tp = np.sum((y_pred == lab) & (y_true == lab))
        n_pred = np.sum(y_pred == lab)
        n_true = np.sum(y_true == lab)
        if n_pred == 0 or n_true == 0:
            warnings.warn(f"precision/recall undefined for label {lab!r}; counted as 0", RuntimeWarning, stacklevel=2)
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_true if n_true else 0.0
        prec.append(p)
        rec.append(r)
        f1.append(2 * p * r / (p + r) if p + r > 0 else 0.0)
    return {
        "accuracy": float(np.mean(y_true == y_pred)) if y_true.size else float("nan"),
        "precision": float(np.mean(prec)),
        "recall": float(np.mean(rec)),
        "f1": float(np.mean(f1)),
    }


# -- cross-validated evaluation ---------------------------------------------

@dataclass
class MetricsTable:
    task: str
    split: str
    folds: list  # one metrics dict per fold
    mean: dict

    def to_dict(self) -> dict:
        return {"task": self.task, "split": self.split, "folds": self.folds, "mean": self.mean}

    def format(self) -> str:
        keys = list(self.mean)
        lines = ["fold  " + "  ".join(f"{k:>10}" for k in keys)]
        for i, f in enumerate(self.folds):
            lines.append(f"{i:<4}  " + "  ".join(f"{f.get(k, float('nan')):>10.4f}" for k in keys))
        lines.append("mean  " + "  ".join(f"{self.mean[k]:>10.4f}" for k in keys))
        return "\n".join(lines)


def split_sources(segments: Sequence[StrokeSegment], split: str, seed: int, k: int = 5) -> list[np.ndarray]:
    """Test-source indices per fold.

    ``kfold5`` partitions strokes at random; ``leave3users`` partitions users
    into seeded groups of three (a remainder joins the last group) and holds
    one group out per fold.
    """
    n = len(segments)
    if split == "kfold5":
        return kfold_indices(n, k, seed)
    if split == "leave3users":
        users = np.array([-1 if s.user_id is None else s.user_id for s in segments])
        if np.any(users < 0):
            raise ConfigurationError("leave3users needs a user id on every stroke")
        uniq = np.unique(users)
        if uniq.size < 6:
            raise ConfigurationError(f"leave3users needs at least 6 users, dataset has {uniq.size}")
        perm = uniq[np.random.default_rng(seed).permutation(uniq.size)]
        n_groups = uniq.size // 3
        groups = [perm[3 * g : 3 * g + 3] for g in range(n_groups)]
        groups[-1] = perm[3 * (n_groups - 1):]
        return [np.flatnonzero(np.isin(users, g)) for g in groups]
    raise ConfigurationError(f"unknown split {split!r} (expected kfold5 or leave3users)")


def _mean_over_folds(folds: list) -> dict:
    keys = []
    for f in folds:
        keys.extend(k for k in f if k not in keys)
    return {k: float(np.nanmean([f[k] for f in folds if k in f])) for k in keys}


def evaluate(dataset: Sequence[StrokeSegment], task: str, split: str = "kfold5", seed: int = 0,
             config: TrainConfig | None = None, augment: bool = True, include_audio: bool = False) -> MetricsTable:
    """Cross-validated metrics for ``classify``, ``rate`` or ``impact``.

    Augmented copies are generated per source stroke and only ever join the
    training side of the fold their source belongs to; scoring uses original
    strokes only.
    """
    if task not in ("classify", "rate", "impact"):
        raise ConfigurationError(f"unknown task {task!r}")
    folds = split_sources(dataset, split, seed)
    schema = {"classify": "classify", "rate": "rate", "impact": impact_schema(include_audio)}[task]
    table = build_table(dataset, schema, augment, seed)
    all_sources = np.arange(len(dataset))
    results = []
    for test_sources in folds:
        train_rows = table.rows(np.setdiff1d(all_sources, test_sources), include_augmented=True)
        test_rows = table.rows(test_sources, include_augmented=False)
        if test_rows.size == 0 or train_rows.size == 0:
            continue
        if task == "classify":
            results.append(_eval_classify(table, train_rows, test_rows, config))
        elif task == "rate":
            results.append(_eval_rate(table, train_rows, test_rows, config))
        else:
            results.append(_eval_impact(table, train_rows, test_rows, config))
    return MetricsTable(task, split, results, _mean_over_folds(results))


def _eval_classify(table, train_rows, test_rows, config) -> dict:
    present = np.unique(table.stroke_type[train_rows])
    if present.size < 2:
        pred = [present[0]] * test_rows.size
    else:
        model = fit_classifier(table, train_rows, config)
        pred = predict_svc_batch(model, table.X[test_rows])
    return classification_metrics(table.stroke_type[test_rows], pred)


def _eval_rate(table, train_rows, test_rows, config) -> dict:
    raters = fit_raters(table, train_rows, config)
    out = {}
    for st in StrokeType.ordered():
        rows = test_rows[table.stroke_type[test_rows] == st.value]
        if rows.size == 0 or st not in raters:
            continue
        pred = np.clip(predict_svr_raw(raters[st], table.X[rows]), 1.0, 5.0)
        out[f"mae_{st.value}"] = float(np.mean(np.abs(pred - table.quality[rows])))
    # average of the per-type errors
    out["mae"] = float(np.mean([out[k] for k in out])) if out else float("nan")
    return out


def _eval_impact(table, train_rows, test_rows, config) -> dict:
    mx, my = fit_impact(table, train_rows, config)
    px = np.clip(predict_svr_raw(mx, table.X[test_rows]), -0.5, 0.5)
    py = np.clip(predict_svr_raw(my, table.X[test_rows]), 0.0, 1.0)
    ex = float(np.mean(np.abs(px - table.impact[test_rows, 0])))
    ey = float(np.mean(np.abs(py - table.impact[test_rows, 1])))
    return {"mae_x": ex, "mae_y": ey, "mae": (ex + ey) / 2}
