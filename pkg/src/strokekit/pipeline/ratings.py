from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RatingNormalization:
    targets: np.ndarray  # per-stroke continuous target on the 1-5 scale
    consensus: np.ndarray  # per-stroke mean of assessor z-scores
    assessor_scores: np.ndarray  # each rating on the common scale, NaN where missing
    assessor_means: np.ndarray
    assessor_stds: np.ndarray  # 0 where an assessor never varied (those are only centred)
    pooled_mean: float
    pooled_std: float

    def params(self) -> dict:
        return {"pooled_mean": self.pooled_mean, "pooled_std": self.pooled_std}


def normalize_ratings(raw) -> RatingNormalization:
    """Turn an (n_strokes, n_assessors) score matrix into per-stroke targets.

    Missing entries are NaN. Each assessor's scores are z-scored against that
    assessor's own mean and std, averaged per stroke, and mapped back to the
    rating scale with the mean of assessor means and the pooled
    within-assessor std, then clamped to [1, 5]. Because only deviations from
    each assessor's own mean enter, an assessor whose scores are another's
    plus a constant gets identical ``assessor_scores``, and an offset on one
    column leaves ``consensus`` unchanged (targets move together by
    offset / n_assessors through the anchor).
    """
    R = np.asarray(raw, dtype=np.float64)
    if R.ndim != 2 or R.size == 0:
        raise ValueError(f"ratings must be a non-empty 2-D matrix, got shape {R.shape}")
    present = ~np.isnan(R)
    empty_rows = np.flatnonzero(~present.any(axis=1))
    if empty_rows.size:
        raise ValueError(f"stroke(s) {empty_rows.tolist()} have no ratings")
    vals = R[present]
    if np.any((vals < 1) | (vals > 5)):
        raise ValueError("ratings must lie in [1, 5]")

    used = present.any(axis=0)
    counts = present.sum(axis=0)
    means = np.where(used, np.nansum(R, axis=0) / np.maximum(counts, 1), np.nan)
    dev = np.where(present, R - means, 0.0)
    stds = np.sqrt((dev * dev).sum(axis=0) / np.maximum(counts, 1))
    stds = np.where(stds > 1e-12, stds, 0.0)
    z = np.where(present, dev / np.where(stds > 0, stds, 1.0), np.nan)
    consensus = np.nanmean(z, axis=1)

    pooled_mean = float(np.mean(means[used]))
    pooled_std = float(np.sqrt((dev * dev).sum() / present.sum()))
    targets = np.clip(pooled_mean + pooled_std * consensus, 1.0, 5.0)
    scores = pooled_mean + pooled_std * z
    return RatingNormalization(targets, consensus, scores, means, stds, pooled_mean, pooled_std)
