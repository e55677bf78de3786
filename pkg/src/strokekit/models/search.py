"""Grid search over (C, gamma) with k-fold cross-validation."""

from __future__ import annotations

import itertools
from dataclasses import replace

import numpy as np

from .svm import TrainConfig, predict_svc_batch, predict_svr_raw, train_svc, train_svr

C_GRID = (1.0, 10.0, 100.0)
GAMMA_GRID = ("scale", 0.01, 0.1)


def kfold_indices(n: int, k: int, seed: int, groups=None) -> list[np.ndarray]:
    """Test-index arrays for ``k`` folds; samples sharing a group stay together."""
    groups = np.arange(n) if groups is None else np.asarray(groups)
    uniq = np.unique(groups)
    rng = np.random.default_rng(seed)
    perm = uniq[rng.permutation(uniq.size)]
    fold_of = {g: i % k for i, g in enumerate(perm)}
    assign = np.array([fold_of[g] for g in groups])
    return [np.flatnonzero(assign == f) for f in range(k)]


def grid_search(X, y, task: str = "classify", base: TrainConfig | None = None, k: int = 5,
                groups=None, C_grid=C_GRID, gamma_grid=GAMMA_GRID):
    """Return (best_config, scores) where scores maps (C, gamma) to CV score.

    The score is accuracy for classification and negative MAE for regression,
    so larger is always better.
    """
    base = base or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    folds = kfold_indices(len(y), k, base.seed, groups)
    scores = {}
    for C, gamma in itertools.product(C_grid, gamma_grid):
        cfg = replace(base, C=C, gamma=gamma)
        fold_scores = []
        for test in folds:
            if test.size == 0:
                continue
            train = np.setdiff1d(np.arange(len(y)), test)
            if task == "classify":
                model = train_svc(X[train], y[train], cfg)
                pred = np.asarray(predict_svc_batch(model, X[test]))
                fold_scores.append(float(np.mean(pred == np.asarray([str(v) for v in y[test]]))))
            else:
                model = train_svr(X[train], y[train].astype(float), cfg)
                fold_scores.append(-float(np.mean(np.abs(predict_svr_raw(model, X[test]) - y[test]))))
        scores[(C, gamma)] = float(np.mean(fold_scores))
    best = max(scores, key=lambda key: scores[key])
    return replace(base, C=best[0], gamma=best[1]), scores
