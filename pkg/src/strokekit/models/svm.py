"""One-vs-one C-SVC and epsilon-SVR trained with :mod:`.smo`."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import SchemaError
from .kernels import KernelSpec, kernel_matrix, resolve_gamma
from .scaler import Scaler, fit_scaler
from .smo import SolverResult, solve

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    C: float = 10.0
    gamma: object = "scale"  # float or "scale"
    epsilon: float = 0.1
    tol: float = 1e-3
    max_iter: Optional[int] = None
    seed: int = 0
    kernel: str = "rbf"
    standardize_target: bool = True  # SVR only
    track_objective: bool = False

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")


@dataclass
class BinaryMachine:
    key: object  # (positive_class, negative_class) for SVC, an axis name for SVR
    sv: np.ndarray  # support vectors in scaled feature space
    coef: np.ndarray  # alpha_i * y_i (SVC) or alpha_i - alpha*_i (SVR)
    bias: float

    def decision(self, kernel: KernelSpec, Xs: np.ndarray) -> np.ndarray:
        if self.sv.shape[0] == 0:
            return np.full(Xs.shape[0], self.bias)
        return kernel_matrix(kernel, Xs, self.sv) @ self.coef + self.bias


@dataclass
class SvmModel:
    classes: list
    machines: list
    kernel: KernelSpec
    C: float
    scaler: Scaler
    schema_hash: str = ""
    task: str = "classify"
    diagnostics: list = field(default_factory=list, repr=False)


@dataclass
class SvrModel:
    machine: BinaryMachine
    kernel: KernelSpec
    C: float
    epsilon: float
    scaler: Scaler
    schema_hash: str = ""
    task: str = "rate"
    target_transform: dict = field(default_factory=lambda: {"mean": 0.0, "std": 1.0})
    diagnostics: Optional[SolverResult] = field(default=None, repr=False)

    @property
    def axis(self):
        return self.machine.key


def _canonical_order(X: np.ndarray, y: np.ndarray, seed: int) -> np.ndarray:
    """A permutation that depends only on the multiset of (row, label) and the seed."""
    keys = [X[:, k] for k in range(X.shape[1] - 1, -1, -1)]
    order = np.lexsort([y] + keys)
    return order[np.random.default_rng(seed).permutation(order.size)]


def _prepare(X, config: TrainConfig, schema_hash: str):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"X must be a non-empty 2-D array, got shape {X.shape}")
    if X.shape[0] >= 2:
        scaler = fit_scaler(X)
    else:
        scaler = Scaler(np.zeros(X.shape[1]), np.ones(X.shape[1]))
    Xs = scaler.transform(X)
    gamma = resolve_gamma(config.gamma, Xs) if config.kernel == "rbf" else 0.0
    return Xs, scaler, KernelSpec(config.kernel, gamma)


def check_schema(model, x: np.ndarray, schema_hash: Optional[str]):
    if schema_hash is not None and model.schema_hash and schema_hash != model.schema_hash:
        raise SchemaError(model.schema_hash, schema_hash)
    n = model.scaler.n_features
    if x.shape[-1] != n:
        raise SchemaError(f"{n} features", f"{x.shape[-1]} features", what="feature length")


# -- classification ---------------------------------------------------------

def _train_binary(K: np.ndarray, y: np.ndarray, config: TrainConfig) -> SolverResult:
    Q = (y[:, None] * y[None, :]) * K
    return solve(lambda i: Q[:, i], np.diag(Q).copy(), -np.ones(y.size), y, config.C,
                 config.tol, config.max_iter, config.track_objective)


def train_svc(X, y, config: TrainConfig | None = None, schema_hash: str = "",
              classes: Optional[Sequence] = None) -> SvmModel:
    """Soft-margin kernel SVM, one machine per class pair.

    ``classes`` fixes the class order used for pair orientation and tie-breaks;
    by default it is the sorted set of labels.
    """
    config = config or TrainConfig()
    y = np.asarray([str(getattr(v, "value", v)) for v in y])
    if classes is None:
        classes = sorted(set(y.tolist()))
    else:
        classes = [str(getattr(c, "value", c)) for c in classes]
        present = set(y.tolist())
        classes = [c for c in classes if c in present]
    if len(classes) < 2:
        raise ValueError(f"need at least 2 classes to train a classifier, got {classes}")
    X = np.asarray(X, dtype=np.float64)
    order = _canonical_order(X, np.searchsorted(np.asarray(sorted(classes)), y), config.seed)
    X, y = X[order], y[order]
    Xs, scaler, kernel = _prepare(X, config, schema_hash)
    K = kernel_matrix(kernel, Xs, Xs)

    machines, diagnostics = [], []
    for a, b in itertools.combinations(classes, 2):
        idx = np.flatnonzero((y == a) | (y == b))
        yy = np.where(y[idx] == a, 1.0, -1.0)
        res = _train_binary(K[np.ix_(idx, idx)], yy, config)
        sv = res.alpha > 0
        machines.append(BinaryMachine((a, b), Xs[idx][sv], (res.alpha * yy)[sv], -res.rho))
        diagnostics.append(res)
    return SvmModel(list(classes), machines, kernel, config.C, scaler, schema_hash, "classify", diagnostics)


def decision_values(model: SvmModel, X, schema_hash: Optional[str] = None) -> np.ndarray:
    """(n_samples, n_pairs) pairwise decision values; positive favours the pair's first class."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    check_schema(model, X, schema_hash)
    Xs = model.scaler.transform(X)
    return np.column_stack([m.decision(model.kernel, Xs) for m in model.machines])


def _vote(classes, machines, dec_row):
    votes = dict.fromkeys(classes, 0)
    margin = dict.fromkeys(classes, 0.0)
    for m, d in zip(machines, dec_row):
        a, b = m.key
        # an exact zero casts no vote
        if d > 0:
            votes[a] += 1
            margin[a] += abs(d)
        elif d < 0:
            votes[b] += 1
            margin[b] += abs(d)
    best = max(range(len(classes)), key=lambda k: (votes[classes[k]], margin[classes[k]], -k))
    return classes[best], votes


def predict_svc(model: SvmModel, x, schema_hash: Optional[str] = None):
    """Label of a single sample plus its per-class vote counts.

    Ties on votes go to the class with the larger summed |decision| over the
    pairs it won, then to the earlier class in ``model.classes``.
    """
    dec = decision_values(model, x, schema_hash)[0]
    return _vote(model.classes, model.machines, dec)


def predict_svc_batch(model: SvmModel, X, schema_hash: Optional[str] = None) -> list:
    dec = decision_values(model, X, schema_hash)
    return [_vote(model.classes, model.machines, row)[0] for row in dec]


def vote_margin(votes: dict) -> float:
    """(top - runner-up) votes over the maximum possible, in [0, 1]."""
    counts = sorted(votes.values(), reverse=True)
    k = len(counts)
    if k < 2:
        return 1.0
    return (counts[0] - counts[1]) / (k - 1)


# -- regression -------------------------------------------------------------

def train_svr(X, y, config: TrainConfig | None = None, schema_hash: str = "",
              task: str = "rate", axis: object = "value", target_transform: Optional[dict] = None) -> SvrModel:
    """epsilon-insensitive kernel regression.

    With ``config.standardize_target`` the machine is fit on z-scored targets
    (epsilon is then in target-std units) and predictions are mapped back.
    """
    config = config or TrainConfig()
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError(f"need at least 2 samples to train a regressor, got shape {X.shape}")
    if X.shape[0] != y.size:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} targets")
    order = _canonical_order(X, y, config.seed)
    X, y = X[order], y[order]
    transform = dict(target_transform or {})
    mean, std = 0.0, 1.0
    if config.standardize_target:
        mean = float(y.mean())
        std = float(y.std())
        if std <= 1e-12 * max(1.0, abs(mean)):
            std = 1.0
    transform["mean"], transform["std"] = mean, std
    t = (y - mean) / std
    Xs, scaler, kernel = _prepare(X, config, schema_hash)
    n = t.size
    K = kernel_matrix(kernel, Xs, Xs)
    sign = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([config.epsilon - t, config.epsilon + t])
    diag = np.concatenate([np.diag(K), np.diag(K)])

    def column(i):
        k = K[:, i % n]
        return sign[i] * sign * np.concatenate([k, k])

    res = solve(column, diag, p, sign, config.C, config.tol, config.max_iter, config.track_objective)
    coef = res.alpha[:n] - res.alpha[n:]
    sv = coef != 0
    machine = BinaryMachine(axis, Xs[sv], coef[sv], -res.rho)
    return SvrModel(machine, kernel, config.C, config.epsilon, scaler, schema_hash, task, transform, res)


def predict_svr_raw(model: SvrModel, X, schema_hash: Optional[str] = None) -> np.ndarray:
    """Predictions in target units for each row of ``X`` (no clamping)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    check_schema(model, X, schema_hash)
    z = model.machine.decision(model.kernel, model.scaler.transform(X))
    return z * model.target_transform.get("std", 1.0) + model.target_transform.get("mean", 0.0)


def predict_svr(model: SvrModel, x, schema_hash: Optional[str] = None) -> float:
    return float(predict_svr_raw(model, x, schema_hash)[0])
