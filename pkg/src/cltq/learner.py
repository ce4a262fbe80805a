"""Regularized linear classifiers (hinge for hard decisions, logistic for
posteriors), C grid search and held-out cross-validation predictions.

All models minimize

    (1/n) sum_i loss(y_i, w.x_i + b) + (1/C) * (alpha*|w|_1 + (1-alpha)/2*|w|_2^2)

with y in {-1, +1} and an unpenalized bias, by accelerated proximal gradient
(FISTA with adaptive restart).  The hinge is used in its quadratically
smoothed form so the same solver applies; ``hinge_smoothing`` sets the width
of the quadratic zone.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.special import expit

C_GRID = tuple(10.0 ** i for i in range(-5, 6))


class Kind(str, enum.Enum):
    HARD = "hard"
    SOFT = "soft"


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "logistic"
    C: float = 1.0
    alpha: float = 0.0
    max_iter: int = 10000
    tol: float = 1e-6
    hinge_smoothing: float = 0.1

    def __post_init__(self):
        if self.loss not in ("logistic", "hinge"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if not self.C > 0:
            raise ValueError("C must be > 0")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")

    @property
    def kind(self) -> Kind:
        return Kind.SOFT if self.loss == "logistic" else Kind.HARD


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    kind: Kind
    loss: str
    reg_strength: float
    elastic_alpha: float
    n_iter: int = 0
    converged: bool = True

    def margin(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != len(self.weights):
            raise ValueError(f"dimension mismatch: model has {len(self.weights)}, input {X.shape[-1]}")
        return X @ self.weights + self.bias


def predict_hard(model: LinearModel, x) -> np.ndarray | int:
    """1 iff w.x + b > 0 (a zero margin is negative)."""
    out = (model.margin(x) > 0).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def predict_soft(model: LinearModel, x) -> np.ndarray | float:
    out = expit(model.margin(x))
    return float(out) if np.ndim(out) == 0 else out


def _as_pm1(labels) -> np.ndarray:
    y = np.asarray([int(v) for v in labels], dtype=float)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    return 2.0 * y - 1.0


def _loss_and_grad(z: np.ndarray, loss: str, delta: float):
    """Per-example loss and d loss / d z for margins z = y*f."""
    if loss == "logistic":
        return np.logaddexp(0.0, -z), -expit(-z)
    g = np.where(z >= 1, 0.0, np.where(z > 1 - delta, -(1.0 - z) / delta, -1.0))
    v = np.where(z >= 1, 0.0, np.where(z > 1 - delta, (1.0 - z) ** 2 / (2 * delta),
                                       1.0 - z - delta / 2))
    return v, g


def objective(w: np.ndarray, b: float, X: np.ndarray, y_pm: np.ndarray, cfg: TrainConfig) -> float:
    z = y_pm * (X @ w + b)
    v, _ = _loss_and_grad(z, cfg.loss, cfg.hinge_smoothing)
    lam = 1.0 / cfg.C
    return float(v.mean() + lam * (cfg.alpha * np.abs(w).sum() + 0.5 * (1 - cfg.alpha) * w @ w))


def smooth_gradient(w, b, X, y_pm, cfg: TrainConfig):
    """Gradient of the data term plus the L2 part (the L1 part is handled by prox)."""
    n = len(y_pm)
    z = y_pm * (X @ w + b)
    _, g = _loss_and_grad(z, cfg.loss, cfg.hinge_smoothing)
    r = y_pm * g / n
    return X.T @ r + (1 - cfg.alpha) / cfg.C * w, r.sum()


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def train(vectors, labels, config: TrainConfig = TrainConfig(), *,
          init: Optional[tuple[np.ndarray, float]] = None) -> LinearModel:
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2:
        raise ValueError("vectors must form an (n, L) array")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    y = _as_pm1(labels)
    if len(y) != len(X):
        raise ValueError("vectors and labels differ in length")
    if np.all(y == y[0]):
        raise ValueError("training labels contain a single class")
    cfg = config
    n, d = X.shape
    lam1 = cfg.alpha / cfg.C
    lam2 = (1 - cfg.alpha) / cfg.C
    curv = 0.25 if cfg.loss == "logistic" else 1.0 / cfg.hinge_smoothing
    Xa = np.hstack([X, np.ones((n, 1))])
    lip = curv * np.linalg.eigvalsh(Xa.T @ Xa / n)[-1] + lam2
    step = 1.0 / lip

    def prox_step(w, b):
        gw, gb = smooth_gradient(w, b, X, y, cfg)
        return _soft_threshold(w - step * gw, step * lam1), b - step * gb

    def mapping_norm(w, b):
        w1, b1 = prox_step(w, b)
        return np.sqrt(np.sum((w - w1) ** 2) + (b - b1) ** 2) / step

    w, b = (np.zeros(d), 0.0) if init is None else (np.array(init[0], dtype=float), float(init[1]))
    vw, vb = w.copy(), b
    t = 1.0
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        w_new, b_new = prox_step(vw, vb)
        # gradient-based adaptive restart
        if (vw - w_new) @ (w_new - w) + (vb - b_new) * (b_new - b) > 0:
            t = 1.0
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        mom = (t - 1) / t_new
        vw = w_new + mom * (w_new - w)
        vb = b_new + mom * (b_new - b)
        w, b, t = w_new, b_new, t_new
        if it % 10 == 0 and mapping_norm(w, b) <= cfg.tol:
            converged = True
            break
    return LinearModel(w, float(b), cfg.kind, cfg.loss, cfg.C, cfg.alpha, it, converged)


def stratified_folds(labels, k: int, seed: int = 0) -> np.ndarray:
    """Fold index per example; within each class folds differ in size by at most one."""
    y = np.asarray([int(v) for v in labels])
    if k < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    offset = 0
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if len(idx) < k:
            raise ValueError(f"class {cls} has {len(idx)} examples, fewer than {k} folds")
        folds[rng.permutation(idx)] = (np.arange(len(idx)) + offset) % k
        offset += len(idx)
    return folds


def _fold_accuracy(X, y, folds, f, cfg):
    tr, te = folds != f, folds == f
    model = train(X[tr], y[tr], cfg)
    return float(np.mean(predict_hard(model, X[te]) == y[te]))


def grid_search_C(vectors, labels, loss: str = "hinge", folds: int = 5, *, alpha: float = 0.0,
                  seed: int = 0, grid: Sequence[float] = C_GRID, jobs: int = 1,
                  base: Optional[TrainConfig] = None, return_scores: bool = False):
    """C maximizing mean held-out accuracy over stratified folds; ties go to the smaller C."""
    X = np.asarray(vectors, dtype=float)
    y = np.asarray([int(v) for v in labels])
    fold_of = stratified_folds(y, folds, seed)
    base = base or TrainConfig(loss=loss, alpha=alpha)
    base = replace(base, loss=loss, alpha=alpha)
    grid = sorted(grid)
    jobs_list = [(c, f) for c in grid for f in range(folds)]
    accs = Parallel(n_jobs=jobs)(
        delayed(_fold_accuracy)(X, y, fold_of, f, replace(base, C=c)) for c, f in jobs_list)
    scores = {c: float(np.mean(accs[i * folds:(i + 1) * folds])) for i, c in enumerate(grid)}
    best = grid[0]
    for c in grid[1:]:
        if scores[c] > scores[best]:
            best = c
    return (best, scores) if return_scores else best


@dataclass(frozen=True)
class CvPredictions:
    hard: np.ndarray
    soft: np.ndarray
    labels: np.ndarray
    fold: np.ndarray

    def __post_init__(self):
        n = len(self.labels)
        if not (len(self.hard) == len(self.soft) == len(self.fold) == n):
            raise ValueError("inconsistent lengths")
        if np.any((self.soft < 0) | (self.soft > 1)):
            raise ValueError("posteriors outside [0, 1]")


def _fold_predictions(X, y, folds, f, hard_cfg, soft_cfg):
    tr, te = folds != f, folds == f
    hard = predict_hard(train(X[tr], y[tr], hard_cfg), X[te])
    soft = predict_soft(train(X[tr], y[tr], soft_cfg), X[te])
    return f, hard, soft


def cross_val_predictions(vectors, labels, config: TrainConfig, folds: int = 10, seed: int = 0,
                          *, soft_config: Optional[TrainConfig] = None, jobs: int = 1) -> CvPredictions:
    """Held-out hard decisions from ``config`` and posteriors from ``soft_config``
    (default: a logistic model with the same C), one model pair per fold."""
    X = np.asarray(vectors, dtype=float)
    y = np.asarray([int(v) for v in labels])
    fold_of = stratified_folds(y, folds, seed)
    soft_config = soft_config or TrainConfig(loss="logistic", C=config.C)
    hard = np.zeros(len(y), dtype=np.int64)
    soft = np.zeros(len(y))
    for f, h, s in Parallel(n_jobs=jobs)(
            delayed(_fold_predictions)(X, y, fold_of, f, config, soft_config) for f in range(folds)):
        hard[fold_of == f] = h
        soft[fold_of == f] = s
    return CvPredictions(hard, soft, y, fold_of)
