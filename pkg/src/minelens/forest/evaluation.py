"""Stratified cross-validation, ROC/AUC and kernel density estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ModelError
from ..traces.matrix import MINER, FeatureMatrix
from .model import ForestParams, feature_importance, has_splits, predict_proba_matrix, train_forest

CV_SCHEMA_VERSION = 1


def _binary(labels) -> np.ndarray:
    out = []
    for lbl in labels:
        if lbl in (1, True, MINER):
            out.append(1)
        elif lbl in (0, False, "benign"):
            out.append(0)
        else:
            raise ModelError(f"unknown label {lbl!r}", "bad-label")
    return np.asarray(out, dtype=int)


def stratified_kfold(labels: Sequence, k: int = 10, seed: int = 0) -> list[int]:
    """Fold index for every sample.

    Each class is shuffled with a seeded generator and dealt round-robin to
    the folds; the dealing position carries over from one class to the next
    so that leftover samples of different classes land in different folds.
    """
    if k < 2:
        raise ModelError("k must be at least 2", "bad-k")
    labels = list(labels)
    classes = sorted(set(labels), key=str)
    if len(classes) < 2:
        raise ModelError("stratified folds need at least two classes", "single-class")
    rng = np.random.default_rng(seed)
    folds = [0] * len(labels)
    offset = 0
    for cls in classes:
        members = [i for i, lbl in enumerate(labels) if lbl == cls]
        if len(members) < k:
            raise ModelError(f"class {cls!r} has {len(members)} samples, fewer than k={k}", "class-too-small")
        for j, i in enumerate(rng.permutation(members).tolist()):
            folds[i] = (offset + j) % k
        offset = (offset + len(members)) % k
    return folds


def roc_curve(scores: Sequence[float], labels: Sequence) -> list[tuple[float, float]]:
    """(FPR, TPR) points sweeping a threshold down through the distinct scores."""
    y = _binary(labels)
    s = np.asarray(scores, dtype=float)
    if s.shape != y.shape:
        raise ModelError("scores and labels differ in length", "bad-input")
    pos, neg = int(y.sum()), int((1 - y).sum())
    if pos == 0 or neg == 0:
        raise ModelError("ROC needs both classes", "single-class")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1 - y)
    # last position of each run of equal scores
    ends = np.flatnonzero(np.append(s[1:] != s[:-1], True))
    points = [(0.0, 0.0)]
    points += [(fp[e] / neg, tp[e] / pos) for e in ends.tolist()]
    return [(float(a), float(b)) for a, b in points]


def auc(points: Sequence[tuple[float, float]]) -> float:
    """Trapezoidal area under a ROC polyline."""
    return math.fsum((x1 - x0) * (y0 + y1) / 2.0 for (x0, y0), (x1, y1) in zip(points, points[1:]))


def gaussian_kde(values, grid=None, bandwidth: float | None = None, n_grid: int = 256):
    """Gaussian kernel density of ``values`` evaluated on ``grid``.

    The default bandwidth is Scott's rule, ``n**(-1/5)`` times the sample
    standard deviation, floored at ``1e-9 * max(1, |mean|)`` so constant data
    still yields a density. Without a grid, ``n_grid`` points span the data
    padded by three bandwidths. Returns ``(grid, density)``.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ModelError("KDE needs at least two values", "too-few-values")
    mean = float(x.mean())
    if bandwidth is None:
        bandwidth = x.size ** (-0.2) * float(x.std(ddof=1))
    elif bandwidth <= 0:
        raise ModelError("bandwidth must be positive", "bad-bandwidth")
    bw = max(bandwidth, 1e-9 * max(1.0, abs(mean)))
    if grid is None:
        grid = np.linspace(x.min() - 3 * bw, x.max() + 3 * bw, n_grid)
    g = np.asarray(grid, dtype=float)
    z = (g[:, None] - x[None, :]) / bw
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (x.size * bw * math.sqrt(2 * math.pi))
    return g, dens


@dataclass(frozen=True)
class CvReport:
    k: int
    fold_accuracies: tuple[float, ...]
    fold_aucs: tuple[float, ...]
    roc: tuple[tuple[float, float], ...]
    importances: dict[str, float]
    warnings: tuple[str, ...] = field(default=())

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def auc_mean(self) -> float:
        return float(np.mean(self.fold_aucs))

    @property
    def auc_std(self) -> float:
        # population std over folds
        return float(np.std(self.fold_aucs))

    @property
    def pooled_auc(self) -> float:
        return auc(self.roc)

    def ranked_importances(self) -> list[tuple[str, float]]:
        return sorted(self.importances.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_dict(self) -> dict:
        return {
            "schema_version": CV_SCHEMA_VERSION,
            "k": self.k,
            "fold_accuracies": list(self.fold_accuracies),
            "mean_accuracy": self.mean_accuracy,
            "fold_aucs": list(self.fold_aucs),
            "auc_mean": self.auc_mean,
            "auc_std": self.auc_std,
            "pooled_auc": self.pooled_auc,
            "roc": [list(p) for p in self.roc],
            "importances": [{"feature": f, "importance": w} for f, w in self.ranked_importances()],
            "warnings": list(self.warnings),
        }


def cross_validate(m: FeatureMatrix, p: ForestParams = ForestParams(), k: int = 10, fold_seed: int | None = None,
                   threads: int | None = None) -> CvReport:
    """Stratified k-fold evaluation, scored at a 0.5 probability threshold.

    Importances come from one more forest fitted on all rows. Folds are drawn
    with ``fold_seed`` (default: the forest seed).
    """
    y = m.y()
    folds = np.asarray(stratified_kfold(y.tolist(), k, p.seed if fold_seed is None else fold_seed))
    scores = np.zeros(m.n_rows)
    accs, aucs = [], []
    for f in range(k):
        test = np.flatnonzero(folds == f)
        train = np.flatnonzero(folds != f)
        model = train_forest(m.rows(train), p, threads)
        prob = predict_proba_matrix(model, m.rows(test))
        scores[test] = prob
        accs.append(float(np.mean((prob > 0.5).astype(int) == y[test])))
        aucs.append(auc(roc_curve(prob, y[test])))
    final = train_forest(m, p, threads)
    warnings = () if has_splits(final) else ("no-splits: importances are all zero",)
    return CvReport(
        k=k,
        fold_accuracies=tuple(accs),
        fold_aucs=tuple(aucs),
        roc=tuple(roc_curve(scores, y)),
        importances=feature_importance(final),
        warnings=warnings,
    )
