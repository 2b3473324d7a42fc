"""Random forests over feature matrices."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import ModelError
from ..traces.matrix import FeatureMatrix
from .tree import DecisionTree, grow_tree

MODEL_SCHEMA_VERSION = 1
THREADS_ENV = "MINELENS_THREADS"


def thread_count(default: int = 1) -> int:
    """Worker threads allowed by ``MINELENS_THREADS`` (at least 1)."""
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: str | int = "sqrt"  # "sqrt", "all" or an explicit count
    max_depth: int | None = None
    min_samples_leaf: int = 1
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ModelError("n_trees must be at least 1", "bad-params")
        if self.min_samples_leaf < 1:
            raise ModelError("min_samples_leaf must be at least 1", "bad-params")
        if self.max_depth is not None and self.max_depth < 0:
            raise ModelError("max_depth must be non-negative", "bad-params")
        mf = self.max_features
        if not (mf in ("sqrt", "all") or (isinstance(mf, int) and not isinstance(mf, bool) and mf >= 1)):
            raise ModelError(f"max_features must be 'sqrt', 'all' or a positive count, got {mf!r}", "bad-params")

    def features_per_split(self, n_columns: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(n_columns)))
        if self.max_features == "all":
            return n_columns
        if self.max_features > n_columns:
            raise ModelError(f"max_features={self.max_features} exceeds {n_columns} columns", "bad-params")
        return int(self.max_features)


@dataclass(frozen=True, eq=False)
class ForestModel:
    params: ForestParams
    columns: tuple[str, ...]
    trees: tuple[DecisionTree, ...]
    oob: tuple[tuple[int, ...], ...]  # training rows left out of each tree's sample

    def to_dict(self) -> dict:
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "params": asdict(self.params),
            "columns": list(self.columns),
            "trees": [t.to_dict() for t in self.trees],
            "oob": [list(o) for o in self.oob],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: dict) -> "ForestModel":
        if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
            raise ModelError(f"unsupported model schema_version {doc.get('schema_version')!r}", "bad-schema-version")
        try:
            return cls(
                params=ForestParams(**doc["params"]),
                columns=tuple(doc["columns"]),
                trees=tuple(DecisionTree.from_dict(t) for t in doc["trees"]),
                oob=tuple(tuple(o) for o in doc.get("oob", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model document: {exc}", "bad-model") from exc


def load_model(path) -> ForestModel:
    try:
        with open(path, encoding="utf-8") as fh:
            return ForestModel.from_dict(json.load(fh))
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc}", "unreadable") from exc
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: {exc}", "bad-json") from exc


def _tree_seed(seed: int, i: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, i])


def train_forest(m: FeatureMatrix, p: ForestParams = ForestParams(), threads: int | None = None) -> ForestModel:
    """Fit ``p.n_trees`` Gini trees; the result depends only on the data and ``p``, never on ``threads``."""
    if m.n_rows == 0 or not m.columns:
        raise ModelError("cannot train on an empty matrix", "empty-matrix")
    if np.isnan(m.values).any():
        raise ModelError("training matrix has missing values", "missing-values")
    y = m.y()
    if len(set(y.tolist())) < 2:
        raise ModelError("training data holds a single class", "single-class")
    X = np.ascontiguousarray(m.values, dtype=float)
    n = X.shape[0]
    k = p.features_per_split(X.shape[1])

    def fit(i):
        rng = np.random.default_rng(_tree_seed(p.seed, i))
        if p.bootstrap:
            draw = rng.integers(0, n, n)
            w = np.bincount(draw, minlength=n).astype(float)
        else:
            w = np.ones(n)
        tree = grow_tree(X, y, w, k, rng, p.max_depth, p.min_samples_leaf)
        return tree, tuple(np.flatnonzero(w == 0).tolist())

    workers = threads if threads is not None else thread_count()
    if workers > 1 and p.n_trees > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fitted = list(pool.map(fit, range(p.n_trees)))
    else:
        fitted = [fit(i) for i in range(p.n_trees)]
    return ForestModel(p, m.columns, tuple(t for t, _ in fitted), tuple(o for _, o in fitted))


def _aligned(model: ForestModel, columns: Sequence[str], X: np.ndarray) -> np.ndarray:
    if tuple(columns) == model.columns:
        return X
    pos = {c: j for j, c in enumerate(columns)}
    missing = [c for c in model.columns if c not in pos]
    if missing:
        raise ModelError(f"input lacks model columns: {', '.join(missing[:5])}", "column-mismatch")
    return X[:, [pos[c] for c in model.columns]]


def predict_proba_matrix(model: ForestModel, m: FeatureMatrix) -> np.ndarray:
    X = _aligned(model, m.columns, m.values)
    if np.isnan(X).any():
        raise ModelError("prediction input has missing values", "missing-values")
    return np.mean([t.predict_proba(X) for t in model.trees], axis=0)


def predict_proba(model: ForestModel, row) -> float:
    """Mean over trees of the miner share in the reached leaf.

    ``row`` is a mapping of column name to value, or a sequence in the
    model's column order.
    """
    if isinstance(row, Mapping):
        missing = [c for c in model.columns if c not in row]
        if missing:
            raise ModelError(f"row lacks model columns: {', '.join(missing[:5])}", "column-mismatch")
        x = np.array([[float(row[c]) for c in model.columns]])
    else:
        x = np.asarray(row, dtype=float).reshape(1, -1)
        if x.shape[1] != len(model.columns):
            raise ModelError(f"row has {x.shape[1]} values, model expects {len(model.columns)}", "column-mismatch")
    return float(np.mean([t.predict_proba(x)[0] for t in model.trees]))


def feature_importance(model: ForestModel) -> dict[str, float]:
    """Gini importance: per-tree impurity decrease by feature, normalized, averaged, renormalized.

    A forest without any split yields all zeros.
    """
    k = len(model.columns)
    per_tree = []
    for t in model.trees:
        imp = np.zeros(k)
        split = t.feature >= 0
        np.add.at(imp, t.feature[split], t.decrease[split])
        total = imp.sum()
        if total > 0:
            per_tree.append(imp / total)
    if not per_tree:
        return {c: 0.0 for c in model.columns}
    avg = np.mean(per_tree, axis=0)
    avg = avg / avg.sum()
    return {c: float(v) for c, v in zip(model.columns, avg)}


def has_splits(model: ForestModel) -> bool:
    return any(t.n_splits for t in model.trees)
