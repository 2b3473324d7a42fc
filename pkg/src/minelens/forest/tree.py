"""Binary CART trees with Gini impurity, stored as flat node arrays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass(frozen=True, eq=False)
class DecisionTree:
    feature: np.ndarray  # int, LEAF for leaves
    threshold: np.ndarray  # go left when x <= threshold
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2) training counts per class [benign, miner]
    decrease: np.ndarray  # weighted Gini decrease at each split, 0 at leaves

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_splits(self) -> int:
        return int((self.feature != LEAF).sum())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        c = self.counts[self.apply(X)]
        return c[:, 1] / c.sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
            "decrease": self.decrease.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            counts=np.asarray(d["counts"], dtype=float).reshape(-1, 2),
            decrease=np.asarray(d["decrease"], dtype=float),
        )


def _weighted_gini(c0, c1):
    """n * gini for class counts (float arrays)."""
    n = c0 + c1
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, n - (c0 * c0 + c1 * c1) / np.where(n > 0, n, 1), 0.0)


def best_split(x: np.ndarray, y: np.ndarray, w: np.ndarray, min_leaf: int):
    """Lowest child impurity split of one feature: (impurity, threshold) or None.

    Candidate thresholds are midpoints between consecutive distinct values;
    among equal impurities the lowest threshold wins.
    """
    order = np.argsort(x, kind="stable")
    xs, ys, ws = x[order], y[order], w[order]
    distinct = xs[1:] > xs[:-1]
    if not distinct.any():
        return None
    c1 = np.cumsum(ws * ys)
    c0 = np.cumsum(ws * (1 - ys))
    n_left = np.cumsum(ws)
    tot0, tot1, tot = c0[-1], c1[-1], n_left[-1]
    l0, l1, nl = c0[:-1], c1[:-1], n_left[:-1]
    valid = distinct & (nl >= min_leaf) & (tot - nl >= min_leaf)
    if not valid.any():
        return None
    imp = _weighted_gini(l0, l1) + _weighted_gini(tot0 - l0, tot1 - l1)
    imp = np.where(valid, imp, np.inf)
    i = int(np.argmin(imp))
    a, b = xs[i], xs[i + 1]
    thr = a / 2.0 + b / 2.0
    if not a <= thr < b:
        thr = a
    return float(imp[i]), float(thr)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    max_features: int,
    rng: np.random.Generator,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
) -> DecisionTree:
    """Grow one tree on rows with positive ``weights`` (bootstrap multiplicities).

    At each node ``max_features`` columns are drawn; if none of them admits a
    split the draw continues through the remaining columns. Equal impurities
    are resolved towards the lower column index.
    """
    n_features = X.shape[1]
    feature, threshold, left, right, counts, decrease = [], [], [], [], [], []

    def new_node(idx):
        w = weights[idx]
        c = [float(w[y[idx] == 0].sum()), float(w[y[idx] == 1].sum())]
        for lst, v in ((feature, LEAF), (threshold, 0.0), (left, LEAF), (right, LEAF), (counts, c), (decrease, 0.0)):
            lst.append(v)
        return len(feature) - 1

    root_idx = np.flatnonzero(weights > 0)
    stack = [(new_node(root_idx), root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        c0, c1 = counts[node]
        n = c0 + c1
        if c0 == 0 or c1 == 0 or n < 2 * min_samples_leaf or (max_depth is not None and depth >= max_depth):
            continue
        xi, yi, wi = X[idx], y[idx], weights[idx]
        perm = rng.permutation(n_features)
        best = None  # (impurity, feature, threshold)
        for start in range(0, n_features, max_features):
            for f in sorted(perm[start:start + max_features].tolist()):
                s = best_split(xi[:, f], yi, wi, min_samples_leaf)
                if s is None:
                    continue
                cand = (s[0], f, s[1])
                if best is None or cand < best:
                    best = cand
            if best is not None:
                break
        if best is None:
            continue
        imp, f, thr = best
        go_left = xi[:, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        ln, rn = new_node(li), new_node(ri)
        feature[node], threshold[node], left[node], right[node] = f, thr, ln, rn
        decrease[node] = float(_weighted_gini(np.float64(c0), np.float64(c1)) - imp)
        # right pushed first so the left subtree is expanded first
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        counts=np.asarray(counts, dtype=float).reshape(-1, 2),
        decrease=np.maximum(np.asarray(decrease, dtype=float), 0.0),
    )
