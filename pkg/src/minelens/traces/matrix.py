"""Feature matrices and the variance and correlation column filters."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from ..errors import InputError, TraceError
from .events import METRICS, MetricTrace
from .stats import STATISTICS, summarize

MINER = "miner"
BENIGN = "benign"
LABELS = (MINER, BENIGN)

FEATURE_NAMES = tuple(f"{m}|{s}" for m in METRICS for s in STATISTICS)
LOW_VARIANCE = "low-variance"
CORRELATED = "correlated-with:"
MATRIX_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class FilterLogEntry:
    feature: str
    reason: str
    value: float  # scaled variance for low-variance, Pearson r for correlated

    def to_dict(self) -> dict:
        return {"feature": self.feature, "reason": self.reason, "value": self.value}


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    app_ids: tuple[str, ...]
    labels: tuple[str | None, ...]
    columns: tuple[str, ...]
    values: np.ndarray  # rows x columns, NaN where missing
    filter_log: tuple[FilterLogEntry, ...] = ()
    missing_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (len(self.app_ids), len(self.columns)):
            raise InputError(f"matrix shape {self.values.shape} does not match rows/columns", "bad-matrix")

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.app_ids == other.app_ids
            and self.labels == other.labels
            and self.columns == other.columns
            and self.filter_log == other.filter_log
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    @property
    def n_rows(self) -> int:
        return len(self.app_ids)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def y(self) -> np.ndarray:
        """1 for miner rows, 0 for benign; unlabeled rows are an error."""
        if any(lbl not in LABELS for lbl in self.labels):
            raise InputError("matrix has unlabeled rows", "unlabeled")
        return np.array([1 if lbl == MINER else 0 for lbl in self.labels], dtype=int)

    def select(self, keep: Iterable[int], log: Iterable[FilterLogEntry] = ()) -> "FeatureMatrix":
        keep = list(keep)
        return replace(
            self,
            columns=tuple(self.columns[i] for i in keep),
            values=self.values[:, keep],
            filter_log=self.filter_log + tuple(log),
        )

    def with_labels(self, labels: Iterable[str | None]) -> "FeatureMatrix":
        labels = tuple(labels)
        if len(labels) != self.n_rows:
            raise InputError("label count does not match rows", "bad-labels")
        return replace(self, labels=labels)

    def rows(self, idx) -> "FeatureMatrix":
        idx = list(idx)
        return replace(
            self,
            app_ids=tuple(self.app_ids[i] for i in idx),
            labels=tuple(self.labels[i] for i in idx),
            values=self.values[idx, :],
        )

    # serialization

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["app_id", "label", *self.columns])
        for app, lbl, row in zip(self.app_ids, self.labels, self.values):
            w.writerow([app, lbl or "", *(("" if math.isnan(v) else repr(float(v))) for v in row)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "schema_version": MATRIX_SCHEMA_VERSION,
            "columns": list(self.columns),
            "rows": [
                {"app_id": a, "label": lbl, "values": [None if math.isnan(v) else float(v) for v in row]}
                for a, lbl, row in zip(self.app_ids, self.labels, self.values)
            ],
            "filter_log": [e.to_dict() for e in self.filter_log],
            "missing_counts": {k: self.missing_counts[k] for k in self.columns if k in self.missing_counts},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureMatrix":
        try:
            if doc.get("schema_version") != MATRIX_SCHEMA_VERSION:
                raise InputError(f"unsupported matrix schema_version {doc.get('schema_version')!r}", "bad-schema-version")
            columns = tuple(doc["columns"])
            rows = doc["rows"]
            values = np.array(
                [[np.nan if v is None else float(v) for v in r["values"]] for r in rows], dtype=float
            ).reshape(len(rows), len(columns))
            return cls(
                app_ids=tuple(r["app_id"] for r in rows),
                labels=tuple(r.get("label") for r in rows),
                columns=columns,
                values=values,
                filter_log=tuple(FilterLogEntry(e["feature"], e["reason"], e["value"]) for e in doc.get("filter_log", [])),
                missing_counts=dict(doc.get("missing_counts", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed feature matrix: {exc}", "bad-matrix") from exc

    @classmethod
    def from_csv(cls, text: str) -> "FeatureMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:2] != ["app_id", "label"]:
            raise InputError("feature CSV must start with app_id,label", "bad-header")
        columns = tuple(rows[0][2:])
        body = rows[1:]
        try:
            values = np.array([[float(v) if v != "" else np.nan for v in r[2:]] for r in body], dtype=float)
        except ValueError as exc:
            raise InputError(f"non-numeric feature value: {exc}", "bad-matrix") from exc
        return cls(
            app_ids=tuple(r[0] for r in body),
            labels=tuple(r[1] or None for r in body),
            columns=columns,
            values=values.reshape(len(body), len(columns)),
        )


def load_matrix(path) -> FeatureMatrix:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}", "unreadable") from exc
    if str(path).endswith(".csv"):
        return FeatureMatrix.from_csv(text)
    try:
        return FeatureMatrix.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}", "bad-json") from exc


def _label_map(labels) -> dict[str, str | None]:
    pairs = labels.items() if isinstance(labels, Mapping) else labels
    out: dict[str, str | None] = {}
    for app, lbl in pairs:
        if lbl is not None and lbl not in LABELS:
            raise TraceError(f"unknown label {lbl!r} for {app!r}", "bad-label")
        if app in out and out[app] != lbl:
            raise TraceError(f"conflicting labels for {app!r}: {out[app]!r} vs {lbl!r}", "conflicting-labels")
        out[app] = lbl
    return out


def build_matrix(traces: Iterable[MetricTrace], labels=(), impute: bool = True) -> FeatureMatrix:
    """One row of ``Metric|Stat`` features per app, in sorted app order.

    Absent metrics and undefined statistics start as missing. With ``impute``
    each missing slot takes its column median over the rows that have it; a
    column missing everywhere becomes 0.
    """
    label_of = _label_map(labels)
    by_app: dict[str, dict[str, MetricTrace]] = {}
    for t in traces:
        by_app.setdefault(t.app_id, {})[t.metric] = t
    if not by_app:
        raise TraceError("no traces to build a matrix from", "no-apps")

    apps = sorted(by_app)
    col = {name: j for j, name in enumerate(FEATURE_NAMES)}
    values = np.full((len(apps), len(FEATURE_NAMES)), np.nan)
    for i, app in enumerate(apps):
        for metric, trace in by_app[app].items():
            if metric not in METRICS or not trace.samples:
                continue
            for stat, v in summarize(trace.values).items():
                if v is not None:
                    values[i, col[f"{metric}|{stat}"]] = v

    missing = np.isnan(values)
    counts = {name: int(missing[:, j].sum()) for j, name in enumerate(FEATURE_NAMES)}
    if impute:
        values = impute_median(values)
    return FeatureMatrix(
        app_ids=tuple(apps),
        labels=tuple(label_of.get(a) for a in apps),
        columns=FEATURE_NAMES,
        values=values,
        missing_counts=counts,
    )


def impute_median(values: np.ndarray) -> np.ndarray:
    out = values.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        gaps = np.isnan(col)
        if gaps.any():
            present = col[~gaps]
            col[gaps] = float(np.median(present)) if present.size else 0.0
    return out


def _require_complete(m: FeatureMatrix, min_rows: int, what: str):
    if m.n_rows < min_rows:
        raise InputError(f"{what} needs at least {min_rows} rows, got {m.n_rows}", "too-few-rows")
    if np.isnan(m.values).any():
        raise InputError(f"{what} needs a matrix without missing values", "missing-values")


def scaled_variances(values: np.ndarray, scale: bool = True) -> np.ndarray:
    x = values
    if scale:
        lo, hi = x.min(axis=0), x.max(axis=0)
        span = hi - lo
        safe = np.where(span > 0, span, 1.0)
        x = np.where(span > 0, (x - lo) / safe, 0.0)
    return x.var(axis=0)


def variance_filter(m: FeatureMatrix, threshold: float = 0.1, scale: bool = True) -> FeatureMatrix:
    """Drop columns whose population variance is below ``threshold``.

    With ``scale`` (the default) each column is first min-max scaled to [0, 1],
    so the threshold is unit-free; ``scale=False`` compares raw variances.
    """
    _require_complete(m, 2, "variance_filter")
    var = scaled_variances(m.values, scale)
    keep, log = [], []
    for j, name in enumerate(m.columns):
        if var[j] < threshold:
            log.append(FilterLogEntry(name, LOW_VARIANCE, float(var[j])))
        else:
            keep.append(j)
    return m.select(keep, log)


def pearson_matrix(values: np.ndarray) -> np.ndarray:
    """Pairwise Pearson r between columns; NaN where a column is constant."""
    x = values - values.mean(axis=0)
    norm = np.sqrt((x * x).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        z = x / norm
        r = z.T @ z
    r[:, norm == 0] = np.nan
    r[norm == 0, :] = np.nan
    return np.clip(r, -1.0, 1.0)


def correlation_filter(m: FeatureMatrix, r_max: float = 0.9) -> FeatureMatrix:
    """Scan column pairs in order and drop the later column of any pair with ``|r| > r_max``.

    Constant columns have no defined correlation and are never dropped here.
    """
    _require_complete(m, 3, "correlation_filter")
    r = pearson_matrix(m.values)
    k = len(m.columns)
    dropped = [False] * k
    log = []
    for i in range(k):
        if dropped[i]:
            continue
        for j in range(i + 1, k):
            if not dropped[j] and abs(r[i, j]) > r_max:
                dropped[j] = True
                log.append(FilterLogEntry(m.columns[j], CORRELATED + m.columns[i], float(r[i, j])))
    # log in column order so the record reads like the surviving layout
    log.sort(key=lambda e: m.columns.index(e.feature))
    return m.select([j for j in range(k) if not dropped[j]], log)


def apply_filters(m: FeatureMatrix, variance_threshold: float = 0.1, r_max: float = 0.9, scale: bool = True) -> FeatureMatrix:
    return correlation_filter(variance_filter(m, variance_threshold, scale), r_max)
