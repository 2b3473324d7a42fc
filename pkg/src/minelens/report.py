"""Rendering results as schema-versioned JSON or CSV, and writing them atomically.

Every JSON document starts with ``schema`` and ``schema_version`` followed
by the payload keys in a fixed order, so reports diff cleanly between runs.
The schemas live under ``docs/schemas/``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from functools import singledispatch
from pathlib import Path

from .campaigns import CampaignSet, CampaignStats, campaign_stats, histogram_rows
from .errors import ReportError
from .forest.evaluation import CvReport
from .forest.model import ForestModel
from .rules.scan import SUMMARY_HEADER, MatchReport
from .scanners import (
    CDF_HEADER,
    CORRELATION_HEADER,
    RANKING_HEADER,
    TIMELINE_HEADER,
    UNDETECTED_HEADER,
    DetectionCdf,
    correlation_rows,
    ranking_rows,
    undetected_rows,
)
from .traces.matrix import FeatureMatrix

SCHEMA_VERSION = 1
FORMATS = ("json", "csv")


# thin wrappers that give list-shaped results a type to dispatch on


@dataclass(frozen=True)
class MatchReports:
    reports: tuple[MatchReport, ...]
    failures: tuple[tuple[str, str], ...] = ()  # (path, error)


@dataclass(frozen=True)
class Campaigns:
    campaigns: CampaignSet


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Importances:
    items: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class KdeCurves:
    rows: tuple[tuple[str, str, float, float], ...]  # (feature, label, x, density)


@dataclass(frozen=True)
class ScannerRanking:
    scores: tuple


@dataclass(frozen=True)
class ScannerCorrelations:
    pairs: tuple


@dataclass(frozen=True)
class UndetectedSamples:
    records: tuple


@dataclass(frozen=True)
class Timeline:
    counts: dict


@dataclass(frozen=True)
class Cdf:
    points: tuple


@dataclass(frozen=True)
class ScannerSummary:
    ranking: tuple
    correlations: tuple
    detection: DetectionCdf
    undetected: tuple
    timeline: dict


# --- JSON --------------------------------------------------------------------------------------


def _envelope(schema: str, payload: dict) -> dict:
    return {"schema": schema, "schema_version": SCHEMA_VERSION, **payload}


@singledispatch
def json_document(result) -> dict:
    raise ReportError(f"no JSON rendering for {type(result).__name__}", "unsupported-result")


@json_document.register
def _(result: MatchReport):
    return _envelope("match-report", result.to_dict())


@json_document.register
def _(result: MatchReports):
    return _envelope("match-reports", {
        "reports": [r.to_dict() for r in result.reports],
        "failures": [{"path": p, "error": e} for p, e in result.failures],
    })


@json_document.register
def _(result: Campaigns):
    stats = campaign_stats(result.campaigns)
    return _envelope("campaigns", {"summary": stats.to_dict(), **result.campaigns.to_dict()})


@json_document.register
def _(result: CampaignSet):
    return json_document(Campaigns(result))


@json_document.register
def _(result: FeatureMatrix):
    doc = result.to_dict()
    doc.pop("schema_version")
    return _envelope("feature-matrix", doc)


@json_document.register
def _(result: CvReport):
    doc = result.to_dict()
    doc.pop("schema_version")
    return _envelope("cv-report", doc)


@json_document.register
def _(result: ForestModel):
    doc = result.to_dict()
    doc.pop("schema_version")
    return _envelope("forest-model", doc)


@json_document.register
def _(result: ScannerSummary):
    return _envelope("scanner-summary", {
        "ranking": [dict(zip(RANKING_HEADER, row)) for row in ranking_rows(result.ranking)],
        "correlations": [{"a": p.a, "b": p.b, "r": p.r, "shared": p.shared} for p in result.correlations],
        "detections": {
            "mean": result.detection.mean,
            "max": result.detection.max,
            "cdf": [list(p) for p in result.detection.points],
        },
        "undetected": [dict(zip(UNDETECTED_HEADER, row)) for row in undetected_rows(result.undetected)],
        "first_seen_monthly": dict(result.timeline),
    })


# --- CSV -----------------------------------------------------------------------------------------


@singledispatch
def csv_table(result) -> tuple[list, list]:
    raise ReportError(f"no CSV rendering for {type(result).__name__}", "unsupported-result")


@csv_table.register
def _(result: MatchReports):
    return SUMMARY_HEADER, [r.summary_row() for r in result.reports]


@csv_table.register
def _(result: CampaignStats):
    return ["size", "count"], histogram_rows(result)


@csv_table.register
def _(result: Campaigns):
    return csv_table(campaign_stats(result.campaigns))


@csv_table.register
def _(result: RocCurve):
    return ["fpr", "tpr"], [[repr(a), repr(b)] for a, b in result.points]


@csv_table.register
def _(result: CvReport):
    return csv_table(RocCurve(result.roc))


@csv_table.register
def _(result: Importances):
    return ["feature", "importance"], [[f, repr(w)] for f, w in result.items]


@csv_table.register
def _(result: KdeCurves):
    return ["feature", "label", "x", "density"], [[f, lbl, repr(x), repr(d)] for f, lbl, x, d in result.rows]


@csv_table.register
def _(result: ScannerRanking):
    return RANKING_HEADER, ranking_rows(result.scores)


@csv_table.register
def _(result: ScannerCorrelations):
    return CORRELATION_HEADER, correlation_rows(result.pairs)


@csv_table.register
def _(result: DetectionCdf):
    return CDF_HEADER, [[x, repr(y)] for x, y in result.points]


@csv_table.register
def _(result: Cdf):
    return ["value", "fraction"], [[x, repr(y)] for x, y in result.points]


@csv_table.register
def _(result: UndetectedSamples):
    return UNDETECTED_HEADER, undetected_rows(result.records)


@csv_table.register
def _(result: Timeline):
    return TIMELINE_HEADER, [[m, c] for m, c in result.counts.items()]


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode("utf-8")


def render_report(result, fmt: str = "json") -> bytes:
    """Serialize ``result`` as ``json`` or ``csv`` bytes."""
    if fmt == "json":
        return (json.dumps(json_document(result), indent=2, ensure_ascii=False, allow_nan=False) + "\n").encode("utf-8")
    if fmt == "csv":
        if isinstance(result, FeatureMatrix):
            return result.to_csv().encode("utf-8")
        return _csv_bytes(*csv_table(result))
    raise ReportError(f"unsupported format {fmt!r}; choose from {', '.join(FORMATS)}", "unsupported-format")


def write_atomic(path, data: bytes) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        # mkstemp creates 0600 files; reports are meant to be shared
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def write_report(path, result, fmt: str | None = None) -> Path:
    fmt = fmt or Path(path).suffix.lstrip(".")
    return write_atomic(path, render_report(result, fmt))
