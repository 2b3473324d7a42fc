"""Antivirus aggregator reports: scanner ranking, agreement and detection summaries.

A report document is a JSON object::

    {"sha256": "<64 hex>",
     "scans": {"<scanner>": {"detected": true|false} | null, ...},
     "first_seen": "YYYY-MM-DD[ HH:MM:SS]", "last_seen": ...,
     "times_submitted": int, "unique_sources": int}

A null or malformed scan entry, or a scanner missing from a report, counts as
a failed scan.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from datetime import date, datetime, timezone
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping

from .errors import InputError

DETECTED = "detected"
CLEAN = "clean"
FAILED = "failed-or-missing"
UNKNOWN_MONTH = "unknown"


@dataclass(frozen=True)
class ScanRecord:
    sha256: str
    outcomes: Mapping[str, str]
    first_seen: date | None = None
    last_seen: date | None = None
    times_submitted: int | None = None
    unique_sources: int | None = None

    @property
    def detections(self) -> int:
        return sum(1 for o in self.outcomes.values() if o == DETECTED)

    def outcome(self, scanner: str) -> str:
        return self.outcomes.get(scanner, FAILED)


def _parse_day(value, field):
    if value is None or value == "":
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return datetime.fromtimestamp(value, tz=timezone.utc).date()
    if isinstance(value, str):
        text = value.strip().replace("T", " ")
        try:
            return datetime.fromisoformat(text.rstrip("Z")).date()
        except ValueError:
            pass
    raise InputError(f"{field}: unrecognized date {value!r}", "bad-date")


def _count(value, field):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise InputError(f"{field} must be a non-negative integer, got {value!r}", "bad-count")
    return value


def _outcome(entry) -> str:
    if isinstance(entry, Mapping) and isinstance(entry.get("detected"), bool):
        return DETECTED if entry["detected"] else CLEAN
    return FAILED


def parse_report(doc) -> ScanRecord:
    if not isinstance(doc, Mapping):
        raise InputError("report must be a JSON object", "bad-report")
    sha = doc.get("sha256")
    if not isinstance(sha, str) or not sha.strip():
        raise InputError("report has no sha256", "missing-sha256")
    sha = sha.strip().lower()
    if len(sha) != 64 or any(c not in "0123456789abcdef" for c in sha):
        raise InputError(f"malformed sha256 {sha!r}", "bad-sha256")
    scans = doc.get("scans")
    if not isinstance(scans, Mapping) or not scans:
        raise InputError(f"{sha}: report has no scans", "missing-scans")
    return ScanRecord(
        sha256=sha,
        outcomes={name: _outcome(entry) for name, entry in sorted(scans.items())},
        first_seen=_parse_day(doc.get("first_seen"), "first_seen"),
        last_seen=_parse_day(doc.get("last_seen"), "last_seen"),
        times_submitted=_count(doc.get("times_submitted"), "times_submitted"),
        unique_sources=_count(doc.get("unique_sources"), "unique_sources"),
    )


def ingest_reports(sources: Iterable) -> list[ScanRecord]:
    """One record per document; sources are paths, JSON text or already-parsed dicts."""
    records = []
    for src in sources:
        if isinstance(src, Mapping):
            records.append(parse_report(src))
            continue
        if isinstance(src, Path) or (isinstance(src, str) and not src.lstrip().startswith("{")):
            try:
                text = Path(src).read_text(encoding="utf-8")
            except OSError as exc:
                raise InputError(f"cannot read {src}: {exc}", "unreadable") from exc
        else:
            text = src
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{src if isinstance(src, Path) else 'report'}: malformed JSON: {exc}", "bad-json") from exc
        records.append(parse_report(doc))
    return records


def load_report_dir(path) -> list[ScanRecord]:
    root = Path(path)
    if not root.is_dir():
        raise InputError(f"{path} is not a directory", "not-a-directory")
    return ingest_reports(sorted(root.glob("*.json")))


# --- analytics -----------------------------------------------------------------------------


@dataclass(frozen=True)
class ScannerScore:
    scanner: str
    score: int
    tp: int
    fn: int
    failed: int


def rank_scanners(records: list[ScanRecord]) -> list[ScannerScore]:
    """Score every scanner seen in ``records``, all of which are taken to be miners.

    A detection earns +1 and a clean verdict -1; failed or missing scans earn
    nothing. Sorted by score, then name.
    """
    if not records:
        raise InputError("no scan records to rank", "no-records")
    names = sorted({s for r in records for s in r.outcomes})
    out = []
    for name in names:
        c = Counter(r.outcome(name) for r in records)
        out.append(ScannerScore(name, c[DETECTED] - c[CLEAN], c[DETECTED], c[CLEAN], c[FAILED]))
    out.sort(key=lambda s: (-s.score, s.scanner))
    return out


@dataclass(frozen=True)
class PairCorrelation:
    a: str
    b: str
    r: float | None  # None when undefined
    shared: int  # apps scanned successfully by both


MIN_SHARED = 3


def _pearson(x: list[int], y: list[int]) -> float | None:
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxx = math.fsum((v - mx) ** 2 for v in x)
    syy = math.fsum((v - my) ** 2 for v in y)
    if sxx == 0 or syy == 0:
        return None
    sxy = math.fsum((u - mx) * (v - my) for u, v in zip(x, y))
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def pair_correlation(records: list[ScanRecord], a: str, b: str) -> PairCorrelation:
    """Phi coefficient (Pearson on detected=1 / clean=0) over apps both scanners judged."""
    xs, ys = [], []
    for r in records:
        oa, ob = r.outcome(a), r.outcome(b)
        if oa != FAILED and ob != FAILED:
            xs.append(1 if oa == DETECTED else 0)
            ys.append(1 if ob == DETECTED else 0)
    r = _pearson(xs, ys) if len(xs) >= MIN_SHARED else None
    return PairCorrelation(a, b, r, len(xs))


def scanner_correlation(records: list[ScanRecord]) -> list[PairCorrelation]:
    """All scanner pairs, strongest correlation first and undefined pairs last."""
    names = sorted({s for r in records for s in r.outcomes})
    pairs = [pair_correlation(records, a, b) for a, b in combinations(names, 2)]
    pairs.sort(key=lambda p: (p.r is None, -(p.r if p.r is not None else 0.0), p.a, p.b))
    return pairs


@dataclass(frozen=True)
class DetectionCdf:
    points: tuple[tuple[int, float], ...]  # (detections, fraction of apps with at most that many)
    mean: float
    max: int


def detection_cdf(records: list[ScanRecord]) -> DetectionCdf:
    if not records:
        raise InputError("no scan records", "no-records")
    counts = Counter(r.detections for r in records)
    n = len(records)
    points, acc = [], 0
    for x in sorted(counts):
        acc += counts[x]
        points.append((x, acc / n))
    return DetectionCdf(tuple(points), sum(r.detections for r in records) / n, max(counts))


def submission_cdf(records: list[ScanRecord]) -> list[tuple[int, float]]:
    """CDF of ``times_submitted`` over records that report it."""
    values = [r.times_submitted for r in records if r.times_submitted is not None]
    if not values:
        return []
    c = Counter(values)
    out, acc = [], 0
    for x in sorted(c):
        acc += c[x]
        out.append((x, acc / len(values)))
    return out


def undetected(records: list[ScanRecord]) -> list[ScanRecord]:
    return [r for r in records if r.detections == 0]


def monthly_first_seen(records: Iterable[ScanRecord]) -> dict[str, int]:
    """New samples per calendar month of first sighting; undated records go to ``unknown``."""
    c = Counter(r.first_seen.strftime("%Y-%m") if r.first_seen else UNKNOWN_MONTH for r in records)
    months = sorted(k for k in c if k != UNKNOWN_MONTH)
    out = {m: c[m] for m in months}
    if UNKNOWN_MONTH in c:
        out[UNKNOWN_MONTH] = c[UNKNOWN_MONTH]
    return out


# --- tabular outputs ---------------------------------------------------------------------------

RANKING_HEADER = ["scanner", "score", "tp", "fn", "failed"]
CORRELATION_HEADER = ["scanner_a", "scanner_b", "r", "shared"]
CDF_HEADER = ["detections", "fraction"]
TIMELINE_HEADER = ["month", "count"]
UNDETECTED_HEADER = ["sha256", "first_seen", "last_seen", "times_submitted", "unique_sources"]


def ranking_rows(scores):
    return [[s.scanner, s.score, s.tp, s.fn, s.failed] for s in scores]


def correlation_rows(pairs):
    return [[p.a, p.b, "" if p.r is None else f"{p.r:.6f}", p.shared] for p in pairs]


def undetected_rows(records):
    def opt(v):
        return "" if v is None else str(v)

    return [[r.sha256, opt(r.first_seen), opt(r.last_seen), opt(r.times_submitted), opt(r.unique_sources)] for r in records]
