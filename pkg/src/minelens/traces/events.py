"""Profiler event logs and per-app metric timeseries."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import TraceError

METRICS = (
    "Battery Current",
    "Battery Power",
    "CPU Branch Misses",
    "CPU Clock",
    "CPU Context Switches",
    "CPU Cycles",
    "CPU Cycles/Instruction",
    "CPU Instructions",
    "CPU Page Faults",
    "CPU Task Clock",
    "CPU Utilization Percent",
    "Memory Usage",
    "Rx Bytes (Total)",
    "Tx Bytes (Total)",
    "Temperature",
)
EVENT_HEADER = ("process", "timestamp_ms", "metric", "value")


@dataclass(frozen=True)
class ProfEvent:
    process: str
    timestamp: float  # milliseconds
    metric: str
    value: float


@dataclass(frozen=True)
class EventLog:
    events: tuple[ProfEvent, ...]
    skipped: int
    unknown_metrics: frozenset[str]


@dataclass(frozen=True)
class MetricTrace:
    app_id: str
    metric: str
    samples: tuple[tuple[float, float], ...]

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.samples]


def _lines(source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        try:
            return Path(source).read_text(encoding="utf-8").splitlines()
        except (OSError, UnicodeDecodeError) as exc:
            raise TraceError(f"cannot read {source}: {exc}", "unreadable") from exc
    if isinstance(source, io.IOBase):
        return source.read().splitlines()
    return list(source)


def _finite(text: str) -> float:
    x = float(text)
    if not math.isfinite(x):
        raise ValueError(text)
    return x


def ingest_events(source, vocabulary: Iterable[str] = METRICS) -> EventLog:
    """Parse a ``process,timestamp_ms,metric,value`` CSV.

    Malformed rows are skipped and counted. Metrics outside ``vocabulary``
    are kept and reported in ``unknown_metrics``.
    """
    lines = [ln for ln in _lines(source) if ln.strip()]
    if not lines:
        raise TraceError("event log is empty", "empty-file")
    reader = csv.reader(lines)
    header = tuple(h.strip() for h in next(reader))
    if header != EVENT_HEADER:
        raise TraceError(f"expected header {','.join(EVENT_HEADER)}, got {','.join(header)}", "missing-header")

    known = set(vocabulary)
    events, skipped, unknown = [], 0, set()
    for row in reader:
        if len(row) != 4:
            skipped += 1
            continue
        process, ts, metric, value = (c.strip() for c in row)
        try:
            t, v = _finite(ts), _finite(value)
        except ValueError:
            skipped += 1
            continue
        if t < 0 or not process or not metric:
            skipped += 1
            continue
        if metric not in known:
            unknown.add(metric)
        events.append(ProfEvent(process, t, metric, v))
    return EventLog(tuple(events), skipped, frozenset(unknown))


def assemble_traces(events: Iterable[ProfEvent], app_of_process: Mapping[str, str] | None = None) -> list[MetricTrace]:
    """Group events by (app, metric) and sort each group by timestamp, keeping input order on ties."""
    app_of_process = app_of_process or {}
    groups: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for e in events:
        app = app_of_process.get(e.process, e.process)
        groups.setdefault((app, e.metric), []).append((e.timestamp, e.value))
    out = []
    for (app, metric), samples in sorted(groups.items()):
        samples.sort(key=lambda s: s[0])
        out.append(MetricTrace(app, metric, tuple(samples)))
    return out


def format_events_csv(events: Iterable[ProfEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_HEADER)
    for e in events:
        w.writerow([e.process, _fmt(e.timestamp), e.metric, _fmt(e.value)])
    return buf.getvalue()


def _fmt(x: float) -> str:
    # fixed precision keeps generated files byte-stable across platforms
    if float(x).is_integer():
        return str(int(x))
    return f"{x:.6f}"
