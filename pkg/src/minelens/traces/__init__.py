"""Profiler traces, statistical features and feature filters."""

from .events import (
    EVENT_HEADER,
    METRICS,
    EventLog,
    MetricTrace,
    ProfEvent,
    assemble_traces,
    format_events_csv,
    ingest_events,
)
from .matrix import (
    BENIGN,
    FEATURE_NAMES,
    MINER,
    FeatureMatrix,
    FilterLogEntry,
    apply_filters,
    build_matrix,
    correlation_filter,
    load_matrix,
    pearson_matrix,
    variance_filter,
)
from .stats import STATISTICS, summarize
from .synth import SyntheticTraces, generate_synthetic_traces

__all__ = [
    "BENIGN",
    "EVENT_HEADER",
    "EventLog",
    "FEATURE_NAMES",
    "FeatureMatrix",
    "FilterLogEntry",
    "METRICS",
    "MINER",
    "MetricTrace",
    "ProfEvent",
    "STATISTICS",
    "SyntheticTraces",
    "apply_filters",
    "assemble_traces",
    "build_matrix",
    "correlation_filter",
    "format_events_csv",
    "generate_synthetic_traces",
    "ingest_events",
    "load_matrix",
    "pearson_matrix",
    "summarize",
    "variance_filter",
]
