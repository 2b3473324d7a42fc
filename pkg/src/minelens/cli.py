"""``minelens`` command line.

Exit status: 0 success, 1 usage error, 2 input or parse error, 3 internal
invariant violation. Diagnostics go to stderr; reports are written to
``--out`` atomically.
"""

from __future__ import annotations

import argparse
import csv
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .apk import InventoryConfig, open_package
from .campaigns import cluster_campaigns, read_credentials_csv, read_match_reports
from .errors import InputError, InvariantViolation
from .forest import (
    ForestParams,
    cross_validate,
    gaussian_kde,
    thread_count,
    train_forest,
)
from .report import (
    Campaigns,
    Cdf,
    Importances,
    KdeCurves,
    MatchReports,
    RocCurve,
    ScannerCorrelations,
    ScannerRanking,
    ScannerSummary,
    Timeline,
    UndetectedSamples,
    write_atomic,
    write_report,
)
from .rules import compile_ruleset, scan_package
from .rules.ruleset import default_ruleset_document, read_ruleset_document
from .scanners import (
    detection_cdf,
    load_report_dir,
    monthly_first_seen,
    rank_scanners,
    scanner_correlation,
    submission_cdf,
    undetected,
)
from .traces import (
    BENIGN,
    MINER,
    apply_filters,
    assemble_traces,
    build_matrix,
    format_events_csv,
    generate_synthetic_traces,
    ingest_events,
    load_matrix,
)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _log(msg: str):
    print(msg, file=sys.stderr)


# --- scan ------------------------------------------------------------------------------------


def _ruleset(args):
    doc = read_ruleset_document(args.rules) if args.rules else default_ruleset_document()
    if args.entropy_threshold is not None:
        doc["entropy_threshold"] = args.entropy_threshold
    return compile_ruleset(doc)


def cmd_scan(args) -> int:
    rs = _ruleset(args)
    config = InventoryConfig(min_len=args.min_len)

    def one(path):
        try:
            return scan_package(open_package(path), rs, config=config), None
        except InputError as exc:
            return None, (str(path), str(exc))

    workers = thread_count()
    if workers > 1 and len(args.packages) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, args.packages))
    else:
        results = [one(p) for p in args.packages]
    reports = tuple(r for r, _ in results if r is not None)
    failures = tuple(f for _, f in results if f is not None)
    out = Path(args.out)
    result = MatchReports(reports, failures)
    write_report(out / "match_reports.json", result)
    write_report(out / "scan_summary.csv", result)
    for path, err in failures:
        _log(f"error: {path}: {err}")
    return EXIT_INPUT if failures else EXIT_OK


# --- campaigns ---------------------------------------------------------------------------------


def cmd_campaigns(args) -> int:
    if args.credentials:
        records = read_credentials_csv(args.credentials)
        apps = {r.app_id for r in records}
    else:
        apps, records = read_match_reports(args.reports)
    if args.apps:
        apps |= {ln.strip() for ln in Path(args.apps).read_text(encoding="utf-8").splitlines() if ln.strip()}
    cs = Campaigns(cluster_campaigns(records, apps))
    out = Path(args.out)
    write_report(out / "campaigns.json", cs)
    write_report(out / "campaign_sizes.csv", cs)
    return EXIT_OK


# --- features ------------------------------------------------------------------------------------


def _read_labels(path) -> list[tuple[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"app_id", "label"} <= set(reader.fieldnames):
                raise InputError(f"{path}: expected header app_id,label", "bad-header")
            return [(row["app_id"], row["label"] or None) for row in reader]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}", "unreadable") from exc


def cmd_features(args) -> int:
    log = ingest_events(args.events)
    if log.skipped:
        _log(f"warning: skipped {log.skipped} malformed event lines")
    if log.unknown_metrics:
        _log(f"warning: unknown metrics ignored: {', '.join(sorted(log.unknown_metrics))}")
    labels = _read_labels(args.labels) if args.labels else []
    m = build_matrix(assemble_traces(log.events), labels)
    out = Path(args.out)
    write_report(out / "features.csv", m)
    write_report(out / "features.json", m)
    if not args.no_filter:
        if m.n_rows < 3:
            _log(f"warning: {m.n_rows} app(s); filters need at least 3, filtered matrix not written")
        else:
            f = apply_filters(m, args.variance_threshold, args.r_max, scale=not args.raw_variance)
            write_report(out / "features_filtered.csv", f)
            write_report(out / "features_filtered.json", f)
    return EXIT_OK


# --- train / evaluate ------------------------------------------------------------------------------


def _params(args) -> ForestParams:
    mf = args.max_features
    if mf not in ("sqrt", "all"):
        try:
            mf = int(mf)
        except ValueError:
            raise UsageError(f"--max-features must be sqrt, all or an integer, got {mf!r}")
    return ForestParams(
        n_trees=args.n_trees,
        max_features=mf,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
        bootstrap=not args.no_bootstrap,
        seed=args.seed,
    )


def cmd_train(args) -> int:
    p = _params(args)
    model = train_forest(load_matrix(args.matrix), p)
    write_report(Path(args.out) / "model.json", model)
    return EXIT_OK


def _kde_rows(m, features, n_grid):
    y = m.y()
    rows = []
    for f in features:
        col = m.column(f)
        grid = np.linspace(col.min(), col.max(), n_grid) if col.max() > col.min() else None
        for lbl, cls in ((MINER, 1), (BENIGN, 0)):
            vals = col[y == cls]
            if vals.size < 2:
                continue
            g, d = gaussian_kde(vals, grid, n_grid=n_grid)
            rows += [(f, lbl, float(a), float(b)) for a, b in zip(g, d)]
    return tuple(rows)


def cmd_evaluate(args) -> int:
    p = _params(args)
    m = load_matrix(args.matrix)
    report = cross_validate(m, p, k=args.k)
    for w in report.warnings:
        _log(f"warning: {w}")
    out = Path(args.out)
    write_report(out / "cv_report.json", report)
    write_report(out / "roc.csv", RocCurve(report.roc))
    ranked = report.ranked_importances()
    write_report(out / "importances.csv", Importances(tuple(ranked)))
    top = [f for f, w in ranked[: args.kde_top] if w > 0]
    write_report(out / "kde.csv", KdeCurves(_kde_rows(m, top, args.kde_points)))
    _log(f"accuracy {report.mean_accuracy:.3f}, AUC {report.auc_mean:.3f} +/- {report.auc_std:.3f}")
    return EXIT_OK


# --- scanners -----------------------------------------------------------------------------------------


def cmd_rank_scanners(args) -> int:
    records = load_report_dir(args.reports)
    if not records:
        raise InputError(f"no report files in {args.reports}", "no-records")
    ranking = tuple(rank_scanners(records))
    pairs = tuple(scanner_correlation(records))
    cdf = detection_cdf(records)
    und = tuple(undetected(records))
    timeline = monthly_first_seen(records)
    out = Path(args.out)
    write_report(out / "ranking.csv", ScannerRanking(ranking))
    write_report(out / "correlation.csv", ScannerCorrelations(pairs))
    write_report(out / "detection_cdf.csv", cdf)
    write_report(out / "submission_cdf.csv", Cdf(tuple(submission_cdf(records))))
    write_report(out / "undetected.csv", UndetectedSamples(und))
    write_report(out / "first_seen_monthly.csv", Timeline(timeline))
    write_report(out / "scanners.json", ScannerSummary(ranking, pairs, cdf, und, timeline))
    return EXIT_OK


# --- synth ---------------------------------------------------------------------------------------------


def cmd_synth(args) -> int:
    if args.miners < 0 or args.benign < 0:
        raise UsageError("--miners and --benign must be non-negative")
    s = generate_synthetic_traces(args.miners, args.benign, args.seed, args.duration, args.period, args.throttled)
    out = Path(args.out)
    write_atomic(out / "traces.csv", format_events_csv(s.events).encode("utf-8"))
    lines = ["app_id,label"] + [f"{a},{lbl}" for a, lbl in s.labels.items()]
    write_atomic(out / "labels.csv", ("\n".join(lines) + "\n").encode("utf-8"))
    return EXIT_OK


# --- parser --------------------------------------------------------------------------------------------


def _forest_flags(p):
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-features", default="sqrt", help="sqrt, all or a column count")
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="minelens", description="Android cryptominer triage.")
    parser.add_argument("--version", action="version", version=f"minelens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scan", help="scan packages for mining indicators")
    p.add_argument("packages", nargs="+", type=Path)
    p.add_argument("--rules", type=Path, help="ruleset JSON (default: bundled rules)")
    p.add_argument("--entropy-threshold", type=float, default=None)
    p.add_argument("--min-len", type=int, default=6, help="shortest printable run kept from binaries")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("campaigns", help="cluster apps by shared credentials")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--credentials", type=Path, help="CSV with app_id,credential,kind")
    src.add_argument("--reports", type=Path, help="match_reports.json from scan, or JSON lines")
    p.add_argument("--apps", type=Path, help="file listing every app id, one per line")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_campaigns)

    p = sub.add_parser("features", help="build the feature matrix from profiler events")
    p.add_argument("--events", type=Path, required=True)
    p.add_argument("--labels", type=Path)
    p.add_argument("--variance-threshold", type=float, default=0.1)
    p.add_argument("--r-max", type=float, default=0.9)
    p.add_argument("--raw-variance", action="store_true", help="compare unscaled column variances")
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a forest on a feature matrix")
    p.add_argument("--matrix", type=Path, required=True)
    _forest_flags(p)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="stratified k-fold evaluation")
    p.add_argument("--matrix", type=Path, required=True)
    p.add_argument("--k", type=int, default=10)
    _forest_flags(p)
    p.add_argument("--kde-top", type=int, default=3, help="features to emit KDE curves for")
    p.add_argument("--kde-points", type=int, default=200)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank-scanners", help="scanner ranking and agreement from report JSON")
    p.add_argument("--reports", type=Path, required=True, help="directory of report JSON files")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_rank_scanners)

    p = sub.add_parser("synth", help="generate synthetic profiler traces")
    p.add_argument("--miners", type=int, required=True)
    p.add_argument("--benign", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--duration", type=int, default=300, help="seconds")
    p.add_argument("--period", type=int, default=5, help="seconds between samples")
    p.add_argument("--throttled", type=float, default=0.2, help="share of miners running near 30%% CPU")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _log(str(exc))
        return EXIT_USAGE
    except InputError as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT
    except OSError as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT
    except InvariantViolation as exc:
        _log(f"internal error: {exc}")
        return EXIT_INTERNAL
    except Exception:
        _log("internal error:")
        traceback.print_exc(file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
