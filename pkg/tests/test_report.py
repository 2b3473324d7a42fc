import json
import os
import stat
from pathlib import Path

import jsonschema
import pytest

from fixtures import ranking_reports
from minelens.campaigns import CredentialRecord, cluster_campaigns
from minelens.errors import ReportError
from minelens.forest import ForestParams, cross_validate, train_forest
from minelens.report import (
    Campaigns,
    Importances,
    MatchReports,
    RocCurve,
    ScannerSummary,
    render_report,
    write_atomic,
    write_report,
)
from minelens.rules import default_ruleset, scan_package
from minelens.rules.ruleset import default_ruleset_document
from minelens.scanners import (
    detection_cdf,
    ingest_reports,
    monthly_first_seen,
    rank_scanners,
    scanner_correlation,
    undetected,
)
from minelens.apk import open_package
from minelens.traces import apply_filters, assemble_traces, build_matrix, generate_synthetic_traces

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def schema(name):
    return json.loads((SCHEMAS / f"{name}.json").read_text())


def validate(doc, name):
    jsonschema.Draft202012Validator(schema(name)).validate(doc)


@pytest.fixture(scope="module")
def matrix():
    s = generate_synthetic_traces(12, 12, seed=5)
    return build_matrix(assemble_traces(s.events), s.labels.items())


def test_schemas_are_valid_documents():
    for path in SCHEMAS.glob("*.json"):
        jsonschema.Draft202012Validator.check_schema(json.loads(path.read_text()))


def test_match_reports_document(tmp_path):
    root = tmp_path / "app"
    (root / "assets").mkdir(parents=True)
    (root / "assets" / "m.js").write_text(
        '<script src="https://coinhive.com/lib/coinhive.min.js"></script>\n'
        'var miner = new CoinHive.Anonymous("NDMtBC8iLiUkEjUzKC8mYSQzMy4zYXxh");\n')
    rep = scan_package(open_package(root), default_ruleset())
    doc = json.loads(render_report(MatchReports((rep,), (("bad.apk", "not-a-zip: x"),))))
    validate(doc, "match-reports")
    assert doc["reports"][0]["verdict"] == "miner-candidate"
    header = render_report(MatchReports((rep,)), "csv").decode().splitlines()[0]
    assert header == "app_id,verdict,n_hits,n_credentials,libraries"


def test_campaigns_document():
    recs = [CredentialRecord("a", "K1"), CredentialRecord("b", "K1"), CredentialRecord("c", "K2")]
    cs = Campaigns(cluster_campaigns(recs, {"a", "b", "c", "d"}))
    doc = json.loads(render_report(cs))
    validate(doc, "campaigns")
    assert doc["summary"] == {"total": 2, "max_size": 2, "small_count": 2, "histogram": {"1": 1, "2": 1}}
    assert doc["unassigned"] == ["d"]
    assert render_report(cs, "csv").decode() == "size,count\n1,1\n2,1\n"


def test_feature_matrix_document(matrix):
    validate(json.loads(render_report(matrix)), "feature-matrix")
    validate(json.loads(render_report(apply_filters(matrix))), "feature-matrix")


def test_cv_and_model_documents(matrix):
    p = ForestParams(n_trees=5, seed=1)
    f = apply_filters(matrix)
    rep = cross_validate(f, p, k=3)
    validate(json.loads(render_report(rep)), "cv-report")
    validate(json.loads(render_report(train_forest(f, p))), "forest-model")
    roc = render_report(RocCurve(rep.roc), "csv").decode().splitlines()
    assert roc[0] == "fpr,tpr" and roc[1] == "0.0,0.0" and roc[-1] == "1.0,1.0"


def test_scanner_summary_document():
    recs = ingest_reports(ranking_reports()[:40])
    summary = ScannerSummary(tuple(rank_scanners(recs)), tuple(scanner_correlation(recs)),
                             detection_cdf(recs), tuple(undetected(recs)), monthly_first_seen(recs))
    validate(json.loads(render_report(summary)), "scanner-summary")


def test_default_ruleset_matches_schema():
    validate(default_ruleset_document(), "ruleset")


def test_json_envelope_order_and_newline():
    data = render_report(Importances((("a", 1.0),)), "csv")
    assert data == b"feature,importance\na,1.0\n"
    text = render_report(Campaigns(cluster_campaigns([], {"x"}))).decode()
    assert text.endswith("}\n")
    assert list(json.loads(text))[:2] == ["schema", "schema_version"]


def test_unsupported_format():
    with pytest.raises(ReportError) as e:
        render_report(RocCurve(((0.0, 0.0),)), "xml")
    assert e.value.code == "unsupported-format"
    with pytest.raises(ReportError):
        render_report(RocCurve(((0.0, 0.0),)), "json")


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "r.csv"
    write_atomic(target, b"one\n")
    write_report(target, RocCurve(((0.0, 0.0), (1.0, 1.0))))
    assert target.read_text() == "fpr,tpr\n0.0,0.0\n1.0,1.0\n"
    assert stat.S_IMODE(os.stat(target).st_mode) == 0o644
    assert [p.name for p in target.parent.iterdir()] == ["r.csv"]


def test_failed_write_keeps_old_file(tmp_path, monkeypatch):
    target = tmp_path / "r.json"
    target.write_text("old")

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        write_atomic(target, b"new")
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["r.json"]
