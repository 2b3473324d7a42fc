"""Grouping apps into campaigns by the mining credentials they share."""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import InputError, InvariantViolation

CREDENTIAL_KINDS = ("site-key", "wallet", "pool-account", "unknown")
CREDENTIALS_HEADER = ["app_id", "credential", "kind"]


@dataclass(frozen=True)
class CredentialRecord:
    app_id: str
    credential: str
    kind: str = "unknown"

    def __post_init__(self):
        if not self.credential.strip():
            raise InputError(f"empty credential for app {self.app_id!r}", "empty-credential")
        if self.kind not in CREDENTIAL_KINDS:
            raise InputError(f"unknown credential kind {self.kind!r}", "bad-kind")


@dataclass(frozen=True)
class Campaign:
    id: str
    members: tuple[str, ...]
    credentials: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class CampaignSet:
    campaigns: tuple[Campaign, ...]
    unassigned: tuple[str, ...]

    def partition(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset(c.members) for c in self.campaigns)

    def to_dict(self) -> dict:
        return {
            "campaigns": [
                {"id": c.id, "size": c.size, "members": list(c.members), "credentials": list(c.credentials)}
                for c in self.campaigns
            ],
            "unassigned": list(self.unassigned),
        }


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller name as root so the result never depends on merge order
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def cluster_campaigns(records: Iterable[CredentialRecord], all_apps: Iterable[str]) -> CampaignSet:
    """Connected components of the app graph linked by shared credential values.

    Credentials are compared after trimming surrounding whitespace, case
    preserved. Kinds are ignored, so a wallet and a site key found together
    in one app chain both their campaigns. Each campaign is named after its
    lexicographically smallest member.
    """
    apps = set(all_apps)
    uf = _UnionFind()
    first_owner: dict[str, str] = {}
    creds_of: dict[str, set[str]] = {}
    for r in records:
        if r.app_id not in apps:
            raise InvariantViolation(f"credential record for app {r.app_id!r} outside the app set")
        cred = r.credential.strip()
        uf.add(r.app_id)
        creds_of.setdefault(r.app_id, set()).add(cred)
        owner = first_owner.setdefault(cred, r.app_id)
        uf.union(owner, r.app_id)

    groups: dict[str, list[str]] = {}
    for app in uf.parent:
        groups.setdefault(uf.find(app), []).append(app)
    campaigns = []
    for members in groups.values():
        members.sort()
        shared = sorted(set().union(*(creds_of[m] for m in members)))
        campaigns.append(Campaign(members[0], tuple(members), tuple(shared)))
    campaigns.sort(key=lambda c: (-c.size, c.id))
    unassigned = tuple(sorted(apps - set(uf.parent)))
    return CampaignSet(tuple(campaigns), unassigned)


@dataclass(frozen=True)
class CampaignStats:
    histogram: dict[int, int]
    total: int
    max_size: int
    small_count: int  # campaigns with at most SMALL_CAMPAIGN members

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "max_size": self.max_size,
            "small_count": self.small_count,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


SMALL_CAMPAIGN = 10


def campaign_stats(cs: CampaignSet | Iterable[int]) -> CampaignStats:
    """Size histogram and summary; also accepts a plain list of sizes."""
    sizes = [c.size for c in cs.campaigns] if isinstance(cs, CampaignSet) else list(cs)
    hist = dict(sorted(Counter(sizes).items()))
    return CampaignStats(
        histogram=hist,
        total=len(sizes),
        max_size=max(sizes, default=0),
        small_count=sum(1 for s in sizes if s <= SMALL_CAMPAIGN),
    )


# --- I/O ---------------------------------------------------------------------------------


def read_credentials_csv(path) -> list[CredentialRecord]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"app_id", "credential"} <= set(reader.fieldnames):
                raise InputError(f"{path}: expected header app_id,credential[,kind]", "bad-header")
            out = []
            for row in reader:
                cred = (row.get("credential") or "").strip()
                if not cred:
                    continue
                out.append(CredentialRecord(row["app_id"], cred, (row.get("kind") or "unknown").strip() or "unknown"))
            return out
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}", "unreadable") from exc


def _records_from_report(doc: dict) -> tuple[str, list[CredentialRecord]]:
    app = doc["app_id"]
    recs = [CredentialRecord(app, c["value"], c.get("kind", "unknown")) for c in doc.get("credentials", [])]
    return app, recs


def read_match_reports(path) -> tuple[set[str], list[CredentialRecord]]:
    """Read MatchReport dicts from a JSON array, a ``{"reports": [...]}`` document, or JSON lines."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}", "unreadable") from exc
    try:
        doc = json.loads(text)
        docs = doc.get("reports", []) if isinstance(doc, dict) else doc
    except json.JSONDecodeError:
        try:
            docs = [json.loads(line) for line in text.splitlines() if line.strip()]
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not JSON or JSON lines: {exc}", "bad-json") from exc
    apps: set[str] = set()
    records: list[CredentialRecord] = []
    for d in docs:
        try:
            app, recs = _records_from_report(d)
        except (KeyError, TypeError) as exc:
            raise InputError(f"{path}: malformed match report: {exc}", "bad-report") from exc
        apps.add(app)
        records.extend(recs)
    return apps, records


def histogram_rows(stats: CampaignStats) -> list[list[int]]:
    return [[size, count] for size, count in sorted(stats.histogram.items())]
