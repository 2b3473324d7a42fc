"""Evaluating a compiled ruleset against one package."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..apk.inventory import InventoryConfig, StringInventory, build_inventory
from ..apk.package import AppPackage
from .entropy import shannon_entropy
from .ruleset import (
    INIT_PATTERN,
    KEYWORD,
    LIBRARY_FINGERPRINT,
    MINING_DOMAIN,
    MONERO_ADDRESS_REGEX,
    SITE_KEY_REGEX,
    IndicatorRule,
    IndicatorRuleSet,
)

MINER_CANDIDATE = "miner-candidate"
MINER_RELATED = "miner-related"
NO_EVIDENCE = "no-evidence"

HASH_EXACT = "hash-exact"
PATTERN_FRACTION = "pattern-fraction"

KNOWN = "known"
REGEX_ENTROPY = "regex+entropy"

HIT_CATEGORIES = (KEYWORD, MINING_DOMAIN, INIT_PATTERN)

# inventory strings can be whole minified scripts
MAX_CONTEXT = 240

_SITE_KEY = re.compile(rf"^{SITE_KEY_REGEX}$")
_MONERO = re.compile(rf"^{MONERO_ADDRESS_REGEX}$")


@dataclass(frozen=True)
class Hit:
    rule_id: str
    category: str
    entry: str
    value: str
    offset: int
    match: str


@dataclass(frozen=True)
class LibraryMatch:
    rule_id: str
    library: str
    evidence: str
    value: float  # 1.0 for hash-exact, else the matched pattern fraction
    entries: tuple[str, ...] = ()


@dataclass(frozen=True)
class Credential:
    value: str
    entry: str
    entropy: float
    provenance: str

    @property
    def kind(self) -> str:
        return credential_kind(self.value)


def credential_kind(value: str) -> str:
    if _MONERO.match(value):
        return "wallet"
    if _SITE_KEY.match(value):
        return "site-key"
    if ":" in value and "//" not in value:
        return "pool-account"
    return "unknown"


@dataclass(frozen=True)
class MatchReport:
    app_id: str
    hits: tuple[Hit, ...]
    matched_libraries: tuple[LibraryMatch, ...]
    credentials: tuple[Credential, ...]
    verdict: str
    rationale: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "app_id": self.app_id,
            "verdict": self.verdict,
            "hits": [
                {"rule_id": h.rule_id, "category": h.category, "entry": h.entry, "offset": h.offset,
                 "match": h.match, "string": h.value}
                for h in self.hits
            ],
            "matched_libraries": [
                {"rule_id": m.rule_id, "library": m.library, "evidence": m.evidence, "value": m.value,
                 "entries": list(m.entries)}
                for m in self.matched_libraries
            ],
            "credentials": [
                {"value": c.value, "kind": c.kind, "entry": c.entry, "entropy": c.entropy, "provenance": c.provenance}
                for c in self.credentials
            ],
            "rationale": list(self.rationale),
        }

    def summary_row(self) -> list:
        libs = ";".join(sorted({m.library for m in self.matched_libraries}))
        return [self.app_id, self.verdict, len(self.hits), len(self.credentials), libs]


SUMMARY_HEADER = ["app_id", "verdict", "n_hits", "n_credentials", "libraries"]


def extract_credentials(inv: StringInventory, rs: IndicatorRuleSet) -> list[Credential]:
    """Credential candidates: regex matches that pass the entropy gate, plus known values.

    Known credentials bypass the gate. Candidates are deduplicated by value,
    keeping the first occurrence in inventory order; a value that is both
    known and regex-matched is reported as known.
    """
    found: dict[str, Credential] = {}
    for entry, item in inv.items():
        s = item.value
        if rs.known_pattern is not None:
            for m in rs.known_pattern.finditer(s):
                v = m.group()
                prev = found.get(v)
                if prev is None or prev.provenance != KNOWN:
                    found[v] = Credential(v, entry if prev is None else prev.entry, shannon_entropy(v), KNOWN)
        for rx in rs.credential_regexes:
            for m in rx.finditer(s):
                v = m.group("value") if "value" in rx.groupindex else m.group()
                v = v.strip()
                if not v or v in found:
                    continue
                h = shannon_entropy(v)
                if v in rs.known_credentials:
                    found[v] = Credential(v, entry, h, KNOWN)
                elif h >= rs.entropy_threshold:
                    found[v] = Credential(v, entry, h, REGEX_ENTROPY)
    return list(found.values())


def _rule_matches_anything(rule: IndicatorRule, blob: str) -> bool:
    if rule.combined is not None:
        return rule.combined.search(blob) is not None
    return any(p.search(blob) for p in rule.patterns)


def fingerprint_libraries(pkg: AppPackage, inv: StringInventory, rs: IndicatorRuleSet) -> list[LibraryMatch]:
    """Library-fingerprint rules: exact file hashes and the fraction of code patterns present."""
    blob = "\x00".join(item.value for _, item in inv.items())
    out = []
    for rule in rs.by_category(LIBRARY_FINGERPRINT):
        if rule.file_hashes:
            names = tuple(e.name for e in pkg.entries if e.sha256 in rule.file_hashes)
            if names:
                out.append(LibraryMatch(rule.id, rule.library, HASH_EXACT, 1.0, names))
        if rule.patterns and _rule_matches_anything(rule, blob):
            matched = sum(1 for p in rule.patterns if p.search(blob))
            fraction = matched / len(rule.patterns)
            if fraction >= rule.min_pattern_fraction:
                entries = tuple(
                    name for name, items in inv.entries.items()
                    if any(p.search(i.value) for i in items for p in rule.patterns)
                )
                out.append(LibraryMatch(rule.id, rule.library, PATTERN_FRACTION, fraction, entries))
    return out


def find_hits(inv: StringInventory, rs: IndicatorRuleSet) -> list[Hit]:
    blob = "\x00".join(item.value for _, item in inv.items())
    hits = []
    for rule in rs.by_category(*HIT_CATEGORIES):
        if not _rule_matches_anything(rule, blob):
            continue
        for entry, item in inv.items():
            for p in rule.patterns:
                m = p.search(item.value)
                if m:
                    hits.append(Hit(rule.id, rule.category, entry, item.value[:MAX_CONTEXT], item.offset, m.group()))
                    break
    return hits


def classify_verdict(hits, libraries, credentials) -> tuple[str, list[str]]:
    """Map assembled evidence to a verdict and the lines that justify it.

    A library match, an init-pattern hit, or a credential makes a
    miner-candidate; keyword or domain hits alone make the app miner-related.
    """
    rationale = []
    for m in libraries:
        detail = "hash-exact" if m.evidence == HASH_EXACT else f"pattern fraction {m.value:.2f}"
        rationale.append(f"library {m.library} ({detail})")
    init_rules = sorted({h.rule_id for h in hits if h.category == INIT_PATTERN})
    for rid in init_rules:
        rationale.append(f"init-pattern {rid}")
    for c in credentials:
        rationale.append(f"credential {c.value} ({c.provenance}, {c.entropy:.3f} bits)")
    if libraries or init_rules or credentials:
        return MINER_CANDIDATE, rationale

    weak = sorted({(h.category, h.rule_id) for h in hits if h.category in (KEYWORD, MINING_DOMAIN)})
    if weak:
        return MINER_RELATED, [f"{cat} {rid}" for cat, rid in weak]
    return NO_EVIDENCE, []


def scan_package(
    pkg: AppPackage,
    rs: IndicatorRuleSet,
    inv: StringInventory | None = None,
    config: InventoryConfig | None = None,
) -> MatchReport:
    if inv is None:
        inv = build_inventory(pkg, config)
    hits = find_hits(inv, rs)
    libraries = fingerprint_libraries(pkg, inv, rs)
    credentials = extract_credentials(inv, rs)
    verdict, rationale = classify_verdict(hits, libraries, credentials)
    rationale += [f"diagnostic {d}" for d in inv.diagnostics]
    return MatchReport(pkg.id, tuple(hits), tuple(libraries), tuple(credentials), verdict, tuple(rationale))
