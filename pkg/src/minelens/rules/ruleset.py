"""Indicator ruleset documents and their compiled form."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..errors import RulesetError
from .entropy import DEFAULT_ENTROPY_THRESHOLD

SCHEMA_VERSION = 1

KEYWORD = "keyword"
MINING_DOMAIN = "mining-domain"
INIT_PATTERN = "init-pattern"
CREDENTIAL_REGEX = "credential-regex"
LIBRARY_FINGERPRINT = "library-fingerprint"
CATEGORIES = (KEYWORD, MINING_DOMAIN, INIT_PATTERN, CREDENTIAL_REGEX, LIBRARY_FINGERPRINT)

# Keywords and domains are matched case-insensitively; code patterns and credentials are not.
CASE_INSENSITIVE = frozenset({KEYWORD, MINING_DOMAIN})

DEFAULT_MIN_PATTERN_FRACTION = 0.6

_B64 = "A-Za-z0-9+/"
_B58 = "1-9A-HJ-NP-Za-km-z"
SITE_KEY_REGEX = rf"(?<![{_B64}])[{_B64}]{{32}}(?![{_B64}=])"
MONERO_ADDRESS_REGEX = rf"(?<![{_B58}])[48][{_B58}]{{94}}(?![{_B58}])"
DEFAULT_CREDENTIAL_REGEXES = (SITE_KEY_REGEX, MONERO_ADDRESS_REGEX)

_SHA256 = re.compile(r"^[0-9a-f]{64}$")


@dataclass(frozen=True)
class Pattern:
    text: str
    is_regex: bool
    compiled: re.Pattern = field(compare=False, repr=False)

    def search(self, s: str):
        return self.compiled.search(s)


@dataclass(frozen=True)
class IndicatorRule:
    id: str
    category: str
    patterns: tuple[Pattern, ...] = ()
    file_hashes: frozenset[str] = frozenset()
    min_pattern_fraction: float = DEFAULT_MIN_PATTERN_FRACTION
    name: str = ""
    notes: str = ""
    combined: re.Pattern | None = field(default=None, compare=False, repr=False)

    @property
    def library(self) -> str:
        return self.name or self.id


@dataclass(frozen=True)
class IndicatorRuleSet:
    rules: tuple[IndicatorRule, ...]
    entropy_threshold: float = DEFAULT_ENTROPY_THRESHOLD
    credential_regexes: tuple[re.Pattern, ...] = ()
    known_credentials: frozenset[str] = frozenset()
    known_pattern: re.Pattern | None = field(default=None, compare=False, repr=False)

    def by_category(self, *categories: str) -> list[IndicatorRule]:
        return [r for r in self.rules if r.category in categories]


def _compile_pattern(rule_id: str, raw, flags: int) -> Pattern:
    if isinstance(raw, str):
        text, is_regex = raw, False
    elif isinstance(raw, dict) and len(raw) == 1 and ("literal" in raw or "regex" in raw):
        is_regex = "regex" in raw
        text = raw["regex"] if is_regex else raw["literal"]
        if not isinstance(text, str):
            raise RulesetError(f"rule {rule_id!r}: pattern value must be a string", "bad-pattern")
    else:
        raise RulesetError(f"rule {rule_id!r}: pattern must be a string, {{'literal': ...}} or {{'regex': ...}}", "bad-pattern")
    if not text:
        raise RulesetError(f"rule {rule_id!r}: empty pattern", "bad-pattern")
    source = text if is_regex else re.escape(text)
    try:
        compiled = re.compile(source, flags)
    except re.error as exc:
        raise RulesetError(f"rule {rule_id!r}: bad regex {text!r}: {exc}", "bad-regex") from exc
    return Pattern(text, is_regex, compiled)


def _compile_rule(doc: dict, index: int) -> IndicatorRule:
    if not isinstance(doc, dict):
        raise RulesetError(f"rule #{index} is not an object", "bad-rule")
    rule_id = doc.get("id")
    if not isinstance(rule_id, str) or not rule_id:
        raise RulesetError(f"rule #{index} has no id", "bad-rule")
    category = doc.get("category")
    if category not in CATEGORIES:
        raise RulesetError(f"rule {rule_id!r}: unknown category {category!r}", "unknown-category")

    flags = re.IGNORECASE if category in CASE_INSENSITIVE else 0
    patterns = tuple(_compile_pattern(rule_id, p, flags) for p in doc.get("patterns", []))

    hashes = doc.get("file_hashes", [])
    if hashes and category != LIBRARY_FINGERPRINT:
        raise RulesetError(f"rule {rule_id!r}: file_hashes only apply to library-fingerprint rules", "bad-rule")
    hashes = frozenset(h.lower() for h in hashes)
    bad = sorted(h for h in hashes if not _SHA256.match(h))
    if bad:
        raise RulesetError(f"rule {rule_id!r}: malformed SHA-256 {bad[0]!r}", "bad-hash")
    if not patterns and not hashes:
        raise RulesetError(f"rule {rule_id!r}: needs patterns or file_hashes", "bad-rule")

    fraction = float(doc.get("min_pattern_fraction", DEFAULT_MIN_PATTERN_FRACTION))
    if patterns and category == LIBRARY_FINGERPRINT and not 0.0 < fraction <= 1.0:
        raise RulesetError(f"rule {rule_id!r}: min_pattern_fraction must be in (0, 1]", "bad-rule")

    combined = None
    if patterns:
        try:
            combined = re.compile("|".join(f"(?:{p.compiled.pattern})" for p in patterns), flags)
        except re.error:
            # e.g. repeated group names across patterns; fall back to one search per pattern
            combined = None
    return IndicatorRule(
        id=rule_id,
        category=category,
        patterns=patterns,
        file_hashes=hashes,
        min_pattern_fraction=fraction,
        name=str(doc.get("name", "")),
        notes=str(doc.get("notes", "")),
        combined=combined,
    )


def _known_pattern(values) -> re.Pattern | None:
    if not values:
        return None
    alts = "|".join(re.escape(v) for v in sorted(values, key=lambda v: (-len(v), v)))
    return re.compile(rf"(?<![A-Za-z0-9])(?:{alts})(?![A-Za-z0-9])")


def compile_ruleset(doc: dict) -> IndicatorRuleSet:
    """Validate a ruleset document and compile all of its patterns."""
    if not isinstance(doc, dict):
        raise RulesetError("ruleset document must be a JSON object", "bad-document")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise RulesetError(f"unsupported schema_version {version!r}", "bad-schema-version")

    rules = []
    seen = set()
    for i, raw in enumerate(doc.get("rules", [])):
        rule = _compile_rule(raw, i)
        if rule.id in seen:
            raise RulesetError(f"duplicate rule id {rule.id!r}", "duplicate-id")
        seen.add(rule.id)
        rules.append(rule)

    threshold = doc.get("entropy_threshold", DEFAULT_ENTROPY_THRESHOLD)
    if not isinstance(threshold, (int, float)) or isinstance(threshold, bool) or threshold <= 0:
        raise RulesetError(f"entropy_threshold must be a positive number, got {threshold!r}", "bad-threshold")

    cred_sources = list(doc.get("credential_regexes", DEFAULT_CREDENTIAL_REGEXES))
    cred = []
    for src in cred_sources:
        try:
            cred.append(re.compile(src))
        except (re.error, TypeError) as exc:
            raise RulesetError(f"bad credential regex {src!r}: {exc}", "bad-regex") from exc
    for rule in rules:
        if rule.category == CREDENTIAL_REGEX:
            cred.extend(p.compiled for p in rule.patterns)

    known = frozenset(k.strip() for k in doc.get("known_credentials", []) if k.strip())
    return IndicatorRuleSet(tuple(rules), float(threshold), tuple(cred), known, _known_pattern(known))


def read_ruleset_document(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise RulesetError(f"cannot read {path}: {exc}", "unreadable") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise RulesetError(f"{path}: {exc}", "bad-json") from exc


def load_ruleset(path) -> IndicatorRuleSet:
    return compile_ruleset(read_ruleset_document(path))


def default_ruleset_document() -> dict:
    return json.loads(resources.files(__package__).joinpath("default_rules.json").read_text(encoding="utf-8"))


def default_ruleset() -> IndicatorRuleSet:
    return compile_ruleset(default_ruleset_document())
