"""Indicator rulesets and package scanning."""

from .entropy import DEFAULT_ENTROPY_THRESHOLD, shannon_entropy
from .ruleset import (
    IndicatorRule,
    IndicatorRuleSet,
    compile_ruleset,
    default_ruleset,
    load_ruleset,
)
from .scan import (
    Credential,
    Hit,
    LibraryMatch,
    MatchReport,
    classify_verdict,
    extract_credentials,
    fingerprint_libraries,
    scan_package,
)

__all__ = [
    "DEFAULT_ENTROPY_THRESHOLD",
    "Credential",
    "Hit",
    "IndicatorRule",
    "IndicatorRuleSet",
    "LibraryMatch",
    "MatchReport",
    "classify_verdict",
    "compile_ruleset",
    "default_ruleset",
    "extract_credentials",
    "fingerprint_libraries",
    "load_ruleset",
    "scan_package",
    "shannon_entropy",
]
