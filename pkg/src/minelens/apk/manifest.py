"""Permission and intent-action facts from ``AndroidManifest.xml``.

Binary manifests are not decoded into a tree: every string in the pool that has
the shape of a permission or an intent action is reported. This cannot tell a
declared permission from an unrelated constant that happens to live in the pool.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from ..errors import InputError
from . import package as pk
from .axml import extract_axml_strings

MANIFEST_NAME = "AndroidManifest.xml"

PERMISSION_RE = re.compile(r"^[A-Za-z_][\w]*(?:\.[A-Za-z_][\w]*)*\.permission\.[A-Za-z_][\w.]*$")
ACTION_MARKER = ".intent.action."

# Actions subscribed to by miners that lack the ``.intent.action.`` infix.
DEFAULT_EXTRA_ACTIONS = frozenset(
    {
        "com.android.vending.INSTALL_REFERRER",
        "com.google.android.c2dm.intent.RECEIVE",
        "com.google.android.c2dm.intent.REGISTRATION",
        "android.net.conn.CONNECTIVITY_CHANGE",
        "android.net.wifi.STATE_CHANGE",
        "android.net.wifi.WIFI_STATE_CHANGED",
        "android.app.action.DEVICE_ADMIN_ENABLED",
        "android.app.action.DEVICE_ADMIN_DISABLE_REQUESTED",
        "android.app.action.DEVICE_ADMIN_DISABLED",
    }
)

_ANDROID_NS = "{http://schemas.android.com/apk/res/android}"
_QUOTED = re.compile(r"""["']([^"'<>\s]+)["']""")


@dataclass(frozen=True)
class ManifestFacts:
    permissions: frozenset[str] = frozenset()
    intent_actions: frozenset[str] = frozenset()
    package_name: str | None = None
    warnings: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "package_name": self.package_name,
            "permissions": sorted(self.permissions),
            "intent_actions": sorted(self.intent_actions),
            "warnings": list(self.warnings),
        }


def is_permission(s: str) -> bool:
    return bool(PERMISSION_RE.match(s))


def is_intent_action(s: str, extra_actions=DEFAULT_EXTRA_ACTIONS) -> bool:
    return ACTION_MARKER in s or s in extra_actions


def facts_from_strings(strings, extra_actions=DEFAULT_EXTRA_ACTIONS, package_name=None, warnings=()) -> ManifestFacts:
    perms = set()
    actions = set()
    for s in strings:
        s = s.strip()
        if is_permission(s):
            perms.add(s)
        elif is_intent_action(s, extra_actions):
            actions.add(s)
    return ManifestFacts(frozenset(perms), frozenset(actions), package_name, tuple(warnings))


def _plaintext_strings(text: str) -> tuple[list[str], list[str], str | None, list[str]]:
    """Attribute values of a plaintext manifest, plus ``<uses-permission>`` names."""
    warnings = []
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        warnings.append(f"manifest-not-well-formed: {exc}")
        return _QUOTED.findall(text), [], None, warnings
    values = []
    declared = []
    for el in root.iter():
        values.extend(el.attrib.values())
        if el.tag == "uses-permission":
            name = el.get(_ANDROID_NS + "name") or el.get("android:name") or el.get("name")
            if name:
                declared.append(name)
    return values, declared, root.get("package"), warnings


def manifest_facts(pkg: pk.AppPackage, extra_actions=DEFAULT_EXTRA_ACTIONS) -> ManifestFacts:
    """Permission and action strings from the package's ``AndroidManifest.xml``."""
    entry = pkg.entry(MANIFEST_NAME)
    if entry is None:
        return ManifestFacts(warnings=("manifest-absent",))
    content = pkg.read(MANIFEST_NAME)

    if entry.kind == pk.BINARY_XML:
        try:
            strings = extract_axml_strings(content)
        except InputError as exc:
            return ManifestFacts(warnings=(f"manifest-unparsed: {exc}",))
        return facts_from_strings(strings, extra_actions)

    text = content.decode("utf-8", errors="replace")
    values, declared, package_name, warnings = _plaintext_strings(text)
    facts = facts_from_strings(values, extra_actions, package_name, warnings)
    # bare names are only trusted when they sit on a <uses-permission> element
    bare = {d.strip() for d in declared if d.strip() and not is_permission(d.strip())}
    if bare:
        facts = ManifestFacts(facts.permissions | bare, facts.intent_actions, facts.package_name, facts.warnings)
    return facts
