"""Opening Android app artifacts and extracting their string evidence."""

from .axml import extract_axml_strings, read_axml_pool
from .dex import extract_dex_strings, read_dex_strings
from .inventory import (
    InventoryConfig,
    StringInventory,
    StringItem,
    build_inventory,
    printable_runs,
)
from .manifest import ManifestFacts, manifest_facts
from .package import AppPackage, PackageEntry, classify_entry, open_package

__all__ = [
    "AppPackage",
    "InventoryConfig",
    "ManifestFacts",
    "PackageEntry",
    "StringInventory",
    "StringItem",
    "build_inventory",
    "classify_entry",
    "extract_axml_strings",
    "extract_dex_strings",
    "manifest_facts",
    "open_package",
    "printable_runs",
    "read_axml_pool",
    "read_dex_strings",
]
