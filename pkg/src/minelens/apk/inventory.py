"""Per-entry string evidence for an opened package."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import BinaryIO, Iterator

from ..errors import InputError
from . import package as pk
from .axml import read_axml_pool
from .dex import read_dex_strings

DEX_POOL = "dex-pool"
AXML_POOL = "axml-pool"
PRINTABLE_RUN = "printable-run"
TEXT_FILE = "text-file"

DEFAULT_MIN_LEN = 6
_WINDOW = 1 << 20


@dataclass(frozen=True)
class StringItem:
    value: str
    source: str
    offset: int


@dataclass(frozen=True)
class Diagnostic:
    entry: str
    code: str
    message: str

    def __str__(self):
        return f"{self.entry}: {self.code}: {self.message}"


@dataclass(frozen=True)
class InventoryConfig:
    min_len: int = DEFAULT_MIN_LEN
    size_cap: int = pk.DEFAULT_SIZE_CAP

    def __post_init__(self):
        if self.min_len < 1:
            raise ValueError("min_len must be >= 1")


@dataclass(frozen=True)
class StringInventory:
    app_id: str
    entries: dict[str, tuple[StringItem, ...]]
    diagnostics: tuple[Diagnostic, ...] = ()
    dropped: dict[str, int] = field(default_factory=dict)

    def items(self) -> Iterator[tuple[str, StringItem]]:
        for name, items in self.entries.items():
            for item in items:
                yield name, item

    def __len__(self):
        return sum(len(v) for v in self.entries.values())

    def to_dict(self) -> dict:
        return {
            "app_id": self.app_id,
            "entries": [
                {
                    "name": name,
                    "strings": [{"value": i.value, "source": i.source, "offset": i.offset} for i in items],
                }
                for name, items in self.entries.items()
            ],
            "dropped": dict(self.dropped),
            "diagnostics": [{"entry": d.entry, "code": d.code, "message": d.message} for d in self.diagnostics],
        }


def _run_pattern(min_len: int) -> re.Pattern[bytes]:
    return re.compile(rb"[\x20-\x7e]{%d,}" % min_len)


def iter_printable_runs(content: bytes, min_len: int = DEFAULT_MIN_LEN) -> Iterator[tuple[int, str]]:
    if min_len < 1:
        raise ValueError("min_len must be >= 1")
    for m in _run_pattern(min_len).finditer(content):
        yield m.start(), m.group().decode("ascii")


def printable_runs(content: bytes, min_len: int = DEFAULT_MIN_LEN) -> list[str]:
    """Maximal runs of printable ASCII (0x20-0x7E) at least ``min_len`` long, like ``strings(1)``."""
    return [s for _, s in iter_printable_runs(content, min_len)]


def iter_printable_runs_stream(fh: BinaryIO, min_len: int, window: int = _WINDOW) -> Iterator[tuple[int, str]]:
    """Windowed variant of :func:`iter_printable_runs` for entries too large to load."""
    pattern = _run_pattern(1)
    carry = b""
    carry_start = 0
    pos = 0
    while True:
        chunk = fh.read(window)
        if not chunk:
            break
        buf = carry + chunk
        base = carry_start if carry else pos
        pos += len(chunk)
        carry = b""
        for m in pattern.finditer(buf):
            if m.end() == len(buf):
                # the run may continue in the next window
                carry, carry_start = m.group(), base + m.start()
                break
            if m.end() - m.start() >= min_len:
                yield base + m.start(), m.group().decode("ascii")
    if len(carry) >= min_len:
        yield carry_start, carry.decode("ascii")


def _text_lines(content: bytes) -> tuple[list[StringItem], int]:
    items = []
    dropped = 0
    offset = 0
    for raw in content.split(b"\n"):
        start = offset
        offset += len(raw) + 1
        try:
            line = raw.decode("utf-8").strip()
        except UnicodeDecodeError:
            dropped += 1
            continue
        if line:
            items.append(StringItem(line, TEXT_FILE, start))
    return items, dropped


def extract_entry(kind: str, content: bytes, config: InventoryConfig) -> tuple[list[StringItem], int]:
    """Strings of one entry plus the number of undecodable items dropped."""
    if kind == pk.DEX:
        table = read_dex_strings(content)
        return [StringItem(s, DEX_POOL, o) for s, o in zip(table.strings, table.offsets)], table.skipped
    if kind == pk.BINARY_XML:
        pool = read_axml_pool(content)
        return [StringItem(s, AXML_POOL, o) for s, o in zip(pool.strings, pool.offsets)], pool.skipped
    if kind == pk.TEXT:
        return _text_lines(content)
    return [StringItem(s, PRINTABLE_RUN, o) for o, s in iter_printable_runs(content, config.min_len)], 0


def build_inventory(pkg: pk.AppPackage, config: InventoryConfig | None = None) -> StringInventory:
    """Collect strings from every entry; per-entry failures become diagnostics."""
    config = config or InventoryConfig()
    entries: dict[str, tuple[StringItem, ...]] = {}
    dropped: dict[str, int] = {}
    diagnostics: list[Diagnostic] = []

    for entry in pkg.entries:
        items: list[StringItem] = []
        n_dropped = 0
        try:
            if entry.size > config.size_cap:
                diagnostics.append(
                    Diagnostic(entry.name, "size-cap", f"{entry.size} bytes; scanned for printable runs only")
                )
                with pkg.open_entry(entry.name) as fh:
                    items = [StringItem(s, PRINTABLE_RUN, o) for o, s in iter_printable_runs_stream(fh, config.min_len)]
            else:
                items, n_dropped = extract_entry(entry.kind, pkg.read(entry.name), config)
        except InputError as exc:
            diagnostics.append(Diagnostic(entry.name, exc.code, exc.args[0]))
            items = []
        except OSError as exc:
            diagnostics.append(Diagnostic(entry.name, "unreadable", str(exc)))
            items = []
        entries[entry.name] = tuple(items)
        if n_dropped:
            dropped[entry.name] = n_dropped
    return StringInventory(pkg.id, entries, tuple(diagnostics), dropped)
