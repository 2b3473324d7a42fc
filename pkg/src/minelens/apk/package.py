"""Opening app artifacts: raw APK archives and apktool-style decoded directories."""

from __future__ import annotations

import hashlib
import os
import zipfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterator

from ..errors import PackageError

RAW_ARCHIVE = "raw-archive"
DECODED_DIR = "decoded-dir"

DEX = "dex"
BINARY_XML = "binary-xml"
TEXT = "text"
NATIVE_BINARY = "native-binary"
OTHER = "other"

ENTRY_KINDS = (DEX, BINARY_XML, TEXT, NATIVE_BINARY, OTHER)

# Entries above this size are hashed streaming and only scanned for printable runs.
DEFAULT_SIZE_CAP = 64 * 1024 * 1024

_CHUNK = 1 << 20
_SNIFF = 8192

TEXT_EXTENSIONS = frozenset(
    {
        ".xml", ".html", ".htm", ".js", ".json", ".txt", ".smali", ".css",
        ".properties", ".cfg", ".conf", ".ini", ".yml", ".yaml", ".java",
        ".kt", ".sh", ".mf", ".sf", ".csv", ".md", ".svg", ".php", ".py",
    }
)
NATIVE_EXTENSIONS = frozenset({".so", ".elf", ".o", ".a"})


def is_dex_magic(head: bytes) -> bool:
    # dex\n0??\0
    return (
        len(head) >= 8
        and head[:5] == b"dex\n0"
        and head[7] == 0
        and 0x30 <= head[5] <= 0x39
        and 0x30 <= head[6] <= 0x39
    )


def is_axml_magic(head: bytes) -> bool:
    # RES_XML_TYPE chunk with an 8-byte header
    return len(head) >= 8 and head[:4] == b"\x03\x00\x08\x00"


def classify_entry(name: str, head: bytes) -> str:
    """Pick an entry kind from its leading bytes, falling back to the extension.

    Magic bytes win over the file name because miners rename payloads
    (``engine.html`` shipped as ``coinhive.html``, ELF files without ``.so``).
    """
    if is_dex_magic(head):
        return DEX
    if is_axml_magic(head):
        return BINARY_XML
    if head[:4] == b"\x7fELF":
        return NATIVE_BINARY
    ext = os.path.splitext(name)[1].lower()
    if ext in NATIVE_EXTENSIONS:
        return NATIVE_BINARY
    if ext in TEXT_EXTENSIONS:
        return TEXT if _looks_textual(head) else OTHER
    if ext == "" and head and _looks_textual(head):
        return TEXT
    return OTHER


def _looks_textual(head: bytes) -> bool:
    if b"\x00" in head:
        return False
    try:
        head.decode("utf-8")
    except UnicodeDecodeError as exc:
        # a multi-byte sequence cut at the sniff boundary is still text
        return exc.start >= len(head) - 3
    return True


@dataclass(frozen=True)
class PackageEntry:
    name: str
    size: int
    sha256: str
    kind: str


@dataclass(frozen=True)
class AppPackage:
    id: str
    kind: str
    path: Path
    entries: tuple[PackageEntry, ...]
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {e.name: e for e in self.entries})

    def entry(self, name: str) -> PackageEntry | None:
        return self._index.get(name)

    @contextmanager
    def open_entry(self, name: str) -> Iterator[BinaryIO]:
        """Yield a binary stream over one entry's content."""
        if name not in self._index:
            raise KeyError(name)
        if self.kind == DECODED_DIR:
            with open(self.path / name, "rb") as fh:
                yield fh
        else:
            with zipfile.ZipFile(self.path) as zf, zf.open(name) as fh:
                yield fh

    def read(self, name: str) -> bytes:
        with self.open_entry(name) as fh:
            return fh.read()


def _hash_stream(fh: BinaryIO) -> tuple[str, int, bytes]:
    digest = hashlib.sha256()
    size = 0
    head = b""
    while True:
        chunk = fh.read(_CHUNK)
        if not chunk:
            break
        if len(head) < _SNIFF:
            head += chunk[: _SNIFF - len(head)]
        digest.update(chunk)
        size += len(chunk)
    return digest.hexdigest(), size, head


def open_package(path) -> AppPackage:
    """Open an ``.apk`` archive or a decoded directory and enumerate its entries.

    Raises :class:`PackageError` with code ``unreadable``, ``not-a-zip``,
    ``bad-archive``, ``duplicate-entry`` or ``zero-entries``.
    """
    path = Path(path)
    if path.is_dir():
        return _open_directory(path)
    if not path.is_file() or not os.access(path, os.R_OK):
        raise PackageError(f"cannot read {path}", "unreadable")
    return _open_archive(path)


def _walk(root: Path) -> Iterator[Path]:
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for fn in sorted(filenames):
            yield Path(dirpath) / fn


def _open_directory(root: Path) -> AppPackage:
    entries = []
    for fp in _walk(root):
        if not fp.is_file():
            continue
        rel = fp.relative_to(root).as_posix()
        try:
            with open(fp, "rb") as fh:
                sha, size, head = _hash_stream(fh)
        except OSError as exc:
            raise PackageError(f"cannot read {fp}: {exc}", "unreadable") from exc
        entries.append(PackageEntry(rel, size, sha, classify_entry(rel, head)))
    if not entries:
        raise PackageError(f"{root} contains no files", "zero-entries")
    return AppPackage(root.resolve().name, DECODED_DIR, root, tuple(entries))


def _open_archive(path: Path) -> AppPackage:
    try:
        with open(path, "rb") as fh:
            archive_sha, _, _ = _hash_stream(fh)
    except OSError as exc:
        raise PackageError(f"cannot read {path}: {exc}", "unreadable") from exc

    try:
        zf = zipfile.ZipFile(path)
    except zipfile.BadZipFile as exc:
        raise PackageError(f"{path}: {exc}", "not-a-zip") from exc

    entries = []
    seen = set()
    with zf:
        for info in zf.infolist():
            if info.is_dir():
                continue
            if info.filename in seen:
                raise PackageError(f"{path}: duplicate entry {info.filename!r}", "duplicate-entry")
            seen.add(info.filename)
            try:
                with zf.open(info) as fh:
                    # reading to EOF makes zipfile verify the CRC-32
                    sha, size, head = _hash_stream(fh)
            except (zipfile.BadZipFile, OSError, EOFError, NotImplementedError) as exc:
                raise PackageError(f"{path}: entry {info.filename!r}: {exc}", "bad-archive") from exc
            if size != info.file_size:
                raise PackageError(f"{path}: size mismatch for {info.filename!r}", "bad-archive")
            entries.append(PackageEntry(info.filename, size, sha, classify_entry(info.filename, head)))

    if not entries:
        raise PackageError(f"{path} has no entries", "zero-entries")
    return AppPackage(archive_sha, RAW_ARCHIVE, path, tuple(entries))
