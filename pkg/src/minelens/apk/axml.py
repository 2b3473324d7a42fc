"""String-pool extraction from Android binary XML (compiled manifests and layouts).

The element tree is not rebuilt; callers get the pool strings in pool order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..errors import AxmlError

RES_STRING_POOL_TYPE = 0x0001
RES_XML_TYPE = 0x0003
UTF8_FLAG = 1 << 8

_POOL_HEADER_SIZE = 0x1C


@dataclass
class StringPool:
    strings: list[str]
    offsets: list[int]  # absolute offset of each string's length prefix
    utf8: bool
    skipped: int = 0  # strings dropped because they did not decode


def _read_chunk_header(data: bytes, pos: int) -> tuple[int, int, int]:
    if pos + 8 > len(data):
        raise AxmlError(f"chunk header at {pos:#x} runs past end", "truncated")
    return struct.unpack_from("<HHI", data, pos)


def _utf8_length(data: bytes, pos: int) -> tuple[int, int]:
    if pos >= len(data):
        raise AxmlError("string length past end of pool", "truncated")
    n = data[pos]
    if n & 0x80:
        if pos + 1 >= len(data):
            raise AxmlError("string length past end of pool", "truncated")
        return ((n & 0x7F) << 8) | data[pos + 1], pos + 2
    return n, pos + 1


def _utf16_length(data: bytes, pos: int) -> tuple[int, int]:
    if pos + 2 > len(data):
        raise AxmlError("string length past end of pool", "truncated")
    (n,) = struct.unpack_from("<H", data, pos)
    if n & 0x8000:
        if pos + 4 > len(data):
            raise AxmlError("string length past end of pool", "truncated")
        (lo,) = struct.unpack_from("<H", data, pos + 2)
        return ((n & 0x7FFF) << 16) | lo, pos + 4
    return n, pos + 2


def parse_string_pool(data: bytes, start: int) -> StringPool:
    """Decode the RES_STRING_POOL chunk beginning at ``start``."""
    ctype, header_size, chunk_size = _read_chunk_header(data, start)
    if ctype != RES_STRING_POOL_TYPE:
        raise AxmlError(f"chunk at {start:#x} is type {ctype:#06x}, not a string pool", "missing-string-pool")
    if header_size < _POOL_HEADER_SIZE or start + chunk_size > len(data):
        raise AxmlError("string pool header or size out of range", "truncated")
    count, _styles, flags, strings_start, _styles_start = struct.unpack_from("<IIIII", data, start + 8)
    chunk_end = start + chunk_size
    index_start = start + header_size
    if index_start + 4 * count > chunk_end:
        raise AxmlError(f"{count} string offsets do not fit in the pool chunk", "truncated")
    if count == 0:
        return StringPool([], [], bool(flags & UTF8_FLAG))
    base = start + strings_start
    if strings_start < header_size + 4 * count or base > chunk_end:
        raise AxmlError(f"stringsStart {strings_start:#x} inconsistent with pool layout", "inconsistent-offsets")

    pool = data[:chunk_end]
    utf8 = bool(flags & UTF8_FLAG)
    strings: list[str] = []
    offsets: list[int] = []
    skipped = 0
    for (rel,) in struct.iter_unpack("<I", data[index_start : index_start + 4 * count]):
        pos = base + rel
        if pos >= chunk_end:
            raise AxmlError(f"string offset {rel:#x} points outside the pool", "inconsistent-offsets")
        if utf8:
            _chars, p = _utf8_length(pool, pos)
            nbytes, p = _utf8_length(pool, p)
            if p + nbytes > chunk_end:
                raise AxmlError("UTF-8 string runs past end of pool", "truncated")
            raw, codec = pool[p : p + nbytes], "utf-8"
        else:
            nchars, p = _utf16_length(pool, pos)
            if p + 2 * nchars > chunk_end:
                raise AxmlError("UTF-16 string runs past end of pool", "truncated")
            raw, codec = pool[p : p + 2 * nchars], "utf-16-le"
        try:
            strings.append(raw.decode(codec))
        except UnicodeDecodeError:
            skipped += 1
            continue
        offsets.append(pos)
    return StringPool(strings, offsets, utf8, skipped)


def read_axml_pool(content: bytes) -> StringPool:
    """Locate and decode the first string pool inside a binary XML document."""
    if len(content) < 8:
        raise AxmlError("shorter than a chunk header", "truncated")
    ctype, header_size, size = struct.unpack_from("<HHI", content, 0)
    if ctype != RES_XML_TYPE:
        raise AxmlError(f"document chunk type {ctype:#06x} is not RES_XML_TYPE", "not-axml")
    if header_size < 8 or size > len(content) or size < header_size:
        raise AxmlError("document chunk size inconsistent with content", "inconsistent-offsets")
    pos = header_size
    while pos + 8 <= size:
        ctype, _hsize, csize = _read_chunk_header(content, pos)
        if ctype == RES_STRING_POOL_TYPE:
            return parse_string_pool(content[:size], pos)
        if csize < 8:
            raise AxmlError(f"zero-length chunk at {pos:#x}", "inconsistent-offsets")
        pos += csize
    raise AxmlError("no string pool chunk found", "missing-string-pool")


def extract_axml_strings(content: bytes) -> list[str]:
    return read_axml_pool(content).strings
