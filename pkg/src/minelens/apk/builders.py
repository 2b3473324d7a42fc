"""Writers for minimal DEX and binary-XML files.

Used to build test fixtures and sample corpora; the output is just rich
enough for the string readers in this package (header plus string tables).
"""

from __future__ import annotations

import hashlib
import struct
import zlib

from .axml import RES_STRING_POOL_TYPE, RES_XML_TYPE, UTF8_FLAG
from .dex import ENDIAN_CONSTANT, HEADER_SIZE


def encode_uleb128(value: int) -> bytes:
    if value < 0:
        raise ValueError("ULEB128 encodes non-negative integers only")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def encode_mutf8(s: str) -> tuple[bytes, int]:
    """Encode ``s`` as modified UTF-8; return the bytes and the UTF-16 length."""
    raw = s.encode("utf-16-le", errors="surrogatepass")
    units = struct.unpack(f"<{len(raw) // 2}H", raw)
    out = bytearray()
    for u in units:
        if 0 < u < 0x80:
            out.append(u)
        elif u < 0x800:
            out += bytes((0xC0 | (u >> 6), 0x80 | (u & 0x3F)))
        else:
            out += bytes((0xE0 | (u >> 12), 0x80 | ((u >> 6) & 0x3F), 0x80 | (u & 0x3F)))
    return bytes(out), len(units)


def build_dex(strings, version: bytes = b"035") -> bytes:
    """Assemble a DEX file whose string table is exactly ``strings`` in order."""
    strings = list(strings)
    ids_off = HEADER_SIZE
    data_off = ids_off + 4 * len(strings)
    ids = bytearray()
    data = bytearray()
    for s in strings:
        ids += struct.pack("<I", data_off + len(data))
        payload, utf16_len = encode_mutf8(s)
        data += encode_uleb128(utf16_len) + payload + b"\x00"

    header = bytearray(HEADER_SIZE)
    header[0:8] = b"dex\n" + version + b"\x00"
    file_size = HEADER_SIZE + len(ids) + len(data)
    struct.pack_into("<I", header, 0x20, file_size)
    struct.pack_into("<I", header, 0x24, HEADER_SIZE)
    struct.pack_into("<I", header, 0x28, ENDIAN_CONSTANT)
    struct.pack_into("<II", header, 0x38, len(strings), ids_off if strings else 0)
    if data:
        struct.pack_into("<II", header, 0x68, len(data), data_off)

    body = bytes(header) + bytes(ids) + bytes(data)
    signature = hashlib.sha1(body[32:]).digest()
    body = body[:12] + signature + body[32:]
    checksum = zlib.adler32(body[12:]) & 0xFFFFFFFF
    return body[:8] + struct.pack("<I", checksum) + body[12:]


def _pool_string(s: str, utf8: bool) -> bytes:
    if utf8:
        raw = s.encode("utf-8")
        return _len8(len(s)) + _len8(len(raw)) + raw + b"\x00"
    raw = s.encode("utf-16-le")
    n = len(raw) // 2
    if n > 0x7FFF:
        prefix = struct.pack("<HH", 0x8000 | (n >> 16), n & 0xFFFF)
    else:
        prefix = struct.pack("<H", n)
    return prefix + raw + b"\x00\x00"


def _len8(n: int) -> bytes:
    if n > 0x7F:
        return bytes((0x80 | (n >> 8), n & 0xFF))
    return bytes((n,))


def build_string_pool(strings, utf8: bool = False) -> bytes:
    strings = list(strings)
    header_size = 0x1C
    body = bytearray()
    offsets = []
    for s in strings:
        offsets.append(len(body))
        body += _pool_string(s, utf8)
    while len(body) % 4:
        body += b"\x00"
    strings_start = header_size + 4 * len(strings) if strings else 0
    size = header_size + 4 * len(strings) + len(body)
    flags = UTF8_FLAG if utf8 else 0
    head = struct.pack("<HHIIIIII", RES_STRING_POOL_TYPE, header_size, size, len(strings), 0, flags, strings_start, 0)
    return head + b"".join(struct.pack("<I", o) for o in offsets) + bytes(body)


def build_axml(strings, utf8: bool = False) -> bytes:
    """A binary XML document holding only a string pool (no element chunks)."""
    pool = build_string_pool(strings, utf8)
    return struct.pack("<HHI", RES_XML_TYPE, 8, 8 + len(pool)) + pool
