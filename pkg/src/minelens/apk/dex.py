"""DEX string-table reader.

Only the ``string_ids`` / ``string_data`` sections are read: each ``string_id``
holds a file offset to a ``string_data_item``, which is a ULEB128 UTF-16 length
followed by modified UTF-8 bytes and a NUL terminator.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..errors import DexError

HEADER_SIZE = 0x70
ENDIAN_CONSTANT = 0x12345678
REVERSE_ENDIAN_CONSTANT = 0x78563412
SUPPORTED_VERSIONS = (b"035", b"036", b"037", b"038", b"039")

_STRING_IDS_SIZE_OFF = 0x38
_STRING_IDS_OFF_OFF = 0x3C


class Mutf8Error(ValueError):
    pass


@dataclass
class DexStrings:
    strings: list[str]
    offsets: list[int]  # string_data_off of each emitted string
    declared: int  # string_ids_size from the header
    skipped: int  # strings dropped for invalid modified UTF-8


def read_uleb128(data: bytes, pos: int) -> tuple[int, int]:
    """Decode an unsigned LEB128 value at ``pos``; return ``(value, new_pos)``.

    DEX restricts ULEB128 to 32-bit values, so at most five bytes are read.
    """
    result = 0
    for i in range(5):
        if pos >= len(data):
            raise DexError(f"ULEB128 runs past end of file at {pos:#x}", "out-of-bounds")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << (7 * i)
        if byte < 0x80:
            if result > 0xFFFFFFFF:
                raise DexError("ULEB128 value exceeds 32 bits", "uleb128-overflow")
            return result, pos
    raise DexError(f"ULEB128 longer than 5 bytes at {pos - 5:#x}", "uleb128-overflow")


def decode_mutf8(data: bytes, start: int, utf16_len: int) -> tuple[str, int]:
    """Decode NUL-terminated modified UTF-8 beginning at ``start``.

    Returns the string and the position just past the terminator. Raises
    :class:`Mutf8Error` on malformed sequences, unpaired surrogates, or a
    code-unit count that disagrees with ``utf16_len``.
    """
    units = []
    pos = start
    end = len(data)
    while True:
        if pos >= end:
            raise DexError(f"unterminated string data at {start:#x}", "out-of-bounds")
        b0 = data[pos]
        if b0 == 0:
            pos += 1
            break
        if b0 < 0x80:
            units.append(b0)
            pos += 1
        elif b0 & 0xE0 == 0xC0:
            if pos + 1 >= end:
                raise DexError("truncated modified UTF-8 sequence", "out-of-bounds")
            b1 = data[pos + 1]
            if b1 & 0xC0 != 0x80:
                raise Mutf8Error(f"bad continuation byte at {pos + 1:#x}")
            units.append(((b0 & 0x1F) << 6) | (b1 & 0x3F))
            pos += 2
        elif b0 & 0xF0 == 0xE0:
            if pos + 2 >= end:
                raise DexError("truncated modified UTF-8 sequence", "out-of-bounds")
            b1, b2 = data[pos + 1], data[pos + 2]
            if b1 & 0xC0 != 0x80 or b2 & 0xC0 != 0x80:
                raise Mutf8Error(f"bad continuation byte near {pos + 1:#x}")
            units.append(((b0 & 0x0F) << 12) | ((b1 & 0x3F) << 6) | (b2 & 0x3F))
            pos += 3
        else:
            raise Mutf8Error(f"invalid lead byte {b0:#04x} at {pos:#x}")

    if len(units) != utf16_len:
        raise Mutf8Error(f"decoded {len(units)} UTF-16 units, header says {utf16_len}")
    return _utf16_units_to_str(units), pos


def _utf16_units_to_str(units: list[int]) -> str:
    out = []
    i = 0
    n = len(units)
    while i < n:
        u = units[i]
        if 0xD800 <= u <= 0xDBFF:
            if i + 1 < n and 0xDC00 <= units[i + 1] <= 0xDFFF:
                out.append(chr(0x10000 + ((u - 0xD800) << 10) + (units[i + 1] - 0xDC00)))
                i += 2
                continue
            raise Mutf8Error("unpaired high surrogate")
        if 0xDC00 <= u <= 0xDFFF:
            raise Mutf8Error("unpaired low surrogate")
        out.append(chr(u))
        i += 1
    return "".join(out)


def check_header(content: bytes) -> int:
    """Validate magic, version and endianness; return ``string_ids_size``."""
    if len(content) < HEADER_SIZE:
        raise DexError(f"{len(content)} bytes is shorter than the DEX header", "truncated")
    if content[:4] != b"dex\n" or content[7] != 0:
        raise DexError("missing dex\\n magic", "bad-magic")
    version = bytes(content[4:7])
    if version not in SUPPORTED_VERSIONS:
        raise DexError(f"unsupported DEX version {version!r}", "unsupported-version")
    (endian,) = struct.unpack_from("<I", content, 0x28)
    if endian != ENDIAN_CONSTANT:
        raise DexError(f"unsupported endian tag {endian:#010x}", "bad-endian")
    (size,) = struct.unpack_from("<I", content, _STRING_IDS_SIZE_OFF)
    return size


def read_dex_strings(content: bytes) -> DexStrings:
    """Read the complete string table, skipping (and counting) undecodable items."""
    count = check_header(content)
    (ids_off,) = struct.unpack_from("<I", content, _STRING_IDS_OFF_OFF)
    if count and (ids_off < HEADER_SIZE or ids_off + 4 * count > len(content)):
        raise DexError(
            f"string_ids table [{ids_off:#x}, +{4 * count:#x}) outside file of {len(content):#x} bytes",
            "out-of-bounds",
        )

    strings: list[str] = []
    offsets: list[int] = []
    skipped = 0
    for (data_off,) in struct.iter_unpack("<I", content[ids_off : ids_off + 4 * count]):
        if data_off >= len(content):
            raise DexError(f"string_data_off {data_off:#x} beyond end of file", "out-of-bounds")
        utf16_len, pos = read_uleb128(content, data_off)
        try:
            value, _ = decode_mutf8(content, pos, utf16_len)
        except Mutf8Error:
            skipped += 1
            continue
        strings.append(value)
        offsets.append(data_off)
    return DexStrings(strings, offsets, count, skipped)


def extract_dex_strings(content: bytes) -> list[str]:
    return read_dex_strings(content).strings
