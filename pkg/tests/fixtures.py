"""Hand-assembled binary fixtures shared by several test modules.

These are written out byte by byte and deliberately do not use
``minelens.apk.builders``, so they can check both the readers and the writers.
"""

import struct


def _header(file_size, n_strings, ids_off):
    h = bytearray(0x70)
    h[0:8] = b"dex\n035\x00"
    struct.pack_into("<I", h, 0x20, file_size)
    struct.pack_into("<I", h, 0x24, 0x70)
    struct.pack_into("<I", h, 0x28, 0x12345678)
    struct.pack_into("<I", h, 0x38, n_strings)
    struct.pack_into("<I", h, 0x3C, ids_off)
    return bytes(h)


# 0x70  string_ids[0] = 0x00000074
# 0x74  uleb128 utf16_size = 8
# 0x75  "CoinHive" (43 6f 69 6e 48 69 76 65)
# 0x7d  00 terminator
COINHIVE_DEX = (
    _header(0x7E, 1, 0x70)
    + bytes.fromhex("74000000")
    + bytes.fromhex("08")
    + bytes.fromhex("436f696e48697665")
    + bytes.fromhex("00")
)

# same layout, but string_ids[0] points at 0x1000 in a 0x7e-byte file
CORRUPT_OFFSET_DEX = COINHIVE_DEX[:0x70] + struct.pack("<I", 0x1000) + COINHIVE_DEX[0x74:]

# RES_XML_TYPE document (8-byte header) followed by a UTF-16 string pool
# with one string "android.permission.INTERNET" (27 UTF-16 units).
_PERM = "android.permission.INTERNET"
_PERM_DATA = struct.pack("<H", 27) + _PERM.encode("utf-16-le") + b"\x00\x00"  # 2 + 54 + 2 = 58 bytes
_PERM_DATA += b"\x00\x00"  # pad to 60 (4-byte aligned)
_POOL = (
    struct.pack("<HHI", 0x0001, 0x1C, 0x1C + 4 + len(_PERM_DATA))  # type, header size, chunk size = 92
    + struct.pack("<IIIII", 1, 0, 0, 0x1C + 4, 0)  # stringCount, styleCount, flags, stringsStart, stylesStart
    + struct.pack("<I", 0)  # offset of string 0
    + _PERM_DATA
)
PERMISSION_AXML = struct.pack("<HHI", 0x0003, 8, 8 + len(_POOL)) + _POOL


def axml_with_strings_utf16(strings):
    """Hand-rolled UTF-16 pool document for an arbitrary string list."""
    data = bytearray()
    offsets = []
    for s in strings:
        offsets.append(len(data))
        raw = s.encode("utf-16-le")
        data += struct.pack("<H", len(raw) // 2) + raw + b"\x00\x00"
    while len(data) % 4:
        data += b"\x00"
    hsize = 0x1C
    start = hsize + 4 * len(strings)
    pool = (
        struct.pack("<HHI", 0x0001, hsize, start + len(data))
        + struct.pack("<IIIII", len(strings), 0, 0, start if strings else 0, 0)
        + b"".join(struct.pack("<I", o) for o in offsets)
        + bytes(data)
    )
    return struct.pack("<HHI", 0x0003, 8, 8 + len(pool)) + pool


PLAINTEXT_MANIFEST = b"""<?xml version="1.0" encoding="utf-8"?>
<manifest xmlns:android="http://schemas.android.com/apk/res/android" package="com.example.funnysong">
    <uses-permission android:name="android.permission.INTERNET"/>
    <application android:label="Funny Song">
        <activity android:name=".MainActivity"/>
        <receiver android:name=".BootReceiver">
            <intent-filter>
                <action android:name="android.intent.action.BOOT_COMPLETED"/>
            </intent-filter>
        </receiver>
    </application>
</manifest>
"""


# Top scanners over 728 miners: (name, TP, FN, failed, published score)
RANKING_TABLE = [
    ("Sophos", 621, 107, 0, 514),
    ("CAT-QuickHeal", 603, 125, 0, 478),
    ("DrWeb", 601, 127, 0, 474),
    ("ESET-NOD32", 561, 167, 0, 394),
    ("Ikarus", 512, 166, 50, 346),
    ("Avira", 505, 220, 3, 285),
    ("McAfee", 497, 231, 0, 266),
    ("SymantecMobileInsight", 408, 152, 168, 256),
    ("ZoneAlarm", 489, 235, 4, 254),
    ("Kaspersky", 489, 237, 2, 252),
]
N_MINERS = 728


def ranking_reports(table=RANKING_TABLE, n=N_MINERS):
    """Report documents in which each scanner has exactly its table counts.

    Outcomes are laid out at a per-scanner rotation so scanners do not all
    agree on the same apps; failed scans alternate between null entries and
    absent keys.
    """
    docs = [{"sha256": f"{i:064x}", "scans": {}} for i in range(n)]
    for s_i, (name, tp, fn, failed, _) in enumerate(table):
        assert tp + fn + failed == n
        for j in range(n):
            doc = docs[(j + 37 * s_i) % n]
            if j < tp:
                doc["scans"][name] = {"detected": True}
            elif j < tp + fn:
                doc["scans"][name] = {"detected": False}
            elif j % 2:
                doc["scans"][name] = None
    return docs


UNDETECTED_ROW = {
    "sha256": "aa200375c8422f3e034b122aa45e59a289b6c356b2301c4651189c27a895d9b0",
    "first_seen": "2013-10-13",
    "last_seen": "2015-03-14",
    "times_submitted": 4,
    "unique_sources": 2,
}
