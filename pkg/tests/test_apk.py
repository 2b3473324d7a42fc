import hashlib
import io
import zipfile

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import (
    COINHIVE_DEX,
    CORRUPT_OFFSET_DEX,
    PERMISSION_AXML,
    PLAINTEXT_MANIFEST,
    axml_with_strings_utf16,
)
from minelens.apk import (
    build_inventory,
    classify_entry,
    extract_axml_strings,
    extract_dex_strings,
    manifest_facts,
    open_package,
    printable_runs,
    read_dex_strings,
)
from minelens.apk.builders import build_axml, build_dex, encode_mutf8, encode_uleb128
from minelens.apk.dex import read_uleb128
from minelens.apk.inventory import InventoryConfig, extract_entry, iter_printable_runs, iter_printable_runs_stream
from minelens.errors import AxmlError, DexError, PackageError


def write_zip(path, members, compression=zipfile.ZIP_STORED):
    with zipfile.ZipFile(path, "w", compression=compression) as zf:
        for name, data in members.items():
            zf.writestr(name, data)
    return path


# --- open_package ---------------------------------------------------------------


def test_empty_zip_has_zero_entries(tmp_path):
    p = write_zip(tmp_path / "empty.apk", {})
    with pytest.raises(PackageError) as exc:
        open_package(p)
    assert exc.value.code == "zero-entries"


def test_single_stored_dex(tmp_path):
    p = write_zip(tmp_path / "one.apk", {"classes.dex": COINHIVE_DEX})
    pkg = open_package(p)
    assert pkg.kind == "raw-archive"
    assert pkg.id == hashlib.sha256(p.read_bytes()).hexdigest()
    assert len(pkg.id) == 64 and pkg.id == pkg.id.lower()
    (entry,) = pkg.entries
    assert entry.name == "classes.dex"
    assert entry.kind == "dex"
    assert entry.size == len(COINHIVE_DEX)
    assert entry.sha256 == hashlib.sha256(COINHIVE_DEX).hexdigest()


def test_decoded_directory(tmp_path):
    root = tmp_path / "app-decoded"
    (root / "assets").mkdir(parents=True)
    (root / "AndroidManifest.xml").write_bytes(PLAINTEXT_MANIFEST)
    (root / "assets" / "engine.html").write_text("<script src='https://coinhive.com/lib/coinhive.min.js'></script>")
    pkg = open_package(root)
    assert pkg.kind == "decoded-dir"
    assert pkg.id == "app-decoded"
    assert [(e.name, e.kind) for e in pkg.entries] == [
        ("AndroidManifest.xml", "text"),
        ("assets/engine.html", "text"),
    ]


def test_not_a_zip(tmp_path):
    p = tmp_path / "junk.apk"
    p.write_bytes(b"definitely not a zip archive")
    with pytest.raises(PackageError) as exc:
        open_package(p)
    assert exc.value.code == "not-a-zip"


def test_unreadable_path(tmp_path):
    with pytest.raises(PackageError) as exc:
        open_package(tmp_path / "missing.apk")
    assert exc.value.code == "unreadable"


def test_empty_directory(tmp_path):
    (tmp_path / "d").mkdir()
    with pytest.raises(PackageError) as exc:
        open_package(tmp_path / "d")
    assert exc.value.code == "zero-entries"


def test_corrupt_member_crc_is_rejected(tmp_path):
    p = write_zip(tmp_path / "a.apk", {"assets/x.txt": b"hello world, stored uncompressed"})
    raw = bytearray(p.read_bytes())
    i = raw.index(b"hello world")
    raw[i] ^= 0xFF
    p.write_bytes(bytes(raw))
    with pytest.raises(PackageError) as exc:
        open_package(p)
    assert exc.value.code == "bad-archive"


def test_entry_hashes_match_reference(tmp_path):
    members = {"classes.dex": COINHIVE_DEX, "lib/arm64-v8a/libcpuminer.so": b"\x7fELF" + bytes(100), "res/raw/a.txt": b"x" * 10}
    p = write_zip(tmp_path / "h.apk", members, zipfile.ZIP_DEFLATED)
    pkg = open_package(p)
    for e in pkg.entries:
        assert e.sha256 == hashlib.sha256(members[e.name]).hexdigest()
        assert hashlib.sha256(pkg.read(e.name)).hexdigest() == e.sha256


@pytest.mark.parametrize(
    "name, head, kind",
    [
        ("classes.dex", COINHIVE_DEX[:16], "dex"),
        ("assets/coinhive.html", COINHIVE_DEX[:16], "dex"),  # magic beats extension
        ("classes.dex", b"not a dex at all", "other"),
        ("AndroidManifest.xml", PERMISSION_AXML[:16], "binary-xml"),
        ("AndroidManifest.xml", b"<?xml version='1.0'?>", "text"),
        ("res/raw/minerd", b"\x7fELF\x02\x01\x01", "native-binary"),
        ("lib/libx.so", b"\x00\x01\x02", "native-binary"),
        ("assets/engine.html", b"<html>", "text"),
        ("assets/5a240bed02ae6", bytes(range(256))[:64], "other"),
        ("resources.arsc", b"\x02\x00\x0c\x00", "other"),
    ],
)
def test_classify_entry(name, head, kind):
    assert classify_entry(name, head) == kind


# --- DEX --------------------------------------------------------------------------


def test_hand_crafted_dex():
    assert extract_dex_strings(COINHIVE_DEX) == ["CoinHive"]


def test_zero_header_is_bad_magic():
    with pytest.raises(DexError) as exc:
        extract_dex_strings(bytes(0x70))
    assert exc.value.code == "bad-magic"


def test_short_content_rejected():
    with pytest.raises(DexError) as exc:
        extract_dex_strings(b"dex\n035\x00")
    assert exc.value.code == "truncated"


def test_corrupt_string_data_offset():
    with pytest.raises(DexError) as exc:
        extract_dex_strings(CORRUPT_OFFSET_DEX)
    assert exc.value.code == "out-of-bounds"


@pytest.mark.parametrize("version", [b"035", b"036", b"037", b"038", b"039"])
def test_supported_versions(version):
    assert extract_dex_strings(build_dex(["a"], version=version)) == ["a"]


@pytest.mark.parametrize("version", [b"034", b"040", b"0xx"])
def test_unsupported_versions(version):
    data = bytearray(build_dex(["a"]))
    data[4:7] = version
    with pytest.raises(DexError) as exc:
        extract_dex_strings(bytes(data))
    assert exc.value.code in ("unsupported-version", "bad-magic")


def test_builder_matches_hand_fixture_strings():
    # builder output differs in checksum/signature/map fields, but the string table is identical
    built = build_dex(["CoinHive"])
    assert built[0x70:] == COINHIVE_DEX[0x70:]


def test_string_ids_table_out_of_bounds():
    data = bytearray(COINHIVE_DEX)
    data[0x38:0x3C] = (1000).to_bytes(4, "little")
    with pytest.raises(DexError) as exc:
        extract_dex_strings(bytes(data))
    assert exc.value.code == "out-of-bounds"


def test_uleb128_overflow():
    data = COINHIVE_DEX[:0x74] + b"\xff\xff\xff\xff\xff\x01" + b"\x00" * 8
    with pytest.raises(DexError) as exc:
        extract_dex_strings(data)
    assert exc.value.code == "uleb128-overflow"


def test_invalid_mutf8_is_skipped_and_counted():
    good = build_dex(["first", "BAD!", "last"])
    table = read_dex_strings(good)
    bad_off = table.offsets[1]
    data = bytearray(good)
    data[bad_off + 1] = 0xFF  # invalid lead byte
    table = read_dex_strings(bytes(data))
    assert table.strings == ["first", "last"]
    assert table.skipped == 1
    assert table.declared == 3


def test_utf16_length_mismatch_is_skipped():
    data = bytearray(build_dex(["abc"]))
    off = read_dex_strings(bytes(data)).offsets[0]
    data[off] = 5
    table = read_dex_strings(bytes(data))
    assert table.strings == [] and table.skipped == 1


def test_mutf8_special_forms():
    # NUL is encoded as C0 80; U+1F600 as a surrogate pair of 3-byte sequences
    payload, n = encode_mutf8("a\x00\U0001F600")
    assert payload == b"a\xc0\x80\xed\xa0\xbd\xed\xb8\x80"
    assert n == 4
    assert extract_dex_strings(build_dex(["a\x00\U0001F600"])) == ["a\x00\U0001F600"]


@pytest.mark.parametrize("value", [0, 1, 127, 128, 300, 16383, 16384, 2**32 - 1])
def test_uleb128_roundtrip(value):
    enc = encode_uleb128(value)
    assert read_uleb128(enc, 0) == (value, len(enc))


printable_unicode = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=40)


@settings(max_examples=200, deadline=None)
@given(st.lists(printable_unicode, max_size=30))
def test_dex_round_trip(strings):
    assert extract_dex_strings(build_dex(strings)) == strings


# --- AXML -------------------------------------------------------------------------


def test_hand_crafted_axml_pool():
    assert extract_axml_strings(PERMISSION_AXML) == ["android.permission.INTERNET"]


def test_plaintext_xml_is_not_axml():
    with pytest.raises(AxmlError) as exc:
        extract_axml_strings(PLAINTEXT_MANIFEST)
    assert exc.value.code == "not-axml"


def test_empty_pool():
    assert extract_axml_strings(axml_with_strings_utf16([])) == []
    assert extract_axml_strings(build_axml([])) == []


def test_missing_pool():
    doc = b"\x03\x00\x08\x00\x18\x00\x00\x00" + b"\x80\x01\x08\x00\x10\x00\x00\x00" + bytes(8)
    with pytest.raises(AxmlError) as exc:
        extract_axml_strings(doc)
    assert exc.value.code == "missing-string-pool"


def test_truncated_pool():
    with pytest.raises(AxmlError):
        extract_axml_strings(PERMISSION_AXML[:40])


def test_inconsistent_string_offset():
    data = bytearray(PERMISSION_AXML)
    data[8 + 0x1C : 8 + 0x1C + 4] = (0x4000).to_bytes(4, "little")
    with pytest.raises(AxmlError) as exc:
        extract_axml_strings(bytes(data))
    assert exc.value.code == "inconsistent-offsets"


def test_builder_matches_hand_fixture():
    assert build_axml(["android.permission.INTERNET"]) == PERMISSION_AXML


@settings(max_examples=100, deadline=None)
@given(st.lists(printable_unicode, max_size=20), st.booleans())
def test_axml_round_trip(strings, utf8):
    # the UTF-8 pool stores 1-byte length prefixes for short strings; keep them short
    strings = [s[:30] for s in strings]
    assert extract_axml_strings(build_axml(strings, utf8=utf8)) == strings


def test_hand_rolled_pool_matches_builder():
    strings = ["android.intent.action.BOOT_COMPLETED", "x", ""]
    assert extract_axml_strings(axml_with_strings_utf16(strings)) == strings


# --- printable runs ---------------------------------------------------------------


def test_printable_runs_examples():
    assert printable_runs(b"\x00minerd\x01--url\x00", 4) == ["minerd", "--url"]
    assert printable_runs(bytes(64), 4) == []
    assert printable_runs(b"abc", 4) == []
    assert printable_runs(b"", 1) == []


def test_printable_runs_default_min_len_keeps_userpass():
    blob = b"\x00\x00--userpass\x00-o\x00stratum+tcp://eu.multipool.us:7777\x00"
    assert printable_runs(blob) == ["--userpass", "stratum+tcp://eu.multipool.us:7777"]


def test_printable_runs_rejects_bad_min_len():
    with pytest.raises(ValueError):
        printable_runs(b"abc", 0)


@given(st.binary(max_size=300), st.integers(min_value=1, max_value=8))
def test_printable_runs_rejoin_is_stable(blob, min_len):
    runs = printable_runs(blob, min_len)
    assert printable_runs(b"\x00".join(r.encode() for r in runs), min_len) == runs


@given(st.binary(max_size=400), st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=17))
def test_windowed_runs_match_whole_buffer(blob, min_len, window):
    whole = list(iter_printable_runs(blob, min_len))
    assert list(iter_printable_runs_stream(io.BytesIO(blob), min_len, window)) == whole


# --- inventory ----------------------------------------------------------------------


def test_inventory_text_line(tmp_path):
    root = tmp_path / "app"
    (root / "assets").mkdir(parents=True)
    (root / "assets" / "index.js").write_text("// init\nvar miner = new CoinHive.Anonymous('K');\nminer.start();\n")
    inv = build_inventory(open_package(root))
    values = [i.value for _, i in inv.items()]
    assert "var miner = new CoinHive.Anonymous('K');" in values
    assert all(i.source == "text-file" for _, i in inv.items())


def test_inventory_isolates_corrupt_dex(tmp_path):
    p = write_zip(
        tmp_path / "c.apk",
        {"classes.dex": CORRUPT_OFFSET_DEX, "classes2.dex": COINHIVE_DEX, "assets/a.txt": b"monero wallet\n"},
    )
    inv = build_inventory(open_package(p))
    assert inv.entries["classes.dex"] == ()
    assert [i.value for i in inv.entries["classes2.dex"]] == ["CoinHive"]
    assert [i.value for i in inv.entries["assets/a.txt"]] == ["monero wallet"]
    (diag,) = inv.diagnostics
    assert diag.entry == "classes.dex" and diag.code == "out-of-bounds"


def test_inventory_with_only_blank_text_is_empty(tmp_path):
    root = tmp_path / "blank"
    root.mkdir()
    (root / "notes.txt").write_text("\n   \n\n")
    inv = build_inventory(open_package(root))
    assert len(inv) == 0 and not inv.diagnostics


def test_inventory_native_and_axml_sources(tmp_path):
    elf = b"\x7fELF" + bytes(8) + b"Usage: minerd [OPTIONS]" + bytes(4) + b"abc" + bytes(2)
    p = write_zip(tmp_path / "n.apk", {"lib/armeabi/libminer.so": elf, "AndroidManifest.xml": PERMISSION_AXML})
    inv = build_inventory(open_package(p), InventoryConfig(min_len=6))
    (run,) = inv.entries["lib/armeabi/libminer.so"]
    assert (run.value, run.source, run.offset) == ("Usage: minerd [OPTIONS]", "printable-run", 12)
    (s,) = inv.entries["AndroidManifest.xml"]
    assert (s.value, s.source) == ("android.permission.INTERNET", "axml-pool")


def test_text_extractor_drops_undecodable_lines():
    items, dropped = extract_entry("text", b"ok line\n\xff\xfe broken \xc3\n", InventoryConfig())
    assert [i.value for i in items] == ["ok line"]
    assert dropped == 1


def test_inventory_counts_dropped_lines(tmp_path):
    root = tmp_path / "u"
    root.mkdir()
    (root / "a.txt").write_bytes(b"ok line\n" + b"x" * 9000 + b"\n\xff broken\n")
    inv = build_inventory(open_package(root))
    assert [i.value for i in inv.entries["a.txt"]] == ["ok line", "x" * 9000]
    assert inv.dropped == {"a.txt": 1}


def test_inventory_size_cap_streams(tmp_path):
    root = tmp_path / "big"
    root.mkdir()
    (root / "blob.bin").write_bytes(bytes(50) + b"stratum+tcp://pool.example:3333" + bytes(50))
    inv = build_inventory(open_package(root), InventoryConfig(size_cap=16))
    assert [i.value for i in inv.entries["blob.bin"]] == ["stratum+tcp://pool.example:3333"]
    assert inv.diagnostics[0].code == "size-cap"


def test_inventory_is_deterministic(tmp_path):
    p = write_zip(tmp_path / "d.apk", {"classes.dex": build_dex(["x", "yy"]), "a.js": b"new CoinHive.User('k')\n"})
    pkg = open_package(p)
    assert build_inventory(pkg).to_dict() == build_inventory(open_package(p)).to_dict()


# --- manifest facts -----------------------------------------------------------------


def test_plaintext_manifest_facts(tmp_path):
    root = tmp_path / "m"
    root.mkdir()
    (root / "AndroidManifest.xml").write_bytes(PLAINTEXT_MANIFEST)
    facts = manifest_facts(open_package(root))
    assert facts.permissions == {"android.permission.INTERNET"}
    assert facts.intent_actions == {"android.intent.action.BOOT_COMPLETED"}
    assert facts.package_name == "com.example.funnysong"
    assert facts.warnings == ()


def test_manifest_absent(tmp_path):
    root = tmp_path / "nom"
    root.mkdir()
    (root / "classes.dex").write_bytes(COINHIVE_DEX)
    facts = manifest_facts(open_package(root))
    assert facts.permissions == set() and facts.intent_actions == set()
    assert facts.warnings == ("manifest-absent",)


def test_binary_manifest_matches_plaintext(tmp_path):
    pool = ["manifest", "uses-permission", "android.permission.INTERNET", "receiver", ".BootReceiver",
            "action", "android.intent.action.BOOT_COMPLETED", "name", "http://schemas.android.com/apk/res/android"]
    p = write_zip(tmp_path / "b.apk", {"AndroidManifest.xml": axml_with_strings_utf16(pool)})
    facts = manifest_facts(open_package(p))
    assert facts.permissions == {"android.permission.INTERNET"}
    assert facts.intent_actions == {"android.intent.action.BOOT_COMPLETED"}


def test_manifest_extra_actions_and_bare_permission(tmp_path):
    root = tmp_path / "x"
    root.mkdir()
    (root / "AndroidManifest.xml").write_text(
        '<manifest xmlns:android="http://schemas.android.com/apk/res/android" package="p">'
        '<uses-permission android:name="com.google.android.c2dm.permission.RECEIVE"/>'
        '<uses-permission android:name="CUSTOM_THING"/>'
        '<receiver><intent-filter><action android:name="com.android.vending.INSTALL_REFERRER"/>'
        '<action android:name="android.net.conn.CONNECTIVITY_CHANGE"/></intent-filter></receiver></manifest>'
    )
    facts = manifest_facts(open_package(root))
    assert facts.permissions == {"com.google.android.c2dm.permission.RECEIVE", "CUSTOM_THING"}
    assert facts.intent_actions == {"com.android.vending.INSTALL_REFERRER", "android.net.conn.CONNECTIVITY_CHANGE"}
