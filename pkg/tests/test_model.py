from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binsum.errors import DatasetParseError, ValidationError
from binsum.model import (
    Arch,
    FunctionRecord,
    OptLevel,
    RepresentationKind,
    ScoreSet,
    decode_record,
    encode_record,
    read_records,
    write_records,
)


def make_record(**overrides) -> FunctionRecord:
    base = dict(
        id="coreutils:ls:hash_insert:0x401000",
        project="coreutils",
        binary_path="bin/ls_x64_O2",
        arch=Arch.X64,
        opt_level=OptLevel.O2,
        stripped=False,
        name="hash_insert",
        low_pc=0x401000,
        high_pc=0x401040,
        comment="Insert an entry into the hash table.",
        reps={RepresentationKind.SOURCE: "int hash_insert(void) { return 0; }"},
    )
    base.update(overrides)
    return FunctionRecord(**base)


def test_roundtrip_identity():
    record = make_record()
    line = encode_record(record)
    assert decode_record(line) == record
    assert encode_record(decode_record(line)) == line


def test_all_rep_kinds_serialize():
    reps = {kind: f"payload {kind.value}" for kind in RepresentationKind}
    line = encode_record(make_record(reps=reps))
    for kind in RepresentationKind:
        assert f'"{kind.value}"' in line
    assert decode_record(line).reps == reps


def test_invalid_pc_range_rejected():
    record = make_record(low_pc=0x401040, high_pc=0x401000)
    with pytest.raises(ValidationError):
        encode_record(record)


def test_empty_comment_rejected():
    with pytest.raises(ValidationError):
        encode_record(make_record(comment=""))


def test_unknown_rep_key_names_key():
    line = encode_record(make_record()).replace('"source"', '"sourcecode"')
    with pytest.raises(ValidationError, match="sourcecode"):
        decode_record(line)


def test_truncated_line_is_parse_error():
    line = encode_record(make_record())
    with pytest.raises(DatasetParseError):
        decode_record(line[: len(line) // 2], lineno=7)


def test_parse_error_carries_line_number():
    with pytest.raises(DatasetParseError, match="line 7"):
        decode_record("{oops", lineno=7)


def test_addresses_serialize_as_hex():
    line = encode_record(make_record())
    assert '"low_pc":"0x401000"' in line
    assert '"high_pc":"0x401040"' in line


def test_encoding_deterministic_regardless_of_rep_insertion_order():
    reps_a = {}
    reps_a[RepresentationKind.SOURCE] = "s"
    reps_a[RepresentationKind.RAW_BYTES] = "90"
    reps_b = {}
    reps_b[RepresentationKind.RAW_BYTES] = "90"
    reps_b[RepresentationKind.SOURCE] = "s"
    assert encode_record(make_record(reps=reps_a)) == encode_record(make_record(reps=reps_b))


def test_file_roundtrip(tmp_path):
    records = [make_record(), make_record(id="r2", name="other", comment="Other.")]
    path = tmp_path / "data.jsonl"
    assert write_records(path, records) == 2
    assert list(read_records(path)) == records
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.endswith(b"\n")


def test_read_records_reports_bad_line(tmp_path):
    path = tmp_path / "data.jsonl"
    path.write_text(encode_record(make_record()) + "\nnot json\n", encoding="utf-8")
    with pytest.raises(DatasetParseError, match="line 2"):
        list(read_records(path))


def test_scoreset_bounds():
    ScoreSet(semantic=-1.0, bleu1=0.0, meteor=1.0, rouge_l=0.5).validate()
    with pytest.raises(ValidationError):
        ScoreSet(semantic=1.5, bleu1=0.0, meteor=0.0, rouge_l=0.0).validate()
    with pytest.raises(ValidationError):
        ScoreSet(semantic=0.0, bleu1=-0.1, meteor=0.0, rouge_l=0.0).validate()


_text = st.text(
    st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=40
)


@settings(max_examples=60, deadline=None)
@given(
    name=st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,12}", fullmatch=True),
    comment=_text,
    low=st.integers(min_value=0, max_value=2**48),
    size=st.integers(min_value=1, max_value=2**20),
    arch=st.sampled_from(list(Arch)),
    opt=st.sampled_from(list(OptLevel)),
    stripped=st.booleans(),
    reps=st.dictionaries(st.sampled_from(list(RepresentationKind)), _text, max_size=7),
)
def test_roundtrip_property(name, comment, low, size, arch, opt, stripped, reps):
    record = make_record(
        name=name, comment=comment, low_pc=low, high_pc=low + size,
        arch=arch, opt_level=opt, stripped=stripped, reps=reps,
    )
    assert decode_record(encode_record(record)) == record
