"""Whole-toolkit flow over the real ELF fixture, driven through the CLI."""

from __future__ import annotations

import json
from pathlib import Path

from binsum.cli import main
from binsum.model import RepresentationKind, read_records

FIXTURES = Path(__file__).parent / "fixtures"

ANNOTATED_SOURCE = """\
/* Return immediately; the smallest possible function. */
void tiny_ret(void)
{
}

/* Add two integers and return the sum. */
int add_two(int a, int b)
{
    return a + b;
}

/* Sum the integers from zero through n inclusive. */
unsigned sum_to(unsigned n)
{
    unsigned s = 0;
    unsigned i;
    for (i = 0; i <= n; i++)
        s += i;
    return s;
}
"""


def test_source_to_report_flow(tmp_path, capsys):
    src_dir = tmp_path / "project"
    src_dir.mkdir()
    (src_dir / "three_funcs.c").write_text(ANNOTATED_SOURCE)

    corpus = tmp_path / "corpus.jsonl"
    assert main(["parse-comments", str(src_dir), "-o", str(corpus),
                 "--project", "fixture"]) == 0
    names = {r.name for r in read_records(corpus)}
    assert names == {"tiny_ret", "add_two", "sum_to"}

    dataset = tmp_path / "dataset.jsonl"
    assert main(["match", str(corpus), str(FIXTURES / "bin" / "three_funcs.so"),
                 "-o", str(dataset), "--project", "fixture", "--opt", "O1"]) == 0
    records = list(read_records(dataset))
    assert len(records) == 3
    for record in records:
        assert record.low_pc < record.high_pc
        assert RepresentationKind.SOURCE in record.reps
        raw = record.reps[RepresentationKind.RAW_BYTES]
        assert len(raw.split(" ")) == record.high_pc - record.low_pc
        assert record.comment  # ground truth came through the whole chain

    stripped_ds = tmp_path / "dataset_stripped.jsonl"
    assert main(["strip", str(dataset), "--kind", "func",
                 "-o", str(stripped_ds), "--reps", "source"]) == 0
    for record in read_records(stripped_ds):
        source = record.reps[RepresentationKind.SOURCE]
        assert record.name not in source
        assert "FUN_" in source

    out_dir = tmp_path / "run"
    code = main(["run", "--dataset", str(dataset), "--output-dir", str(out_dir),
                 "--reps", "source,raw_bytes", "--mock", "--seed", "3",
                 "--word-limit", "mean-of-ground-truth"])
    assert code == 0
    manifest = json.loads((out_dir / "run.json").read_text())
    assert manifest["scored"] == 6
    assert manifest["failed"] == 0
    assert manifest["word_limit"] >= 1

    assert main(["report", str(out_dir / "scores.jsonl"),
                 "--group-by", "rep", "-o", str(tmp_path / "report")]) == 0
    report = (tmp_path / "report.txt").read_text()
    assert "source" in report and "raw_bytes" in report
    csv_text = (tmp_path / "report.csv").read_text()
    assert csv_text.count("\n") == 3  # header + two groups
