"""Dataset schema and its line-oriented persistence format.

A dataset is a UTF-8 text file with one JSON object per line (LF endings),
so corpora of hundreds of thousands of functions stream and diff cleanly.
Key order is fixed: id, project, binary_path, arch, opt, stripped, name,
low_pc, high_pc, comment, reps. Addresses serialize as lowercase hex with
an ``0x`` prefix so they can be eyeballed against disassembler output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DatasetParseError, ValidationError


class Arch(str, Enum):
    X86 = "x86"
    X64 = "x64"
    ARM = "arm"
    MIPS = "mips"


class OptLevel(str, Enum):
    O0 = "O0"
    O1 = "O1"
    O2 = "O2"
    O3 = "O3"


class RepresentationKind(str, Enum):
    """Code representations a record may carry, in serialization order."""

    RAW_BYTES = "raw_bytes"
    ASSEMBLY = "assembly"
    IR = "ir"
    DECOMPILED_GHIDRA = "decompiled_ghidra"
    DECOMPILED_HEXRAYS = "decompiled_hexrays"
    DECOMPILED_ANGR = "decompiled_angr"
    SOURCE = "source"


_REP_ORDER = {kind: i for i, kind in enumerate(RepresentationKind)}

# Source-only records (comment corpus entries not yet matched to a binary)
# carry this sentinel range so the low_pc < high_pc invariant holds before
# real boundaries are known.
SENTINEL_LOW_PC = 0x0
SENTINEL_HIGH_PC = 0x1


@dataclass(frozen=True)
class FunctionRecord:
    """One binary function with its ground-truth comment and representations."""

    id: str
    project: str
    binary_path: str
    arch: Arch
    opt_level: OptLevel
    stripped: bool
    name: str
    low_pc: int
    high_pc: int
    comment: str
    reps: dict[RepresentationKind, str] = field(default_factory=dict)

    def validate(self) -> None:
        problems = []
        if not self.id:
            problems.append("id is empty")
        if not (0 <= self.low_pc < self.high_pc):
            problems.append(f"low_pc {self.low_pc:#x} must be < high_pc {self.high_pc:#x}")
        if not self.comment:
            problems.append("comment is empty")
        if not self.name:
            problems.append("name is empty")
        for kind, text in self.reps.items():
            if not isinstance(kind, RepresentationKind):
                problems.append(f"unknown representation kind: {kind!r}")
            elif not text:
                problems.append(f"empty payload for representation {kind.value}")
        if problems:
            raise ValidationError("; ".join(problems))

    def with_rep(self, kind: RepresentationKind, text: str) -> "FunctionRecord":
        reps = dict(self.reps)
        reps[kind] = text
        return FunctionRecord(
            id=self.id, project=self.project, binary_path=self.binary_path,
            arch=self.arch, opt_level=self.opt_level, stripped=self.stripped,
            name=self.name, low_pc=self.low_pc, high_pc=self.high_pc,
            comment=self.comment, reps=reps,
        )


@dataclass(frozen=True)
class ScoreSet:
    """Per-pair metric values."""

    semantic: float
    bleu1: float
    meteor: float
    rouge_l: float

    def validate(self) -> None:
        if not -1.0 <= self.semantic <= 1.0:
            raise ValidationError(f"semantic {self.semantic} outside [-1, 1]")
        for name in ("bleu1", "meteor", "rouge_l"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} {value} outside [0, 1]")

    def as_dict(self) -> dict[str, float]:
        return {
            "semantic": self.semantic,
            "bleu1": self.bleu1,
            "meteor": self.meteor,
            "rouge_l": self.rouge_l,
        }


_RECORD_KEYS = (
    "id", "project", "binary_path", "arch", "opt", "stripped",
    "name", "low_pc", "high_pc", "comment", "reps",
)


def _encode_addr(value: int) -> str:
    return f"{value:#x}"


def _decode_addr(value: object, key: str) -> int:
    if not isinstance(value, str) or not value.startswith("0x"):
        raise ValidationError(f"{key} must be a 0x-prefixed hex string, got {value!r}")
    try:
        parsed = int(value, 16)
    except ValueError:
        raise ValidationError(f"{key} is not valid hex: {value!r}") from None
    if parsed < 0:
        raise ValidationError(f"{key} must be non-negative")
    return parsed


def encode_record(record: FunctionRecord) -> str:
    """Serialize a record to one line of JSON with stable key order.

    Invariant violations are rejected before anything is emitted, and
    identical records always produce identical bytes.
    """
    record.validate()
    reps = {
        kind.value: record.reps[kind]
        for kind in sorted(record.reps, key=_REP_ORDER.__getitem__)
    }
    obj = {
        "id": record.id,
        "project": record.project,
        "binary_path": record.binary_path,
        "arch": record.arch.value,
        "opt": record.opt_level.value,
        "stripped": record.stripped,
        "name": record.name,
        "low_pc": _encode_addr(record.low_pc),
        "high_pc": _encode_addr(record.high_pc),
        "comment": record.comment,
        "reps": reps,
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def decode_record(line: str, lineno: int | None = None) -> FunctionRecord:
    """Parse one serialized record line, re-checking all invariants."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetParseError(f"malformed record: {exc.msg}", lineno) from None
    if not isinstance(obj, dict):
        raise DatasetParseError("record line is not a JSON object", lineno)

    missing = [k for k in _RECORD_KEYS if k not in obj]
    if missing:
        raise DatasetParseError(f"missing keys: {', '.join(missing)}", lineno)
    unknown = [k for k in obj if k not in _RECORD_KEYS]
    if unknown:
        raise ValidationError(f"unknown keys: {', '.join(unknown)}")

    try:
        arch = Arch(obj["arch"])
    except ValueError:
        raise ValidationError(f"unknown arch: {obj['arch']!r}") from None
    try:
        opt = OptLevel(obj["opt"])
    except ValueError:
        raise ValidationError(f"unknown opt level: {obj['opt']!r}") from None

    reps_obj = obj["reps"]
    if not isinstance(reps_obj, dict):
        raise ValidationError("reps must be an object")
    reps: dict[RepresentationKind, str] = {}
    for key, text in reps_obj.items():
        try:
            kind = RepresentationKind(key)
        except ValueError:
            raise ValidationError(f"unknown representation kind: {key!r}") from None
        reps[kind] = text

    record = FunctionRecord(
        id=str(obj["id"]),
        project=str(obj["project"]),
        binary_path=str(obj["binary_path"]),
        arch=arch,
        opt_level=opt,
        stripped=bool(obj["stripped"]),
        name=str(obj["name"]),
        low_pc=_decode_addr(obj["low_pc"], "low_pc"),
        high_pc=_decode_addr(obj["high_pc"], "high_pc"),
        comment=str(obj["comment"]),
        reps=reps,
    )
    record.validate()
    return record


def write_records(path: str | Path, records: Iterable[FunctionRecord]) -> int:
    """Write records one per line; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(encode_record(record))
            fh.write("\n")
            count += 1
    return count


def read_records(path: str | Path) -> Iterator[FunctionRecord]:
    """Stream records from a dataset file, reporting line numbers on error."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                yield decode_record(line, lineno)
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
