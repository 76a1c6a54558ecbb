"""Binary-side dataset construction.

Extracts function names and boundaries from ELF binaries with DWARF debug
info, slices raw bytes, drives a pluggable disassembler, ingests
externally produced decompiler/IR output, and matches binary functions
against a cleaned source comment corpus by exact name.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import dwarf
from .comments import SourceFunctionComment
from .disasm import DisassemblerAdapter
from .elf import ElfFile
from .errors import AmbiguityError, CapabilityError
from .model import Arch, FunctionRecord, OptLevel, RepresentationKind


@dataclass(frozen=True)
class BinFunc:
    """One function found in a binary: name plus [low_pc, high_pc)."""

    name: str
    low_pc: int
    high_pc: int
    binary_path: str
    arch: Arch
    opt_level: OptLevel
    noncontiguous: bool = False


class BundleTool(str, Enum):
    GHIDRA = "ghidra"
    HEXRAYS = "hexrays"
    ANGR = "angr"
    IR = "ir"


BUNDLE_REP = {
    BundleTool.GHIDRA: RepresentationKind.DECOMPILED_GHIDRA,
    BundleTool.HEXRAYS: RepresentationKind.DECOMPILED_HEXRAYS,
    BundleTool.ANGR: RepresentationKind.DECOMPILED_ANGR,
    BundleTool.IR: RepresentationKind.IR,
}


@dataclass(frozen=True)
class ExternalCodeBundle:
    """Per-function code text produced by an out-of-process tool.

    Entries are keyed by symbol name (debug binaries) or by ``0x<lowpc>``
    hex address (stripped binaries).
    """

    tool: BundleTool
    entries: dict[str, str]

    @classmethod
    def from_dir(cls, path: str | Path, tool: BundleTool | str) -> "ExternalCodeBundle":
        """Load a bundle directory: one ``<key>.txt`` file per function."""
        tool = BundleTool(tool)
        entries = {}
        for file in sorted(Path(path).glob("*.txt")):
            entries[file.stem] = file.read_text(encoding="utf-8")
        return cls(tool=tool, entries=entries)


class ExtractWarning(UserWarning):
    """Anomaly during extraction; the affected function was kept or skipped."""


def extract_functions(
    binary: bytes,
    binary_path: str = "",
    opt_level: OptLevel = OptLevel.O0,
) -> list[BinFunc]:
    """All named DWARF subprograms with contiguous pc ranges.

    Architecture comes from the ELF header; ``opt_level`` is caller-supplied
    build metadata (it is not recorded in the binary). Extraction is
    deterministic: identical bytes give identical results. Functions whose
    boundaries fall outside every executable section are dropped with a
    warning; non-contiguous functions keep their first range and warn.
    """
    elf = ElfFile.from_bytes(binary)
    funcs: list[BinFunc] = []
    for entry in dwarf.iter_subprograms(elf):
        try:
            elf.executable_section_for(entry.low_pc, entry.high_pc)
        except Exception:
            warnings.warn(
                f"{entry.name}: range [{entry.low_pc:#x}, {entry.high_pc:#x}) "
                "outside executable sections; skipped",
                ExtractWarning,
                stacklevel=2,
            )
            continue
        if entry.noncontiguous:
            warnings.warn(
                f"{entry.name}: non-contiguous function; using first range only",
                ExtractWarning,
                stacklevel=2,
            )
        funcs.append(
            BinFunc(
                name=entry.name,
                low_pc=entry.low_pc,
                high_pc=entry.high_pc,
                binary_path=binary_path,
                arch=elf.arch,
                opt_level=opt_level,
                noncontiguous=entry.noncontiguous,
            )
        )
    funcs.sort(key=lambda f: (f.low_pc, f.name))
    return funcs


def slice_raw_bytes(binary: bytes, func: BinFunc) -> str:
    """Hex-encode exactly high_pc - low_pc bytes of the function body."""
    elf = ElfFile.from_bytes(binary)
    raw = elf.read_virtual(func.low_pc, func.high_pc)
    return " ".join(f"{b:02x}" for b in raw)


def disassemble(adapter: DisassemblerAdapter, binary: bytes, func: BinFunc) -> str:
    """Disassemble one function through the given adapter.

    The first output line starts at ``low_pc``; undecodable bytes produce a
    truncated result plus a :class:`binsum.disasm.DecodeWarning`.
    """
    if func.arch not in adapter.capability:
        raise CapabilityError(
            f"adapter does not support {func.arch.value} "
            f"(supported: {sorted(a.value for a in adapter.capability)})"
        )
    elf = ElfFile.from_bytes(binary)
    code = elf.read_virtual(func.low_pc, func.high_pc)
    return adapter.disassemble(code, func.low_pc, func.arch)


@dataclass
class IngestResult:
    attached: dict[BinFunc, str]
    unresolved: list[str] = field(default_factory=list)


def ingest_external(bundle: ExternalCodeBundle, funcs: list[BinFunc]) -> IngestResult:
    """Attach bundle entries to binary functions by name or hex address.

    Every entry attaches to exactly one function; keys that resolve to no
    function are reported, never silently dropped. Two keys landing on the
    same function raise :class:`AmbiguityError`.
    """
    by_name = {f.name: f for f in funcs}
    by_addr = {f.low_pc: f for f in funcs}
    attached: dict[BinFunc, str] = {}
    claimed_by: dict[BinFunc, str] = {}
    unresolved: list[str] = []
    for key in sorted(bundle.entries):
        func = by_name.get(key)
        if func is None and key.startswith("0x"):
            try:
                func = by_addr.get(int(key, 16))
            except ValueError:
                func = None
        if func is None:
            unresolved.append(key)
            continue
        if func in claimed_by:
            raise AmbiguityError(
                f"keys {claimed_by[func]!r} and {key!r} both resolve to "
                f"{func.name} at {func.low_pc:#x}"
            )
        claimed_by[func] = key
        attached[func] = bundle.entries[key]
    return IngestResult(attached=attached, unresolved=unresolved)


@dataclass(frozen=True)
class MatchReport:
    matched: int
    source_only: int
    binary_only: int

    def __str__(self) -> str:
        return (
            f"matched={self.matched} source_only={self.source_only} "
            f"binary_only={self.binary_only}"
        )


@dataclass
class MatchResult:
    records: list[FunctionRecord]
    report: MatchReport


def record_id(project: str, binary_path: str, name: str, low_pc: int) -> str:
    base = Path(binary_path).name or "mem"
    return f"{project}:{base}:{name}:{low_pc:#x}"


def match_source_binary(
    corpus: list[SourceFunctionComment],
    funcs: list[BinFunc],
    project: str = "",
    stripped: bool = False,
    sources: dict[str, str] | None = None,
) -> MatchResult:
    """Emit a record for every exact name match between corpus and binary.

    The corpus must be cleaned (unique names). Comments are copied
    verbatim; unmatched items on both sides are only counted. When
    ``sources`` maps corpus files to their text, matched records also get
    a ``source`` rep sliced by the pair's line range.

    Internal binary names are normally unique; should a binary carry
    duplicates (static functions from different translation units), the
    lowest-address one is matched and the rest are counted binary-only,
    with a warning.
    """
    by_name = {p.name: p for p in corpus}
    records: list[FunctionRecord] = []
    matched_names: set[str] = set()
    for func in funcs:
        pair = by_name.get(func.name)
        if pair is None:
            continue
        if func.name in matched_names:
            warnings.warn(
                f"duplicate binary function name {func.name!r}; keeping the "
                "first occurrence only",
                ExtractWarning,
                stacklevel=2,
            )
            continue
        matched_names.add(func.name)
        reps: dict[RepresentationKind, str] = {}
        if sources and pair.file in sources:
            from .comments import function_source

            text = function_source(sources[pair.file], pair.func_lines)
            if text:
                reps[RepresentationKind.SOURCE] = text
        records.append(
            FunctionRecord(
                id=record_id(project, func.binary_path, func.name, func.low_pc),
                project=project,
                binary_path=func.binary_path,
                arch=func.arch,
                opt_level=func.opt_level,
                stripped=stripped,
                name=func.name,
                low_pc=func.low_pc,
                high_pc=func.high_pc,
                comment=pair.comment,
                reps=reps,
            )
        )
    report = MatchReport(
        matched=len(records),
        source_only=len(by_name) - len(matched_names),
        binary_only=len(funcs) - len(records),
    )
    return MatchResult(records=records, report=report)


def attach_binary_reps(
    records: list[FunctionRecord],
    binary: bytes,
    adapter: DisassemblerAdapter | None = None,
) -> list[FunctionRecord]:
    """Add raw-bytes (always) and assembly (when supported) reps to records."""
    out = []
    for record in records:
        func = BinFunc(
            name=record.name, low_pc=record.low_pc, high_pc=record.high_pc,
            binary_path=record.binary_path, arch=record.arch,
            opt_level=record.opt_level,
        )
        record = record.with_rep(RepresentationKind.RAW_BYTES, slice_raw_bytes(binary, func))
        if adapter is not None and record.arch in adapter.capability:
            asm = disassemble(adapter, binary, func)
            if asm:
                record = record.with_rep(RepresentationKind.ASSEMBLY, asm)
        out.append(record)
    return out
