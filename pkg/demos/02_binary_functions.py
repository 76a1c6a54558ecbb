#!/usr/bin/env python3
"""Binary side of dataset construction: DWARF functions, bytes, assembly.

Uses the committed ELF fixture (a 3-function shared object built with -g).
Disassembly requires objdump on PATH and is skipped gracefully without it.
"""

import json
from pathlib import Path

from binsum.binextract import (
    BundleTool,
    ExternalCodeBundle,
    disassemble,
    extract_functions,
    ingest_external,
    match_source_binary,
    slice_raw_bytes,
)
from binsum.comments import SourceFunctionComment
from binsum.disasm import ObjdumpDisassembler
from binsum.errors import NoDebugInfoError
from binsum.model import OptLevel

BIN_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "bin"
manifest = json.loads((BIN_DIR / "manifest.json").read_text())
binary = (BIN_DIR / manifest["binary"]).read_bytes()

print("=== 1. Function extraction from DWARF ===\n")
funcs = extract_functions(binary, binary_path=manifest["binary"], opt_level=OptLevel.O1)
for func in funcs:
    size = func.high_pc - func.low_pc
    print(f"{func.name:10s} [{func.low_pc:#06x}, {func.high_pc:#06x})  {size:3d} bytes  {func.arch.value}")

print("\n=== 2. Raw byte slices (hex, exactly high_pc - low_pc bytes) ===\n")
for func in funcs:
    print(f"{func.name:10s} {slice_raw_bytes(binary, func)}")

print("\n=== 3. Assembly through the pluggable disassembler ===\n")
adapter = ObjdumpDisassembler()
print(f"adapter capability: {sorted(a.value for a in adapter.capability)}")
if funcs[0].arch in adapter.capability:
    for func in funcs:
        print(f"\n{func.name}:")
        print(disassemble(adapter, binary, func))
else:
    print("objdump lacks this architecture here; skipping")

print("\n=== 4. A stripped binary is rejected with a precise reason ===\n")
stripped = (BIN_DIR / manifest["stripped"]).read_bytes()
try:
    extract_functions(stripped)
except NoDebugInfoError as exc:
    print(f"NoDebugInfoError(kind={exc.kind!r}): {exc}")

print("\n=== 5. Ingesting external decompiler output ===\n")
bundle = ExternalCodeBundle(
    BundleTool.GHIDRA,
    {
        "add_two": "int add_two(int a, int b)\n{\n  return a + b;\n}",
        f"{funcs[0].low_pc:#x}": "void tiny_ret(void)\n{\n  return;\n}",
        "not_a_function": "...",
    },
)
result = ingest_external(bundle, funcs)
for func, code in result.attached.items():
    print(f"attached to {func.name} ({len(code)} chars)")
print(f"unresolved keys (reported, never dropped): {result.unresolved}")

print("\n=== 6. Matching a cleaned corpus by exact name ===\n")
corpus = [
    SourceFunctionComment("add_two", "int add_two(int, int)", "Add two integers.", "f.c", (7, 10)),
    SourceFunctionComment("sum_to", "unsigned sum_to(unsigned)", "Sum 0..n inclusive.", "f.c", (12, 20)),
    SourceFunctionComment("ghost_fn", "void ghost_fn(void)", "Exists only in source.", "f.c", (1, 2)),
]
match = match_source_binary(corpus, funcs, project="demo")
print(f"report: {match.report}")
for record in match.records:
    print(f"record {record.id}: comment={record.comment!r}")
