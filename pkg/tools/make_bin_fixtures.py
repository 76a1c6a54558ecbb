#!/usr/bin/env python3
"""Regenerate the committed ELF test fixtures and their manifest.

The manifest is produced with binutils (nm for names/sizes, readelf for
the section table, raw file reads for the byte slices), so tests compare
the package's own ELF/DWARF parsing against an independent toolchain.

Requires gcc and binutils; the checked-in outputs make the test suite
itself toolchain-free.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "bin"

SOURCE = """\
/* Three exported functions with distinct shapes for boundary tests. */

void tiny_ret(void)
{
}

int add_two(int a, int b)
{
    return a + b;
}

unsigned sum_to(unsigned n)
{
    unsigned s = 0;
    unsigned i;
    for (i = 0; i <= n; i++)
        s += i;
    return s;
}
"""

TARGETS = ["tiny_ret", "add_two", "sum_to"]


def run(*argv: str) -> str:
    return subprocess.run(argv, check=True, capture_output=True, text=True).stdout


def text_section_map(binary: Path) -> tuple[int, int]:
    """(vaddr, file offset) of .text from readelf."""
    for line in run("readelf", "-SW", str(binary)).splitlines():
        if " .text" in line:
            parts = line.split("]", 1)[1].split()
            return int(parts[2], 16), int(parts[3], 16)
    raise SystemExit(".text section not found")


def collect_functions(binary: Path) -> list[dict]:
    sect_addr, sect_off = text_section_map(binary)
    data = binary.read_bytes()
    functions = []
    for line in run("nm", "-S", "--defined-only", str(binary)).splitlines():
        parts = line.split()
        if len(parts) == 4 and parts[3] in TARGETS:
            addr, size = int(parts[0], 16), int(parts[1], 16)
            start = sect_off + (addr - sect_addr)
            chunk = data[start: start + size]
            functions.append(
                {
                    "name": parts[3],
                    "low_pc": addr,
                    "high_pc": addr + size,
                    "size": size,
                    "slice_hex": " ".join(f"{b:02x}" for b in chunk),
                    "slice_sha256": hashlib.sha256(chunk).hexdigest(),
                }
            )
    if sorted(f["name"] for f in functions) != sorted(TARGETS):
        raise SystemExit(f"expected {TARGETS}, extracted {[f['name'] for f in functions]}")
    functions.sort(key=lambda f: f["low_pc"])
    return functions


BASE_FLAGS = [
    "-shared", "-fPIC", "-O1", "-fcf-protection=none",
    "-fno-asynchronous-unwind-tables", "-fno-stack-protector",
]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    src = OUT / "three_funcs.c"
    src.write_text(SOURCE)

    binary = OUT / "three_funcs.so"
    run("gcc", *BASE_FLAGS, "-g", "-o", str(binary), str(src))
    stripped = OUT / "three_funcs_stripped.so"
    stripped.write_bytes(binary.read_bytes())
    run("strip", str(stripped))
    manifest = {
        "binary": binary.name,
        "stripped": stripped.name,
        "arch": "x64",
        "functions": collect_functions(binary),
    }
    (OUT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    # same code with DWARF version 4 debug info, for format regression
    dw4 = OUT / "three_funcs_dw4.so"
    run("gcc", *BASE_FLAGS, "-gdwarf-4", "-o", str(dw4), str(src))
    manifest_dw4 = {
        "binary": dw4.name,
        "arch": "x64",
        "functions": collect_functions(dw4),
    }
    (OUT / "manifest_dw4.json").write_text(json.dumps(manifest_dw4, indent=2) + "\n")
    print(f"wrote {binary}, {stripped}, {dw4}, and two manifests")


if __name__ == "__main__":
    sys.exit(main())
