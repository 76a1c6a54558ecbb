"""Pluggable disassembler adapters.

An adapter turns a byte slice at a base address into assembly text, one
instruction per line in ``address: mnemonic operands`` layout. The stock
adapter shells out to GNU objdump in raw-binary mode; its capability set
is probed from the installed binutils, so hosts with multi-target
binutils automatically gain arm/mips support.
"""

from __future__ import annotations

import re
import subprocess
import tempfile
import warnings
from pathlib import Path
from typing import Protocol

from .errors import CapabilityError
from .model import Arch


class DecodeWarning(UserWarning):
    """Undecodable bytes were hit; output is truncated at that address."""


class DisassemblerAdapter(Protocol):
    capability: frozenset[Arch]

    def disassemble(self, code: bytes, base_address: int, arch: Arch) -> str:
        """One instruction per line, ``address: mnemonic operands``."""
        ...


_OBJDUMP_MACHINES = {
    Arch.X86: "i386",
    Arch.X64: "i386:x86-64",
    Arch.ARM: "arm",
    Arch.MIPS: "mips",
}

_LINE = re.compile(r"^\s*([0-9a-f]+):\s+(?:[0-9a-f]{2,8}\s)+\s*(.*?)\s*$")


def _probe_objdump(objdump: str) -> frozenset[Arch]:
    try:
        out = subprocess.run(
            [objdump, "--info"], capture_output=True, text=True, timeout=30
        ).stdout
    except (OSError, subprocess.SubprocessError):
        return frozenset()
    names = {line.strip() for line in out.splitlines()}
    caps = set()
    for arch, machine in _OBJDUMP_MACHINES.items():
        if machine.split(":")[0] in names or machine in names:
            caps.add(arch)
    return frozenset(caps)


class ObjdumpDisassembler:
    """GNU objdump in raw-binary mode (Intel syntax on the x86 family)."""

    def __init__(self, objdump: str = "objdump"):
        self.objdump = objdump
        self.capability = _probe_objdump(objdump)

    def disassemble(self, code: bytes, base_address: int, arch: Arch) -> str:
        if arch not in self.capability:
            raise CapabilityError(
                f"{self.objdump} does not support {arch.value} "
                f"(supported: {sorted(a.value for a in self.capability)})"
            )
        machine = _OBJDUMP_MACHINES[arch]
        with tempfile.NamedTemporaryFile(suffix=".bin", delete=False) as tmp:
            tmp.write(code)
            path = tmp.name
        try:
            argv = [
                self.objdump, "-D", "-b", "binary", "-m", machine,
                f"--adjust-vma={base_address:#x}", path,
            ]
            if arch in (Arch.X86, Arch.X64):
                argv.insert(2, "-Mintel")
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=120)
        finally:
            Path(path).unlink(missing_ok=True)
        if proc.returncode != 0:
            raise CapabilityError(f"objdump failed: {proc.stderr.strip()}")
        return self._reformat(proc.stdout, base_address)

    def _reformat(self, raw: str, base_address: int) -> str:
        lines = []
        for line in raw.splitlines():
            m = _LINE.match(line)
            if not m:
                continue
            addr = int(m.group(1), 16)
            asm = " ".join(m.group(2).split())
            if not asm:
                continue  # continuation line of a long instruction encoding
            if asm.startswith("(bad)"):
                warnings.warn(
                    f"undecodable bytes at {addr:#x}; output truncated",
                    DecodeWarning,
                    stacklevel=3,
                )
                break
            lines.append(f"{addr:#x}: {asm}")
        if not lines and base_address is not None and not raw.strip():
            return ""
        return "\n".join(lines)
