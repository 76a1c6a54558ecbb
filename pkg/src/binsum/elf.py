"""Minimal ELF container reader.

Parses just enough of the ELF format for function extraction: the file
header (class, endianness, machine) and the section header table, so
virtual addresses can be mapped to file offsets and the DWARF sections
located. Both 32- and 64-bit files in either byte order are supported.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import AddressRangeError, ElfFormatError
from .model import Arch

ELF_MAGIC = b"\x7fELF"

SHT_NOBITS = 8
SHF_ALLOC = 0x2
SHF_EXECINSTR = 0x4

_MACHINE_TO_ARCH = {
    3: Arch.X86,  # EM_386
    62: Arch.X64,  # EM_X86_64
    40: Arch.ARM,  # EM_ARM
    183: Arch.ARM,  # EM_AARCH64
    8: Arch.MIPS,  # EM_MIPS
}


@dataclass(frozen=True)
class Section:
    name: str
    sh_type: int
    flags: int
    addr: int
    offset: int
    size: int

    @property
    def executable(self) -> bool:
        return bool(self.flags & SHF_EXECINSTR)

    @property
    def mapped(self) -> bool:
        return bool(self.flags & SHF_ALLOC) and self.sh_type != SHT_NOBITS

    def contains(self, low: int, high: int) -> bool:
        return self.addr <= low and high <= self.addr + self.size


@dataclass(frozen=True)
class ElfFile:
    data: bytes
    arch: Arch
    is_64: bool
    little_endian: bool
    sections: tuple[Section, ...]

    @classmethod
    def from_bytes(cls, data: bytes) -> "ElfFile":
        if len(data) < 52 or data[:4] != ELF_MAGIC:
            raise ElfFormatError("not an ELF file (bad magic)")
        ei_class, ei_data = data[4], data[5]
        if ei_class not in (1, 2):
            raise ElfFormatError(f"bad EI_CLASS {ei_class}")
        if ei_data not in (1, 2):
            raise ElfFormatError(f"bad EI_DATA {ei_data}")
        is_64 = ei_class == 2
        little = ei_data == 1
        end = "<" if little else ">"

        if is_64:
            (e_machine,) = struct.unpack_from(end + "H", data, 18)
            e_shoff, = struct.unpack_from(end + "Q", data, 40)
            e_shentsize, e_shnum, e_shstrndx = struct.unpack_from(end + "HHH", data, 58)
        else:
            (e_machine,) = struct.unpack_from(end + "H", data, 18)
            e_shoff, = struct.unpack_from(end + "I", data, 32)
            e_shentsize, e_shnum, e_shstrndx = struct.unpack_from(end + "HHH", data, 46)

        arch = _MACHINE_TO_ARCH.get(e_machine)
        if arch is None:
            raise ElfFormatError(f"unsupported machine type {e_machine}")
        if e_shoff == 0 or e_shnum == 0:
            raise ElfFormatError("ELF has no section header table")
        if e_shoff + e_shnum * e_shentsize > len(data):
            raise ElfFormatError("section header table extends past end of file")

        raw: list[tuple[int, int, int, int, int, int]] = []
        for i in range(e_shnum):
            base = e_shoff + i * e_shentsize
            if is_64:
                sh_name, sh_type, sh_flags, sh_addr, sh_offset, sh_size = struct.unpack_from(
                    end + "IIQQQQ", data, base
                )
            else:
                sh_name, sh_type, sh_flags, sh_addr, sh_offset, sh_size = struct.unpack_from(
                    end + "IIIIII", data, base
                )
            raw.append((sh_name, sh_type, sh_flags, sh_addr, sh_offset, sh_size))

        if e_shstrndx >= len(raw):
            raise ElfFormatError("bad section name string table index")
        str_off, str_size = raw[e_shstrndx][4], raw[e_shstrndx][5]
        strtab = data[str_off: str_off + str_size]

        def section_name(name_off: int) -> str:
            endpos = strtab.find(b"\x00", name_off)
            if endpos < 0:
                return ""
            return strtab[name_off:endpos].decode("utf-8", errors="replace")

        sections = tuple(
            Section(section_name(n), t, f, a, o, s) for n, t, f, a, o, s in raw
        )
        return cls(data=data, arch=arch, is_64=is_64, little_endian=little, sections=sections)

    def section(self, name: str) -> Section | None:
        for sec in self.sections:
            if sec.name == name:
                return sec
        return None

    def section_bytes(self, name: str) -> bytes | None:
        sec = self.section(name)
        if sec is None or sec.sh_type == SHT_NOBITS:
            return None
        return self.data[sec.offset: sec.offset + sec.size]

    def executable_section_for(self, low: int, high: int) -> Section:
        """Executable mapped section fully containing [low, high)."""
        for sec in self.sections:
            if sec.mapped and sec.executable and sec.contains(low, high):
                return sec
        raise AddressRangeError(
            f"range [{low:#x}, {high:#x}) is not inside any executable section"
        )

    def read_virtual(self, low: int, high: int) -> bytes:
        """File bytes backing the virtual address range [low, high)."""
        if high <= low:
            raise AddressRangeError(f"empty or inverted range [{low:#x}, {high:#x})")
        sec = self.executable_section_for(low, high)
        start = sec.offset + (low - sec.addr)
        return self.data[start: start + (high - low)]
