"""DWARF debug-info reader for function names and pc ranges.

Walks every compile unit in .debug_info (DWARF versions 2 through 5),
decoding the abbreviation tables and all standard attribute forms, and
yields subprogram entries that carry both a name and a pc range. Names
reach through DW_AT_specification / DW_AT_abstract_origin chains; ranges
come from low_pc/high_pc pairs or, for non-contiguous functions, from the
first entry of their .debug_ranges / .debug_rnglists list (flagged so
downstream stages can tell).

This is not a general DWARF library: expression, line, loclist, and macro
sections are ignored.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .elf import ElfFile
from .errors import NoDebugInfoError

DW_TAG_compile_unit = 0x11
DW_TAG_subprogram = 0x2E

DW_AT_name = 0x03
DW_AT_low_pc = 0x11
DW_AT_high_pc = 0x12
DW_AT_declaration = 0x3C
DW_AT_abstract_origin = 0x31
DW_AT_specification = 0x47
DW_AT_ranges = 0x55
DW_AT_str_offsets_base = 0x72
DW_AT_addr_base = 0x73
DW_AT_rnglists_base = 0x74

# Attribute form encodings (DWARF5 table 7.6).
DW_FORM_addr = 0x01
DW_FORM_block2 = 0x03
DW_FORM_block4 = 0x04
DW_FORM_data2 = 0x05
DW_FORM_data4 = 0x06
DW_FORM_data8 = 0x07
DW_FORM_string = 0x08
DW_FORM_block = 0x09
DW_FORM_block1 = 0x0A
DW_FORM_data1 = 0x0B
DW_FORM_flag = 0x0C
DW_FORM_sdata = 0x0D
DW_FORM_strp = 0x0E
DW_FORM_udata = 0x0F
DW_FORM_ref_addr = 0x10
DW_FORM_ref1 = 0x11
DW_FORM_ref2 = 0x12
DW_FORM_ref4 = 0x13
DW_FORM_ref8 = 0x14
DW_FORM_ref_udata = 0x15
DW_FORM_indirect = 0x16
DW_FORM_sec_offset = 0x17
DW_FORM_exprloc = 0x18
DW_FORM_flag_present = 0x19
DW_FORM_strx = 0x1A
DW_FORM_addrx = 0x1B
DW_FORM_ref_sup4 = 0x1C
DW_FORM_strp_sup = 0x1D
DW_FORM_data16 = 0x1E
DW_FORM_line_strp = 0x1F
DW_FORM_ref_sig8 = 0x20
DW_FORM_implicit_const = 0x21
DW_FORM_loclistx = 0x22
DW_FORM_rnglistx = 0x23
DW_FORM_ref_sup8 = 0x24
DW_FORM_strx1 = 0x25
DW_FORM_strx2 = 0x26
DW_FORM_strx3 = 0x27
DW_FORM_strx4 = 0x28
DW_FORM_addrx1 = 0x29
DW_FORM_addrx2 = 0x2A
DW_FORM_addrx3 = 0x2B
DW_FORM_addrx4 = 0x2C

_CONSTANT_FORMS = {
    DW_FORM_data1, DW_FORM_data2, DW_FORM_data4, DW_FORM_data8,
    DW_FORM_udata, DW_FORM_sdata, DW_FORM_implicit_const,
}
_REF_CU_FORMS = {DW_FORM_ref1, DW_FORM_ref2, DW_FORM_ref4, DW_FORM_ref8, DW_FORM_ref_udata}


class _Reader:
    """Cursor over a byte buffer with DWARF primitive decoders."""

    __slots__ = ("data", "pos", "end_char")

    def __init__(self, data: bytes, little_endian: bool, pos: int = 0):
        self.data = data
        self.pos = pos
        self.end_char = "<" if little_endian else ">"

    def eof(self) -> bool:
        return self.pos >= len(self.data)

    def bytes(self, n: int) -> bytes:
        out = self.data[self.pos: self.pos + n]
        if len(out) != n:
            raise NoDebugInfoError("truncated DWARF data", kind="malformed")
        self.pos += n
        return out

    def u8(self) -> int:
        return self.bytes(1)[0]

    def u16(self) -> int:
        return struct.unpack(self.end_char + "H", self.bytes(2))[0]

    def u24(self) -> int:
        raw = self.bytes(3)
        if self.end_char == "<":
            return raw[0] | raw[1] << 8 | raw[2] << 16
        return raw[2] | raw[1] << 8 | raw[0] << 16

    def u32(self) -> int:
        return struct.unpack(self.end_char + "I", self.bytes(4))[0]

    def u64(self) -> int:
        return struct.unpack(self.end_char + "Q", self.bytes(8))[0]

    def uint(self, size: int) -> int:
        if size == 4:
            return self.u32()
        if size == 8:
            return self.u64()
        if size == 2:
            return self.u16()
        if size == 1:
            return self.u8()
        raise NoDebugInfoError(f"bad integer width {size}", kind="malformed")

    def uleb(self) -> int:
        result = 0
        shift = 0
        while True:
            byte = self.u8()
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return result
            shift += 7

    def sleb(self) -> int:
        result = 0
        shift = 0
        while True:
            byte = self.u8()
            result |= (byte & 0x7F) << shift
            shift += 7
            if not byte & 0x80:
                if byte & 0x40:
                    result -= 1 << shift
                return result

    def cstring(self) -> bytes:
        end = self.data.find(b"\x00", self.pos)
        if end < 0:
            raise NoDebugInfoError("unterminated string", kind="malformed")
        out = self.data[self.pos:end]
        self.pos = end + 1
        return out


@dataclass(frozen=True)
class SubprogramEntry:
    name: str
    low_pc: int
    high_pc: int
    noncontiguous: bool = False


@dataclass
class _AbbrevDecl:
    tag: int
    has_children: bool
    attrs: list[tuple[int, int, int | None]]  # (attribute, form, implicit_const)


def _parse_abbrev_table(data: bytes, offset: int, little: bool) -> dict[int, _AbbrevDecl]:
    reader = _Reader(data, little, offset)
    table: dict[int, _AbbrevDecl] = {}
    while True:
        code = reader.uleb()
        if code == 0:
            return table
        tag = reader.uleb()
        has_children = reader.u8() != 0
        attrs: list[tuple[int, int, int | None]] = []
        while True:
            attr = reader.uleb()
            form = reader.uleb()
            const = reader.sleb() if form == DW_FORM_implicit_const else None
            if attr == 0 and form == 0:
                break
            attrs.append((attr, form, const))
        table[code] = _AbbrevDecl(tag, has_children, attrs)


class _Unit:
    """One compile unit plus the section context needed to resolve forms."""

    def __init__(self, elf: ElfFile, info: bytes, offset: int):
        self.elf = elf
        little = elf.little_endian
        reader = _Reader(info, little, offset)
        self.cu_offset = offset
        length = reader.u32()
        self.offset_size = 4
        if length == 0xFFFFFFFF:
            self.offset_size = 8
            length = reader.u64()
        self.end = reader.pos + length
        self.version = reader.u16()
        if not 2 <= self.version <= 5:
            raise NoDebugInfoError(f"unsupported DWARF version {self.version}", kind="malformed")
        if self.version >= 5:
            self.unit_type = reader.u8()
            self.address_size = reader.u8()
            self.abbrev_offset = reader.uint(self.offset_size)
        else:
            self.abbrev_offset = reader.uint(self.offset_size)
            self.address_size = reader.u8()
        self.reader = reader
        self.little = little

        abbrev = elf.section_bytes(".debug_abbrev")
        if abbrev is None:
            raise NoDebugInfoError("missing .debug_abbrev section", kind="malformed")
        self.abbrevs = _parse_abbrev_table(abbrev, self.abbrev_offset, little)

        self.debug_str = elf.section_bytes(".debug_str") or b""
        self.line_str = elf.section_bytes(".debug_line_str") or b""
        self.str_offsets = elf.section_bytes(".debug_str_offsets")
        self.debug_addr = elf.section_bytes(".debug_addr")
        self.rnglists = elf.section_bytes(".debug_rnglists")
        self.ranges = elf.section_bytes(".debug_ranges")
        # Defaults point just past the v5 section headers; real values are
        # picked up from the compile-unit DIE when present.
        self.str_offsets_base = 8
        self.addr_base = 8
        self.rnglists_base = 12
        self.cu_low_pc: int | None = None

        # offset (info-section relative) -> (tag, {attr: (form, value)})
        self.dies: dict[int, tuple[int, dict[int, tuple[int, object]]]] = {}

    # -- form decoding -----------------------------------------------------

    def read_form(self, reader: _Reader, form: int, const: int | None) -> object:
        if form == DW_FORM_addr:
            return reader.uint(self.address_size)
        if form in (DW_FORM_data1, DW_FORM_ref1, DW_FORM_strx1, DW_FORM_addrx1, DW_FORM_flag):
            return reader.u8()
        if form in (DW_FORM_data2, DW_FORM_ref2, DW_FORM_strx2, DW_FORM_addrx2):
            return reader.u16()
        if form in (DW_FORM_strx3, DW_FORM_addrx3):
            return reader.u24()
        if form in (DW_FORM_data4, DW_FORM_ref4, DW_FORM_strx4, DW_FORM_addrx4, DW_FORM_ref_sup4):
            return reader.u32()
        if form in (DW_FORM_data8, DW_FORM_ref8, DW_FORM_ref_sig8, DW_FORM_ref_sup8):
            return reader.u64()
        if form == DW_FORM_data16:
            return reader.bytes(16)
        if form in (DW_FORM_udata, DW_FORM_ref_udata, DW_FORM_strx, DW_FORM_addrx,
                    DW_FORM_loclistx, DW_FORM_rnglistx):
            return reader.uleb()
        if form == DW_FORM_sdata:
            return reader.sleb()
        if form == DW_FORM_string:
            return reader.cstring().decode("utf-8", errors="replace")
        if form in (DW_FORM_strp, DW_FORM_line_strp, DW_FORM_sec_offset,
                    DW_FORM_ref_addr, DW_FORM_strp_sup):
            return reader.uint(self.offset_size)
        if form == DW_FORM_block1:
            return reader.bytes(reader.u8())
        if form == DW_FORM_block2:
            return reader.bytes(reader.u16())
        if form == DW_FORM_block4:
            return reader.bytes(reader.u32())
        if form in (DW_FORM_block, DW_FORM_exprloc):
            return reader.bytes(reader.uleb())
        if form == DW_FORM_flag_present:
            return 1
        if form == DW_FORM_implicit_const:
            return const
        if form == DW_FORM_indirect:
            real = reader.uleb()
            return self.read_form(reader, real, None)
        raise NoDebugInfoError(f"unsupported DWARF form {form:#x}", kind="malformed")

    # -- value resolution ----------------------------------------------------

    def _strtab_string(self, table: bytes, offset: int) -> str:
        end = table.find(b"\x00", offset)
        if end < 0:
            raise NoDebugInfoError("bad string table offset", kind="malformed")
        return table[offset:end].decode("utf-8", errors="replace")

    def resolve_string(self, form: int, value: object) -> str | None:
        if form == DW_FORM_string:
            return value  # type: ignore[return-value]
        if form == DW_FORM_strp:
            return self._strtab_string(self.debug_str, value)  # type: ignore[arg-type]
        if form == DW_FORM_line_strp:
            return self._strtab_string(self.line_str, value)  # type: ignore[arg-type]
        if form in (DW_FORM_strx, DW_FORM_strx1, DW_FORM_strx2, DW_FORM_strx3, DW_FORM_strx4):
            if self.str_offsets is None:
                raise NoDebugInfoError("strx form without .debug_str_offsets", kind="malformed")
            pos = self.str_offsets_base + value * self.offset_size  # type: ignore[operator]
            reader = _Reader(self.str_offsets, self.little, pos)
            return self._strtab_string(self.debug_str, reader.uint(self.offset_size))
        return None

    def resolve_address(self, form: int, value: object) -> int | None:
        if form == DW_FORM_addr:
            return value  # type: ignore[return-value]
        if form in (DW_FORM_addrx, DW_FORM_addrx1, DW_FORM_addrx2, DW_FORM_addrx3, DW_FORM_addrx4):
            if self.debug_addr is None:
                raise NoDebugInfoError("addrx form without .debug_addr", kind="malformed")
            pos = self.addr_base + value * self.address_size  # type: ignore[operator]
            reader = _Reader(self.debug_addr, self.little, pos)
            return reader.uint(self.address_size)
        return None

    # -- DIE walking -----------------------------------------------------------

    def parse_dies(self) -> None:
        reader = self.reader
        first = True
        while reader.pos < self.end:
            die_offset = reader.pos
            code = reader.uleb()
            if code == 0:
                continue  # end-of-children marker
            decl = self.abbrevs.get(code)
            if decl is None:
                raise NoDebugInfoError(f"unknown abbrev code {code}", kind="malformed")
            attrs: dict[int, tuple[int, object]] = {}
            for attr, form, const in decl.attrs:
                value = self.read_form(reader, form, const)
                attrs[attr] = (form, value)
            self.dies[die_offset] = (decl.tag, attrs)
            if first and decl.tag == DW_TAG_compile_unit:
                self._apply_cu_bases(attrs)
            first = False

    def _apply_cu_bases(self, attrs: dict[int, tuple[int, object]]) -> None:
        if DW_AT_str_offsets_base in attrs:
            self.str_offsets_base = attrs[DW_AT_str_offsets_base][1]  # type: ignore[assignment]
        if DW_AT_addr_base in attrs:
            self.addr_base = attrs[DW_AT_addr_base][1]  # type: ignore[assignment]
        if DW_AT_rnglists_base in attrs:
            self.rnglists_base = attrs[DW_AT_rnglists_base][1]  # type: ignore[assignment]
        if DW_AT_low_pc in attrs:
            form, value = attrs[DW_AT_low_pc]
            self.cu_low_pc = self.resolve_address(form, value)

    # -- attribute lookups through reference chains ------------------------------

    def _deref(self, form: int, value: object) -> tuple[int, dict[int, tuple[int, object]]] | None:
        if form in _REF_CU_FORMS:
            return self.dies.get(self.cu_offset + value)  # type: ignore[operator]
        if form == DW_FORM_ref_addr:
            return self.dies.get(value)  # type: ignore[arg-type]
        return None

    def lookup_name(self, attrs: dict[int, tuple[int, object]], depth: int = 0) -> str | None:
        if DW_AT_name in attrs:
            form, value = attrs[DW_AT_name]
            return self.resolve_string(form, value)
        if depth >= 5:
            return None
        for ref_attr in (DW_AT_specification, DW_AT_abstract_origin):
            if ref_attr in attrs:
                form, value = attrs[ref_attr]
                target = self._deref(form, value)
                if target is not None:
                    name = self.lookup_name(target[1], depth + 1)
                    if name:
                        return name
        return None

    # -- pc ranges ------------------------------------------------------------

    def pc_range(self, attrs: dict[int, tuple[int, object]]) -> tuple[int, int, bool] | None:
        if DW_AT_low_pc in attrs:
            form, value = attrs[DW_AT_low_pc]
            low = self.resolve_address(form, value)
            if low is None or DW_AT_high_pc not in attrs:
                return None
            hform, hvalue = attrs[DW_AT_high_pc]
            if hform == DW_FORM_addr:
                high = hvalue
            elif hform in _CONSTANT_FORMS:
                high = low + hvalue  # type: ignore[operator]
            else:
                return None
            if high <= low:  # type: ignore[operator]
                return None
            return low, high, False  # type: ignore[return-value]
        if DW_AT_ranges in attrs:
            form, value = attrs[DW_AT_ranges]
            ranges = self._read_ranges(form, value)
            if not ranges:
                return None
            low, high = ranges[0]
            return low, high, len(ranges) > 1
        return None

    def _read_ranges(self, form: int, value: object) -> list[tuple[int, int]]:
        if self.version >= 5:
            if self.rnglists is None:
                return []
            if form == DW_FORM_rnglistx:
                base = self.rnglists_base
                idx_reader = _Reader(self.rnglists, self.little,
                                     base + value * self.offset_size)  # type: ignore[operator]
                offset = base + idx_reader.uint(self.offset_size)
            else:
                offset = value  # type: ignore[assignment]
            return self._read_rnglist_entries(offset)
        if self.ranges is None:
            return []
        return self._read_debug_ranges_entries(value)  # type: ignore[arg-type]

    def _read_rnglist_entries(self, offset: int) -> list[tuple[int, int]]:
        reader = _Reader(self.rnglists, self.little, offset)  # type: ignore[arg-type]
        base = self.cu_low_pc or 0
        out: list[tuple[int, int]] = []
        while True:
            kind = reader.u8()
            if kind == 0x00:  # end_of_list
                return out
            if kind == 0x01:  # base_addressx
                base = self.resolve_address(DW_FORM_addrx, reader.uleb()) or 0
            elif kind == 0x02:  # startx_endx
                start = self.resolve_address(DW_FORM_addrx, reader.uleb()) or 0
                end = self.resolve_address(DW_FORM_addrx, reader.uleb()) or 0
                out.append((start, end))
            elif kind == 0x03:  # startx_length
                start = self.resolve_address(DW_FORM_addrx, reader.uleb()) or 0
                out.append((start, start + reader.uleb()))
            elif kind == 0x04:  # offset_pair
                start = reader.uleb()
                end = reader.uleb()
                out.append((base + start, base + end))
            elif kind == 0x05:  # base_address
                base = reader.uint(self.address_size)
            elif kind == 0x06:  # start_end
                start = reader.uint(self.address_size)
                end = reader.uint(self.address_size)
                out.append((start, end))
            elif kind == 0x07:  # start_length
                start = reader.uint(self.address_size)
                out.append((start, start + reader.uleb()))
            else:
                raise NoDebugInfoError(f"bad rnglist entry kind {kind:#x}", kind="malformed")

    def _read_debug_ranges_entries(self, offset: int) -> list[tuple[int, int]]:
        reader = _Reader(self.ranges, self.little, offset)  # type: ignore[arg-type]
        base = self.cu_low_pc or 0
        max_addr = (1 << (self.address_size * 8)) - 1
        out: list[tuple[int, int]] = []
        while True:
            start = reader.uint(self.address_size)
            end = reader.uint(self.address_size)
            if start == 0 and end == 0:
                return out
            if start == max_addr:
                base = end
                continue
            out.append((base + start, base + end))


def iter_subprograms(elf: ElfFile) -> list[SubprogramEntry]:
    """All named subprograms with usable pc ranges, in DIE order.

    Raises :class:`NoDebugInfoError` (kind="stripped") when the file has no
    .debug_info at all, and kind="malformed" when debug data exists but
    cannot be decoded.
    """
    info = elf.section_bytes(".debug_info")
    if info is None or len(info) == 0:
        raise NoDebugInfoError(
            "no .debug_info section: binary is stripped or was built without -g",
            kind="stripped",
        )
    entries: list[SubprogramEntry] = []
    offset = 0
    try:
        while offset < len(info):
            unit = _Unit(elf, info, offset)
            unit.parse_dies()
            for tag, attrs in unit.dies.values():
                if tag != DW_TAG_subprogram:
                    continue
                if attrs.get(DW_AT_declaration, (0, 0))[1]:
                    continue
                pc = unit.pc_range(attrs)
                if pc is None:
                    continue
                name = unit.lookup_name(attrs)
                if not name:
                    continue
                low, high, noncontiguous = pc
                entries.append(SubprogramEntry(name, low, high, noncontiguous))
            offset = unit.end
    except NoDebugInfoError:
        raise
    except (struct.error, IndexError, ValueError) as exc:
        raise NoDebugInfoError(f"malformed DWARF data: {exc}", kind="malformed") from exc
    return entries
