"""Symbol stripping and function-name manipulation for ablation studies.

Replacements operate on the C-like token stream, never on raw substrings:
``count`` cannot corrupt ``count2``, and identifiers inside string
literals survive untouched. Replacement symbols follow decompiler
conventions for stripped binaries: functions become ``FUN_<addr>`` with
the address zero-padded to 8 hex digits, variables become ``Var_<i>``
with decimal first-occurrence indices, and types become ``undefined``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from . import ctokens
from .errors import ConsistencyError, RenameNoOpError


class StripKind(str, Enum):
    FUNC_NAMES = "func_names"
    VAR_NAMES = "var_names"
    TYPES = "types"
    ALL = "all"


@dataclass(frozen=True)
class SymbolTable:
    """Symbols present in one piece of code.

    ``variable_names`` must be listed in first-occurrence order; the list
    position becomes the variable's replacement index.
    """

    function_names: dict[str, int] = field(default_factory=dict)
    variable_names: tuple[str, ...] = ()
    type_names: tuple[str, ...] = ()


def func_symbol(address: int) -> str:
    return f"FUN_{address:08x}"


def var_symbol(index: int) -> str:
    return f"Var_{index}"


def _identifiers(code: str) -> set[str]:
    return {t.text for t in ctokens.scan(code) if t.kind == ctokens.IDENT}


def _check_consistency(originals: dict[str, str], present: set[str]) -> None:
    # An original may already have been replaced (strip is idempotent), so
    # it is consistent for either the original or its replacement to occur.
    missing = [
        orig for orig, replacement in originals.items()
        if orig not in present and replacement not in present
    ]
    if missing:
        raise ConsistencyError(
            f"identifiers not present in code: {', '.join(sorted(missing))}"
        )


def strip(code: str, table: SymbolTable, kind: StripKind) -> str:
    """Replace tabled symbols of the requested kind with non-informative ones.

    Whole-identifier replacement only; literals, operators, and layout are
    byte-identical before and after. A tabled identifier that occurs
    neither as itself nor as its replacement raises
    :class:`ConsistencyError`.
    """
    mapping: dict[str, str] = {}
    if kind in (StripKind.FUNC_NAMES, StripKind.ALL):
        for name, addr in table.function_names.items():
            mapping[name] = func_symbol(addr)
    if kind in (StripKind.VAR_NAMES, StripKind.ALL):
        for index, name in enumerate(table.variable_names):
            mapping[name] = var_symbol(index)
    if kind in (StripKind.TYPES, StripKind.ALL):
        for name in table.type_names:
            mapping[name] = "undefined"

    _check_consistency(mapping, _identifiers(code))

    out = []
    for tok in ctokens.scan(code):
        if tok.kind == ctokens.IDENT and tok.text in mapping:
            out.append(mapping[tok.text])
        else:
            out.append(tok.text)
    return "".join(out)


_C_TYPE_KEYWORDS = frozenset(
    """void char short int long float double signed unsigned _Bool bool
    size_t ssize_t wchar_t int8_t int16_t int32_t int64_t uint8_t uint16_t
    uint32_t uint64_t intptr_t uintptr_t byte uchar ushort uint ulong
    undefined1 undefined2 undefined4 undefined8 code""".split()
)

_ALREADY_STRIPPED = re.compile(r"^(FUN_[0-9a-f]+|DAT_[0-9a-f]+|Var_\d+|undefined)$")

_DECL_NEXT = frozenset(",;)=[")


def derive_symbol_table(code: str, function_names: dict[str, int]) -> SymbolTable:
    """Heuristic symbol table for decompiled or debug-build C-like code.

    Variables are identifiers in declaration position: directly preceded by
    another identifier or ``*`` and directly followed by one of
    ``, ; ) = [``. That covers parameters and the declaration-heavy bodies
    decompilers emit, but not variables declared outside the given code.
    Types are the C/decompiler type keywords that occur in the code.
    Symbols that already look stripped are never re-listed, which keeps a
    second pass over already-stripped code a no-op.
    """
    structural = [
        t for t in ctokens.scan(code)
        if t.kind in (ctokens.IDENT, ctokens.NUMBER, ctokens.PUNCT,
                      ctokens.STRING, ctokens.CHAR)
    ]
    variables: list[str] = []
    types: list[str] = []
    seen_vars: set[str] = set()
    seen_types: set[str] = set()
    for i, tok in enumerate(structural):
        if tok.kind != ctokens.IDENT or _ALREADY_STRIPPED.match(tok.text):
            continue
        if tok.text in _C_TYPE_KEYWORDS:
            if tok.text != "undefined" and tok.text not in seen_types:
                seen_types.add(tok.text)
                types.append(tok.text)
            continue
        if tok.text in function_names:
            continue
        prev = structural[i - 1] if i > 0 else None
        nxt = structural[i + 1] if i + 1 < len(structural) else None
        if prev is None or nxt is None:
            continue
        prev_is_typeish = prev.kind == ctokens.IDENT or prev.text == "*"
        if (
            prev_is_typeish
            and nxt.kind == ctokens.PUNCT
            and nxt.text in _DECL_NEXT
            and tok.text not in seen_vars
        ):
            seen_vars.add(tok.text)
            variables.append(tok.text)
    present = _identifiers(code)
    funcs = {name: addr for name, addr in function_names.items() if name in present}
    return SymbolTable(
        function_names=funcs,
        variable_names=tuple(variables),
        type_names=tuple(types),
    )


def rename_function(code: str, old: str, new: str) -> str:
    """Rename every whole-identifier occurrence of ``old`` to ``new``.

    Occurrences inside string literals do not count and are not touched;
    if ``old`` never occurs as an identifier the call is a refused no-op.
    """
    if old == new:
        if old not in _identifiers(code):
            raise RenameNoOpError(f"identifier {old!r} does not occur in code")
        return code
    replaced = 0
    out = []
    for tok in ctokens.scan(code):
        if tok.kind == ctokens.IDENT and tok.text == old:
            out.append(new)
            replaced += 1
        else:
            out.append(tok.text)
    if replaced == 0:
        raise RenameNoOpError(f"identifier {old!r} does not occur in code")
    return "".join(out)
