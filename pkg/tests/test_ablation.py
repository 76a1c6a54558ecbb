from __future__ import annotations

import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binsum.ablation import (
    StripKind,
    SymbolTable,
    func_symbol,
    rename_function,
    strip,
    var_symbol,
)
from binsum.errors import ConsistencyError, RenameNoOpError

DECOMPILED = """\
void error_ln(undefined4 param_1, long param_2)
{
  int count;
  int count2;
  count = (int) param_2 + 1;
  count2 = count + helper_fn(count);
  printf("count=%d helper_fn done", count2);
  error_ln(param_1, (long) count2);
  return;
}
"""

TABLE = SymbolTable(
    function_names={"error_ln": 0xEA01, "helper_fn": 0xEB20, "printf": 0xEC00},
    variable_names=("param_1", "param_2", "count", "count2"),
    type_names=("void", "undefined4", "long", "int"),
)


def test_func_symbol_width_matches_decompiler_convention():
    assert func_symbol(0xEA01) == "FUN_0000ea01"
    assert var_symbol(3) == "Var_3"


def test_strip_function_names():
    out = strip(DECOMPILED, TABLE, StripKind.FUNC_NAMES)
    assert "FUN_0000ea01(param_1" in out
    assert "FUN_0000eb20(count)" in out
    assert "error_ln(" not in out
    # the string literal is untouched even though it mentions helper_fn
    assert '"count=%d helper_fn done"' in out


def test_strip_variables_by_first_occurrence_index():
    out = strip(DECOMPILED, TABLE, StripKind.VAR_NAMES)
    assert "int Var_2;" in out
    assert "int Var_3;" in out
    assert "Var_2 = (int) Var_1 + 1;" in out
    # count must not corrupt count2
    assert "Var_2" in out and "count2" not in out.replace("Var_3", "")


def test_strip_types():
    out = strip(DECOMPILED, TABLE, StripKind.TYPES)
    assert out.startswith("undefined error_ln(undefined param_1, undefined param_2)")
    assert "undefined count;" in out
    assert "undefined count2;" in out


def test_strip_all_combined():
    code = "int count = n + count2;"
    table = SymbolTable(variable_names=("count", "count2"), type_names=("int",))
    assert strip(code, table, StripKind.ALL) == "undefined Var_0 = n + Var_1;"


def test_strip_all_removes_every_tabled_identifier():
    out = strip(DECOMPILED, TABLE, StripKind.ALL)
    ident = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
    names = set(TABLE.function_names) | set(TABLE.variable_names) | set(TABLE.type_names)
    # identifiers only; the string literal's helper_fn mention survives
    code_without_strings = re.sub(r'"[^"]*"', "", out)
    assert not names & set(ident.findall(code_without_strings))


def test_strip_empty_table_is_identity():
    assert strip(DECOMPILED, SymbolTable(), StripKind.VAR_NAMES) == DECOMPILED


def test_strip_idempotent_per_kind():
    for kind in StripKind:
        once = strip(DECOMPILED, TABLE, kind)
        assert strip(once, TABLE, kind) == once


def test_strip_missing_identifier_is_consistency_error():
    table = SymbolTable(function_names={"not_here": 0x10})
    with pytest.raises(ConsistencyError, match="not_here"):
        strip(DECOMPILED, table, StripKind.FUNC_NAMES)


def test_strip_preserves_non_symbol_text():
    out = strip(DECOMPILED, TABLE, StripKind.ALL)
    for fragment in ("(", ")", "{", "}", ";", "=", "+", '"count=%d helper_fn done"'):
        assert fragment in out
    assert out.count("\n") == DECOMPILED.count("\n")


# --- rename_function ------------------------------------------------------------

def test_rename_at_definition_and_call_sites():
    stripped = strip(DECOMPILED, TABLE, StripKind.FUNC_NAMES)
    out = rename_function(stripped, "FUN_0000ea01", "quick_sort")
    assert out.startswith("void quick_sort(")
    assert "quick_sort(param_1" in out  # recursive call site renamed too
    assert "FUN_0000ea01" not in out


def test_rename_identity():
    assert rename_function(DECOMPILED, "count", "count") == DECOMPILED


def test_rename_absent_identifier_is_noop_error():
    with pytest.raises(RenameNoOpError):
        rename_function(DECOMPILED, "quick_sort", "slow_sort")


def test_rename_inside_string_literal_only_is_noop_error():
    code = 'void f(void) { puts("calls quick_sort today"); }'
    with pytest.raises(RenameNoOpError):
        rename_function(code, "quick_sort", "bubble_sort")
    # and the literal is never rewritten when other occurrences exist
    code2 = 'void quick_sort(void) { puts("quick_sort"); }'
    out = rename_function(code2, "quick_sort", "merge_sort")
    assert '"quick_sort"' in out
    assert out.startswith("void merge_sort")


def test_rename_whole_identifier_only():
    code = "int quick_sort2 = quick_sort();"
    out = rename_function(code, "quick_sort", "f")
    assert out == "int quick_sort2 = f();"


@settings(max_examples=40, deadline=None)
@given(
    addr=st.integers(min_value=0, max_value=0xFFFFFFFF),
    index=st.integers(min_value=0, max_value=999),
)
def test_symbol_formats(addr, index):
    assert re.fullmatch(r"FUN_[0-9a-f]{8,}", func_symbol(addr))
    assert re.fullmatch(r"Var_\d+", var_symbol(index))
    if addr <= 0xFFFFFFFF:
        assert len(func_symbol(addr)) >= 12
