#!/usr/bin/env python3
"""Symbol stripping and the function-name manipulation study, step by step."""

from binsum.ablation import (
    StripKind,
    SymbolTable,
    derive_symbol_table,
    rename_function,
    strip,
)

DECOMPILED = """\
void error_ln(undefined4 severity, long line_no)
{
  int count;
  char *message;
  count = (int) line_no + 1;
  message = format_entry(count);
  write_log("error_ln fired", message, count);
  return;
}
"""

TABLE = SymbolTable(
    function_names={"error_ln": 0xEA01, "format_entry": 0xEB20, "write_log": 0xEC00},
    variable_names=("severity", "line_no", "count", "message"),
    type_names=("void", "long", "int", "char"),
)

print("=== Original decompiled code ===\n")
print(DECOMPILED)

for kind in (StripKind.FUNC_NAMES, StripKind.VAR_NAMES, StripKind.TYPES, StripKind.ALL):
    print(f"=== strip(kind={kind.value}) ===\n")
    print(strip(DECOMPILED, TABLE, kind))

print("=== Note the string literal survived every pass ===")
print('the text "error_ln fired" is a literal, not an identifier, so it is never rewritten.\n')

print("=== Symbol tables can also be derived heuristically ===\n")
derived = derive_symbol_table(DECOMPILED, {"error_ln": 0xEA01})
print(f"derived variables: {derived.variable_names}")
print(f"derived types:     {derived.type_names}\n")

print("=== Name manipulation: the same body under a misleading name ===\n")
anonymous = strip(DECOMPILED, TABLE, StripKind.FUNC_NAMES)
print("fully anonymous version starts:")
print(anonymous.splitlines()[0])
for alias in ("quick_sort", "print_log", "DNS_flood"):
    renamed = rename_function(anonymous, "FUN_0000ea01", alias)
    print(f"\nrenamed to {alias!r}:")
    print(renamed.splitlines()[0])
print(
    "\nFeeding these variants to a summarizer shows how strongly the model"
    "\nleans on the function name rather than the body."
)
