#!/usr/bin/env python3
"""Walk through comment harvesting: parse C files, associate, clean.

Runs entirely on the bundled fixture corpus; no network, no toolchain.
"""

import warnings
from pathlib import Path

from binsum.comments import (
    associate,
    blank_lines_of,
    clean_corpus,
    extract_pairs,
    parse_source,
    parse_tree,
)

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "c_corpus"

print("=== 1. One file: declarations and comments ===\n")
multiline = (CORPUS / "f02_multiline_sig.c").read_text()
print(multiline)
decls, comments = parse_source(multiline, "f02_multiline_sig.c")
for decl in decls:
    print(f"declaration: {decl.name!r} at lines {decl.start_line}..{decl.end_line}")
    print(f"signature (verbatim, spans lines):\n{decl.sig}\n")
for comment in comments:
    print(f"comment at lines {comment.start_line}..{comment.end_line}: {comment.text!r}")

print("\n=== 2. Association: adjacency over blank lines only ===\n")
gapped = (CORPUS / "f04_blank_gap.c").read_text()
decls, comments = parse_source(gapped, "f04_blank_gap.c")
pairs = associate(decls, comments, blank_lines_of(gapped))
for pair in pairs:
    print(f"{pair.name}: {pair.comment!r}")

blocked = (CORPUS / "f05_nonadjacent.c").read_text()
print("\nA code line between comment and function blocks the pair:")
print(f"pairs found in f05: {extract_pairs(blocked, 'f05_nonadjacent.c')}")

print("\n=== 3. Whole-tree harvest with corpus cleaning ===\n")
with warnings.catch_warnings():
    warnings.simplefilter("ignore")  # the corpus includes a deliberately broken file
    cleaned = parse_tree(CORPUS)
print(f"{len(cleaned)} unique function-comment pairs:")
for pair in cleaned:
    print(f"  {pair.name:18s} {pair.comment}")

print("\nNote: 'ambiguous_fn' appears in two files with different comments,")
print("so it was removed; 'shared_helper' appears twice identically and was kept once.")
names = {p.name for p in cleaned}
assert "ambiguous_fn" not in names and "shared_helper" in names

print("\n=== 4. Conflicting duplicates are dropped entirely ===\n")
from binsum.comments import SourceFunctionComment

demo_pairs = [
    SourceFunctionComment("f", "int f(void)", "first meaning", "a.c", (1, 3)),
    SourceFunctionComment("f", "int f(void)", "second meaning", "b.c", (1, 3)),
    SourceFunctionComment("g", "int g(void)", "only meaning", "a.c", (5, 7)),
]
print(f"input names: {[p.name for p in demo_pairs]}")
print(f"after cleaning: {[p.name for p in clean_corpus(demo_pairs)]}")
