from __future__ import annotations

import json
from pathlib import Path

import pytest

from binsum.comments import (
    CommentSpan,
    FunctionDecl,
    ParseWarning,
    SourceFunctionComment,
    associate,
    blank_lines_of,
    clean_corpus,
    extract_pairs,
    function_source,
    parse_source,
    parse_tree,
)

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "c_corpus"


# --- parse_source -------------------------------------------------------------

def test_multiline_signature_and_block_comment():
    text = (CORPUS / "f02_multiline_sig.c").read_text()
    decls, comments = parse_source(text, "f02_multiline_sig.c")
    assert [d.name for d in decls] == ["scanner_teardown"]
    decl = decls[0]
    assert decl.start_line == 3
    assert "scanner_teardown" in decl.sig
    assert "\n" in decl.sig  # signature really spans lines
    assert comments[0].end_line == 2
    assert comments[0].text == (
        "Tear down the scanner state for both reentrant and plain modes."
    )


def test_macro_with_comment_yields_no_decl():
    text = (CORPUS / "f03_macro.c").read_text()
    decls, comments = parse_source(text, "f03_macro.c")
    assert decls == []
    assert len(comments) == 1
    assert comments[0].text.startswith("Return all but the first")


def test_empty_file():
    assert parse_source("", "empty.c") == ([], [])


def test_line_ranges_contain_signature():
    import warnings

    for path in sorted(CORPUS.glob("*.c")):
        text = path.read_text()
        lines = text.split("\n")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ParseWarning)
            decls, _ = parse_source(text, path.name)
        for decl in decls:
            window = "\n".join(lines[decl.start_line - 1: decl.end_line])
            assert decl.sig in window, f"{path.name}:{decl.name}"


def test_comment_delimiters_stripped():
    decls, comments = parse_source(
        "// single line note\n/* block\n * with gutter\n */\nint f(void) { return 0; }\n",
        "t.c",
    )
    texts = {c.text for c in comments}
    assert texts == {"single line note", "block with gutter"}
    assert decls[0].name == "f"


def test_body_comments_excluded():
    text = (CORPUS / "f12_internal_comments.c").read_text()
    _, comments = parse_source(text, "f12.c")
    assert [c.text for c in comments] == ["Copy n bytes from src to dst."]


def test_unterminated_block_comment_warns_with_partial_results():
    text = (CORPUS / "f17_unterminated.c").read_text()
    with pytest.warns(ParseWarning, match="unterminated"):
        decls, comments = parse_source(text, "f17.c")
    assert [d.name for d in decls] == ["pre_cleanup"]
    assert any(c.text.startswith("dangling") for c in comments)


FLEX_SCANNER = '''/* Return all but the first "n" matched
  characters back to the input stream. */
#define yyless(n) \\
    do \\
    { \\
        int yyless_macro_arg = (n); \\
        YY_DO_BEFORE_ACTION; \\
    } \\
    while ( 0 )

/* yylex_destroy is for both reentrant
    and non-reentrant scanners. */
static int
yylex_destroy  (const char * yybytes,
                int  _yybytes_len )
{
    /* Pop the buffer stack,
        destroying each element. */
    while(YY_CURRENT_BUFFER){
        // Delete current buffer
        yy_delete_buffer( YY_CURRENT_BUFFER  );
        YY_CURRENT_BUFFER_LVALUE = NULL;
        yypop_buffer_state();
    }
    return 0;
}
'''


def test_flex_scanner_shape():
    """Brace-heavy macro above a multi-line signature, internal comments."""
    pairs = extract_pairs(FLEX_SCANNER, "scanner.c")
    assert len(pairs) == 1
    pair = pairs[0]
    assert pair.name == "yylex_destroy"
    assert pair.comment == "yylex_destroy is for both reentrant and non-reentrant scanners."
    assert pair.sig.startswith("static int\nyylex_destroy")
    decls, comments = parse_source(FLEX_SCANNER, "scanner.c")
    assert [d.name for d in decls] == ["yylex_destroy"]
    # the macro's comment is present but unpaired; body comments are gone
    texts = [c.text for c in comments]
    assert any(t.startswith("Return all but the first") for t in texts)
    assert not any("buffer stack" in t for t in texts)


def test_knr_definition_recognized():
    text = (
        "/* Old-style entry point. */\n"
        "int\nmain (argc, argv)\n     int argc;\n     char **argv;\n"
        "{\n  return argc;\n}\n"
    )
    decls, _ = parse_source(text, "knr.c")
    assert [d.name for d in decls] == ["main"]
    assert decls[0].start_line == 2


def test_prototype_then_struct_not_misparsed():
    text = "int g(int);\nstruct S {\n  int a;\n};\n"
    decls, _ = parse_source(text, "t.c")
    assert decls == []


def test_array_initializer_not_a_function():
    text = "static const int widths[] = {1, 2, 4, 8};\n"
    decls, _ = parse_source(text, "t.c")
    assert decls == []


def test_control_flow_keywords_not_functions():
    text = "int f(void)\n{\n  if (1) {\n    return 2;\n  }\n  return 0;\n}\n"
    decls, _ = parse_source(text, "t.c")
    assert [d.name for d in decls] == ["f"]


def test_stacked_line_comments_merge():
    text = "// first half.\n// second half.\nint f(void) { return 0; }\n"
    _, comments = parse_source(text, "t.c")
    assert len(comments) == 1
    assert comments[0].text == "first half. second half."
    assert (comments[0].start_line, comments[0].end_line) == (1, 2)


# --- associate ----------------------------------------------------------------

def _decl(name, start, end=None):
    return FunctionDecl(f"int {name}(void)", name, start, end or start + 2, "t.c")


def _comment(text, start, end=None):
    return CommentSpan(text, start, end or start, "t.c")


def test_associate_directly_adjacent():
    pairs = associate([_decl("f", 13)], [_comment("doc", 12)], blank_lines=set())
    assert len(pairs) == 1
    assert pairs[0].name == "f"
    assert pairs[0].comment == "doc"


def test_associate_across_blank_line():
    pairs = associate([_decl("f", 14)], [_comment("doc", 12)], blank_lines={13})
    assert len(pairs) == 1


def test_associate_blocked_by_code_line():
    pairs = associate([_decl("f", 14)], [_comment("doc", 12)], blank_lines=set())
    assert pairs == []


def test_associate_never_pairs_comment_below():
    pairs = associate([_decl("f", 5)], [_comment("doc", 9)], blank_lines=set())
    assert pairs == []


def test_associate_nearest_comment_wins():
    comments = [_comment("far", 10), _comment("near", 12)]
    pairs = associate([_decl("f", 13)], comments, blank_lines={11})
    assert len(pairs) == 1
    assert pairs[0].comment == "near"


def test_associate_one_to_one():
    # one comment, two stacked decls: only the adjacent decl pairs
    decls = [_decl("f", 13, 14), _decl("g", 15, 16)]
    pairs = associate(decls, [_comment("doc", 12)], blank_lines=set())
    assert [(p.name, p.comment) for p in pairs] == [("f", "doc")]


# --- clean_corpus ---------------------------------------------------------------

def _pair(name, comment, file="t.c"):
    return SourceFunctionComment(name, f"int {name}(void)", comment, file, (1, 3))


def test_clean_exact_duplicates_collapse():
    cleaned = clean_corpus([_pair("f", "a"), _pair("f", "a", file="u.c")])
    assert len(cleaned) == 1
    assert cleaned[0].name == "f"


def test_clean_conflicting_comments_removed():
    assert clean_corpus([_pair("f", "a"), _pair("f", "b")]) == []


def test_clean_distinct_names_kept():
    cleaned = clean_corpus([_pair("f", "a"), _pair("g", "b")])
    assert {p.name for p in cleaned} == {"f", "g"}


def test_clean_output_names_unique():
    pairs = [_pair("f", "a"), _pair("f", "a"), _pair("g", "x"), _pair("h", "y"), _pair("h", "z")]
    cleaned = clean_corpus(pairs)
    names = [p.name for p in cleaned]
    assert len(names) == len(set(names))
    assert "h" not in names


# --- whole corpus ----------------------------------------------------------------

def expected_pairs() -> dict[str, str]:
    return json.loads((FIXTURES / "c_corpus_expected.json").read_text())


def test_corpus_matches_expected_set():
    with pytest.warns(ParseWarning):
        cleaned = parse_tree(CORPUS)
    got = {p.name: p.comment for p in cleaned}
    assert got == expected_pairs()
    assert "ambiguous_fn" not in got


def test_header_files_not_harvested():
    with pytest.warns(ParseWarning):
        cleaned = parse_tree(CORPUS)
    # the header carries a conflicting comment for parse_input; had it been
    # harvested, the name would have been dropped as ambiguous
    assert any(p.name == "parse_input" for p in cleaned)


def test_function_source_slices_by_line_range():
    text = (CORPUS / "f01_basic.c").read_text()
    pairs = extract_pairs(text, "f01_basic.c")
    assert len(pairs) == 1
    body = function_source(text, pairs[0].func_lines)
    assert body.startswith("int parse_input")
    assert body.rstrip().endswith("}")
    assert "Parse one input line" not in body  # ground truth never leaks
