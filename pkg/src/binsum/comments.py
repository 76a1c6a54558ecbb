"""C source parsing: function declarations, comments, and their association.

Function identification works on the token stream from :mod:`binsum.ctokens`
(declaration followed by a compound-statement body at file scope), not on
per-line regexes, so signatures split across multiple lines and macros that
merely look like functions are handled correctly. Comment association pairs
a comment with the next function definition when only blank lines separate
them; corpus cleaning removes name collisions with conflicting comments.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

from . import ctokens
from .ctokens import Token
from .model import (
    Arch,
    FunctionRecord,
    OptLevel,
    RepresentationKind,
    SENTINEL_HIGH_PC,
    SENTINEL_LOW_PC,
)

# Keywords that may directly precede "(...) {" without introducing a function.
_NON_FUNCTION_KEYWORDS = {
    "if", "else", "for", "while", "do", "switch", "return", "sizeof",
    "case", "default", "goto", "typedef", "struct", "union", "enum",
    "_Static_assert", "__attribute__", "__declspec", "__asm__", "asm",
}


class ParseWarning(UserWarning):
    """File-level parse anomaly; partial results were still produced."""


@dataclass(frozen=True)
class FunctionDecl:
    """A top-level function definition with a body."""

    sig: str
    name: str
    start_line: int
    end_line: int
    file: str


@dataclass(frozen=True)
class CommentSpan:
    """A comment with delimiters removed and whitespace normalized."""

    text: str
    start_line: int
    end_line: int
    file: str


@dataclass(frozen=True)
class SourceFunctionComment:
    """A matched (function, comment) pair from one source file."""

    name: str
    sig: str
    comment: str
    file: str
    func_lines: tuple[int, int]


def normalize_comment(raw: str) -> str:
    """Strip comment delimiters and `*` gutters, collapse whitespace runs."""
    if raw.startswith("//"):
        body = raw[2:]
    elif raw.startswith("/*"):
        body = raw[2:]
        if body.endswith("*/"):
            body = body[:-2]
    else:
        body = raw
    lines = []
    for ln in body.split("\n"):
        stripped = ln.strip()
        while stripped.startswith("*"):
            stripped = stripped[1:].lstrip()
        lines.append(stripped)
    return " ".join(" ".join(lines).split())


def _merge_line_comments(spans: list[tuple[str, int, int, bool]]) -> list[tuple[str, int, int]]:
    """Merge stacked `//` comments on consecutive lines into one span."""
    merged: list[tuple[str, int, int]] = []
    for text, start, end, own_line in spans:
        if (
            merged
            and own_line
            and text.startswith("//")
            and merged[-1][0].startswith("//")
            and start == merged[-1][2] + 1
        ):
            prev_text, prev_start, _ = merged[-1]
            merged[-1] = (prev_text + "\n" + text, prev_start, end)
        else:
            merged.append((text, start, end))
    return merged


def _normalize_merged(text: str) -> str:
    if text.startswith("//"):
        parts = [normalize_comment(part) for part in text.split("\n")]
        return " ".join(" ".join(parts).split())
    return normalize_comment(text)


_STRUCTURAL = {ctokens.IDENT, ctokens.NUMBER, ctokens.STRING, ctokens.CHAR, ctokens.PUNCT}


def _find_declarator(segment: list[Token]) -> tuple[int, int, Token] | None:
    """Locate the parameter-list group in a signature segment.

    Returns (name_index, close_paren_index, name_token) for the last
    top-level ``identifier ( ... )`` group that is not an attribute wrapper,
    or None when the segment cannot be a function signature.
    """
    depth = 0
    candidate = None
    i = 0
    while i < len(segment):
        tok = segment[i]
        if tok.kind == ctokens.PUNCT:
            if tok.text == "(":
                if depth == 0:
                    prev = i - 1
                    open_idx = i
                    # find matching close paren
                    d = 1
                    j = i + 1
                    while j < len(segment) and d > 0:
                        if segment[j].kind == ctokens.PUNCT:
                            if segment[j].text == "(":
                                d += 1
                            elif segment[j].text == ")":
                                d -= 1
                        j += 1
                    if d != 0:
                        return None
                    close_idx = j - 1
                    if (
                        prev >= 0
                        and segment[prev].kind == ctokens.IDENT
                        and segment[prev].text not in _NON_FUNCTION_KEYWORDS
                    ):
                        candidate = (prev, close_idx, segment[prev])
                    i = close_idx + 1
                    continue
            elif tok.text == "=" and depth == 0:
                return None  # initializer, not a definition
        i += 1
    return candidate


def _strip_attributes(tokens: list[Token]) -> list[Token]:
    """Drop `__attribute__((...))`-style wrappers from a token run."""
    out: list[Token] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if (
            tok.kind == ctokens.IDENT
            and tok.text in ("__attribute__", "__declspec", "__asm__", "asm")
            and i + 1 < len(tokens)
            and tokens[i + 1].text == "("
        ):
            depth = 0
            i += 1
            while i < len(tokens):
                if tokens[i].kind == ctokens.PUNCT:
                    if tokens[i].text == "(":
                        depth += 1
                    elif tokens[i].text == ")":
                        depth -= 1
                        if depth == 0:
                            break
                i += 1
            i += 1
            continue
        out.append(tok)
        i += 1
    return out


def _decl_like(tokens: list[Token]) -> bool:
    """True when a token run could be a K&R parameter declaration."""
    for tok in _strip_attributes(tokens):
        if tok.kind == ctokens.PUNCT and tok.text in "(){}=":
            return False
        if tok.kind in (ctokens.STRING, ctokens.CHAR):
            return False
    return True


def parse_source(source_text: str, file: str | Path = "<memory>") -> tuple[list[FunctionDecl], list[CommentSpan]]:
    """Parse one C translation unit into declarations and comments.

    The input need not be preprocessable; headers may be absent. Comments
    inside function bodies are excluded from the returned spans so they
    never take part in association. An unterminated block comment raises a
    :class:`ParseWarning` and returns partial results.
    """
    file = str(file)
    tokens = ctokens.scan(source_text)
    src_lines = source_text.split("\n")

    raw_comments: list[tuple[str, int, int, bool]] = []
    for tok in tokens:
        if tok.kind != ctokens.COMMENT:
            continue
        if tok.unterminated:
            warnings.warn(
                f"{file}: unterminated block comment at line {tok.line}",
                ParseWarning,
                stacklevel=2,
            )
        prefix = src_lines[tok.line - 1].split("//" if tok.text.startswith("//") else "/*")[0]
        raw_comments.append((tok.text, tok.line, tok.end_line, prefix.strip() == ""))

    comments = []
    for text, start, end in _merge_line_comments(raw_comments):
        normalized = _normalize_merged(text)
        if normalized:
            comments.append(CommentSpan(normalized, start, end, file))

    # Structural pass: find "signature { body }" at file scope. Segments are
    # token runs split on top-level ';' since the last closed brace; K&R
    # parameter declarations between the parameter list and '{' are allowed.
    structural = [t for t in tokens if t.kind in _STRUCTURAL]
    decls: list[FunctionDecl] = []
    paren_depth = 0
    segments: list[list[Token]] = [[]]
    i = 0
    while i < len(structural):
        tok = structural[i]
        if tok.kind == ctokens.PUNCT:
            if tok.text == "(":
                paren_depth += 1
            elif tok.text == ")":
                paren_depth = max(0, paren_depth - 1)
            elif tok.text == ";" and paren_depth == 0:
                segments.append([])
                i += 1
                continue
            elif tok.text == "}" and paren_depth == 0:
                # stray closer (unbalanced preprocessor block); start fresh
                segments = [[]]
                i += 1
                continue
            elif tok.text == "{" and paren_depth == 0:
                decl = _match_function(segments, source_text)
                # consume the brace-balanced body
                depth = 0
                end_line = tok.end_line
                while i < len(structural):
                    t2 = structural[i]
                    if t2.kind == ctokens.PUNCT:
                        if t2.text == "{":
                            depth += 1
                        elif t2.text == "}":
                            depth -= 1
                            if depth == 0:
                                end_line = t2.end_line
                                i += 1
                                break
                    i += 1
                else:
                    warnings.warn(
                        f"{file}: unbalanced braces after line {tok.line}",
                        ParseWarning,
                        stacklevel=2,
                    )
                    end_line = structural[-1].end_line
                if decl is not None:
                    decls.append(FunctionDecl(decl[0], decl[1], decl[2], end_line, file))
                segments = [[]]
                continue
        segments[-1].append(tok)
        i += 1

    body_ranges = [(d.start_line, d.end_line) for d in decls]
    comments = [
        c for c in comments
        if not any(lo <= c.start_line <= hi for lo, hi in body_ranges)
    ]
    return decls, comments


def _match_function(segments: list[list[Token]], source_text: str) -> tuple[str, str, int] | None:
    """Try to read a function signature out of the pending segments.

    Normally the declarator sits in the last segment before ``{``. The one
    exception is K&R definitions, whose parameter declarations each end
    with ``;`` (so the final segment is empty); only then does the search
    walk back through declaration-shaped segments.
    """
    idx = len(segments) - 1
    knr_context = not segments[idx]
    while idx >= 0 and not segments[idx]:
        idx -= 1
    while idx >= 0:
        segment = segments[idx]
        if not segment:
            idx -= 1
            continue
        found = _find_declarator(segment)
        if found is not None:
            _, close_idx, name_tok = found
            if not _decl_like(segment[close_idx + 1:]):
                return None
            if any(not _decl_like(later) for later in segments[idx + 1:]):
                return None
            sig = source_text[segment[0].start: segment[close_idx].end]
            return sig, name_tok.text, segment[0].line
        if knr_context and _decl_like(segment):
            idx -= 1
            continue
        return None
    return None


def blank_lines_of(source_text: str) -> set[int]:
    """1-based numbers of lines containing only whitespace."""
    return {
        i for i, ln in enumerate(source_text.split("\n"), start=1)
        if ln.strip() == ""
    }


def associate(
    decls: list[FunctionDecl],
    comments: list[CommentSpan],
    blank_lines: set[int] | frozenset[int] = frozenset(),
) -> list[SourceFunctionComment]:
    """Pair comments with the function definitions directly below them.

    A comment pairs with a declaration iff the declaration starts after the
    comment ends with only blank lines in between. Each comment pairs with
    at most one declaration and vice versa; unmatched items are dropped.
    """
    used: set[int] = set()
    pairs: list[SourceFunctionComment] = []
    for decl in sorted(decls, key=lambda d: d.start_line):
        best = None
        for idx, comment in enumerate(comments):
            if idx in used or comment.end_line >= decl.start_line:
                continue
            gap = range(comment.end_line + 1, decl.start_line)
            if all(line in blank_lines for line in gap):
                if best is None or comment.end_line > comments[best].end_line:
                    best = idx
        if best is not None:
            used.add(best)
            comment = comments[best]
            pairs.append(
                SourceFunctionComment(
                    name=decl.name,
                    sig=decl.sig,
                    comment=comment.text,
                    file=decl.file,
                    func_lines=(decl.start_line, decl.end_line),
                )
            )
    return pairs


def clean_corpus(pairs: list[SourceFunctionComment]) -> list[SourceFunctionComment]:
    """Deduplicate by name; drop names carrying conflicting comments.

    Duplicates with byte-identical comments collapse to the first
    occurrence. A name seen with two or more distinct comments is ambiguous
    (which definition got compiled is unknowable) and is removed entirely.
    """
    by_name: dict[str, list[SourceFunctionComment]] = {}
    for pair in pairs:
        by_name.setdefault(pair.name, []).append(pair)
    cleaned = []
    for name in sorted(by_name):
        group = by_name[name]
        if len({p.comment for p in group}) == 1:
            cleaned.append(group[0])
    return cleaned


def extract_pairs(source_text: str, file: str | Path = "<memory>") -> list[SourceFunctionComment]:
    """Parse one file and associate its comments in a single call."""
    decls, comments = parse_source(source_text, file)
    return associate(decls, comments, blank_lines_of(source_text))


def parse_tree(root: str | Path, glob: str = "**/*.c") -> list[SourceFunctionComment]:
    """Harvest cleaned pairs from every matching source file under ``root``.

    Header files are intentionally not harvested: their comments recur in
    the corresponding source-file definitions.
    """
    root = Path(root)
    pairs: list[SourceFunctionComment] = []
    for path in sorted(root.glob(glob)):
        if not path.is_file():
            continue
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            raise OSError(f"cannot read {path}: {exc}") from exc
        pairs.extend(extract_pairs(text, path.relative_to(root)))
    return clean_corpus(pairs)


def function_source(source_text: str, func_lines: tuple[int, int]) -> str:
    """Slice the function's own text by line range (the matched ground-truth
    comment sits above the range, so it is naturally excluded)."""
    lines = source_text.split("\n")
    start, end = func_lines
    return "\n".join(lines[start - 1: end])


def pairs_to_records(
    pairs: list[SourceFunctionComment],
    sources: dict[str, str],
    project: str = "",
    arch: Arch = Arch.X64,
    opt_level: OptLevel = OptLevel.O0,
) -> list[FunctionRecord]:
    """Wrap cleaned pairs in the dataset record format (`source` rep only).

    Records carry the sentinel address range until matched against a real
    binary; ``sources`` maps each pair's file to its full text.
    """
    records = []
    for pair in pairs:
        text = function_source(sources[pair.file], pair.func_lines)
        records.append(
            FunctionRecord(
                id=f"src:{project}:{pair.file}:{pair.name}",
                project=project,
                binary_path="",
                arch=arch,
                opt_level=opt_level,
                stripped=False,
                name=pair.name,
                low_pc=SENTINEL_LOW_PC,
                high_pc=SENTINEL_HIGH_PC,
                comment=pair.comment,
                reps={RepresentationKind.SOURCE: text},
            )
        )
    return records
