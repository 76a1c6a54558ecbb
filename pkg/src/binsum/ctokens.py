"""Lightweight C token scanner.

Splits C-like text (source files, decompiler output) into a lossless token
stream: joining token texts reproduces the input byte-for-byte. The scanner
distinguishes identifiers from string/char literals and comments, which is
what symbol replacement and comment extraction need; it does not attempt
full C lexing (no multi-char operator tokens, no numeric suffix grammar).

Preprocessor directives are consumed whole, including backslash
continuations, so macro bodies never leak braces or parentheses into the
structural token stream.
"""

from __future__ import annotations

from dataclasses import dataclass

WS = "ws"
IDENT = "ident"
NUMBER = "number"
STRING = "string"
CHAR = "char"
COMMENT = "comment"
DIRECTIVE = "directive"
PUNCT = "punct"


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    end_line: int
    start: int = 0  # byte offset of the first character
    end: int = 0  # byte offset one past the last character
    unterminated: bool = False


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def scan(text: str) -> list[Token]:
    """Tokenize ``text`` losslessly; see module docstring for guarantees."""
    tokens: list[Token] = []
    i = 0
    n = len(text)
    line = 1
    at_line_start = True  # only whitespace seen since last newline

    def emit(kind: str, start: int, end: int, start_line: int, **kw) -> None:
        tokens.append(Token(kind, text[start:end], start_line, line, start, end, **kw))

    while i < n:
        ch = text[i]
        start = i
        start_line = line

        if ch in " \t\r\n\v\f":
            while i < n and text[i] in " \t\r\n\v\f":
                if text[i] == "\n":
                    line += 1
                    at_line_start = True
                i += 1
            emit(WS, start, i, start_line)
            continue

        if ch == "#" and at_line_start:
            # Directive runs to end of line, honoring backslash continuations.
            while i < n:
                if text[i] == "\n":
                    j = i - 1
                    while j >= start and text[j] in " \t\r":
                        j -= 1
                    if j >= start and text[j] == "\\":
                        line += 1
                        i += 1
                        continue
                    break
                i += 1
            emit(DIRECTIVE, start, i, start_line)
            at_line_start = False
            continue

        at_line_start = False

        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
            emit(COMMENT, start, i, start_line)
            continue

        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            i += 2
            closed = False
            while i < n:
                if text[i] == "\n":
                    line += 1
                elif text[i] == "*" and i + 1 < n and text[i + 1] == "/":
                    i += 2
                    closed = True
                    break
                i += 1
            emit(COMMENT, start, i, start_line, unterminated=not closed)
            continue

        if ch == '"' or ch == "'":
            quote = ch
            i += 1
            closed = False
            while i < n:
                c = text[i]
                if c == "\\" and i + 1 < n:
                    i += 2
                    continue
                if c == quote:
                    i += 1
                    closed = True
                    break
                if c == "\n":
                    break  # lenient: unterminated literal stops at EOL
                i += 1
            emit(STRING if quote == '"' else CHAR, start, i, start_line,
                 unterminated=not closed)
            continue

        if _is_ident_start(ch):
            while i < n and _is_ident_char(text[i]):
                i += 1
            emit(IDENT, start, i, start_line)
            continue

        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            i += 1
            while i < n:
                c = text[i]
                if c.isalnum() or c in "._":
                    i += 1
                elif c in "+-" and text[i - 1] in "eEpP":
                    i += 1
                else:
                    break
            emit(NUMBER, start, i, start_line)
            continue

        i += 1
        emit(PUNCT, start, i, start_line)

    return tokens
