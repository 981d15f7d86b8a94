"""Tokenizer for muSPARK source text."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from muspark.diagnostics import LexError, SourceLocation


class Tok(enum.Enum):
    IDENT = "identifier"
    INT = "integer literal"
    ASSIGN = ":="
    COLON = ":"
    SEMI = ";"
    DOT = "."
    COMMA = ","
    LPAREN = "("
    RPAREN = ")"
    TICK = "'"
    STAR = "*"
    DASH = "-"
    KW_PROCEDURE = "procedure"
    KW_IS = "is"
    KW_BEGIN = "begin"
    KW_END = "end"
    KW_IF = "if"
    KW_THEN = "then"
    KW_ELSE = "else"
    KW_TYPE = "type"
    KW_RECORD = "record"
    KW_ACCESS = "access"
    KW_NEW = "new"
    KW_NULL = "null"
    KW_IN = "in"
    KW_OUT = "out"
    KW_ALL = "all"
    EOF = "end of input"


KEYWORDS = {
    t.value: t for t in Tok if t.name.startswith("KW_")
}

_PUNCT = {
    ";": Tok.SEMI,
    ".": Tok.DOT,
    ",": Tok.COMMA,
    "(": Tok.LPAREN,
    ")": Tok.RPAREN,
    "'": Tok.TICK,
    "*": Tok.STAR,
    "-": Tok.DASH,
}


@dataclass(frozen=True)
class Token:
    kind: Tok
    text: str
    location: SourceLocation
    value: Optional[int] = None

    def __repr__(self) -> str:
        if self.kind is Tok.IDENT:
            return f"Ident({self.text!r})"
        if self.kind is Tok.INT:
            return f"IntLit({self.value})"
        return self.kind.name


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens.  The trailing EOF token is not included."""
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)
    byte_offsets: Optional[list[int]] = None
    if not source.isascii():
        byte_offsets = [0]
        for c in source:
            byte_offsets.append(byte_offsets[-1] + len(c.encode("utf-8")))

    def loc() -> SourceLocation:
        return SourceLocation(line, col, i if byte_offsets is None else byte_offsets[i])

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r\f":
            i += 1
            col += 1
            continue
        if source.startswith("--", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start = loc()
        if ch.isascii() and ch.isalpha():
            j = i + 1
            while j < n and source[j].isascii() and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            tokens.append(Token(KEYWORDS.get(text, Tok.IDENT), text, start))
            col += j - i
            i = j
            continue
        if ch.isascii() and ch.isdigit():
            j = i + 1
            while j < n and source[j].isascii() and source[j].isdigit():
                j += 1
            text = source[i:j]
            tokens.append(Token(Tok.INT, text, start, int(text)))
            col += j - i
            i = j
            continue
        if ch == ":":
            if source.startswith(":=", i):
                tokens.append(Token(Tok.ASSIGN, ":=", start))
                i += 2
                col += 2
            else:
                tokens.append(Token(Tok.COLON, ":", start))
                i += 1
                col += 1
            continue
        kind = _PUNCT.get(ch)
        if kind is None:
            raise LexError(f"unexpected character {ch!r}", start)
        tokens.append(Token(kind, ch, start))
        i += 1
        col += 1
    return tokens
