"""Lexing, parsing, pretty-printing and legality checking."""

from muspark.syntax.ast import DEREF, Field, Path
from muspark.syntax.legality import check_legality
from muspark.syntax.lexer import Tok, Token, tokenize
from muspark.syntax.parser import parse, parse_program, parse_stmt
from muspark.syntax.printer import pretty

__all__ = [
    "DEREF",
    "Field",
    "Path",
    "Tok",
    "Token",
    "check_legality",
    "parse",
    "parse_program",
    "parse_stmt",
    "pretty",
    "tokenize",
]
