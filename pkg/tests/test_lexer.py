from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from muspark.diagnostics import LexError
from muspark.syntax import Tok, tokenize


def kinds(text):
    return [t.kind for t in tokenize(text)]


def test_deref_path():
    toks = tokenize("My_Var.all")
    assert [repr(t) for t in toks] == ["Ident('My_Var')", "DOT", "KW_ALL"]


def test_empty_input():
    assert tokenize("") == []


def test_assignment_statement():
    toks = tokenize("x := 42;")
    assert [t.kind for t in toks] == [Tok.IDENT, Tok.ASSIGN, Tok.INT, Tok.SEMI]
    assert toks[2].value == 42


def test_keywords_are_case_sensitive_words_not_prefixes():
    assert kinds("in out inout all_x") == [Tok.KW_IN, Tok.KW_OUT, Tok.IDENT, Tok.IDENT]


def test_comments_and_locations():
    toks = tokenize("-- header\n  X := 1; -- trailing\n")
    assert [t.kind for t in toks] == [Tok.IDENT, Tok.ASSIGN, Tok.INT, Tok.SEMI]
    assert (toks[0].location.line, toks[0].location.column) == (2, 3)


def test_access_attribute_and_nondeterministic_if():
    assert kinds("Y := X'Access; if * then") == [
        Tok.IDENT, Tok.ASSIGN, Tok.IDENT, Tok.TICK, Tok.IDENT, Tok.SEMI, Tok.KW_IF, Tok.STAR, Tok.KW_THEN]


@pytest.mark.parametrize("text", ["x := 1 @", "$", "x := #"])
def test_bad_character(text):
    with pytest.raises(LexError) as info:
        tokenize(text)
    assert info.value.location.line == 1


@given(st.lists(st.sampled_from(["X", "Y1", "all", ":=", ";", ".", "42", "(", ")", ",", "'"]), max_size=30))
def test_token_texts_survive_whitespace_joining(parts):
    toks = tokenize(" ".join(parts))
    assert [t.text for t in toks] == parts
