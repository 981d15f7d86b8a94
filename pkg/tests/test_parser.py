from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muspark.diagnostics import ParseError
from muspark.oracle.generator import gen_program
from muspark.syntax import ast as A
from muspark.syntax import parse, parse_stmt, pretty
from muspark.syntax.printer import ast_to_dict, dump_ast

from conftest import load


def test_swap_procedure_shape():
    program = load("accept/swap")
    swap = next(d for d in program.decls if isinstance(d, A.ProcDecl))
    assert swap.name == "Swap"
    assert [(p.name, p.mode) for p in swap.params] == [("X", A.Mode.IN_OUT), ("Y", A.Mode.IN_OUT)]
    assert [type(d) for d in swap.decls] == [A.VarDecl]
    assert isinstance(swap.body, A.Block)
    assert [type(s) for s in swap.body.stmts] == [A.Assign] * 3


def test_minimal_program():
    program = parse("procedure M is begin x := null; end;")
    assert program.name == "M"
    assert program.decls == ()
    assert program.body == A.Assign(A.Path("x"), A.NullLit())


def test_missing_semicolon_is_a_parse_error():
    with pytest.raises(ParseError) as info:
        parse("procedure M is begin x := new T end;")
    assert ";" in info.value.expected


@pytest.mark.parametrize("text, expected", [
    ("X := 5;", A.Assign(A.Path("X"), A.IntLit(5))),
    ("X.all.f := Y'Access;", A.Assign(A.Path.parse("X.all.f"), A.AccessOf(A.Path("Y")))),
    ("X := new integer;", A.AssignNew(A.Path("X"), "integer")),
    ("P (A, null, 3);", A.Call("P", (A.NameRef(A.Path("A")), A.NullLit(), A.IntLit(3)))),
])
def test_statements(text, expected):
    assert parse_stmt(text) == expected


def test_if_and_block_sugar():
    s = parse_stmt("if * then X := 1; Y := 2; else begin X := 3; end; end if;")
    assert isinstance(s, A.If)
    assert isinstance(s.then_branch, A.Block) and len(s.then_branch.stmts) == 2
    # an explicit begin/end keeps its Block even around one statement
    assert s.else_branch == A.Block((A.Assign(A.Path("X"), A.IntLit(3)),))


def test_grouped_params_and_both_in_out_spellings():
    program = parse("""
procedure M is
   procedure P (A, B : in out integer; C : in-out integer; D : out access integer) is
   begin A := 1; end P;
begin P (X, X, X, Y); end M;
""")
    proc = program.decls[0]
    assert [p.mode for p in proc.params] == [A.Mode.IN_OUT] * 3 + [A.Mode.OUT]
    assert isinstance(proc.params[3].type, A.AccessTo)


def test_end_name_must_match():
    with pytest.raises(ParseError):
        parse("procedure M is begin X := 1; end N;")


def test_empty_body_rejected():
    with pytest.raises(ParseError):
        parse("procedure M is begin end;")


def test_node_ids_unique():
    program = load("accept/child_sibling")
    nids = [s.nid for scope in A.iter_scopes(program) for s in A.iter_stmts(scope.body)]
    nids += [scope.nid for scope in A.iter_scopes(program)]
    assert len(nids) == len(set(nids))


def test_dump_and_dict():
    program = load("accept/empty")
    text = dump_ast(program)
    assert text.splitlines()[0].startswith("Program")
    assert "Assign" in text
    data = ast_to_dict(program)
    assert data["node"] == "Program" and data["name"] == "Main"


@pytest.mark.parametrize("name", ["accept/swap", "accept/child_sibling", "accept/record_share", "reject/tree_cycle"])
def test_corpus_round_trip(name):
    program = load(name)
    again = parse(pretty(program))
    assert again == program
    assert pretty(again) == pretty(program)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_generated_round_trip(seed):
    program = gen_program(seed)
    assert parse(pretty(program)) == program
