from __future__ import annotations

import pytest

from muspark.syntax import Path, parse
from muspark.syntax import ast as A
from muspark.typecheck import (
    INTEGER, NULLTYPE, AccessT, RecordT, RecordTable, TypeEnv, check_program, is_deep, type_equiv,
    type_of_expr, type_of_name,
)

from conftest import load


@pytest.fixture
def env() -> TypeEnv:
    table = RecordTable()
    s, node, r = RecordT("S"), RecordT("Node"), RecordT("R")
    table.add(s, {"a": INTEGER, "b": AccessT(INTEGER), "c": INTEGER, "y": AccessT(INTEGER)})
    table.add(node, {"Val": INTEGER, "Next": AccessT(node)})
    table.add(r, {"v": INTEGER})
    e = TypeEnv(table)
    e.types.update(S=s, Node=node, R=r)
    e.variables.update(x=INTEGER, My_Var=AccessT(s), My_Struct=s, p=AccessT(INTEGER))
    return e


def test_depth(env):
    assert is_deep(AccessT(INTEGER), env)
    assert not is_deep(INTEGER, env)
    assert is_deep(RecordT("S"), env)
    assert not is_deep(RecordT("R"), env)


def test_equivalence():
    node = RecordT("Node")
    assert type_equiv(NULLTYPE, AccessT(node))
    assert type_equiv(AccessT(node), NULLTYPE)
    assert type_equiv(INTEGER, INTEGER)
    assert not type_equiv(AccessT(INTEGER), AccessT(RecordT("R")))
    assert not type_equiv(INTEGER, NULLTYPE)


def test_name_types(env):
    assert type_of_name(env, Path.parse("My_Var.all.y")) == AccessT(INTEGER)
    assert type_of_name(env, Path("x")) == INTEGER
    assert type_of_name(env, Path.parse("x.all")).kind == "DerefOfNonAccess"
    assert type_of_name(env, Path.parse("My_Struct.zz")).kind == "NoSuchField"
    assert type_of_name(env, Path("nope")).kind == "UnknownVariable"


def test_expression_types(env):
    assert type_of_expr(env, A.NullLit()) == NULLTYPE
    assert type_of_expr(env, A.IntLit(42)) == INTEGER
    assert type_of_expr(env, A.AccessOf(Path("My_Struct"))) == AccessT(RecordT("S"))


def _diags(body: str, decls: str = "") -> list[str]:
    program = parse(f"""
procedure M is
   type S is record a : integer; end record;
   {decls}
begin {body} end M;""")
    return [d.kind for d in check_program(program).diagnostics]


def test_statements():
    assert _diags("x := null;", "x : access S;") == []
    assert _diags("x := x;", "x : integer;") == []
    assert _diags("x := new integer;", "x : access S;") == ["TypeMismatch"]
    assert _diags("x := 1;", "x : access integer;") == ["TypeMismatch"]
    assert _diags("x := new S;", "x : access S;") == []


def test_swap_is_well_typed():
    assert check_program(load("accept/swap")).diagnostics == []


def test_use_before_declaration():
    program = parse("""
procedure M is
   procedure P (Z : in integer) is begin Y := Z; end P;
   Y : integer;
begin Y := 1; end M;""")
    assert [d.kind for d in check_program(program).diagnostics] == ["UnknownVariable"]


def test_procedures_do_not_see_main_variables():
    program = parse("""
procedure M is
   G : integer;
   procedure P (Z : in integer) is begin G := Z; end P;
begin G := 1; P (G); end M;""")
    assert [d.kind for d in check_program(program).diagnostics] == ["UnknownVariable"]


def test_calls():
    decls = "procedure P (A : in integer; B : in out access integer) is begin B := null; end P; q : access integer;"
    assert _diags("P (1, q);", decls) == []
    assert _diags("P (1);", decls) == ["ArityMismatch"]
    assert _diags("Z (1);", decls) == ["UnknownProcedure"]
    assert _diags("P (q, q);", decls) == ["TypeMismatch"]


def test_recursive_record_and_self_call():
    info = check_program(load("accept/list"))
    assert info.ok
    assert len(info.calls) == 2


def test_unknown_type():
    assert _diags("x := 1;", "x : T;")[0] == "UnknownType"
