from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muspark.diagnostics import ContractViolation
from muspark.interp import (
    AccNode, ChoiceSource, Frame, Heap, Interpreter, IntNode, RecNode, assign_tree, dump_frame, run,
)
from muspark.oracle.generator import gen_program
from muspark.syntax import Path, parse
from muspark.syntax import ast as A
from muspark.typecheck import INTEGER, AccessT, RecordT, RecordTable

from conftest import CORPUS, load


def resolve(frame: Frame, text: str):
    p = Path.parse(text)
    node = frame.vars[p.base]
    for sel in p.selectors:
        node = node.target if sel is A.DEREF else node.fields[sel.name]
    return node


@pytest.fixture
def heap() -> Heap:
    table = RecordTable()
    table.add(RecordT("S"), {"a": INTEGER, "b": AccessT(INTEGER), "c": INTEGER})
    return Heap(table)


def test_fresh_trees(heap):
    acc = heap.fresh_tree(AccessT(INTEGER))
    assert isinstance(acc, AccNode) and acc.target is None
    num = heap.fresh_tree(INTEGER)
    assert isinstance(num, IntNode) and num.value == 0
    rec = heap.fresh_tree(RecordT("S"))
    cells = [acc.cell, num.cell, rec.cell] + [f.cell for f in rec.fields.values()]
    assert len(set(cells)) == len(cells)


def test_assign_tree_keeps_destination_cells(heap):
    dst, src = heap.fresh_tree(RecordT("S")), heap.fresh_tree(RecordT("S"))
    target = IntNode(heap.fresh(), 42)
    src.fields["a"].value = 21
    src.fields["b"].target = target
    cells = (dst.cell, dst.fields["a"].cell, dst.fields["b"].cell)
    assert assign_tree(dst, src) is dst
    assert (dst.cell, dst.fields["a"].cell, dst.fields["b"].cell) == cells
    assert dst.fields["a"].value == 21
    assert dst.fields["b"].target is target
    assert assign_tree(dst, dst) is dst


def test_assign_tree_shape_mismatch(heap):
    with pytest.raises(ContractViolation):
        assign_tree(heap.fresh_tree(INTEGER), heap.fresh_tree(AccessT(INTEGER)))


def test_record_assignment_golden():
    result = run(load("accept/record_share"))
    assert result.completed
    assert dump_frame(result.frame) == (CORPUS / "golden" / "record_share.dump").read_text().rstrip("\n")
    frame = result.frame
    assert resolve(frame, "My_Struct.b.all") is resolve(frame, "My_Var.all.b.all")
    assert resolve(frame, "My_Var.all.a") is not resolve(frame, "My_Struct.a")


def test_new_then_write():
    result = run(parse("procedure M is x : access integer; begin x := new integer; x.all := 5; end M;"))
    x = result.frame.vars["x"]
    assert isinstance(x.target, IntNode) and x.target.value == 5 and x.cell != x.target.cell


def test_access_shares_the_tree():
    result = run(parse("procedure M is x : integer; y : access integer; begin x := 1; y := x'Access; end M;"))
    assert result.frame.vars["y"].target is result.frame.vars["x"]


def test_null_dereference():
    result = run(load("runtime/null_deref"))
    assert result.outcome == "NullDereference"
    assert str(result.stop.location) == "5:4" and result.stop.path == "X"


def test_empty_body_traces_declarations_and_its_statement():
    result = run(load("accept/empty"), trace=True)
    assert result.completed
    assert [e.event for e in result.trace] == ["decl", "stmt"]


def test_swap_driver_exchanges_values():
    result = run(load("accept/swap"))
    assert result.completed
    assert resolve(result.frame, "A.all").value == 2
    assert resolve(result.frame, "B.all").value == 1


def test_swap_moves_cells_not_values():
    # raw cells: A=0, B=1, then A.all=2 and B.all=3 are allocated by new
    result = run(load("accept/swap"))
    assert (resolve(result.frame, "A.all").cell, resolve(result.frame, "B.all").cell) == (3, 2)
    assert (result.frame.vars["A"].cell, result.frame.vars["B"].cell) == (0, 1)


def test_recursion_exhausts_budget():
    result = run(load("runtime/recursion"), steps=200)
    assert result.outcome == "StepBudgetExceeded"
    assert result.steps <= 201


def test_choices():
    program = load("runtime/choices")
    assert run(program, "01").frame.vars["X"].value == 3
    assert run(program, "10").frame.vars["X"].value == 4
    stopped = run(program, "1")
    assert stopped.outcome == "ChoicesExhausted" and stopped.choices_used == 1
    with pytest.raises(ValueError):
        ChoiceSource.from_bits("012")


def test_in_mode_copy_and_out_mode_result():
    result = run(parse("""
procedure M is
   procedure P (A : in integer; B : out integer) is
   begin
      B := A;
   end P;
   X : integer;
   Y : integer;
begin
   X := 3;
   P (X, Y);
   X := 4;
end M;"""))
    assert (result.frame.vars["X"].value, result.frame.vars["Y"].value) == (4, 3)


def test_call_frames_are_isolated():
    events = []

    def observer(point, frame, event):
        if event == "call-transfer":
            events.append(sorted(frame.vars))

    run(load("accept/swap"), observer=observer)
    assert events == [["X", "Y"]]


def test_borrowed_access_actual_writes_through():
    result = run(load("accept/access_borrow"))
    assert result.frame.vars["X"].value == 7
    assert result.frame.vars["Q"].target.value == 9


def test_requires_well_typed_program():
    with pytest.raises(ContractViolation):
        Interpreter(load("reject/type_mismatch"))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.lists(st.booleans(), max_size=12))
def test_deterministic(seed, choices):
    program = gen_program(seed)
    a = run(program, choices, steps=2000, trace=True)
    b = run(program, choices, steps=2000, trace=True)
    assert a.outcome == b.outcome and a.steps == b.steps
    assert [e.dump for e in a.trace] == [e.dump for e in b.trace]
    assert isinstance(a.frame.vars, dict)
    assert all(isinstance(n, (IntNode, RecNode, AccNode)) for n in a.frame.vars.values())
