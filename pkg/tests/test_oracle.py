from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muspark.borrowck import CheckerOptions, analyze
from muspark.interp import AccNode, Frame, IntNode, RecNode, run
from muspark.oracle import (
    AliasSet, LemmaChecker, VerifyReport, Violation, alias_sets, crew_check, lemma_checks, lockstep_verify,
)
from muspark.oracle.fuzz import repair
from muspark.oracle.generator import gen_program
from muspark.oracle.lockstep import execute, replay
from muspark.permission import NO, RW, R, W, AccessNode, IntNode as PIntNode, PermEnv
from muspark.syntax import Path, parse, pretty
from muspark.typecheck import INTEGER, AccessT, RecordTable

from conftest import load

ACCEPTED = ["swap", "derivation", "record_share", "child_sibling", "observe", "access_borrow", "empty", "out_param", "list"]


# ---------------------------------------------------------------------------
# Alias sets


def _brute_force_paths(frame: Frame):
    """Every (path text, node) pair, found by plain recursion with an
    on-path guard."""
    out = []

    def visit(text, node, on_path):
        if id(node) in on_path:
            return
        out.append((text, node))
        if isinstance(node, RecNode):
            for f, sub in node.fields.items():
                visit(f"{text}.{f}", sub, on_path | {id(node)})
        elif isinstance(node, AccNode) and node.target is not None:
            visit(f"{text}.all", node.target, on_path | {id(node)})

    for name, root in frame.vars.items():
        visit(name, root, frozenset())
    return out


def _brute_force_partition(frame: Frame) -> set[frozenset[str]]:
    pairs = _brute_force_paths(frame)
    groups = []
    for text, node in pairs:
        same = frozenset(t for t, other in pairs if other is node)
        groups.append(same)
    return set(groups)


def _partition(frame: Frame) -> set[frozenset[str]]:
    return {frozenset(str(p) for p in s.members) for s in alias_sets(frame)}


@pytest.mark.parametrize("name", ACCEPTED)
def test_alias_sets_match_pairwise_scan_on_corpus(name):
    result = run(load(f"accept/{name}"), "11001000")
    assert _partition(result.frame) == _brute_force_partition(result.frame)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.lists(st.booleans(), max_size=8))
def test_alias_sets_match_pairwise_scan_on_generated(seed, choices):
    frames = []

    def grab(point, frame, event):
        frames.append(frame)

    run(gen_program(seed), choices, steps=500, observer=grab)
    for frame in frames[-5:]:
        assert _partition(frame) == _brute_force_partition(frame)


def test_no_access_types_means_singletons():
    result = run(parse("procedure M is X : integer; Y : integer; begin X := 1; Y := X; end M;"))
    assert all(len(s.members) == 1 for s in alias_sets(result.frame))


def test_access_alias_set():
    result = run(parse("procedure M is x : integer; y : access integer; begin x := 1; y := x'Access; end M;"))
    sets = {frozenset(map(str, s.members)) for s in alias_sets(result.frame)}
    assert frozenset({"x", "y.all"}) in sets


def test_record_assignment_shares_designated_cell():
    result = run(load("accept/record_share"))
    sets = {frozenset(map(str, s.members)) for s in alias_sets(result.frame)}
    assert frozenset({"My_Struct.b.all", "My_Var.all.b.all"}) in sets


# ---------------------------------------------------------------------------
# CREW and lemmas on hand-built states


def _env(**perms) -> PermEnv:
    env = PermEnv(RecordTable())
    for name, k in perms.items():
        env = env.declare(name, INTEGER, k)
    return env


def _set(*names) -> list[AliasSet]:
    return [AliasSet(0, tuple(Path(n) for n in names), "M")]


def test_crew_examples():
    assert crew_check(_set("x", "y"), _env(x=NO, y=RW)) == []
    [v] = crew_check(_set("p", "q"), _env(p=RW, q=R))
    assert v.kind == "CREW" and v.paths == ("p", "q")
    assert crew_check(_set("p", "q"), _env(p=R, q=R)) == []
    assert crew_check(_set("p", "q"), _env(p=W, q=NO)) == []
    assert len(crew_check(_set("p", "q"), _env(p=W, q=W))) == 1


def test_readability_violation():
    env = PermEnv(RecordTable()).bind("p", AccessT(INTEGER), AccessNode(R, True, PIntNode(NO)))
    frame = Frame(parse("procedure M is begin M2 (1); end M;"), {"p": AccNode(0, IntNode(1, 0))})
    kinds = [v.kind for v in lemma_checks(frame, env)]
    assert "Readability" in kinds


def test_cycle_violation():
    env = PermEnv(RecordTable()).declare("p", AccessT(INTEGER), RW)
    a = AccNode(0)
    a.target = a  # ill-typed on purpose: the checker flags it either way
    frame = Frame(parse("procedure M is begin M2 (1); end M;"), {"p": a})
    kinds = {v.kind for v in lemma_checks(frame, env)}
    assert "NoCycle" in kinds


def test_coherence_violation():
    env = PermEnv(RecordTable()).declare("x", INTEGER, RW)
    frame = Frame(parse("procedure M is begin M2 (1); end M;"), {"x": AccNode(0)})
    assert [v.kind for v in lemma_checks(frame, env)] == ["Coherence"]


def test_lemma_cache_is_per_point():
    checker = LemmaChecker()
    env = PermEnv(RecordTable()).bind("p", AccessT(INTEGER), AccessNode(R, True, PIntNode(NO)))
    assert checker.perm_only(env, "post@1") is checker.perm_only(env, "post@1")


# ---------------------------------------------------------------------------
# Lockstep verification


@pytest.mark.parametrize("name", ACCEPTED)
def test_corpus_is_clean(name):
    report = lockstep_verify(load(f"accept/{name}"))
    assert report.status == "Checked"
    assert report.violations == [], [v.detail for v in report.violations]
    assert report.checkpoints > 0


def test_swap_single_execution():
    report = lockstep_verify(load("accept/swap"), depth=0)
    assert (report.executions, report.truncated, report.violations) == (1, 0, [])


def test_child_sibling_depth_four():
    report = lockstep_verify(load("accept/child_sibling"), depth=4)
    assert 1 <= report.executions <= 16
    assert report.clean and report.outcomes["Completed"] >= 1


def test_rejected_program_not_executed():
    report = lockstep_verify(load("reject/tree_cycle"))
    assert report.status == "NotApplicable"
    assert (report.rejected, report.executions) == (1, 0)
    assert report.clean


ACCESS_MOVE = """
procedure M is
   X : integer;
   Y : access integer;
begin
   X := 1;
   Y := X'Access;
   X := 2;
end M;"""


def test_disabled_access_move_is_caught():
    options = CheckerOptions(mutations=frozenset({"no-access-move"}))
    program = parse(ACCESS_MOVE)
    assert not analyze(program).accepted
    report = lockstep_verify(program, options=options)
    assert {v.kind for v in report.violations} == {"CREW"}
    v = report.violations[0]
    assert set(v.paths) == {"X", "Y.all"}
    assert replay(v.source, v.choices, options=options)


def test_literal_out_formal_entry_is_unsound():
    program = parse("""
procedure M is
   procedure Init (X : out access integer) is
   begin
      X.all := 5;
   end Init;
   Y : access integer;
   Z : access integer;
begin
   Y := new integer;
   Z := Y;
   Init (Y);
end M;""")
    report = lockstep_verify(program, options=CheckerOptions(out_formals="literal"))
    assert any(v.kind == "CREW" and set(v.paths) == {"Y.all", "Z.all"} for v in report.violations)


MOVE_UNDER_ACCESSED_PREFIX = """
procedure M is
   type Node is record
      Val : integer;
      Next : access Node;
   end record;
   type Pair is record
      A : integer;
      P : access integer;
   end record;
   type Box is record
      N : Node;
      Q : access Pair;
   end record;
   V1 : Box;
begin
   V1.N.Val := 4;
   V1.N.Next := new Node;
   V1.Q := new Pair;
   V1.Q.all.P := V1.N.Val'Access;
   V1.N := V1.N.Next.all;
end M;"""


def test_move_must_not_raise_an_accessed_prefix():
    # found by fuzzing: the move of V1.N.Next.all would lift V1.N from NO to
    # W, and the assignment then makes the aliased V1.N.Val writable
    program = parse(MOVE_UNDER_ACCESSED_PREFIX)
    [d] = analyze(program).diagnostics
    assert (d.rule, d.path, d.actual) == ("P-assignDeepName", "V1.N", "NO")
    report = lockstep_verify(program, options=CheckerOptions(move_prefixes="literal"))
    assert any(v.kind == "CREW" and set(v.paths) == {"V1.N.Val", "V1.Q.all.P.all"} for v in report.violations)


@pytest.mark.parametrize("name", ["swap", "derivation", "record_share"])
def test_lub_extension_updates_are_unsound(name):
    report = lockstep_verify(load(f"accept/{name}"), options=CheckerOptions(extension_update="lub"))
    assert any(v.kind == "CREW" for v in report.violations)


def test_report_round_trip():
    report = lockstep_verify(parse(ACCESS_MOVE), options=CheckerOptions(mutations=frozenset({"no-access-move"})))
    again = VerifyReport.from_dict(report.to_dict())
    assert again.to_dict() == report.to_dict()
    assert "elapsed" not in report.to_dict() and "elapsed" in report.to_dict(include_wall=True)
    assert Violation.from_dict(report.violations[0].to_dict()) == report.violations[0]


def test_repro_source_reparses():
    report = lockstep_verify(parse(ACCESS_MOVE), options=CheckerOptions(mutations=frozenset({"no-access-move"})))
    assert pretty(parse(report.violations[0].source)) == pretty(parse(ACCESS_MOVE))


def _unpruned(program, options, depth: int):
    """Violation keys and checkpoint count when every execution is checked
    from its first statement."""
    check = analyze(program, options)
    keys, checkpoints, pending = set(), 0, [""]
    while pending:
        prefix = pending.pop()
        result, monitor = execute(program, check, prefix)
        checkpoints += monitor.checkpoints
        keys |= {v.key for v in monitor.found}
        if result.outcome == "ChoicesExhausted" and len(prefix) < depth:
            pending += [prefix + "1", prefix + "0"]
    return keys, checkpoints


@pytest.mark.parametrize("mutation", ["fusion-lub", "no-access-move", "no-move-extensions", "no-observe"])
def test_prefix_pruning_finds_the_same_violations(mutation):
    options = CheckerOptions(mutations=frozenset({mutation}))
    violating = 0
    for seed in range(60):
        program = repair(gen_program(seed), seed, options)
        if not analyze(program, options).accepted:
            continue
        keys, checkpoints = _unpruned(program, options, depth=6)
        report = lockstep_verify(program, depth=6, options=options)
        assert {v.key for v in report.violations} == keys, seed
        assert report.checkpoints <= checkpoints
        violating += bool(keys)
    assert violating >= 1
