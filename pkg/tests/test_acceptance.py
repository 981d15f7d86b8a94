"""Acceptance criteria, one printed PASS/FAIL line each.

Time limits are pinned here and measured with ``time.perf_counter`` around
the work of each criterion (not pytest collection or fixture setup).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import pytest
from hypothesis import given, settings

from muspark.borrowck import MUTATIONS, CheckerOptions, PointId, analyze
from muspark.interp import DEFAULT_STEPS, dump_frame, run
from muspark.oracle import fuzz_soundness, lockstep_verify, replay
from muspark.oracle.lockstep import DEFAULT_DEPTH
from muspark.syntax import ast as A
from muspark.syntax import parse

import test_permission as tp
from conftest import CORPUS, load
from test_borrowck import perms, post_env
from test_interp import resolve

SWAP_LIMIT = 1.0
LATTICE_LIMIT = 5.0
LEMMA_LIMIT = 30.0
FUZZ_LIMIT = 600.0

FUZZ_PROGRAMS = 1000
FUZZ_SEED = 7
MUTATION_SEED = 11
MUTATION_PROGRAMS = 300
MUTATIONS_REQUIRED = 5
SHRUNK_MAX_STATEMENTS = 5
CHILD_SIBLING_DEPTH = 4
CHILD_SIBLING_MAX_EXECUTIONS = 16


@dataclass
class Outcome:
    criterion: str
    limit: float | None = None
    failures: list[str] = field(default_factory=list)
    start: float = field(default_factory=time.perf_counter)

    def check(self, ok: bool, what: str) -> None:
        if not ok:
            self.failures.append(what)

    def finish(self, capsys, detail: str = "") -> None:
        elapsed = time.perf_counter() - self.start
        if self.limit is not None and elapsed >= self.limit:
            self.failures.append(f"took {elapsed:.2f} s, limit {self.limit:g} s")
        verdict = "PASS" if not self.failures else "FAIL"
        timing = f"{elapsed:.2f} s" + (f" < {self.limit:g} s" if self.limit is not None else "")
        line = f"[acceptance] {self.criterion}: {verdict} ({timing}{'; ' + detail if detail else ''})"
        if self.failures:
            line += "\n    " + "\n    ".join(self.failures)
        with capsys.disabled():
            print("\n" + line)
        assert not self.failures, line


def test_criterion_1_swap_trace(capsys):
    out = Outcome("1 swap permission trace", SWAP_LIMIT)
    program = load("accept/swap")
    report = analyze(program)
    out.check(report.accepted, "swap rejected")
    expected = [("Temp := Y;", ["RW", "W", "RW"]),
                ("Y := X;", ["W", "RW", "RW"]),
                ("X := Temp;", ["RW", "RW", "W"])]
    for text, want in expected:
        got = perms(post_env(report, program, text), "X", "Y", "Temp")
        out.check(got == want, f"after {text!r}: {got} != {want}")
    swap = next(s for s in A.iter_scopes(program) if s.name == "Swap")
    exit_perms = perms(report.snapshots[PointId("exit", swap.nid)], "X", "Y")
    out.check(exit_perms == ["RW", "RW"], f"exit {exit_perms}")
    out.check(not any(d.kind == "borrowed-not-rw-at-exit" for d in report.diagnostics), "exit check fired")
    out.finish(capsys)


def test_criterion_2_derivation_post_state(capsys):
    out = Outcome("2 derivation post-state")
    program = load("accept/derivation")
    report = analyze(program)
    out.check(report.accepted, "derivation rejected")
    env = post_env(report, program, "My_Var.all := My_Struct;")
    struct = perms(env, "My_Struct", "My_Struct.b", "My_Struct.b.all", "My_Struct.a", "My_Struct.c")
    out.check(struct == ["W", "W", "NO", "RW", "RW"], f"My_Struct {struct}")
    var = perms(env, "My_Var")
    out.check(var == ["RW"], f"My_Var {var}")
    out.finish(capsys)


def test_criterion_3_cycle_prevention(capsys):
    out = Outcome("3 cycle prevention")
    tree = analyze(load("reject/tree_cycle"))
    out.check(not tree.accepted, "tree cycle accepted")
    out.check([(d.rule, d.path) for d in tree.diagnostics] == [("P-assignDeepName", "T.Left.all")],
              f"tree cycle diagnostics {[d.machine() for d in tree.diagnostics]}")
    double = analyze(load("reject/double_borrow"))
    diags = [(d.rule, d.path, str(d.location)) for d in double.diagnostics]
    out.check(diags == [("P-B-entryPointInOut", "A", "13:13")], f"P(X, X) diagnostics {diags}")
    out.finish(capsys)


def _property(fn, strategies, examples: int):
    return settings(max_examples=examples, deadline=None, database=None)(given(*strategies)(fn))


def test_criterion_4_lattice_and_operators(capsys):
    out = Outcome("4 lattice and operator laws", LATTICE_LIMIT)
    cases = tp.lattice_laws()
    _property(tp.check_release, tp.RELEASE_ARGS, 60)()
    _property(tp.check_fusion, tp.FUSION_ARGS, 60)()
    _property(tp.check_lazy_vs_strict, tp.DIFFERENTIAL_ARGS, 60)()
    _property(tp.check_split_updates, tp.SPLIT_ARGS, 60)()
    out.finish(capsys, f"{cases} exhaustive lattice cases, 4 x 60 generated operator cases")


def test_criterion_5_lemma_suite(capsys):
    out = Outcome("5 lemma suite over the corpus", LEMMA_LIMIT)
    files = sorted([*(CORPUS / "accept").glob("*.msk"), *(CORPUS / "runtime").glob("*.msk")])
    checkpoints = executions = 0
    for path in files:
        report = lockstep_verify(parse(path.read_text()), DEFAULT_DEPTH, DEFAULT_STEPS)
        checkpoints += report.checkpoints
        executions += report.executions
        for v in report.violations:
            out.check(False, f"{path.name}: {v.kind} {v.detail}")
    out.check(checkpoints > 0, "no checkpoints examined")
    out.finish(capsys, f"{len(files)} programs, {executions} executions, {checkpoints} checkpoints")


@pytest.mark.slow
def test_criterion_6a_sound_fuzzing(capsys):
    out = Outcome("6a soundness fuzzing", FUZZ_LIMIT)
    report = fuzz_soundness(FUZZ_PROGRAMS, FUZZ_SEED, depth=12, steps=10_000)
    out.check(report.programs == FUZZ_PROGRAMS, f"{report.programs} programs")
    for v in report.violations:
        out.check(False, f"{v.kind}: {v.detail}")
    out.finish(capsys, f"{report.accepted} accepted, {report.rejected} rejected, "
                       f"{report.executions} executions, {len(report.violations)} violations")


@pytest.mark.slow
def test_criterion_6b_mutations_found_and_shrunk(capsys):
    out = Outcome("6b seeded mutations found and shrunk")
    found = []
    for mutation in sorted(MUTATIONS):
        options = CheckerOptions(mutations=frozenset({mutation}))
        report = fuzz_soundness(MUTATION_PROGRAMS, MUTATION_SEED, options, max_failures=1)
        if not report.violations:
            continue
        v = report.violations[0]
        size = A.count_statements(parse(v.source))
        if size <= SHRUNK_MAX_STATEMENTS and replay(v.source, v.choices, options=options):
            found.append(f"{mutation}:{v.kind}/{size}")
    out.check(len(found) >= MUTATIONS_REQUIRED,
              f"only {len(found)} of {len(MUTATIONS)} mutations found and shrunk: {found}")
    out.finish(capsys, f"{len(found)}/{len(MUTATIONS)} [{', '.join(found)}]")


def test_criterion_7_goldens(capsys):
    out = Outcome("7 golden outputs")
    result = run(load("accept/record_share"))
    out.check(result.completed, f"record_share stopped: {result.stop}")
    golden = (CORPUS / "golden" / "record_share.dump").read_text().rstrip("\n")
    out.check(dump_frame(result.frame) == golden, "record_share dump differs from golden")
    frame = result.frame
    out.check(resolve(frame, "My_Struct.b.all") is resolve(frame, "My_Var.all.b.all"),
              "designated cell not shared")
    out.check(resolve(frame, "My_Var.all.a") is not resolve(frame, "My_Struct.a"), "destination cell replaced")
    report = lockstep_verify(load("accept/child_sibling"), depth=CHILD_SIBLING_DEPTH)
    out.check(report.clean, f"child_sibling violations {[v.detail for v in report.violations]}")
    out.check(1 <= report.executions <= CHILD_SIBLING_MAX_EXECUTIONS,
              f"child_sibling {report.executions} executions")
    out.finish(capsys, f"child_sibling {report.executions} executions at depth {CHILD_SIBLING_DEPTH}")
