"""Lockstep verification: run every choice vector up to a bound and check
each runtime checkpoint against the checker's snapshot for that point."""

from __future__ import annotations

import time
from typing import Optional

from muspark.borrowck import CheckerOptions, CheckReport, PointId, analyze
from muspark.interp import DEFAULT_STEPS, ChoiceSource, Frame, Interpreter
from muspark.oracle.alias import LemmaChecker, Violation, alias_sets, crew_check
from muspark.oracle.report import VerifyReport
from muspark.syntax import ast as A
from muspark.syntax import pretty

DEFAULT_DEPTH = 12


class _Monitor:
    """Checks each checkpoint reached after ``fresh_from`` choices were
    consumed; earlier ones repeat the parent execution and were checked
    there."""

    def __init__(self, report: CheckReport, lemmas: LemmaChecker, choices: ChoiceSource, fresh_from: int = 0):
        self.snapshots = report.snapshots
        self.lemmas = lemmas
        self.choices = choices
        self.fresh_from = fresh_from
        self.found: list[Violation] = []
        self.checkpoints = 0
        self.unmatched = 0

    def __call__(self, point: PointId, frame: Frame, event: str) -> None:
        perm = self.snapshots.get(point)
        if perm is None:
            self.unmatched += 1
            return
        if self.choices.used < self.fresh_from:
            return
        self.checkpoints += 1
        label = str(point)
        self.found.extend(crew_check(alias_sets(frame), perm, label))
        self.found.extend(self.lemmas.check(frame, perm, label))


def execute(program: A.Program, report: CheckReport, choices: str, steps: int = DEFAULT_STEPS,
            lemmas: Optional[LemmaChecker] = None, fresh_from: int = 0):
    """One monitored execution.  Returns (run result, monitor)."""
    source = ChoiceSource.from_bits(choices)
    monitor = _Monitor(report, lemmas or LemmaChecker(), source, fresh_from)
    interp = Interpreter(program, report.typeinfo, choices=source, steps=steps, observer=monitor)
    return interp.run(), monitor


def lockstep_verify(program: A.Program, depth: int = DEFAULT_DEPTH, steps: int = DEFAULT_STEPS,
                    options: Optional[CheckerOptions] = None, source: Optional[str] = None,
                    check: Optional[CheckReport] = None) -> VerifyReport:
    """Explore every choice vector of length <= ``depth``.  A run that needs
    more choices than its prefix provides is extended with both values; runs
    at the bound are counted as truncated.  An extended run behaves like its
    parent until it consumes its last choice, so only the checkpoints after
    that are checked again."""
    start = time.perf_counter()
    check = check or analyze(program, options)
    out = VerifyReport(programs=1)
    if not check.accepted:
        out.status = "NotApplicable"
        out.rejected = 1
        out.notes.append(f"program rejected by the checker ({len(check.diagnostics)} diagnostic(s))")
        out.rows.append(_row(program, out))
        out.elapsed = time.perf_counter() - start
        return out
    out.accepted = 1
    src = source if source is not None else pretty(program)
    lemmas = LemmaChecker()
    seen: set[tuple] = set()
    unmatched = 0
    pending = [""]
    while pending:
        prefix = pending.pop()
        result, monitor = execute(program, check, prefix, steps, lemmas, len(prefix))
        out.checkpoints += monitor.checkpoints
        unmatched += monitor.unmatched
        for v in monitor.found:
            if v.key not in seen:
                seen.add(v.key)
                out.violations.append(v.with_repro(src, prefix))
        if result.outcome == "ChoicesExhausted" and len(prefix) < depth:
            pending.append(prefix + "1")
            pending.append(prefix + "0")
            continue
        out.executions += 1
        out.outcomes[result.outcome] += 1
        if result.outcome in ("ChoicesExhausted", "StepBudgetExceeded"):
            out.truncated += 1
    if unmatched:
        out.notes.append(f"{unmatched} checkpoint(s) had no matching snapshot")
    out.rows.append(_row(program, out))
    out.elapsed = time.perf_counter() - start
    return out


def _row(program: A.Program, report: VerifyReport) -> dict:
    return {"index": 0, "seed": "", "statements": A.count_statements(program), "accepted": report.accepted,
            "executions": report.executions, "truncated": report.truncated, "checkpoints": report.checkpoints,
            "violations": len(report.violations)}


def replay(source: str, choices: str, steps: int = DEFAULT_STEPS,
           options: Optional[CheckerOptions] = None) -> list[Violation]:
    """Violations of one execution, for reproducing a report entry."""
    from muspark.syntax import parse

    program = parse(source)
    check = analyze(program, options)
    _, monitor = execute(program, check, choices, steps)
    return monitor.found
