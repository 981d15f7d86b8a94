"""Soundness fuzzing: generate programs, verify the accepted ones in
lockstep, and shrink any counterexample."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from muspark.borrowck import CheckerOptions, analyze
from muspark.interp import DEFAULT_STEPS
from muspark.oracle.alias import Violation
from muspark.oracle.generator import Generator, gen_program
from muspark.oracle.lockstep import DEFAULT_DEPTH, lockstep_verify
from muspark.oracle.report import VerifyReport
from muspark.oracle.shrink import append_to_body, delete_stmts, shrink
from muspark.syntax import ast as A

REPAIR_ROUNDS = 4
SEED_STRIDE = 100_003


def program_seed(seed: int, index: int) -> int:
    return seed * SEED_STRIDE + index


def repair(program: A.Program, seed: int, options: Optional[CheckerOptions] = None,
           rounds: int = REPAIR_ROUNDS) -> A.Program:
    """Drop statements the checker rejects and re-own formals that fail the
    exit check, a few times over.  The result may still be rejected."""
    gen = Generator(seed)
    for _ in range(rounds):
        report = analyze(program, options)
        if report.accepted or report.typeinfo is None or not report.typeinfo.ok:
            return program
        exits = [d for d in report.diagnostics if d.kind == "borrowed-not-rw-at-exit"]
        nids = {d.node for d in report.diagnostics if d not in exits and d.node is not None}
        if nids:
            smaller = delete_stmts(program, nids)
            if smaller is None:
                return program
            program = smaller
            continue
        for d in exits:
            sig = report.typeinfo.scopes[d.node].signature
            formal = next(p for p in sig.params if p[0] == d.path)
            if formal[1] is A.Mode.IN:
                return program
            program = append_to_body(program, d.node, gen.init(A.Path(d.path), str(formal[2])))
    return program


@dataclass
class _Job:
    index: int
    seed: int
    size: int
    depth: int
    steps: int
    options: Optional[CheckerOptions]
    repair: bool
    shrink: bool


def _run_job(job: _Job) -> VerifyReport:
    pseed = program_seed(job.seed, job.index)
    program = gen_program(pseed, job.size)
    if job.repair:
        program = repair(program, pseed, job.options)
    report = lockstep_verify(program, job.depth, job.steps, job.options)
    report.rows[0].update(index=job.index, seed=pseed)
    report.status = "Checked"
    report.notes = [note for note in report.notes if not note.startswith("program rejected")]
    if report.violations and job.shrink:
        small = shrink_violation(program, report.violations[0], job.options, job.steps)
        report.violations = [small, *report.violations[1:]]
    return report


def shrink_violation(program: A.Program, violation: Violation, options: Optional[CheckerOptions] = None,
                     steps: int = DEFAULT_STEPS) -> Violation:
    """Reduce the program while the checker still accepts it and lockstep
    verification still finds a violation of the same kind.  The returned
    violation carries the shrunk reproduction."""
    depth = max(len(violation.choices), 1)

    def found(p: A.Program) -> Optional[Violation]:
        r = lockstep_verify(p, depth, steps, options)
        return next((v for v in r.violations if v.kind == violation.kind), None)

    small = shrink(program, lambda p: found(p) is not None)
    return found(small) or violation


def fuzz_soundness(n: int, seed: int, options: Optional[CheckerOptions] = None, depth: int = DEFAULT_DEPTH,
                   steps: int = DEFAULT_STEPS, size: int = 8, repair_programs: bool = True,
                   shrink_violations: bool = True, max_failures: Optional[int] = None,
                   workers: int = 1) -> VerifyReport:
    """Generate ``n`` programs from ``seed``; verify every accepted one.
    Stops early once ``max_failures`` programs exhibited violations."""
    start = time.perf_counter()
    out = VerifyReport()
    jobs = [_Job(i, seed, size, depth, steps, options, repair_programs, shrink_violations) for i in range(n)]
    failures = 0

    def absorb(report: VerifyReport) -> bool:
        nonlocal failures
        out.merge(report)
        if report.violations:
            failures += 1
        return max_failures is not None and failures >= max_failures

    if workers > 1:
        pool = ProcessPoolExecutor(max_workers=workers)
        try:
            for report in pool.map(_run_job, jobs, chunksize=8):
                if absorb(report):
                    break
        finally:
            pool.shutdown(cancel_futures=True)
    else:
        for job in jobs:
            if absorb(_run_job(job)):
                break
    out.elapsed = time.perf_counter() - start
    return out

