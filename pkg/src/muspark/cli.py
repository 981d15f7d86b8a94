"""Command-line entry point.

Exit codes: 0 accepted / completed / clean, 1 diagnostics, runtime stop or
violation found, 2 usage or I/O error (and, for ``run``, a program that
does not even type-check).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from muspark import __version__
from muspark.borrowck import MUTATIONS, CheckerOptions, analyze, point_labels
from muspark.diagnostics import Diagnostic, LexError, ParseError
from muspark.interp import DEFAULT_STEPS, ChoiceSource, Interpreter, RunResult, dump_frame
from muspark.oracle.fuzz import fuzz_soundness
from muspark.oracle.lockstep import DEFAULT_DEPTH, lockstep_verify
from muspark.oracle.report import SCHEMA_VERSION, VerifyReport
from muspark.syntax import ast as A
from muspark.syntax import check_legality, parse
from muspark.syntax.printer import ast_to_dict, dump_ast
from muspark.typecheck import check_program

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    pass


class Output:
    def __init__(self, color: bool):
        self.color = color

    def paint(self, text: str, code: str) -> str:
        return f"\033[{code}m{text}\033[0m" if self.color else text

    def diagnostic(self, d: Diagnostic, filename: str) -> str:
        text = d.render(filename)
        return text.replace(d.rule, self.paint(d.rule, "1;31"), 1) if self.color else text


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _Usage(f"cannot read {path}: {e.strerror or e}") from None


def _parse_file(path: str) -> tuple[str, A.Program]:
    """Raises LexError/ParseError for a malformed program."""
    source = _read(path)
    return source, parse(source)


def _emit_json(data: dict) -> None:
    print(json.dumps(data, indent=2, sort_keys=False))


def _syntax_error(e: Exception, path: str, command: str, as_json: bool) -> int:
    location = e.location
    message = e.message
    if as_json:
        payload = {"version": SCHEMA_VERSION, "command": command, "file": path, "ok": False,
                   "error": {"kind": type(e).__name__, "message": message, "location": location.to_dict()}}
        if isinstance(e, ParseError):
            payload["error"]["expected"] = list(e.expected)
        _emit_json(payload)
    else:
        print(f"{path}:{e}", file=sys.stderr)
    return EXIT_FAIL


def _options(args) -> CheckerOptions:
    return CheckerOptions(out_formals=getattr(args, "out_formals", "sound"),
                          move_prefixes=getattr(args, "move_prefixes", "sound"),
                          mutations=frozenset(getattr(args, "mutation", None) or ()))


# ---------------------------------------------------------------------------
# Commands


def cmd_parse(args, out: Output) -> int:
    try:
        _, program = _parse_file(args.file)
    except (LexError, ParseError) as e:
        return _syntax_error(e, args.file, "parse", args.json)
    if args.json:
        _emit_json({"version": SCHEMA_VERSION, "command": "parse", "file": args.file, "ok": True,
                    "ast": ast_to_dict(program)})
    else:
        print(dump_ast(program))
    return EXIT_OK


def cmd_typecheck(args, out: Output) -> int:
    try:
        _, program = _parse_file(args.file)
    except (LexError, ParseError) as e:
        return _syntax_error(e, args.file, "typecheck", args.json)
    diags = check_legality(program)
    if not any(d.kind == "RecordSelfUse" for d in diags):
        diags += check_program(program).diagnostics
    return _report_diagnostics(args, out, "typecheck", diags, "well-typed")


def cmd_check(args, out: Output) -> int:
    try:
        _, program = _parse_file(args.file)
    except (LexError, ParseError) as e:
        return _syntax_error(e, args.file, "check", args.json)
    report = analyze(program, _options(args))
    extra = {"stage": report.stage}
    if args.dump_perms:
        extra["snapshots"] = {str(pid): env.dump().splitlines() for pid, env in report.snapshots.items()}
    status = _report_diagnostics(args, out, "check", report.diagnostics, "accepted", extra)
    if args.dump_perms and not args.json:
        print(report.dump_snapshots(program))
    return status


def _report_diagnostics(args, out: Output, command: str, diags: list[Diagnostic], ok_word: str,
                        extra: Optional[dict] = None) -> int:
    if args.json:
        payload = {"version": SCHEMA_VERSION, "command": command, "file": args.file, "ok": not diags,
                   "diagnostics": [d.to_dict() for d in diags]}
        payload.update(extra or {})
        _emit_json(payload)
    else:
        for d in diags:
            print(out.diagnostic(d, args.file))
        if not diags:
            print(f"{args.file}: {out.paint(ok_word, '32')}")
        else:
            print(f"{args.file}: {len(diags)} diagnostic(s)")
    return EXIT_FAIL if diags else EXIT_OK


def cmd_run(args, out: Output) -> int:
    try:
        _, program = _parse_file(args.file)
    except (LexError, ParseError) as e:
        _syntax_error(e, args.file, "run", args.json)
        return EXIT_USAGE
    diags = check_legality(program)
    if any(d.kind == "RecordSelfUse" for d in diags):
        info = None
    else:
        info = check_program(program)
        diags += info.diagnostics
    if info is None or not info.ok:
        for d in diags:
            print(out.diagnostic(d, args.file), file=sys.stderr)
        print(f"{args.file}: cannot run a program that does not type-check", file=sys.stderr)
        return EXIT_USAGE
    try:
        choices = ChoiceSource.from_bits(args.choices)
    except ValueError as e:
        raise _Usage(str(e)) from None
    interp = Interpreter(program, info, choices=choices, steps=args.steps, record_trace=args.trace)
    result = interp.run()
    if args.json:
        _emit_json(_run_payload(args, result))
    else:
        if args.trace:
            labels = point_labels(program)
            for entry in result.trace:
                print(f"== {entry.point} {entry.event} in {entry.frame}:{labels.get(entry.point, '')}")
                if entry.dump:
                    print(entry.dump)
        if result.stop is None:
            print(f"outcome: {out.paint('Completed', '32')}")
        else:
            stop = result.stop
            print(f"outcome: {out.paint(stop.kind, '1;31')} at {args.file}:{stop.location}: {stop.message}")
        print(f"steps: {result.steps}, choices used: {result.choices_used}")
        final = dump_frame(result.frame)
        if final:
            print(final)
    return EXIT_OK if result.completed else EXIT_FAIL


def _run_payload(args, result: RunResult) -> dict:
    return {
        "version": SCHEMA_VERSION, "command": "run", "file": args.file, "ok": result.completed,
        "outcome": result.outcome, "stop": result.stop.to_dict() if result.stop else None,
        "steps": result.steps, "choices_used": result.choices_used,
        "final": dump_frame(result.frame).splitlines(),
        "trace": [{"point": str(e.point), "event": e.event, "frame": e.frame, "dump": e.dump.splitlines()}
                  for e in result.trace],
    }


def cmd_verify(args, out: Output) -> int:
    try:
        source, program = _parse_file(args.file)
    except (LexError, ParseError) as e:
        _syntax_error(e, args.file, "verify", args.json)
        return EXIT_USAGE
    report = lockstep_verify(program, args.depth, args.steps, _options(args), source=source)
    return _finish_report(args, out, "verify", report, f"verify {Path(args.file).name}")


def cmd_fuzz(args, out: Output) -> int:
    seed = args.seed
    if seed is None:
        env = os.environ.get("MUSPARK_SEED")
        try:
            seed = int(env) if env is not None else 0
        except ValueError:
            raise _Usage(f"MUSPARK_SEED must be an integer, got {env!r}") from None
    report = fuzz_soundness(args.count, seed, _options(args), depth=args.depth, steps=args.steps,
                            size=args.size, max_failures=args.max_failures, workers=args.workers)
    return _finish_report(args, out, "fuzz", report, f"fuzz: {args.count} programs, seed {seed}")


def _finish_report(args, out: Output, command: str, report: VerifyReport, title: str) -> int:
    if args.report_dir:
        from muspark.plotting import write_report_dir

        written = write_report_dir(report, Path(args.report_dir), title)
        if not args.json:
            print("wrote " + ", ".join(str(p) for p in written))
    if args.json:
        payload = {"version": SCHEMA_VERSION, "command": command, "ok": report.clean,
                   "report": report.to_dict(include_wall=args.timing)}
        if command == "verify":
            payload["file"] = args.file
        _emit_json(payload)
    else:
        print(report.render(timing=args.timing))
    return EXIT_OK if report.clean else EXIT_FAIL


# ---------------------------------------------------------------------------
# Argument parsing


def _positive(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="muspark", description="muSPARK alias checker and soundness oracle")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--no-color", action="store_true", help="never colorize output")

    checker = argparse.ArgumentParser(add_help=False)
    checker.add_argument("--out-formals", choices=("sound", "literal"), default="sound",
                         help="entry permissions of out formals (default: sound)")
    checker.add_argument("--move-prefixes", choices=("sound", "literal"), default="sound",
                         help="whether a move may raise NO prefixes to W (default: sound, never)")
    checker.add_argument("--mutation", action="append", choices=sorted(MUTATIONS),
                         help="inject a checker defect (for oracle testing); repeatable")

    budget = argparse.ArgumentParser(add_help=False)
    budget.add_argument("--depth", type=_positive, default=DEFAULT_DEPTH, help="choice-vector length bound")
    budget.add_argument("--steps", type=_positive, default=DEFAULT_STEPS, help="step budget per execution")
    budget.add_argument("--report-dir", help="also write report.json, programs.csv and outcomes.png here")
    budget.add_argument("--timing", action="store_true", help="include wall time in the report")

    p = sub.add_parser("parse", parents=[common], help="parse and dump the AST")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("typecheck", parents=[common], help="legality and typing")
    p.add_argument("file")
    p.set_defaults(func=cmd_typecheck)

    p = sub.add_parser("check", parents=[common, checker], help="full permission analysis")
    p.add_argument("file")
    p.add_argument("--dump-perms", action="store_true", help="print the permission snapshots")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", parents=[common], help="execute with a choice vector")
    p.add_argument("file")
    p.add_argument("--choices", default="", help="choices for 'if *' as a 0/1 string")
    p.add_argument("--steps", type=_positive, default=DEFAULT_STEPS, help="step budget")
    p.add_argument("--trace", action="store_true", help="print the memory at every trace point")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", parents=[common, checker, budget], help="lockstep soundness check")
    p.add_argument("file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fuzz", parents=[common, checker, budget], help="fuzz generated programs")
    p.add_argument("--count", type=_positive, default=100, help="number of programs")
    p.add_argument("--seed", type=int, default=None, help="seed (default: $MUSPARK_SEED or 0)")
    p.add_argument("--size", type=_positive, default=8, help="random statements per main body")
    p.add_argument("--max-failures", type=_positive, default=None,
                   help="stop after this many programs with violations")
    p.add_argument("--workers", type=_positive, default=1, help="worker processes")
    p.set_defaults(func=cmd_fuzz)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    out = Output(color=not args.no_color and sys.stdout.isatty() and not args.json)
    try:
        return args.func(args, out)
    except _Usage as e:
        print(f"muspark: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
