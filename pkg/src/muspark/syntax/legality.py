"""Syntactic legality conditions that the grammar alone does not express."""

from __future__ import annotations

from muspark.diagnostics import Diagnostic
from muspark.syntax import ast as A

PREDEFINED = frozenset({"integer"})


def check_legality(program: A.Program) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    _check_scope(program, frozenset(PREDEFINED), {}, diags)
    return diags


def _check_scope(scope: A.Scope, outer: frozenset[str],
                 outer_sigs: dict[str, tuple[A.Mode, ...]], diags: list[Diagnostic]) -> None:
    # The procedure's own name is visible inside it.
    visible = set(outer) | {scope.name}
    sigs = dict(outer_sigs)
    if isinstance(scope, A.ProcDecl):
        sigs[scope.name] = tuple(p.mode for p in scope.params)
    seen_params: set[str] = set()
    for p in scope.params:
        if p.name in seen_params:
            diags.append(Diagnostic(
                "duplicate-parameter", "DuplicateParameter",
                f"parameter {p.name} declared twice in {scope.name}", p.loc, p.name))
        elif p.name in visible:
            diags.append(_shadow(p.name, p.loc))
        seen_params.add(p.name)
        visible.add(p.name)

    for d in scope.decls:
        if d.name in visible:
            diags.append(_shadow(d.name, d.loc))
        if isinstance(d, A.RecordDecl):
            _check_record(d, diags)
            visible.add(d.name)
        elif isinstance(d, A.ProcDecl):
            visible.add(d.name)
            _check_scope(d, frozenset(visible), sigs, diags)
            sigs[d.name] = tuple(p.mode for p in d.params)
        else:
            visible.add(d.name)

    in_formals = {p.name for p in scope.params if p.mode is A.Mode.IN}
    for s in A.iter_stmts(scope.body):
        _check_stmt(s, in_formals, sigs, diags)


def _shadow(name: str, loc) -> Diagnostic:
    return Diagnostic("no-shadowing", "Shadowing",
                      f"declaration of {name} shadows another declaration", loc, name)


def _check_record(d: A.RecordDecl, diags: list[Diagnostic]) -> None:
    seen: set[str] = set()
    for f in d.fields:
        if f.name in seen:
            diags.append(Diagnostic("duplicate-field", "DuplicateField",
                                    f"field {f.name} declared twice in record {d.name}", f.loc, f.name))
        seen.add(f.name)
        if isinstance(f.type, A.Named) and f.type.name == d.name:
            diags.append(Diagnostic("record-self-use", "RecordSelfUse",
                                    f"record {d.name} used in its own field {f.name} outside an access type",
                                    f.loc, f.name))


def _written_in_formal(path: A.Path, in_formals: set[str]) -> bool:
    return path.base in in_formals and path.deref_count == 0


def _check_stmt(s: A.Stmt, in_formals: set[str], sigs: dict[str, tuple[A.Mode, ...]],
                diags: list[Diagnostic]) -> None:
    if isinstance(s, (A.Assign, A.AssignNew)):
        if _written_in_formal(s.target, in_formals):
            diags.append(_write_in(s.target, s.loc, s.nid))
    elif isinstance(s, A.Call):
        modes = sigs.get(s.proc)
        if modes is None:
            return  # reported by typecheck as an unknown procedure
        for mode, actual in zip(modes, s.actuals):
            if mode is A.Mode.IN:
                continue
            if not isinstance(actual, A.NameRef):
                diags.append(Diagnostic(
                    "actual-must-be-name", "ActualNotName",
                    f"actual for an {mode} parameter of {s.proc} must be a name", actual.loc,
                    node=s.nid))
            elif _written_in_formal(actual.path, in_formals):
                diags.append(_write_in(actual.path, actual.loc, s.nid))


def _write_in(path: A.Path, loc, nid) -> Diagnostic:
    return Diagnostic("no-write-to-in-formal", "WriteToInFormal",
                      f"{path} is (part of) a formal parameter of mode in", loc, str(path), node=nid)
