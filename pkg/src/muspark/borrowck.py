"""Static alias checker: applies the permission rules for moves, borrows,
observes, statements and declarations over a type-checked program.

Besides diagnostics, the checker records the permission environment at every
program point the interpreter can stop at, so that the dynamic oracle can
compare the two in lockstep.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from muspark.diagnostics import Diagnostic, SourceLocation
from muspark.permission import (
    NO, R, READABLE, RW, W, WRITABLE, ExtensionUpdate, Perm, PermEnv, fusion, glb, lub, perm_release,
)
from muspark.syntax import ast as A
from muspark.syntax.legality import check_legality
from muspark.typecheck import AccessT, Signature, Type, TypeEnv, TypeInfo, check_program

MUTATIONS = frozenset({
    "no-access-move",         # 'Access leaves the moved name's permissions untouched
    "no-borrow-propagation",  # borrows check permissions but do not restrict them
    "no-move-extensions",     # deep moves do not restrict extensions of the moved name
    "target-check-before-move",  # assigned path checked before the move updates
    "no-observe",             # observed actuals are not restricted to read-only
    "fusion-lub",             # branch merge takes the lub instead of the glb
    "no-exit-check",          # borrowed formals need not be RW at procedure exit
})


@dataclass(frozen=True)
class CheckerOptions:
    """``out_formals``: "sound" (default) gives out formals W at their own
    dereference level and NO below it; "literal" gives W everywhere.
    ``move_prefixes``: "sound" (default) lowers the moved path and its
    prefixes to at most W, keeping NO where it already is; "literal" sets
    them all to W.
    ``extension_update``: "assign" sets extension permissions; "lub" joins
    the given permission with the current one.
    ``mutations``: deliberate rule defects used to test the oracle."""

    out_formals: str = "sound"
    move_prefixes: str = "sound"
    extension_update: str = "assign"
    mutations: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.out_formals not in ("sound", "literal"):
            raise ValueError(f"unknown out_formals policy {self.out_formals!r}")
        if self.move_prefixes not in ("sound", "literal"):
            raise ValueError(f"unknown move_prefixes policy {self.move_prefixes!r}")
        if self.extension_update not in ("assign", "lub"):
            raise ValueError(f"unknown extension_update mode {self.extension_update!r}")
        unknown = set(self.mutations) - MUTATIONS
        if unknown:
            raise ValueError(f"unknown mutations: {sorted(unknown)}")

    def has(self, mutation: str) -> bool:
        return mutation in self.mutations


@dataclass(frozen=True, order=True)
class PointId:
    """A program point: ``decl`` (after a variable declaration), ``entry`` /
    ``exit`` (of a procedure), ``post`` (after a statement), ``transfer``
    (call-checking environment after all borrows of a call)."""

    kind: str
    nid: int

    def __str__(self) -> str:
        return f"{self.kind}@{self.nid}"


# Points whose environment is a real program state (checked by the oracle).
STATE_KINDS = frozenset({"decl", "entry", "post", "exit"})


@dataclass
class CheckReport:
    diagnostics: list[Diagnostic]
    snapshots: dict[PointId, PermEnv]
    typeinfo: Optional[TypeInfo] = None
    stage: str = "borrowck"  # last stage that ran: legality/typecheck/borrowck

    @property
    def accepted(self) -> bool:
        return not self.diagnostics

    def dump_snapshots(self, program: Optional[A.Program] = None) -> str:
        labels = point_labels(program) if program is not None else {}
        order = {pid: i for i, pid in enumerate(labels)}
        out = []
        for pid in sorted(self.snapshots, key=lambda p: (order.get(p, len(order)), p)):
            out.append(f"== {pid}{labels.get(pid, '')}")
            text = self.snapshots[pid].dump()
            if text:
                out.append(text)
        return "\n".join(out)


def point_labels(program: A.Program) -> dict[PointId, str]:
    # Insertion order is program order: entry, declarations, statements
    # (pre-order, a call's transfer before its post state), exit.
    labels: dict[PointId, str] = {}
    for scope in A.iter_scopes(program):
        labels[PointId("entry", scope.nid)] = f" {scope.name}"
        for d in scope.decls:
            if isinstance(d, A.VarDecl):
                labels[PointId("decl", d.nid)] = f" {d.name} : {d.type}"
        _stmt_labels(scope.body, labels)
        labels[PointId("exit", scope.nid)] = f" {scope.name}"
    return labels


def _stmt_labels(s: A.Stmt, labels: dict[PointId, str]) -> None:
    from muspark.syntax.printer import pretty_stmt

    if isinstance(s, A.Block):
        for inner in s.stmts:
            _stmt_labels(inner, labels)
        labels[PointId("post", s.nid)] = " (end of block)"
    elif isinstance(s, A.If):
        _stmt_labels(s.then_branch, labels)
        _stmt_labels(s.else_branch, labels)
        labels[PointId("post", s.nid)] = " (end if)"
    else:
        text = pretty_stmt(s)
        if isinstance(s, A.Call):
            labels[PointId("transfer", s.nid)] = f" {text}"
        labels[PointId("post", s.nid)] = f" {text}"


# ---------------------------------------------------------------------------
# Name-level rules


def prefixes_with_self(p: A.Path) -> list[A.Path]:
    return [p, *p.prefixes()]


def move_name(env: PermEnv, p: A.Path, raise_prefixes: bool = False) -> PermEnv:
    """The path and every strict prefix become write-only.  Unless
    ``raise_prefixes`` is set, a prefix that is NO stays NO: lifting it to W
    would make a subtree aliased through an earlier 'Access writable again."""
    for q in prefixes_with_self(p):
        env = env.set_node(q, W if raise_prefixes else glb(env.lookup(q), W))
    return env


def access_move_name(env: PermEnv, p: A.Path, raise_prefixes: bool = False) -> PermEnv:
    """Moved under 'Access: the path and prefixes at the same dereference
    level become NO; prefixes above a dereference are moved (W)."""
    q = p
    while True:
        env = env.set_node(q, NO)
        if not q.selectors:
            return env
        last = q.selectors[-1]
        q = q.parent
        if last is A.DEREF:
            return move_name(env, q, raise_prefixes)


def _borrow_chain(env: PermEnv, p: A.Path) -> PermEnv:
    for q in prefixes_with_self(p):
        env = env.set_node(q, NO if env.shapes.is_deep(env.type_of(q)) else R)
    return env


def _observe_chain(env: PermEnv, p: A.Path) -> PermEnv:
    for q in prefixes_with_self(p):
        env = env.set_node(q, R)
    return env


# ---------------------------------------------------------------------------
# The checker


class _Checker:
    def __init__(self, info: TypeInfo, options: CheckerOptions):
        self.info = info
        self.options = options
        self.diags: list[Diagnostic] = []
        self.snapshots: dict[PointId, PermEnv] = {}
        self.join = options.extension_update == "lub"

    # -- reporting helpers --------------------------------------------------

    def require(self, env: PermEnv, p: A.Path, allowed: frozenset[Perm], rule: str, kind: str,
                loc: SourceLocation, node: int, what: str) -> None:
        actual = env.lookup(p)
        if actual not in allowed:
            req = tuple(str(x) for x in sorted(allowed, key=lambda x: x.value))
            self.diags.append(Diagnostic(rule, kind, f"{what} {p} has permission {actual}", loc, str(p),
                                         req, str(actual), node=node))

    def extensions(self, env: PermEnv, p: A.Path, upd: ExtensionUpdate) -> PermEnv:
        return env.set_extensions(p, upd, join=self.join)

    # -- statements -----------------------------------------------------------

    def stmt(self, tenv: TypeEnv, env: PermEnv, s: A.Stmt) -> PermEnv:
        if s.nid in self.info.bad_stmts:
            pass
        elif isinstance(s, A.Block):
            for inner in s.stmts:
                env = self.stmt(tenv, env, inner)
        elif isinstance(s, A.If):
            e1 = self.stmt(tenv, env, s.then_branch)
            e2 = self.stmt(tenv, env, s.else_branch)
            if self.options.has("fusion-lub"):
                env = _fuse_lub(e1, e2)
            else:
                env = perm_release(fusion(e1, e2))
        elif isinstance(s, A.Assign):
            env = self.assign(tenv, env, s)
        elif isinstance(s, A.AssignNew):
            self.require(env, s.target, WRITABLE, "P-assignNew", "assign-requires-writable", s.loc, s.nid,
                         "assigned path")
            env = perm_release(env.set_subtree(s.target, RW))
        elif isinstance(s, A.Call):
            env = self.call(tenv, env, s)
        self.snapshots[PointId("post", s.nid)] = env
        return env

    def assign(self, tenv: TypeEnv, env: PermEnv, s: A.Assign) -> PermEnv:
        x, rhs = s.target, s.rhs
        target_type = env.type_of(x)

        def check_target(e: PermEnv, rule: str) -> None:
            self.require(e, x, WRITABLE, rule, "assign-requires-writable", s.loc, s.nid, "assigned path")

        if isinstance(rhs, (A.NullLit, A.IntLit)):
            rule = "P-assignNull" if isinstance(rhs, A.NullLit) else "P-assignLiteral"
            check_target(env, rule)
        elif isinstance(rhs, A.NameRef) and env.shapes.is_deep(target_type):
            n = rhs.path
            rule = "P-assignDeepName"
            self.require(env, n, frozenset({RW}), rule, "move-requires-rw", rhs.loc, s.nid, "moved path")
            if self.options.has("target-check-before-move"):
                check_target(env, rule)
            env = move_name(env, n, self.options.move_prefixes == "literal")
            if not self.options.has("no-move-extensions"):
                env = self.extensions(env, n, ExtensionUpdate(same_deep=W, same_shallow=RW,
                                                              more_deep=NO, more_shallow=NO))
            if not self.options.has("target-check-before-move"):
                check_target(env, rule)
        elif isinstance(rhs, A.NameRef):
            rule = "P-assignShallowName"
            self.require(env, rhs.path, READABLE, rule, "read-requires-readable", rhs.loc, s.nid, "read path")
            check_target(env, rule)
        else:
            n = rhs.path
            rule = "P-assignAccess"
            self.require(env, n, frozenset({RW}), rule, "move-requires-rw", rhs.loc, s.nid, "moved path")
            if self.options.has("target-check-before-move"):
                check_target(env, rule)
            if not self.options.has("no-access-move"):
                env = access_move_name(env, n, self.options.move_prefixes == "literal")
                env = self.extensions(env, n, ExtensionUpdate.uniform(NO))
            if not self.options.has("target-check-before-move"):
                check_target(env, rule)
        return perm_release(env.set_subtree(x, RW))

    # -- calls ----------------------------------------------------------------

    def call(self, tenv: TypeEnv, env: PermEnv, s: A.Call) -> PermEnv:
        sig = self.info.calls[s.nid]
        groups = classify_actuals(sig, s, env.shapes.is_deep)
        # Shallow in-mode names are read by copy: readable, nothing changes.
        for _, actual in groups["copy"]:
            if isinstance(actual, A.NameRef):
                self.require(env, actual.path, READABLE, "P-call", "read-requires-readable", actual.loc,
                             s.nid, "actual")
        chained = env
        for _, actual in groups["observe"]:
            chained = self.observe(chained, actual, s)
        for _, actual in groups["borrow-in"] + groups["borrow-inout"]:
            chained = self.borrow(chained, actual, s, out=False)
        for _, actual in groups["borrow-out"]:
            chained = self.borrow(chained, actual, s, out=True)
        self.snapshots[PointId("transfer", s.nid)] = chained
        for _, actual in groups["borrow-inout"] + groups["borrow-out"]:
            env = env.set_subtree(actual.path, RW)
        return perm_release(env)

    def observe(self, env: PermEnv, e: A.Expr, s: A.Call) -> PermEnv:
        if not isinstance(e, (A.NameRef, A.AccessOf)):
            return env
        n = e.path
        self.require(env, n, READABLE, "P-O-entryPoint", "observe-requires-readable", e.loc, s.nid,
                     "observed actual")
        if self.options.has("no-observe"):
            return env
        env = _observe_chain(env, n)
        return self.extensions(env, n, ExtensionUpdate.uniform(R))

    def borrow(self, env: PermEnv, e: A.Expr, s: A.Call, out: bool) -> PermEnv:
        if not isinstance(e, (A.NameRef, A.AccessOf)):
            return env  # null: nothing is borrowed
        n = e.path
        if out:
            self.require(env, n, WRITABLE, "P-B-entryPointOut", "borrow-out-requires-w", e.loc, s.nid,
                         "borrowed actual")
        else:
            self.require(env, n, frozenset({RW}), "P-B-entryPointInOut", "borrow-requires-rw", e.loc, s.nid,
                         "borrowed actual")
        if self.options.has("no-borrow-propagation"):
            return env
        env = _borrow_chain(env, n)
        return self.extensions(env, n, ExtensionUpdate.by_depth(NO, R))

    # -- declarations -----------------------------------------------------------

    def scope(self, scope: A.Scope) -> None:
        sinfo = self.info.scopes.get(scope.nid)
        if sinfo is None:
            return
        env = PermEnv(self.info.table)
        sig = sinfo.signature
        if sig is not None:
            env = self.entry_env(sig)
        self.snapshots[PointId("entry", scope.nid)] = env
        declared = dict(sinfo.variables)
        for d in scope.decls:
            if isinstance(d, A.VarDecl) and d.name in declared:
                env = env.declare(d.name, declared[d.name], W)
                self.snapshots[PointId("decl", d.nid)] = env
        env = self.stmt(sinfo.env, env, scope.body)
        self.snapshots[PointId("exit", scope.nid)] = env
        if sig is not None and not self.options.has("no-exit-check"):
            loc = scope.loc
            for pname, mode, ptype in sig.params:
                if formal_role(mode, ptype, self.info.table.is_deep) in ("observe", "copy"):
                    continue
                actual = env.lookup(A.Path(pname))
                if actual != RW:
                    self.diags.append(Diagnostic(
                        "P-procedureDecl", "borrowed-not-rw-at-exit",
                        f"borrowed formal {pname} of {scope.name} has permission {actual} at exit",
                        loc, pname, ("RW",), str(actual), node=scope.nid))

    def entry_env(self, sig: Signature) -> PermEnv:
        env = PermEnv(self.info.table)
        for pname, mode, ptype in sig.params:
            role = formal_role(mode, ptype, self.info.table.is_deep)
            if role in ("observe", "copy"):
                env = env.declare(pname, ptype, R)
            elif role in ("borrow-in", "borrow-inout"):
                env = env.declare(pname, ptype, RW)
            elif self.options.out_formals == "literal":
                env = env.declare(pname, ptype, W)
            else:
                env = env.declare(pname, ptype, W)
                env = env.set_extensions(A.Path(pname), ExtensionUpdate(more_deep=NO, more_shallow=NO))
        return env


def _fuse_lub(e1: PermEnv, e2: PermEnv) -> PermEnv:
    """Mutated branch merge: lub of the two environments, node by node."""
    out = e1
    for path, node, _ in e1.materialized():
        out = out.set_node(path, lub(node.perm, e2.lookup(path)))
    for path, node, _ in e2.materialized():
        out = out.set_node(path, lub(node.perm, out.lookup(path)))
    return out


def formal_role(mode: A.Mode, t: Type, is_deep) -> str:
    """How a formal parameter is passed: observe, copy (shallow in),
    borrow-in (in access), borrow-inout or borrow-out."""
    if mode is A.Mode.IN_OUT:
        return "borrow-inout"
    if mode is A.Mode.OUT:
        return "borrow-out"
    if isinstance(t, AccessT):
        return "borrow-in"
    if is_deep(t):
        return "observe"
    return "copy"


def classify_actuals(sig: Signature, call: A.Call, is_deep) -> dict[str, list[tuple[int, A.Expr]]]:
    groups: dict[str, list[tuple[int, A.Expr]]] = {
        "observe": [], "copy": [], "borrow-in": [], "borrow-inout": [], "borrow-out": []}
    for i, ((_, mode, ptype), actual) in enumerate(zip(sig.params, call.actuals)):
        groups[formal_role(mode, ptype, is_deep)].append((i, actual))
    return groups


def analyze(program: A.Program, options: Optional[CheckerOptions] = None) -> CheckReport:
    """Legality, typing, then permission analysis of every procedure and the
    main body."""
    options = options or CheckerOptions()
    legality = check_legality(program)
    info = check_program(program)
    diags = legality + info.diagnostics
    if any(d.kind == "RecordSelfUse" for d in legality):
        # Such a record has no finite layout; later phases cannot run.
        return CheckReport(diags, {}, info, stage="legality")
    checker = _Checker(info, options)
    for scope in A.iter_scopes(program):
        checker.scope(scope)
    stage = "borrowck" if not diags else "typecheck"
    return CheckReport(diags + checker.diags, checker.snapshots, info, stage=stage)


def check_stmt_perm(info: TypeInfo, tenv: TypeEnv, env: PermEnv, s: A.Stmt,
                    options: Optional[CheckerOptions] = None) -> tuple[PermEnv, list[Diagnostic], dict]:
    """Apply the statement rules to ``s`` from ``env``."""
    checker = _Checker(info, options or CheckerOptions())
    out = checker.stmt(tenv, env, s)
    return out, checker.diags, checker.snapshots


def callee_entry_env(info: TypeInfo, sig: Signature, options: Optional[CheckerOptions] = None) -> PermEnv:
    return _Checker(info, options or CheckerOptions()).entry_env(sig)


def observe_entry(env: PermEnv, e: A.Expr, options: Optional[CheckerOptions] = None
                  ) -> tuple[PermEnv, list[Diagnostic]]:
    checker = _Checker(TypeInfo(env.table), options or CheckerOptions())
    out = checker.observe(env, e, A.Call("_", (e,)))
    return out, checker.diags


def borrow_in_out(env: PermEnv, e: A.Expr, options: Optional[CheckerOptions] = None
                  ) -> tuple[PermEnv, list[Diagnostic]]:
    checker = _Checker(TypeInfo(env.table), options or CheckerOptions())
    out = checker.borrow(env, e, A.Call("_", (e,)), out=False)
    return out, checker.diags


def borrow_out(env: PermEnv, p: A.Path, options: Optional[CheckerOptions] = None
               ) -> tuple[PermEnv, list[Diagnostic]]:
    checker = _Checker(TypeInfo(env.table), options or CheckerOptions())
    e = A.NameRef(p)
    out = checker.borrow(env, e, A.Call("_", (e,)), out=True)
    return out, checker.diags


__all__ = [
    "CheckReport", "CheckerOptions", "MUTATIONS", "PointId", "STATE_KINDS", "access_move_name", "analyze",
    "borrow_in_out", "borrow_out", "callee_entry_env", "check_stmt_perm", "classify_actuals",
    "formal_role", "move_name", "observe_entry",
]
