"""Seeded generator of well-typed programs for soundness fuzzing.

Programs draw on a fixed pool of record types (one of them recursive),
declare nested procedures with mixed parameter modes, and use every
statement form.  Generation is deterministic in the seed.  Most variables
are initialized up front so that a useful share of programs passes the
permission checker.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from muspark.syntax import ast as A
from muspark.syntax import parse, pretty

# Type strings: "integer", a record name, or "access <name>".
RECORDS: dict[str, tuple[tuple[str, str], ...]] = {
    "Node": (("Val", "integer"), ("Next", "access Node")),
    "Pair": (("A", "integer"), ("P", "access integer")),
    "Pt": (("X", "integer"), ("Y", "integer")),
    "Box": (("N", "Node"), ("Q", "access Pair")),
}
VAR_TYPES = ("integer", "access integer", "Pt", "Pair", "Node", "access Node", "access Pair", "Box",
             "access Pt")
MODES = (A.Mode.IN, A.Mode.IN_OUT, A.Mode.OUT)
PRODUCTIONS = ("assign-null", "assign-literal", "assign-name", "assign-access", "assign-new", "call", "if",
               "block")
MAX_SELECTORS = 3


def _designated(t: str) -> Optional[str]:
    return t[len("access "):] if t.startswith("access ") else None


def _type_expr(t: str) -> A.TypeExpr:
    inner = _designated(t)
    return A.AccessTo(inner) if inner is not None else A.Named(t)


def _record_decls() -> tuple[A.RecordDecl, ...]:
    return tuple(
        A.RecordDecl(name, tuple(A.FieldDecl(f, _type_expr(ft)) for f, ft in fields))
        for name, fields in RECORDS.items()
    )


@dataclass
class _Sig:
    name: str
    params: list[tuple[str, A.Mode, str]]


@dataclass
class _Scope:
    vars: dict[str, str]
    procs: list[_Sig]
    in_formals: set[str] = field(default_factory=set)

    def paths(self) -> list[tuple[A.Path, str]]:
        out = []
        for name, t in self.vars.items():
            stack = [(A.Path(name), t)]
            while stack:
                p, pt = stack.pop()
                out.append((p, pt))
                if len(p.selectors) >= MAX_SELECTORS:
                    continue
                inner = _designated(pt)
                if inner is not None:
                    stack.append((p.extend(A.DEREF), inner))
                elif pt in RECORDS:
                    for f, ft in RECORDS[pt]:
                        stack.append((p.extend(A.Field(f)), ft))
        return out

    def writable(self, p: A.Path) -> bool:
        return not (p.base in self.in_formals and p.deref_count == 0)


class Generator:
    def __init__(self, seed: int, size: int = 8):
        self.rng = random.Random(seed)
        self.size = size
        self._names = Counter()

    def fresh(self, prefix: str) -> str:
        self._names[prefix] += 1
        return f"{prefix}{self._names[prefix]}"

    # -- initialization --------------------------------------------------------

    def init(self, p: A.Path, t: str, depth: int = 0) -> list[A.Stmt]:
        rng = self.rng
        if t == "integer":
            return [A.Assign(p, A.IntLit(rng.randrange(10)))]
        inner = _designated(t)
        if inner is not None:
            if depth < 2 and rng.random() < 0.6:
                return [A.AssignNew(p, inner)] + self.init(p.extend(A.DEREF), inner, depth + 1)
            return [A.Assign(p, A.NullLit())]
        out: list[A.Stmt] = []
        for f, ft in RECORDS[t]:
            out += self.init(p.extend(A.Field(f)), ft, depth)
        return out

    # -- statements ---------------------------------------------------------------

    def pick(self, options: list):
        return options[self.rng.randrange(len(options))] if options else None

    def stmt(self, scope: _Scope, depth: int = 0) -> Optional[A.Stmt]:
        rng = self.rng
        kinds = ["assign-literal", "assign-null", "assign-name", "assign-name", "assign-access",
                 "assign-new", "call", "call"]
        if depth < 2:
            kinds += ["if", "if"]
        kind = self.pick(kinds)
        paths = scope.paths()
        targets = [(p, t) for p, t in paths if scope.writable(p)]
        if kind == "assign-literal":
            p = self.pick([p for p, t in targets if t == "integer"])
            return A.Assign(p, A.IntLit(rng.randrange(10))) if p else None
        if kind == "assign-null":
            p = self.pick([p for p, t in targets if _designated(t)])
            return A.Assign(p, A.NullLit()) if p else None
        if kind == "assign-name":
            target = self.pick(targets)
            if target is None:
                return None
            src = self.pick([p for p, t in paths if t == target[1]])
            return A.Assign(target[0], A.NameRef(src))
        if kind == "assign-access":
            candidates = [(p, t) for p, t in targets if _designated(t)]
            target = self.pick(candidates)
            if target is None:
                return None
            src = self.pick([p for p, t in paths if t == _designated(target[1])])
            return A.Assign(target[0], A.AccessOf(src)) if src else None
        if kind == "assign-new":
            target = self.pick([(p, t) for p, t in targets if _designated(t)])
            return A.AssignNew(target[0], _designated(target[1])) if target else None
        if kind == "call":
            return self.call(scope, paths)
        then_branch = self.seq(scope, rng.randint(1, 2), depth + 1)
        else_branch = self.seq(scope, rng.randint(1, 2), depth + 1)
        if then_branch is None or else_branch is None:
            return None
        return A.If(then_branch, else_branch)

    def seq(self, scope: _Scope, n: int, depth: int) -> Optional[A.Stmt]:
        stmts = self._statements(scope, n, depth)
        if not stmts:
            return None
        return stmts[0] if len(stmts) == 1 else A.Block(tuple(stmts))

    def call(self, scope: _Scope, paths: list[tuple[A.Path, str]]) -> Optional[A.Call]:
        sig = self.pick(scope.procs)
        if sig is None:
            return None
        actuals: list[A.Expr] = []
        recent: list[A.Path] = []
        for _, mode, t in sig.params:
            same = [p for p, pt in paths if pt == t]
            if mode is not A.Mode.IN:
                same = [p for p in same if scope.writable(p)]
            # Reusing a name already passed in this call exercises the
            # double-borrow and observe-then-borrow rules.
            reuse = [p for p in recent if p in same]
            if reuse and self.rng.random() < 0.25:
                p = self.pick(reuse)
            else:
                p = self.pick(same)
            if mode is A.Mode.IN:
                inner = _designated(t)
                roll = self.rng.random()
                if t == "integer" and (p is None or roll < 0.3):
                    actuals.append(A.IntLit(self.rng.randrange(10)))
                    continue
                if inner is not None and roll < 0.15:
                    actuals.append(A.NullLit())
                    continue
                if inner is not None and roll < 0.5:
                    target = self.pick([q for q, qt in paths if qt == inner])
                    if target is not None:
                        actuals.append(A.AccessOf(target))
                        recent.append(target)
                        continue
            if p is None:
                return None
            actuals.append(A.NameRef(p))
            recent.append(p)
        return A.Call(sig.name, tuple(actuals))

    # -- declarations ---------------------------------------------------------------

    def proc(self, visible: list[_Sig], depth: int) -> tuple[A.ProcDecl, _Sig]:
        rng = self.rng
        name = self.fresh("Proc")
        params = [(self.fresh("F"), self.pick(list(MODES)), self.pick(list(VAR_TYPES)))
                  for _ in range(rng.randint(1, 3))]
        sig = _Sig(name, params)
        locals_ = {self.fresh("L"): self.pick(list(VAR_TYPES)) for _ in range(rng.randint(0, 2))}
        nested: list[A.ProcDecl] = []
        inner_procs = list(visible)
        if depth == 0 and rng.random() < 0.25:
            decl, nsig = self.proc(list(visible), depth + 1)
            nested.append(decl)
            inner_procs.append(nsig)
        # Recursion through the procedure's own name is allowed but kept rare.
        if rng.random() < 0.3:
            inner_procs.append(sig)
        scope = _Scope({**{p: t for p, _, t in params}, **locals_}, inner_procs,
                       {p for p, m, _ in params if m is A.Mode.IN})
        body: list[A.Stmt] = []
        for lname, lt in locals_.items():
            if rng.random() < 0.7:
                body += self.init(A.Path(lname), lt)
        body += self._statements(scope, max(1, self.size // 2))
        # Out formals (and some in-out ones) end fully owned.
        for pname, mode, pt in params:
            if mode is A.Mode.OUT or (mode is A.Mode.IN_OUT and rng.random() < 0.5):
                body += self.init(A.Path(pname), pt)
        decls = (*nested, *(A.VarDecl(n, _type_expr(t)) for n, t in locals_.items()))
        formal_decls = tuple(A.Param(p, m, _type_expr(t)) for p, m, t in params)
        return A.ProcDecl(name, formal_decls, decls, _as_body(body)), sig

    def _statements(self, scope: _Scope, n: int, depth: int = 0) -> list[A.Stmt]:
        out = []
        attempts = 0
        while len(out) < n and attempts < 10 * n:
            attempts += 1
            s = self.stmt(scope, depth)
            if s is not None:
                out.append(s)
        return out

    def program(self) -> A.Program:
        rng = self.rng
        procs: list[A.ProcDecl] = []
        sigs: list[_Sig] = []
        for _ in range(rng.randint(0, 2)):
            decl, sig = self.proc(list(sigs), 0)
            procs.append(decl)
            sigs.append(sig)
        variables = {self.fresh("V"): self.pick(list(VAR_TYPES)) for _ in range(rng.randint(2, 4))}
        scope = _Scope(dict(variables), sigs)
        body: list[A.Stmt] = []
        for vname, vt in variables.items():
            if rng.random() < 0.9:
                body += self.init(A.Path(vname), vt)
        body += self._statements(scope, self.size)
        decls = (*_record_decls(), *procs, *(A.VarDecl(n, _type_expr(t)) for n, t in variables.items()))
        return A.Program("Main", decls, _as_body(body))


def _as_body(stmts: list[A.Stmt]) -> A.Stmt:
    if not stmts:
        raise ValueError("empty body")
    return stmts[0] if len(stmts) == 1 else A.Block(tuple(stmts))


def gen_program(seed: int, size: int = 8) -> A.Program:
    """A well-typed program, deterministic in ``seed``.  The result is
    reparsed from its pretty-printed text so nodes carry locations."""
    ast = _generate(seed, size)
    return parse(pretty(ast))


def _generate(seed: int, size: int) -> A.Program:
    gen = Generator(seed, size)
    while True:
        try:
            return gen.program()
        except ValueError:
            continue  # an empty body; draw again from the same stream


def coverage(program: A.Program) -> Counter:
    """How many times each statement production occurs."""
    counts: Counter = Counter()
    for scope in A.iter_scopes(program):
        for s in A.iter_stmts(scope.body):
            if isinstance(s, A.Assign):
                rhs = s.rhs
                counts["assign-null" if isinstance(rhs, A.NullLit) else
                       "assign-literal" if isinstance(rhs, A.IntLit) else
                       "assign-name" if isinstance(rhs, A.NameRef) else "assign-access"] += 1
            elif isinstance(s, A.AssignNew):
                counts["assign-new"] += 1
            elif isinstance(s, A.Call):
                counts["call"] += 1
            elif isinstance(s, A.If):
                counts["if"] += 1
            else:
                counts["block"] += 1
    return counts
