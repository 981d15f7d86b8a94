"""Statement-level program editing, used to repair generated programs and
to shrink counterexamples."""

from __future__ import annotations

from typing import Callable, Iterator, Optional

from muspark.syntax import ast as A
from muspark.syntax import parse, pretty
from muspark.typecheck import AccessT, IntegerT, check_program

# A rewrite returns the statement itself (keep and descend), None (delete)
# or another statement (replace).
Rewrite = Callable[[A.Stmt], Optional[A.Stmt]]


def rewrite_stmt(s: A.Stmt, fn: Rewrite) -> Optional[A.Stmt]:
    r = fn(s)
    if r is not s:
        return r
    if isinstance(s, A.Block):
        kept = [k for k in (rewrite_stmt(x, fn) for x in s.stmts) if k is not None]
        if not kept:
            return None
        return kept[0] if len(kept) == 1 else A.Block(tuple(kept))
    if isinstance(s, A.If):
        then_branch = rewrite_stmt(s.then_branch, fn)
        else_branch = rewrite_stmt(s.else_branch, fn)
        if then_branch is None or else_branch is None:
            return then_branch or else_branch
        return A.If(then_branch, else_branch)
    return s


def _rewrite_scope(scope: A.Scope, fn: Rewrite, decl_filter) -> Optional[A.Scope]:
    decls = []
    for d in scope.decls:
        if not decl_filter(d):
            continue
        if isinstance(d, A.ProcDecl):
            d = _rewrite_scope(d, fn, decl_filter)
            if d is None:
                return None
        decls.append(d)
    body = rewrite_stmt(scope.body, fn)
    if body is None:
        return None
    if isinstance(scope, A.Program):
        return A.Program(scope.name, tuple(decls), body)
    return A.ProcDecl(scope.name, scope.params, tuple(decls), body)


def rewrite_program(program: A.Program, fn: Rewrite = lambda s: s,
                    decl_filter=lambda d: True) -> Optional[A.Program]:
    """Apply ``fn`` to every statement and keep declarations accepted by
    ``decl_filter``.  The result is reparsed so nodes get fresh locations
    and ids; None if some body would become empty."""
    out = _rewrite_scope(program, fn, decl_filter)
    return None if out is None else parse(pretty(out))


def delete_stmts(program: A.Program, nids: set[int]) -> Optional[A.Program]:
    return rewrite_program(program, lambda s: None if s.nid in nids else s)


def append_to_body(program: A.Program, scope_nid: int, stmts: list[A.Stmt]) -> A.Program:
    def extend(scope: A.Scope) -> A.Scope:
        decls = tuple(extend(d) if isinstance(d, A.ProcDecl) else d for d in scope.decls)
        body = scope.body
        if scope.nid == scope_nid:
            inner = body.stmts if isinstance(body, A.Block) else (body,)
            body = A.Block((*inner, *stmts))
        if isinstance(scope, A.Program):
            return A.Program(scope.name, decls, body)
        return A.ProcDecl(scope.name, scope.params, decls, body)

    return parse(pretty(extend(program)))


def _stmt_names(s: A.Stmt) -> set[str]:
    names: set[str] = set()
    if isinstance(s, (A.Assign, A.AssignNew)):
        names.add(s.target.base)
    if isinstance(s, A.Assign) and isinstance(s.rhs, (A.NameRef, A.AccessOf)):
        names.add(s.rhs.path.base)
    if isinstance(s, A.Call):
        names.add(s.proc)
        names.update(a.path.base for a in s.actuals if isinstance(a, (A.NameRef, A.AccessOf)))
    return names


def _referenced_names(program: A.Program) -> set[str]:
    return {n for scope in A.iter_scopes(program) for s in A.iter_stmts(scope.body) for n in _stmt_names(s)}


def drop_param(program: A.Program, proc: A.ProcDecl, index: int) -> Optional[A.Program]:
    """Remove one formal: its uses in the procedure's body and the matching
    actual of every call to it."""
    if len(proc.params) < 2:
        return None
    calls = {nid for nid, sig in check_program(program).calls.items() if sig.nid == proc.nid}
    pname = proc.params[index].name

    def in_proc(s: A.Stmt) -> Optional[A.Stmt]:
        if not isinstance(s, (A.Block, A.If)) and pname in _stmt_names(s):
            return None
        return at_call(s)

    def at_call(s: A.Stmt) -> Optional[A.Stmt]:
        if isinstance(s, A.Call) and s.nid in calls:
            return A.Call(s.proc, s.actuals[:index] + s.actuals[index + 1:])
        return s

    def scope_of(scope: A.Scope) -> Optional[A.Scope]:
        fn = in_proc if scope.nid == proc.nid else at_call
        decls = []
        for d in scope.decls:
            if isinstance(d, A.ProcDecl):
                d = scope_of(d)
                if d is None:
                    return None
            decls.append(d)
        body = rewrite_stmt(scope.body, fn)
        if body is None:
            return None
        if isinstance(scope, A.Program):
            return A.Program(scope.name, tuple(decls), body)
        params = scope.params
        if scope.nid == proc.nid:
            params = params[:index] + params[index + 1:]
        return A.ProcDecl(scope.name, params, tuple(decls), body)

    out = scope_of(program)
    return None if out is None else parse(pretty(out))


def inline_call(program: A.Program, call: A.Call) -> Optional[A.Program]:
    """Replace a call by default assignments to its out and in-out actuals
    (only when all of them are integer or access typed)."""
    sig = check_program(program).calls.get(call.nid)
    if sig is None:
        return None
    assigns: list[A.Stmt] = []
    for (_, mode, t), actual in zip(sig.params, call.actuals):
        if mode is A.Mode.IN:
            continue
        if isinstance(t, IntegerT):
            assigns.append(A.Assign(actual.path, A.IntLit(0)))
        elif isinstance(t, AccessT):
            assigns.append(A.Assign(actual.path, A.NullLit()))
        else:
            return None
    if not assigns:
        replacement = None
    else:
        replacement = assigns[0] if len(assigns) == 1 else A.Block(tuple(assigns))
    return rewrite_program(program, lambda s: replacement if s is call else s)


def candidates(program: A.Program) -> Iterator[A.Program]:
    """Smaller variants: unused declarations dropped, a formal parameter
    removed, an If replaced by one of its branches, a call replaced by
    assignments, or one leaf statement deleted."""
    used = _referenced_names(program)
    pruned = rewrite_program(program, decl_filter=lambda d: isinstance(d, A.RecordDecl) or d.name in used)
    if pruned is not None and pretty(pruned) != pretty(program):
        yield pruned
    leaves = []
    ifs = []
    for scope in A.iter_scopes(program):
        for s in A.iter_stmts(scope.body):
            if isinstance(s, A.If):
                ifs.append(s)
            elif not isinstance(s, A.Block):
                leaves.append(s)
    for scope in A.iter_scopes(program):
        if isinstance(scope, A.ProcDecl):
            for i in range(len(scope.params)):
                out = drop_param(program, scope, i)
                if out is not None:
                    yield out
    for target in ifs:
        for branch in (target.then_branch, target.else_branch):
            out = rewrite_program(program, lambda s, t=target, b=branch: b if s is t else s)
            if out is not None:
                yield out
    for leaf in leaves:
        if isinstance(leaf, A.Call):
            out = inline_call(program, leaf)
            if out is not None:
                yield out
    for leaf in reversed(leaves):
        out = delete_stmts(program, {leaf.nid})
        if out is not None:
            yield out


def shrink(program: A.Program, keep: Callable[[A.Program], bool], max_rounds: int = 200) -> A.Program:
    """Greedy reduction: take the first smaller candidate that still
    satisfies ``keep`` until none does."""
    current = program
    for _ in range(max_rounds):
        for cand in candidates(current):
            if keep(cand):
                current = cand
                break
        else:
            return current
    return current
