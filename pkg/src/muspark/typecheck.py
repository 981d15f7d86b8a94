"""Types, type environments and the typing rules for names, expressions,
statements and declarations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from muspark.diagnostics import Diagnostic, SourceLocation
from muspark.syntax import ast as A


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class IntegerT:
    def __str__(self) -> str:
        return "integer"


@dataclass(frozen=True)
class RecordT:
    """A record type.  ``key`` (the declaring node id) keeps apart two
    records of the same name declared in unrelated scopes."""

    name: str
    key: int = 0

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class AccessT:
    inner: "Type"

    def __str__(self) -> str:
        return f"access {self.inner}"


@dataclass(frozen=True)
class NullT:
    def __str__(self) -> str:
        return "nulltype"


Type = Union[IntegerT, RecordT, AccessT, NullT]
INTEGER = IntegerT()
NULLTYPE = NullT()


def type_equiv(t1: Type, t2: Type) -> bool:
    """Smallest reflexive, symmetric relation with nulltype ≡ access τ."""
    if t1 == t2:
        return True
    if isinstance(t1, NullT) and isinstance(t2, AccessT):
        return True
    return isinstance(t2, NullT) and isinstance(t1, AccessT)


class RecordTable:
    """Field layouts of every record declared in a program."""

    def __init__(self) -> None:
        self.fields: dict[RecordT, dict[str, Type]] = {}
        self._deep: dict[Type, bool] = {}

    def add(self, record: RecordT, fields: dict[str, Type]) -> None:
        self.fields[record] = fields
        self._deep.clear()

    def field_type(self, record: RecordT, name: str) -> Optional[Type]:
        return self.fields.get(record, {}).get(name)

    def is_deep(self, t: Type) -> bool:
        if isinstance(t, (AccessT, NullT)):
            return True
        if isinstance(t, IntegerT):
            return False
        cached = self._deep.get(t)
        if cached is not None:
            return cached
        # Provisional answer guards against a record containing itself
        # directly (illegal, but typecheck must still terminate on it).
        self._deep[t] = False
        result = any(self.is_deep(ft) for ft in self.fields.get(t, {}).values())
        self._deep[t] = result
        return result


@dataclass(frozen=True)
class Signature:
    name: str
    params: tuple[tuple[str, A.Mode, Type], ...]
    nid: int = -1

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass
class TypeEnv:
    """Γ: visible types, procedures and variables, plus the shared record
    table.  Environments are extended by copying (``with_*``)."""

    table: RecordTable
    types: dict[str, Type] = field(default_factory=lambda: {"integer": INTEGER})
    procedures: dict[str, Signature] = field(default_factory=dict)
    variables: dict[str, Type] = field(default_factory=dict)

    def copy(self) -> "TypeEnv":
        return TypeEnv(self.table, dict(self.types), dict(self.procedures), dict(self.variables))

    def is_deep(self, t: Type) -> bool:
        return self.table.is_deep(t)

    def restricted(self) -> "TypeEnv":
        """Types and procedures only: the starting point of a procedure body."""
        return TypeEnv(self.table, dict(self.types), dict(self.procedures), {})


def is_deep(t: Type, env: TypeEnv) -> bool:
    return env.is_deep(t)


# ---------------------------------------------------------------------------
# Names and expressions


class _Failure(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(diag.message)
        self.diag = diag


def _resolve(env: TypeEnv, path: A.Path, loc: SourceLocation) -> Type:
    t = env.variables.get(path.base)
    if t is None:
        raise _Failure(Diagnostic("T-readIdent", "UnknownVariable",
                                  f"unknown variable {path.base}", loc, path.base))
    prefix = A.Path(path.base)
    for sel in path.selectors:
        if sel is A.DEREF:
            if not isinstance(t, AccessT):
                raise _Failure(Diagnostic("T-readDeref", "DerefOfNonAccess",
                                          f"{prefix} has type {t}, not an access type", loc, str(prefix)))
            t = t.inner
        else:
            ft = env.table.field_type(t, sel.name) if isinstance(t, RecordT) else None
            if ft is None:
                raise _Failure(Diagnostic("T-readField", "NoSuchField",
                                          f"{prefix} of type {t} has no field {sel.name}", loc, str(prefix)))
            t = ft
        prefix = prefix.extend(sel)
    return t


def type_of_name(env: TypeEnv, path: A.Path, loc: SourceLocation = A.NOWHERE) -> Union[Type, Diagnostic]:
    try:
        return _resolve(env, path, loc)
    except _Failure as f:
        return f.diag


def type_of_expr(env: TypeEnv, e: A.Expr) -> Union[Type, Diagnostic]:
    try:
        return _expr(env, e)
    except _Failure as f:
        return f.diag


def _expr(env: TypeEnv, e: A.Expr) -> Type:
    if isinstance(e, A.NullLit):
        return NULLTYPE
    if isinstance(e, A.IntLit):
        return INTEGER
    if isinstance(e, A.AccessOf):
        return AccessT(_resolve(env, e.path, e.loc))
    return _resolve(env, e.path, e.loc)


def name_type(env: TypeEnv, path: A.Path) -> Type:
    """Type of a name already known to be well typed."""
    return _resolve(env, path, A.NOWHERE)


# ---------------------------------------------------------------------------
# Statements


def _mismatch(rule: str, what: str, expected: Type, got: Type, loc: SourceLocation,
              path: Optional[str] = None) -> Diagnostic:
    return Diagnostic(rule, "TypeMismatch", f"{what}: expected {expected}, found {got}", loc, path)


def check_stmt(env: TypeEnv, s: A.Stmt, bad: Optional[set[int]] = None) -> list[Diagnostic]:
    """All typing errors in ``s``.  Node ids of failing leaf statements are
    added to ``bad`` when given."""
    diags: list[Diagnostic] = []
    for leaf in A.iter_stmts(s):
        if isinstance(leaf, (A.Block, A.If)):
            continue
        found = _check_leaf(env, leaf)
        if found:
            diags.extend(found)
            if bad is not None:
                bad.add(leaf.nid)
    return diags


def _check_leaf(env: TypeEnv, s: A.Stmt) -> list[Diagnostic]:
    try:
        if isinstance(s, A.Assign):
            target = _resolve(env, s.target, s.loc)
            rhs = _expr(env, s.rhs)
            if not type_equiv(rhs, target):
                return [_mismatch("T-assignExpr", f"assignment to {s.target}", target, rhs, s.loc,
                                  str(s.target))]
            return []
        if isinstance(s, A.AssignNew):
            target = _resolve(env, s.target, s.loc)
            allocated = env.types.get(s.type_name)
            if allocated is None:
                return [Diagnostic("T-recordType", "UnknownType", f"unknown type {s.type_name}", s.loc,
                                   s.type_name, node=s.nid)]
            if not type_equiv(AccessT(allocated), target):
                return [_mismatch("T-assignNew", f"allocation into {s.target}", target,
                                  AccessT(allocated), s.loc, str(s.target))]
            return []
        if isinstance(s, A.Call):
            return _check_call(env, s)
    except _Failure as f:
        return [f.diag]
    raise TypeError(f"not a leaf statement: {s!r}")


def _check_call(env: TypeEnv, s: A.Call) -> list[Diagnostic]:
    sig = env.procedures.get(s.proc)
    if sig is None:
        return [Diagnostic("T-procedureCall", "UnknownProcedure", f"unknown procedure {s.proc}", s.loc,
                           s.proc)]
    if sig.arity != len(s.actuals):
        return [Diagnostic("T-procedureCall", "ArityMismatch",
                           f"{s.proc} expects {sig.arity} actual(s), got {len(s.actuals)}", s.loc, s.proc)]
    diags = []
    for (pname, mode, ptype), actual in zip(sig.params, s.actuals):
        if mode is not A.Mode.IN and not isinstance(actual, A.NameRef):
            diags.append(Diagnostic("T-procedureCall", "ActualNotName",
                                    f"actual for {mode} parameter {pname} must be a name", actual.loc))
            continue
        try:
            t = _expr(env, actual)
        except _Failure as f:
            diags.append(f.diag)
            continue
        if not type_equiv(t, ptype):
            diags.append(_mismatch("T-procedureCall", f"actual for parameter {pname} of {s.proc}",
                                   ptype, t, actual.loc))
    return diags


# ---------------------------------------------------------------------------
# Declarations and programs


@dataclass
class ScopeInfo:
    """Typing facts for one procedure body (or the main program)."""

    scope: A.Scope
    env: TypeEnv
    signature: Optional[Signature]
    variables: list[tuple[str, Type]]  # local declarations in order


@dataclass
class TypeInfo:
    table: RecordTable
    scopes: dict[int, ScopeInfo] = field(default_factory=dict)
    calls: dict[int, Signature] = field(default_factory=dict)
    bad_stmts: set[int] = field(default_factory=set)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    @property
    def main(self) -> ScopeInfo:
        return next(info for info in self.scopes.values() if isinstance(info.scope, A.Program))


def resolve_type_expr(env: TypeEnv, te: A.TypeExpr) -> Union[Type, Diagnostic]:
    t = env.types.get(te.name)
    if t is None:
        return Diagnostic("T-recordType", "UnknownType", f"unknown type {te.name}", te.loc, te.name)
    return AccessT(t) if isinstance(te, A.AccessTo) else t


def check_program(program: A.Program) -> TypeInfo:
    info = TypeInfo(RecordTable())
    env = TypeEnv(info.table)
    _check_scope(program, env, None, info)
    return info


def _check_scope(scope: A.Scope, env: TypeEnv, sig: Optional[Signature], info: TypeInfo) -> None:
    """Check declarations of ``scope`` in order, then its body, in ``env``
    (which already holds the formals for a procedure)."""
    local_vars: list[tuple[str, Type]] = []
    for d in scope.decls:
        if isinstance(d, A.RecordDecl):
            _record_decl(d, env, info)
        elif isinstance(d, A.VarDecl):
            t = resolve_type_expr(env, d.type)
            if isinstance(t, Diagnostic):
                info.diagnostics.append(t)
                continue
            env.variables[d.name] = t
            local_vars.append((d.name, t))
        else:
            _proc_decl(d, env, info)
    info.scopes[scope.nid] = ScopeInfo(scope, env, sig, local_vars)
    info.diagnostics.extend(check_stmt(env, scope.body, info.bad_stmts))
    for s in A.iter_stmts(scope.body):
        if isinstance(s, A.Call) and s.nid not in info.bad_stmts:
            info.calls[s.nid] = env.procedures[s.proc]


def _record_decl(d: A.RecordDecl, env: TypeEnv, info: TypeInfo) -> None:
    record = RecordT(d.name, d.nid)
    env.types[d.name] = record
    fields: dict[str, Type] = {}
    for f in d.fields:
        t = resolve_type_expr(env, f.type)
        if isinstance(t, Diagnostic):
            info.diagnostics.append(t)
            t = INTEGER  # keep the layout usable for later diagnostics
        fields.setdefault(f.name, t)
    info.table.add(record, fields)


def _proc_decl(d: A.ProcDecl, env: TypeEnv, info: TypeInfo) -> None:
    params = []
    ok = True
    for p in d.params:
        t = resolve_type_expr(env, p.type)
        if isinstance(t, Diagnostic):
            info.diagnostics.append(t)
            ok = False
            continue
        params.append((p.name, p.mode, t))
    if not ok:
        # The procedure cannot be described; calls to it report UnknownProcedure.
        return
    sig = Signature(d.name, tuple(params), d.nid)
    inner = env.restricted()
    inner.procedures[d.name] = sig
    for name, _, t in params:
        inner.variables[name] = t
    _check_scope(d, inner, sig, info)
    env.procedures[d.name] = sig
