"""AST for muSPARK programs.

Every node carries a :class:`SourceLocation` and a parser-assigned ``nid``
(unique within one parse).  Neither takes part in equality, so two parses of
equivalent text compare equal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Union

from muspark.diagnostics import NOWHERE, SourceLocation


@dataclass(frozen=True)
class Field:
    name: str

    def __str__(self) -> str:
        return self.name


class _Deref:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DEREF"

    def __str__(self) -> str:
        return "all"

    def __reduce__(self):
        return (_Deref, ())


DEREF = _Deref()
Selector = Union[Field, _Deref]


@dataclass(frozen=True)
class Path:
    """A base identifier followed by field and ``.all`` selectors."""

    base: str
    selectors: tuple[Selector, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "Path":
        head, *rest = text.split(".")
        return cls(head, tuple(DEREF if part == "all" else Field(part) for part in rest))

    def __str__(self) -> str:
        return ".".join([self.base, *map(str, self.selectors)])

    def __len__(self) -> int:
        return len(self.selectors)

    @property
    def deref_count(self) -> int:
        return sum(1 for s in self.selectors if s is DEREF)

    def field(self, name: str) -> "Path":
        return Path(self.base, self.selectors + (Field(name),))

    def deref(self) -> "Path":
        return Path(self.base, self.selectors + (DEREF,))

    def extend(self, selector: Selector) -> "Path":
        return Path(self.base, self.selectors + (selector,))

    @property
    def parent(self) -> "Path | None":
        if not self.selectors:
            return None
        return Path(self.base, self.selectors[:-1])

    def prefixes(self) -> Iterator["Path"]:
        """Strict prefixes, longest first."""
        for i in range(len(self.selectors) - 1, -1, -1):
            yield Path(self.base, self.selectors[:i])

    def is_prefix_of(self, other: "Path") -> bool:
        return (
            self.base == other.base
            and len(self.selectors) <= len(other.selectors)
            and other.selectors[: len(self.selectors)] == self.selectors
        )

    def is_strict_prefix_of(self, other: "Path") -> bool:
        return len(self.selectors) < len(other.selectors) and self.is_prefix_of(other)


# ---------------------------------------------------------------------------
# Types as written in source


@dataclass(frozen=True)
class Named:
    name: str
    loc: SourceLocation = field(default=NOWHERE, compare=False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class AccessTo:
    name: str
    loc: SourceLocation = field(default=NOWHERE, compare=False)

    def __str__(self) -> str:
        return f"access {self.name}"


TypeExpr = Union[Named, AccessTo]


class Mode(enum.Enum):
    IN = "in"
    IN_OUT = "in out"
    OUT = "out"

    def __str__(self) -> str:
        return self.value


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class NullLit:
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class IntLit:
    value: int
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class NameRef:
    path: Path
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class AccessOf:
    path: Path
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


Expr = Union[NullLit, IntLit, NameRef, AccessOf]


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Assign:
    target: Path
    rhs: Expr
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class AssignNew:
    target: Path
    type_name: str
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Call:
    proc: str
    actuals: tuple[Expr, ...]
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class If:
    then_branch: "Stmt"
    else_branch: "Stmt"
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Block:
    stmts: tuple["Stmt", ...]
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


Stmt = Union[Assign, AssignNew, Call, If, Block]


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type: TypeExpr
    loc: SourceLocation = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class RecordDecl:
    name: str
    fields: tuple[FieldDecl, ...]
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Param:
    name: str
    mode: Mode
    type: TypeExpr
    loc: SourceLocation = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: TypeExpr
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class ProcDecl:
    name: str
    params: tuple[Param, ...]
    decls: tuple["Decl", ...]
    body: Stmt
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)


Decl = Union[RecordDecl, ProcDecl, VarDecl]


@dataclass(frozen=True)
class Program:
    """The single file-level procedure."""

    name: str
    decls: tuple[Decl, ...]
    body: Stmt
    loc: SourceLocation = field(default=NOWHERE, compare=False)
    nid: int = field(default=-1, compare=False)

    @property
    def params(self) -> tuple[Param, ...]:
        return ()


Scope = Union[Program, ProcDecl]


def iter_stmts(stmt: Stmt) -> Iterator[Stmt]:
    """Pre-order walk over a statement tree."""
    yield stmt
    if isinstance(stmt, Block):
        for s in stmt.stmts:
            yield from iter_stmts(s)
    elif isinstance(stmt, If):
        yield from iter_stmts(stmt.then_branch)
        yield from iter_stmts(stmt.else_branch)


def iter_scopes(scope: Scope) -> Iterator[Scope]:
    """The scope itself and every nested procedure, pre-order."""
    yield scope
    for d in scope.decls:
        if isinstance(d, ProcDecl):
            yield from iter_scopes(d)


def count_statements(program: Program) -> int:
    """Number of non-block statements across every body in the program."""
    return sum(
        1
        for scope in iter_scopes(program)
        for s in iter_stmts(scope.body)
        if not isinstance(s, Block)
    )
