"""Reference interpreter over memory trees.

Memory trees are mutable node objects; each node owns exactly one cell id,
so two paths alias precisely when they reach the same node object.
Assignments update the destination in place (keeping its cells) and share
the subtrees designated by access nodes, which is how aliasing arises.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

from muspark.borrowck import PointId, formal_role
from muspark.diagnostics import NOWHERE, ContractViolation, SourceLocation
from muspark.syntax import ast as A
from muspark.typecheck import AccessT, IntegerT, RecordT, RecordTable, Type, TypeInfo, check_program

DEFAULT_STEPS = 10_000
MAX_CALL_DEPTH = 100


# ---------------------------------------------------------------------------
# Memory trees


class IntNode:
    __slots__ = ("cell", "value")

    def __init__(self, cell: int, value: int = 0):
        self.cell = cell
        self.value = value


class RecNode:
    __slots__ = ("cell", "fields")

    def __init__(self, cell: int, fields: dict[str, "MemTree"]):
        self.cell = cell
        self.fields = fields


class AccNode:
    """``target`` is None for a null pointer."""

    __slots__ = ("cell", "target")

    def __init__(self, cell: int, target: Optional["MemTree"] = None):
        self.cell = cell
        self.target = target


MemTree = Union[IntNode, RecNode, AccNode]


class Heap:
    """The fresh-cell oracle: a monotone allocator."""

    def __init__(self, table: RecordTable):
        self.table = table
        self._ids = itertools.count()

    def fresh(self) -> int:
        return next(self._ids)

    def fresh_tree(self, t: Type) -> MemTree:
        if isinstance(t, IntegerT):
            return IntNode(self.fresh(), 0)
        if isinstance(t, AccessT):
            return AccNode(self.fresh(), None)
        if isinstance(t, RecordT):
            cell = self.fresh()
            return RecNode(cell, {f: self.fresh_tree(ft) for f, ft in self.table.fields[t].items()})
        raise ContractViolation(f"cannot allocate a value of type {t}")

    def copy_tree(self, node: MemTree) -> MemTree:
        """Deep copy into fresh cells (used for by-copy parameters, which
        are shallow, so no access node is ever met)."""
        if isinstance(node, IntNode):
            return IntNode(self.fresh(), node.value)
        if isinstance(node, RecNode):
            cell = self.fresh()
            return RecNode(cell, {f: self.copy_tree(sub) for f, sub in node.fields.items()})
        return AccNode(self.fresh(), node.target)


def assign_tree(dst: MemTree, src: MemTree) -> MemTree:
    """Copy values of ``src`` into ``dst`` keeping the cells of ``dst``;
    access nodes take the designated subtree of ``src`` (shared)."""
    if dst is src:
        return dst
    if isinstance(dst, IntNode) and isinstance(src, IntNode):
        dst.value = src.value
    elif isinstance(dst, AccNode) and isinstance(src, AccNode):
        dst.target = src.target
    elif isinstance(dst, RecNode) and isinstance(src, RecNode) and dst.fields.keys() == src.fields.keys():
        # Read every source field before writing: the two records never
        # share same-level nodes, but stay safe regardless.
        pairs = [(dst.fields[f], src.fields[f]) for f in dst.fields]
        for d, s in pairs:
            assign_tree(d, s)
    else:
        raise ContractViolation("assignment between memory trees of different shapes")
    return dst


def children(node: MemTree) -> list[tuple[object, MemTree]]:
    if isinstance(node, RecNode):
        return [(A.Field(f), sub) for f, sub in node.fields.items()]
    if isinstance(node, AccNode) and node.target is not None:
        return [(A.DEREF, node.target)]
    return []


# ---------------------------------------------------------------------------
# Runtime outcomes, choices, frames and traces


class RuntimeStop(Exception):
    """Execution stopped: NullDereference, StepBudgetExceeded or
    ChoicesExhausted."""

    def __init__(self, kind: str, message: str, location: SourceLocation = NOWHERE,
                 path: Optional[str] = None):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message
        self.location = location
        self.path = path

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "location": self.location.to_dict(),
                "path": self.path}


class ChoiceSource:
    """Booleans consumed left to right at each ``if *``."""

    def __init__(self, choices: Iterable[bool] = ()):
        self.choices = list(choices)
        self.used = 0

    @classmethod
    def from_bits(cls, bits: str) -> "ChoiceSource":
        if any(c not in "01" for c in bits):
            raise ValueError(f"choice vector must be a string of 0/1, got {bits!r}")
        return cls(c == "1" for c in bits)

    def next(self, loc: SourceLocation) -> bool:
        if self.used >= len(self.choices):
            raise RuntimeStop("ChoicesExhausted", f"no choice left after {self.used}", loc)
        self.used += 1
        return self.choices[self.used - 1]


@dataclass
class Frame:
    """The active memory environment of one procedure activation."""

    scope: A.Scope
    vars: dict[str, MemTree] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.scope.name


@dataclass(frozen=True)
class TraceEntry:
    point: PointId
    event: str
    frame: str
    dump: str


Observer = Callable[[PointId, Frame, str], None]


def dump_frame(frame: Frame) -> str:
    """Canonical rendering: cells renumbered in first-visit order."""
    numbering: dict[int, int] = {}
    lines: list[str] = []

    def num(node: MemTree) -> str:
        if node.cell not in numbering:
            numbering[node.cell] = len(numbering)
        return f"#{numbering[node.cell]}"

    def visit(path: A.Path, node: MemTree, ancestors: frozenset[int]) -> None:
        if node.cell in ancestors:
            lines.append(f"{path}: cycle to {num(node)}")
            return
        if isinstance(node, IntNode):
            lines.append(f"{path}: integer {num(node)} = {node.value}")
        elif isinstance(node, RecNode):
            lines.append(f"{path}: record {num(node)}")
        else:
            lines.append(f"{path}: access {num(node)}" + (" = null" if node.target is None else ""))
        inner = ancestors | {node.cell}
        for sel, sub in children(node):
            visit(path.extend(sel), sub, inner)

    for name, node in frame.vars.items():
        visit(A.Path(name), node, frozenset())
    return "\n".join(lines)


@dataclass
class RunResult:
    outcome: str  # "Completed" or the RuntimeStop kind
    stop: Optional[RuntimeStop]
    trace: list[TraceEntry]
    choices_used: int
    steps: int
    frame: Frame

    @property
    def completed(self) -> bool:
        return self.stop is None


# ---------------------------------------------------------------------------
# The interpreter


class Interpreter:
    def __init__(self, program: A.Program, info: Optional[TypeInfo] = None, *,
                 choices: Optional[ChoiceSource] = None, steps: int = DEFAULT_STEPS,
                 observer: Optional[Observer] = None, record_trace: bool = False,
                 max_call_depth: int = MAX_CALL_DEPTH):
        self.program = program
        self.info = info if info is not None else check_program(program)
        if self.info.diagnostics:
            raise ContractViolation("the interpreter requires a well-typed program")
        self.heap = Heap(self.info.table)
        self.choices = choices if choices is not None else ChoiceSource()
        self.budget = steps
        self.steps = 0
        self.observer = observer
        self.trace: Optional[list[TraceEntry]] = [] if record_trace else None
        self.max_call_depth = max_call_depth
        self.depth = 0
        self.procs = {s.nid: s for s in A.iter_scopes(program) if isinstance(s, A.ProcDecl)}
        self.alloc_types = {
            s.nid: info.env.types[s.type_name]
            for info in self.info.scopes.values()
            for s in A.iter_stmts(info.scope.body)
            if isinstance(s, A.AssignNew)
        }

    # -- events ---------------------------------------------------------------

    def emit(self, point: PointId, frame: Frame, event: str) -> None:
        if self.trace is not None:
            self.trace.append(TraceEntry(point, event, frame.name, dump_frame(frame)))
        if self.observer is not None:
            self.observer(point, frame, event)

    def tick(self, loc: SourceLocation) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise RuntimeStop("StepBudgetExceeded", f"step budget of {self.budget} exhausted", loc)

    # -- names ----------------------------------------------------------------

    def resolve(self, frame: Frame, path: A.Path, loc: SourceLocation) -> MemTree:
        try:
            node = frame.vars[path.base]
        except KeyError:
            raise ContractViolation(f"variable {path.base} is not in the active frame") from None
        prefix = A.Path(path.base)
        for sel in path.selectors:
            if sel is A.DEREF:
                if not isinstance(node, AccNode):
                    raise ContractViolation(f"{prefix} is not an access value")
                if node.target is None:
                    raise RuntimeStop("NullDereference", f"{prefix} is null", loc, str(prefix))
                node = node.target
            else:
                if not isinstance(node, RecNode):
                    raise ContractViolation(f"{prefix} is not a record value")
                node = node.fields[sel.name]
            prefix = prefix.extend(sel)
        return node

    def _access(self, frame: Frame, path: A.Path, loc: SourceLocation) -> AccNode:
        node = self.resolve(frame, path, loc)
        if not isinstance(node, AccNode):
            raise ContractViolation(f"{path} is not an access value")
        return node

    # -- statements -------------------------------------------------------------

    def exec_stmt(self, frame: Frame, s: A.Stmt) -> None:
        self.tick(s.loc)
        event = "stmt"
        if isinstance(s, A.Block):
            for inner in s.stmts:
                self.exec_stmt(frame, inner)
        elif isinstance(s, A.If):
            branch = s.then_branch if self.choices.next(s.loc) else s.else_branch
            self.exec_stmt(frame, branch)
        elif isinstance(s, A.AssignNew):
            target = self._access(frame, s.target, s.loc)
            target.target = self.heap.fresh_tree(self.alloc_types[s.nid])
        elif isinstance(s, A.Assign):
            self.assign(frame, s)
        elif isinstance(s, A.Call):
            self.call(frame, s)
            event = "call-return"
        self.emit(PointId("post", s.nid), frame, event)

    def assign(self, frame: Frame, s: A.Assign) -> None:
        rhs = s.rhs
        if isinstance(rhs, A.NullLit):
            self._access(frame, s.target, s.loc).target = None
        elif isinstance(rhs, A.IntLit):
            node = self.resolve(frame, s.target, s.loc)
            if not isinstance(node, IntNode):
                raise ContractViolation(f"{s.target} is not an integer")
            node.value = rhs.value
        elif isinstance(rhs, A.NameRef):
            src = self.resolve(frame, rhs.path, rhs.loc)
            dst = self.resolve(frame, s.target, s.loc)
            assign_tree(dst, src)
        else:
            designated = self.resolve(frame, rhs.path, rhs.loc)
            self._access(frame, s.target, s.loc).target = designated

    def call(self, frame: Frame, s: A.Call) -> None:
        sig = self.info.calls[s.nid]
        proc = self.procs[sig.nid]
        is_deep = self.info.table.is_deep
        callee = Frame(proc)
        roles = []
        for (pname, mode, ptype), actual in zip(sig.params, s.actuals):
            role = formal_role(mode, ptype, is_deep)
            roles.append(role)
            callee.vars[pname] = self.get_from_expr(frame, actual, role)
        self.depth += 1
        if self.depth > self.max_call_depth:
            raise RuntimeStop("StepBudgetExceeded", f"call depth exceeds {self.max_call_depth}", s.loc)
        self.emit(PointId("entry", proc.nid), callee, "call-transfer")
        self.run_scope(proc, callee)
        self.depth -= 1
        for (pname, _, _), actual, role in zip(sig.params, s.actuals, roles):
            self.set_back(frame, actual, role, callee.vars[pname], s)

    def get_from_expr(self, frame: Frame, e: A.Expr, role: str) -> MemTree:
        if isinstance(e, A.NullLit):
            return AccNode(self.heap.fresh(), None)
        if isinstance(e, A.IntLit):
            return IntNode(self.heap.fresh(), e.value)
        if isinstance(e, A.AccessOf):
            return AccNode(self.heap.fresh(), self.resolve(frame, e.path, e.loc))
        node = self.resolve(frame, e.path, e.loc)
        if role == "copy":
            return self.heap.copy_tree(node)
        return node

    def set_back(self, frame: Frame, actual: A.Expr, role: str, formal: MemTree, s: A.Call) -> None:
        if role in ("observe", "copy"):
            return
        if role == "borrow-in":
            if isinstance(actual, A.NullLit):
                return
            if isinstance(actual, A.AccessOf):
                if not isinstance(formal, AccNode) or formal.target is None:
                    raise RuntimeStop("NullDereference",
                                      f"in-mode formal for {actual.path}'Access is null at return",
                                      actual.loc, str(actual.path))
                assign_tree(self.resolve(frame, actual.path, actual.loc), formal.target)
                return
        assign_tree(self.resolve(frame, actual.path, actual.loc), formal)

    # -- declarations and programs ------------------------------------------------

    def run_scope(self, scope: A.Scope, frame: Frame) -> None:
        declared = dict(self.info.scopes[scope.nid].variables)
        for d in scope.decls:
            if isinstance(d, A.VarDecl):
                self.tick(d.loc)
                frame.vars[d.name] = self.heap.fresh_tree(declared[d.name])
                self.emit(PointId("decl", d.nid), frame, "decl")
        self.exec_stmt(frame, scope.body)

    def run(self) -> RunResult:
        frame = Frame(self.program)
        stop = None
        try:
            self.run_scope(self.program, frame)
        except RuntimeStop as e:
            stop = e
        return RunResult("Completed" if stop is None else stop.kind, stop, self.trace or [],
                         self.choices.used, self.steps, frame)


def run(program: A.Program, choices: Union[ChoiceSource, Iterable[bool], str, None] = None, *,
        steps: int = DEFAULT_STEPS, info: Optional[TypeInfo] = None, observer: Optional[Observer] = None,
        trace: bool = False) -> RunResult:
    if isinstance(choices, str):
        source = ChoiceSource.from_bits(choices)
    elif isinstance(choices, ChoiceSource):
        source = choices
    else:
        source = ChoiceSource(choices or ())
    interp = Interpreter(program, info, choices=source, steps=steps, observer=observer, record_trace=trace)
    return interp.run()
