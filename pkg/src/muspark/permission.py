"""The permission lattice and lazy permission trees.

A permission tree assigns a permission to every path extending a variable.
For recursive record types that tree is infinite, so unexplored parts are
represented by :class:`Thunk` nodes whose descendants all share one
permission (or, for a *split* thunk, one permission for deep descendants and
another for shallow ones).  Trees are immutable; every update returns a new
tree sharing the untouched parts with the old one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

from muspark.diagnostics import ContractViolation
from muspark.syntax.ast import DEREF, Field, Path
from muspark.typecheck import AccessT, IntegerT, NullT, RecordT, RecordTable, Type


class Perm(enum.Enum):
    """Bit 1 = read, bit 2 = write."""

    NO = 0
    R = 1
    W = 2
    RW = 3

    def __str__(self) -> str:
        return self.name

    def __le__(self, other: "Perm") -> bool:
        return self.value & other.value == self.value

    def __lt__(self, other: "Perm") -> bool:
        return self != other and self <= other

    def __ge__(self, other: "Perm") -> bool:
        return other <= self

    def __gt__(self, other: "Perm") -> bool:
        return other < self

    @property
    def readable(self) -> bool:
        return bool(self.value & 1)

    @property
    def writable(self) -> bool:
        return bool(self.value & 2)


NO, R, W, RW = Perm.NO, Perm.R, Perm.W, Perm.RW
ALL_PERMS = (NO, R, W, RW)
READABLE = frozenset({R, RW})
WRITABLE = frozenset({W, RW})


def glb(a: Perm, b: Perm) -> Perm:
    return Perm(a.value & b.value)


def lub(a: Perm, b: Perm) -> Perm:
    return Perm(a.value | b.value)


def glb_all(perms) -> Perm:
    out = RW
    for p in perms:
        out = glb(out, p)
    return out


# ---------------------------------------------------------------------------
# Tree nodes


@dataclass(frozen=True)
class Thunk:
    """An unexpanded subtree.  The node itself has ``perm``; every strict
    descendant has ``children`` except shallow-typed descendants when
    ``shallow_children`` is set."""

    perm: Perm
    is_deep: bool
    children: Perm
    shallow_children: Optional[Perm] = None

    def descendant_perm(self, deep: bool) -> Perm:
        if self.shallow_children is not None and not deep:
            return self.shallow_children
        return self.children

    @property
    def uniform(self) -> bool:
        return self.shallow_children is None and self.children == self.perm


@dataclass(frozen=True)
class RecordNode:
    perm: Perm
    is_deep: bool
    fields: tuple[tuple[str, "PermTree"], ...]

    def field(self, name: str) -> "PermTree":
        for f, sub in self.fields:
            if f == name:
                return sub
        raise ContractViolation(f"permission tree has no field {name}")

    def with_field(self, name: str, sub: "PermTree") -> "RecordNode":
        return RecordNode(self.perm, self.is_deep,
                          tuple((f, sub if f == name else old) for f, old in self.fields))


@dataclass(frozen=True)
class AccessNode:
    perm: Perm
    is_deep: bool
    child: "PermTree"


@dataclass(frozen=True)
class IntNode:
    perm: Perm

    @property
    def is_deep(self) -> bool:
        return False


PermTree = Union[Thunk, RecordNode, AccessNode, IntNode]


def with_perm(node: PermTree, perm: Perm) -> PermTree:
    if isinstance(node, Thunk):
        return Thunk(perm, node.is_deep, node.children, node.shallow_children)
    if isinstance(node, RecordNode):
        return RecordNode(perm, node.is_deep, node.fields)
    if isinstance(node, AccessNode):
        return AccessNode(perm, node.is_deep, node.child)
    return IntNode(perm)


class Shapes:
    """Type navigation for permission trees."""

    def __init__(self, table: RecordTable):
        self.table = table

    def is_deep(self, t: Type) -> bool:
        return self.table.is_deep(t)

    def child_type(self, t: Type, sel) -> Type:
        if sel is DEREF:
            if isinstance(t, AccessT):
                return t.inner
        elif isinstance(t, RecordT):
            ft = self.table.field_type(t, sel.name)
            if ft is not None:
                return ft
        raise ContractViolation(f"selector {sel} does not apply to type {t}")

    def children(self, t: Type) -> list[tuple[object, Type]]:
        if isinstance(t, AccessT):
            return [(DEREF, t.inner)]
        if isinstance(t, RecordT):
            return [(Field(f), ft) for f, ft in self.table.fields[t].items()]
        if isinstance(t, (IntegerT, NullT)):
            return []
        raise ContractViolation(f"unknown type {t!r}")

    def descendant_types(self, t: Type) -> set[Type]:
        """Types of all strict descendants (finite even for recursive types)."""
        seen: set[Type] = set()
        stack = [ct for _, ct in self.children(t)]
        while stack:
            ct = stack.pop()
            if ct in seen:
                continue
            seen.add(ct)
            stack.extend(gt for _, gt in self.children(ct))
        return seen


def pfresh(t: Type, kappa: Perm, table: RecordTable) -> Thunk:
    return Thunk(kappa, table.is_deep(t), kappa)


def dethunk(th: Thunk, t: Type, shapes: Shapes) -> PermTree:
    """Expand one level of a thunk according to the type ``t``."""

    def child(ct: Type) -> Thunk:
        deep = shapes.is_deep(ct)
        return Thunk(th.descendant_perm(deep), deep, th.children, th.shallow_children)

    if isinstance(t, AccessT):
        return AccessNode(th.perm, th.is_deep, child(t.inner))
    if isinstance(t, RecordT):
        return RecordNode(th.perm, th.is_deep,
                          tuple((f, child(ft)) for f, ft in shapes.table.fields[t].items()))
    if isinstance(t, IntegerT):
        return IntNode(th.perm)
    raise ContractViolation(f"cannot expand a permission tree of type {t}")


def expand(node: PermTree, t: Type, shapes: Shapes) -> PermTree:
    return dethunk(node, t, shapes) if isinstance(node, Thunk) else node


def subtree_children(node: PermTree) -> list[tuple[object, PermTree]]:
    if isinstance(node, RecordNode):
        return [(Field(f), sub) for f, sub in node.fields]
    if isinstance(node, AccessNode):
        return [(DEREF, node.child)]
    return []


def _step(node: PermTree, t: Type, sel, shapes: Shapes) -> tuple[PermTree, Type]:
    ct = shapes.child_type(t, sel)
    node = expand(node, t, shapes)
    if sel is DEREF:
        if not isinstance(node, AccessNode):
            raise ContractViolation("dereference of a non-access permission node")
        return node.child, ct
    if not isinstance(node, RecordNode):
        raise ContractViolation("field selection on a non-record permission node")
    return node.field(sel.name), ct


def tree_lookup(node: PermTree, t: Type, selectors, shapes: Shapes) -> Perm:
    for i, sel in enumerate(selectors):
        if isinstance(node, Thunk):
            # Descendants of a thunk are uniform per deep/shallow class, so
            # the answer needs no materialization.
            for rest in selectors[i:]:
                t = shapes.child_type(t, rest)
            return node.descendant_perm(shapes.is_deep(t))
        node, t = _step(node, t, sel, shapes)
    return node.perm


def tree_update(node: PermTree, t: Type, selectors, fn: Callable[[PermTree, Type], PermTree],
                shapes: Shapes) -> PermTree:
    """Replace the subtree at ``selectors`` by ``fn(subtree, type)``."""
    if not selectors:
        return fn(node, t)
    sel, rest = selectors[0], selectors[1:]
    ct = shapes.child_type(t, sel)
    node = expand(node, t, shapes)
    if sel is DEREF:
        return AccessNode(node.perm, node.is_deep, tree_update(node.child, ct, rest, fn, shapes))
    return node.with_field(sel.name, tree_update(node.field(sel.name), ct, rest, fn, shapes))


# ---------------------------------------------------------------------------
# Extension updates


@dataclass(frozen=True)
class ExtensionUpdate:
    """New permissions for the strict extensions of a path, split by whether
    the extension has the same number of ``.all`` as the path and whether its
    type is deep.  ``None`` leaves that class unchanged."""

    same_deep: Optional[Perm] = None
    same_shallow: Optional[Perm] = None
    more_deep: Optional[Perm] = None
    more_shallow: Optional[Perm] = None

    @classmethod
    def uniform(cls, kappa: Perm) -> "ExtensionUpdate":
        return cls(kappa, kappa, kappa, kappa)

    @classmethod
    def by_depth(cls, deep: Perm, shallow: Perm) -> "ExtensionUpdate":
        return cls(deep, shallow, deep, shallow)


FILTERS = ("all-strict", "deep-same-derefs", "shallow-same-derefs", "more-derefs")


def filter_update(filter_name: str, kappa: Perm) -> ExtensionUpdate:
    if filter_name == "all-strict":
        return ExtensionUpdate.uniform(kappa)
    if filter_name == "deep-same-derefs":
        return ExtensionUpdate(same_deep=kappa)
    if filter_name == "shallow-same-derefs":
        return ExtensionUpdate(same_shallow=kappa)
    if filter_name == "more-derefs":
        return ExtensionUpdate(more_deep=kappa, more_shallow=kappa)
    raise ValueError(f"unknown extension filter {filter_name!r}")


def _combine(given: Optional[Perm], old: Perm, join: bool) -> Perm:
    if given is None:
        return old
    return lub(given, old) if join else given


def _update_below(node: PermTree, t: Type, upd: ExtensionUpdate, join: bool, shapes: Shapes) -> PermTree:
    """Apply the "more derefs" part of ``upd`` to ``node`` and all its
    descendants (they all lie below a dereference)."""
    deep_p, shallow_p = upd.more_deep, upd.more_shallow
    if deep_p is None and shallow_p is None:
        return node
    if not join and deep_p is not None and shallow_p is not None:
        deep = shapes.is_deep(t)
        own = deep_p if deep else shallow_p
        return Thunk(own, deep, deep_p, None if shallow_p == deep_p else shallow_p)
    if isinstance(node, Thunk):
        deep = node.is_deep
        own = _combine(deep_p if deep else shallow_p, node.perm, join)
        kids = _combine(deep_p, node.children, join)
        kids_shallow = _combine(shallow_p, node.descendant_perm(False), join)
        return Thunk(own, deep, kids, None if kids_shallow == kids else kids_shallow)
    deep = shapes.is_deep(t)
    own = _combine(deep_p if deep else shallow_p, node.perm, join)
    if isinstance(node, IntNode):
        return IntNode(own)
    if isinstance(node, AccessNode):
        return AccessNode(own, node.is_deep, _update_below(node.child, t.inner, upd, join, shapes))
    return RecordNode(own, node.is_deep, tuple(
        (f, _update_below(sub, shapes.table.fields[t][f], upd, join, shapes)) for f, sub in node.fields))


def _update_extensions(node: PermTree, t: Type, upd: ExtensionUpdate, join: bool, shapes: Shapes) -> PermTree:
    """Update strict extensions of the node (the node itself is unchanged)."""
    if isinstance(t, IntegerT):
        return node
    touches_same = upd.same_deep is not None or upd.same_shallow is not None
    touches_more = upd.more_deep is not None or upd.more_shallow is not None
    if not touches_same and not touches_more:
        return node
    node = expand(node, t, shapes)
    if isinstance(node, AccessNode):
        if not touches_more:
            return node
        return AccessNode(node.perm, node.is_deep, _update_below(node.child, t.inner, upd, join, shapes))
    fields = []
    for f, sub in node.fields:
        ft = shapes.table.fields[t][f]
        deep = shapes.is_deep(ft)
        given = upd.same_deep if deep else upd.same_shallow
        sub = _update_extensions(sub, ft, upd, join, shapes)
        if given is not None:
            sub = with_perm(sub, _combine(given, sub.perm, join))
        fields.append((f, sub))
    return RecordNode(node.perm, node.is_deep, tuple(fields))


# ---------------------------------------------------------------------------
# Release, fusion and well-formedness checks


def release_tree(node: PermTree, t: Type, shapes: Shapes) -> PermTree:
    if isinstance(node, Thunk):
        if node.shallow_children is not None:
            raise ContractViolation("PermRelease applied to a split thunk")
        if node.perm == node.children or isinstance(t, IntegerT):
            return node
        return Thunk(lub(node.perm, node.children), node.is_deep, node.children)
    if isinstance(node, IntNode):
        return node
    if isinstance(node, AccessNode):
        child = release_tree(node.child, t.inner, shapes)
        return AccessNode(lub(node.perm, child.perm), node.is_deep, child)
    fields = tuple((f, release_tree(sub, shapes.table.fields[t][f], shapes)) for f, sub in node.fields)
    return RecordNode(lub(node.perm, glb_all(sub.perm for _, sub in fields)), node.is_deep, fields)


def fuse_tree(a: PermTree, b: PermTree, t: Type, shapes: Shapes) -> PermTree:
    if isinstance(a, Thunk) and isinstance(b, Thunk):
        if a.shallow_children is None and b.shallow_children is None:
            return Thunk(glb(a.perm, b.perm), a.is_deep, glb(a.children, b.children))
        if isinstance(t, IntegerT):
            return Thunk(glb(a.perm, b.perm), a.is_deep, glb(a.children, b.children))
        sa, sb = a.descendant_perm(False), b.descendant_perm(False)
        kids = glb(a.children, b.children)
        kids_shallow = glb(sa, sb)
        return Thunk(glb(a.perm, b.perm), a.is_deep, kids, None if kids == kids_shallow else kids_shallow)
    if isinstance(t, IntegerT):
        return IntNode(glb(a.perm, b.perm))
    a, b = expand(a, t, shapes), expand(b, t, shapes)
    perm = glb(a.perm, b.perm)
    if isinstance(a, AccessNode):
        return AccessNode(perm, a.is_deep, fuse_tree(a.child, b.child, t.inner, shapes))
    return RecordNode(perm, a.is_deep, tuple(
        (f, fuse_tree(sa, b.field(f), shapes.table.fields[t][f], shapes)) for f, sa in a.fields))


def _child_perms(node: PermTree, t: Type, shapes: Shapes) -> list[Perm]:
    if isinstance(node, Thunk):
        return [node.descendant_perm(shapes.is_deep(ct)) for _, ct in shapes.children(t)]
    return [sub.perm for _, sub in subtree_children(node)]


def _readability_ok(perm: Perm, kids: list[Perm]) -> bool:
    if perm in (R, RW):
        return all(k == perm for k in kids)
    return True


def _thunk_interior_states(th: Thunk, t: Type, shapes: Shapes) -> Iterator[tuple[Perm, list[Perm]]]:
    """(node perm, child perms) for every node strictly inside a thunk."""
    for dt in shapes.descendant_types(t):
        own = th.descendant_perm(shapes.is_deep(dt))
        yield own, [th.descendant_perm(shapes.is_deep(ct)) for _, ct in shapes.children(dt)]


def tree_violations(node: PermTree, t: Type, path: Path, shapes: Shapes,
                    check: Callable[[Perm, list[Perm]], bool]) -> Iterator[Path]:
    """Paths of nodes whose (perm, child perms) fail ``check``."""
    kids = _child_perms(node, t, shapes)
    if kids and not check(node.perm, kids):
        yield path
    if isinstance(node, Thunk):
        for own, inner_kids in _thunk_interior_states(node, t, shapes):
            if inner_kids and not check(own, inner_kids):
                yield Path(path.base, path.selectors + (Field("*"),))
                return
        return
    for sel, sub in subtree_children(node):
        yield from tree_violations(sub, shapes.child_type(t, sel), path.extend(sel), shapes, check)


def _normalized_ok(perm: Perm, kids: list[Perm]) -> bool:
    return glb_all(kids) <= perm


# ---------------------------------------------------------------------------
# Environments


class PermEnv:
    """Φ: variable name -> (type, permission tree).  Value semantics: every
    operation returns a new environment."""

    __slots__ = ("table", "shapes", "vars")

    def __init__(self, table: RecordTable, vars: Optional[dict[str, tuple[Type, PermTree]]] = None,
                 shapes: Optional[Shapes] = None):
        self.table = table
        self.shapes = shapes or Shapes(table)
        self.vars: dict[str, tuple[Type, PermTree]] = dict(vars or {})

    def _derive(self, vars: dict[str, tuple[Type, PermTree]]) -> "PermEnv":
        return PermEnv(self.table, vars, self.shapes)

    def __contains__(self, name: str) -> bool:
        return name in self.vars

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PermEnv) and self.vars == other.vars

    def __hash__(self):  # environments are compared, never hashed
        raise TypeError("PermEnv is unhashable")

    def names(self) -> list[str]:
        return list(self.vars)

    def declare(self, name: str, t: Type, kappa: Perm) -> "PermEnv":
        vars = dict(self.vars)
        vars[name] = (t, pfresh(t, kappa, self.table))
        return self._derive(vars)

    def bind(self, name: str, t: Type, tree: PermTree) -> "PermEnv":
        vars = dict(self.vars)
        vars[name] = (t, tree)
        return self._derive(vars)

    def entry(self, name: str) -> tuple[Type, PermTree]:
        try:
            return self.vars[name]
        except KeyError:
            raise ContractViolation(f"no permission tree for variable {name}") from None

    def type_of(self, path: Path) -> Type:
        t, _ = self.entry(path.base)
        for sel in path.selectors:
            t = self.shapes.child_type(t, sel)
        return t

    def lookup(self, path: Path) -> Perm:
        t, tree = self.entry(path.base)
        return tree_lookup(tree, t, path.selectors, self.shapes)

    def subtree(self, path: Path) -> PermTree:
        t, tree = self.entry(path.base)
        for sel in path.selectors:
            tree, t = _step(tree, t, sel, self.shapes)
        return tree

    def update(self, path: Path, fn: Callable[[PermTree, Type], PermTree]) -> "PermEnv":
        t, tree = self.entry(path.base)
        vars = dict(self.vars)
        vars[path.base] = (t, tree_update(tree, t, path.selectors, fn, self.shapes))
        return self._derive(vars)

    def set_node(self, path: Path, kappa: Perm) -> "PermEnv":
        return self.update(path, lambda node, _t: with_perm(node, kappa))

    def set_subtree(self, path: Path, kappa: Perm) -> "PermEnv":
        return self.update(path, lambda _node, t: pfresh(t, kappa, self.table))

    def set_extensions(self, path: Path, kappa_or_update: Union[Perm, ExtensionUpdate],
                       filter_name: Optional[str] = None, join: bool = False) -> "PermEnv":
        if isinstance(kappa_or_update, Perm):
            upd = filter_update(filter_name or "all-strict", kappa_or_update)
        else:
            upd = kappa_or_update
        return self.update(path, lambda node, t: _update_extensions(node, t, upd, join, self.shapes))

    def materialized(self) -> Iterator[tuple[Path, PermTree, Type]]:
        """Every materialized node (thunks included), pre-order."""
        for name, (t, tree) in self.vars.items():
            stack = [(Path(name), tree, t)]
            while stack:
                path, node, nt = stack.pop()
                yield path, node, nt
                for sel, sub in reversed(subtree_children(node)):
                    stack.append((path.extend(sel), sub, self.shapes.child_type(nt, sel)))

    def dump(self) -> str:
        lines = []
        for path, node, _ in self.materialized():
            text = f"{path}: {node.perm}"
            if isinstance(node, Thunk) and not node.uniform:
                below = str(node.children)
                if node.shallow_children is not None:
                    below += f"/{node.shallow_children}"
                text += f" (below: {below})"
            lines.append(text)
        return "\n".join(sorted(lines, key=lambda s: s.split(":")[0]))

    def __repr__(self) -> str:
        return f"PermEnv({self.dump()!r})"


def perm_release(env: PermEnv) -> PermEnv:
    return env._derive({name: (t, release_tree(tree, t, env.shapes)) for name, (t, tree) in env.vars.items()})


def fusion(e1: PermEnv, e2: PermEnv) -> PermEnv:
    if set(e1.vars) != set(e2.vars):
        raise ContractViolation("fusion of environments over different variables")
    out = {}
    for name, (t, a) in e1.vars.items():
        _, b = e2.vars[name]
        out[name] = (t, fuse_tree(a, b, t, e1.shapes))
    return e1._derive(out)


def normalization_violations(env: PermEnv) -> list[Path]:
    out: list[Path] = []
    for name, (t, tree) in env.vars.items():
        out.extend(tree_violations(tree, t, Path(name), env.shapes, _normalized_ok))
    return out


def readability_violations(env: PermEnv) -> list[Path]:
    out: list[Path] = []
    for name, (t, tree) in env.vars.items():
        out.extend(tree_violations(tree, t, Path(name), env.shapes, _readability_ok))
    return out


def is_normalized(env: PermEnv) -> bool:
    return not normalization_violations(env)


def readability_holds(env: PermEnv) -> bool:
    return not readability_violations(env)
