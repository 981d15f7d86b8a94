"""Alias sets from cell identity, and the per-checkpoint soundness checks:
CREW plus the normalization, readability, no-cycle and coherence lemmas."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional

from muspark.diagnostics import ContractViolation
from muspark.interp import AccNode, Frame, IntNode, MemTree, RecNode, children
from muspark.permission import PermEnv, normalization_violations, readability_violations
from muspark.syntax.ast import Path
from muspark.typecheck import AccessT, IntegerT, RecordT

VIOLATION_KINDS = ("CREW", "Normalization", "Readability", "NoCycle", "Coherence")


@dataclass(frozen=True)
class AliasSet:
    cell: int
    members: tuple[Path, ...]
    frame: str


@dataclass(frozen=True)
class Violation:
    """A failed check at one program point.  ``source`` and ``choices``
    replay it."""

    kind: str
    point: str
    detail: str
    paths: tuple[str, ...] = ()
    perms: tuple[str, ...] = ()
    source: str = ""
    choices: str = ""

    @property
    def key(self) -> tuple:
        return (self.kind, self.point, self.paths, self.perms)

    def with_repro(self, source: str, choices: str) -> "Violation":
        return replace(self, source=source, choices=choices)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "point": self.point, "detail": self.detail, "paths": list(self.paths),
                "perms": list(self.perms), "source": self.source, "choices": self.choices}

    @classmethod
    def from_dict(cls, data: dict) -> "Violation":
        return cls(data["kind"], data["point"], data["detail"], tuple(data["paths"]), tuple(data["perms"]),
                   data.get("source", ""), data.get("choices", ""))


def walk(frame: Frame) -> Iterator[tuple[Path, MemTree, Optional[Path]]]:
    """Every (path, node) reachable from the frame.  The third component is
    the ancestor path with the same cell when the node closes a cycle (the
    walk does not descend further there)."""
    for name, root in frame.vars.items():
        stack: list[tuple[Path, MemTree, dict[int, Path]]] = [(Path(name), root, {})]
        while stack:
            path, node, ancestors = stack.pop()
            seen = ancestors.get(node.cell)
            yield path, node, seen
            if seen is not None:
                continue
            inner = {**ancestors, node.cell: path}
            for sel, sub in reversed(children(node)):
                stack.append((path.extend(sel), sub, inner))


def alias_sets(frame: Frame) -> list[AliasSet]:
    groups: dict[int, list[Path]] = {}
    for path, node, cycle in walk(frame):
        if cycle is None:
            groups.setdefault(node.cell, []).append(path)
    return [AliasSet(cell, tuple(paths), frame.name) for cell, paths in groups.items()]


def crew_check(sets: list[AliasSet], perm: PermEnv, point: str = "") -> list[Violation]:
    out = []
    for s in sets:
        if len(s.members) < 2:
            continue
        perms = [perm.lookup(p) for p in s.members]
        for i, pi in enumerate(perms):
            if not pi.writable:
                continue
            others = [j for j, pj in enumerate(perms) if j != i and (pj.writable or pj.readable)]
            if others:
                j = others[0]
                paths = (str(s.members[i]), str(s.members[j]))
                out.append(Violation(
                    "CREW", point, f"{paths[0]} is writable ({pi}) while {paths[1]} is accessible ({perms[j]})",
                    paths, (str(pi), str(perms[j]))))
                break
    return out


def _coherent(node: MemTree, t) -> bool:
    if isinstance(node, IntNode):
        return isinstance(t, IntegerT)
    if isinstance(node, AccNode):
        return isinstance(t, AccessT)
    return isinstance(t, RecordT) and isinstance(node, RecNode)


class LemmaChecker:
    """Lemma checks for one program; permission-only results are cached per
    program point since snapshots do not depend on the execution."""

    def __init__(self) -> None:
        self._perm_cache: dict[str, list[Violation]] = {}

    def perm_only(self, perm: PermEnv, point: str) -> list[Violation]:
        cached = self._perm_cache.get(point)
        if cached is None:
            cached = [Violation("Normalization", point, f"{p} is less permissive than all its children", (str(p),),
                                (str(perm.lookup(p)),))
                      for p in normalization_violations(perm)]
            cached += [Violation("Readability", point, f"{p} is readable but a child is not", (str(p),),
                                 (str(perm.lookup(p)),))
                       for p in readability_violations(perm)]
            self._perm_cache[point] = cached
        return cached

    def check(self, frame: Frame, perm: PermEnv, point: str = "") -> list[Violation]:
        out = list(self.perm_only(perm, point))
        for path, node, cycle in walk(frame):
            if cycle is not None:
                out.append(Violation("NoCycle", point, f"{path} has the same cell as its ancestor {cycle}",
                                     (str(cycle), str(path))))
                continue
            try:
                t = perm.type_of(path)
                perm.lookup(path)
            except ContractViolation as e:
                out.append(Violation("Coherence", point, f"{path} has no permission node: {e}", (str(path),)))
                continue
            if not _coherent(node, t):
                out.append(Violation("Coherence", point, f"{path} holds a value that does not fit type {t}",
                                     (str(path),)))
        return out


def lemma_checks(frame: Frame, perm: PermEnv, point: str = "") -> list[Violation]:
    return LemmaChecker().check(frame, perm, point)
