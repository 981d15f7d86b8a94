"""Pretty-printer.  ``parse(pretty(p)) == p`` for every parsed program."""

from __future__ import annotations

import dataclasses

from muspark.syntax import ast as A

INDENT = "   "


def expr_text(e: A.Expr) -> str:
    if isinstance(e, A.NullLit):
        return "null"
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.NameRef):
        return str(e.path)
    if isinstance(e, A.AccessOf):
        return f"{e.path}'Access"
    raise TypeError(f"not an expression: {e!r}")


def stmt_lines(s: A.Stmt, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, A.Assign):
        return [f"{pad}{s.target} := {expr_text(s.rhs)};"]
    if isinstance(s, A.AssignNew):
        return [f"{pad}{s.target} := new {s.type_name};"]
    if isinstance(s, A.Call):
        return [f"{pad}{s.proc} ({', '.join(expr_text(a) for a in s.actuals)});"]
    if isinstance(s, A.If):
        return (
            [f"{pad}if * then"]
            + seq_lines(s.then_branch, depth + 1)
            + [f"{pad}else"]
            + seq_lines(s.else_branch, depth + 1)
            + [f"{pad}end if;"]
        )
    if isinstance(s, A.Block):
        lines = [f"{pad}begin"]
        for inner in s.stmts:
            lines += stmt_lines(inner, depth + 1)
        return lines + [f"{pad}end;"]
    raise TypeError(f"not a statement: {s!r}")


def seq_lines(s: A.Stmt, depth: int) -> list[str]:
    """Render a statement in a position that accepts a statement sequence.

    A block of two or more statements is printed without its begin/end so
    that it reparses to the same block; a one-statement block keeps them.
    """
    if isinstance(s, A.Block) and len(s.stmts) >= 2:
        out: list[str] = []
        for inner in s.stmts:
            out += stmt_lines(inner, depth)
        return out
    return stmt_lines(s, depth)


def _param_text(p: A.Param) -> str:
    return f"{p.name} : {p.mode} {p.type}"


def decl_lines(d: A.Decl, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(d, A.VarDecl):
        return [f"{pad}{d.name} : {d.type};"]
    if isinstance(d, A.RecordDecl):
        return (
            [f"{pad}type {d.name} is record"]
            + [f"{pad}{INDENT}{f.name} : {f.type};" for f in d.fields]
            + [f"{pad}end record;"]
        )
    if isinstance(d, A.ProcDecl):
        params = "; ".join(_param_text(p) for p in d.params)
        return _scope_lines(f"{pad}procedure {d.name} ({params}) is", d, depth)
    raise TypeError(f"not a declaration: {d!r}")


def _scope_lines(header: str, scope: A.Scope, depth: int) -> list[str]:
    pad = INDENT * depth
    lines = [header]
    for d in scope.decls:
        lines += decl_lines(d, depth + 1)
    lines.append(f"{pad}begin")
    lines += seq_lines(scope.body, depth + 1)
    lines.append(f"{pad}end {scope.name};")
    return lines


def pretty(program: A.Program) -> str:
    return "\n".join(_scope_lines(f"procedure {program.name} is", program, 0)) + "\n"


def pretty_stmt(s: A.Stmt) -> str:
    return "\n".join(stmt_lines(s, 0))


def ast_to_dict(node) -> object:
    """Plain-data rendering of an AST (locations and ids omitted)."""
    if isinstance(node, (A.Path, A.Mode)):
        return str(node)
    if isinstance(node, tuple):
        return [ast_to_dict(x) for x in node]
    if dataclasses.is_dataclass(node):
        out = {"node": type(node).__name__}
        for f in dataclasses.fields(node):
            if f.name not in ("loc", "nid"):
                out[f.name] = ast_to_dict(getattr(node, f.name))
        return out
    return node


def dump_ast(program: A.Program) -> str:
    """Indented one-node-per-line rendering of the AST."""
    lines: list[str] = []

    def visit(data, label: str, depth: int) -> None:
        pad = "  " * depth + (f"{label}: " if label else "")
        if isinstance(data, dict):
            scalars = [f"{k}={v}" for k, v in data.items() if k != "node" and not isinstance(v, (dict, list))]
            lines.append(pad + data["node"] + (f" {' '.join(scalars)}" if scalars else ""))
            for k, v in data.items():
                if isinstance(v, (dict, list)):
                    visit(v, k, depth + 1)
        elif isinstance(data, list):
            lines.append(pad + f"[{len(data)}]")
            for item in data:
                visit(item, "", depth + 1)
        else:
            lines.append(pad + str(data))

    visit(ast_to_dict(program), "", 0)
    return "\n".join(lines)
