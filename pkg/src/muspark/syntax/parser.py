"""Recursive-descent parser producing the AST in :mod:`muspark.syntax.ast`.

Beyond the bare grammar the parser accepts a few conveniences that do not
change the language: a sequence of statements wherever one statement is
expected (wrapped in a :class:`Block`), ``X, Y : mode T`` parameter groups,
an optional procedure name after ``end``, and both ``in out`` and ``in-out``.
"""

from __future__ import annotations

from typing import Iterable, Optional

from muspark.diagnostics import ParseError, SourceLocation
from muspark.syntax import ast as A
from muspark.syntax.lexer import Tok, Token, tokenize

_STMT_START = (Tok.IDENT, Tok.KW_IF, Tok.KW_BEGIN)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.next_nid = 0
        if tokens:
            last = tokens[-1]
            width = len(last.text)
            self.eof = SourceLocation(last.location.line, last.location.column + width,
                                      last.location.offset + len(last.text.encode()))
        else:
            self.eof = SourceLocation(1, 1, 0)

    # -- token helpers -----------------------------------------------------

    def nid(self) -> int:
        self.next_nid += 1
        return self.next_nid - 1

    def peek(self, ahead: int = 0) -> Optional[Token]:
        j = self.pos + ahead
        return self.tokens[j] if j < len(self.tokens) else None

    def kind(self, ahead: int = 0) -> Tok:
        tok = self.peek(ahead)
        return Tok.EOF if tok is None else tok.kind

    def here(self) -> SourceLocation:
        tok = self.peek()
        return self.eof if tok is None else tok.location

    def fail(self, expected: Iterable[Tok]) -> ParseError:
        tok = self.peek()
        found = "end of input" if tok is None else repr(tok.text)
        names = tuple(sorted({e.value for e in expected}))
        return ParseError(f"unexpected {found}", self.here(), names)

    def expect(self, kind: Tok) -> Token:
        tok = self.peek()
        if tok is None or tok.kind is not kind:
            raise self.fail([kind])
        self.pos += 1
        return tok

    def accept(self, kind: Tok) -> Optional[Token]:
        tok = self.peek()
        if tok is not None and tok.kind is kind:
            self.pos += 1
            return tok
        return None

    # -- names, types, expressions -------------------------------------------

    def name(self) -> tuple[A.Path, SourceLocation]:
        head = self.expect(Tok.IDENT)
        selectors: list[A.Selector] = []
        while self.kind() is Tok.DOT:
            self.pos += 1
            if self.accept(Tok.KW_ALL):
                selectors.append(A.DEREF)
            elif self.kind() is Tok.IDENT:
                selectors.append(A.Field(self.expect(Tok.IDENT).text))
            else:
                raise self.fail([Tok.IDENT, Tok.KW_ALL])
        return A.Path(head.text, tuple(selectors)), head.location

    def type_expr(self) -> A.TypeExpr:
        loc = self.here()
        if self.accept(Tok.KW_ACCESS):
            return A.AccessTo(self.expect(Tok.IDENT).text, loc)
        if self.kind() is Tok.IDENT:
            return A.Named(self.expect(Tok.IDENT).text, loc)
        raise self.fail([Tok.IDENT, Tok.KW_ACCESS])

    def expr(self) -> A.Expr:
        loc = self.here()
        if self.accept(Tok.KW_NULL):
            return A.NullLit(loc, self.nid())
        tok = self.accept(Tok.INT)
        if tok is not None:
            return A.IntLit(tok.value, loc, self.nid())
        if self.kind() is Tok.IDENT:
            path, loc = self.name()
            if self.accept(Tok.TICK):
                attr = self.peek()
                if attr is None or attr.kind is not Tok.IDENT or attr.text != "Access":
                    raise ParseError("expected attribute 'Access", self.here(), ("Access",))
                self.pos += 1
                return A.AccessOf(path, loc, self.nid())
            return A.NameRef(path, loc, self.nid())
        raise self.fail([Tok.KW_NULL, Tok.INT, Tok.IDENT])

    # -- statements ----------------------------------------------------------

    def stmt(self) -> A.Stmt:
        loc = self.here()
        if self.accept(Tok.KW_IF):
            self.expect(Tok.STAR)
            self.expect(Tok.KW_THEN)
            then_branch = self.stmt_seq(Tok.KW_ELSE)
            self.expect(Tok.KW_ELSE)
            else_branch = self.stmt_seq(Tok.KW_END)
            self.expect(Tok.KW_END)
            self.expect(Tok.KW_IF)
            self.expect(Tok.SEMI)
            return A.If(then_branch, else_branch, loc, self.nid())
        if self.accept(Tok.KW_BEGIN):
            stmts = self.stmt_list(Tok.KW_END)
            self.expect(Tok.KW_END)
            self.expect(Tok.SEMI)
            return A.Block(tuple(stmts), loc, self.nid())
        if self.kind() is Tok.IDENT:
            if self.kind(1) is Tok.LPAREN:
                proc = self.expect(Tok.IDENT).text
                self.expect(Tok.LPAREN)
                actuals = [self.expr()]
                while self.accept(Tok.COMMA):
                    actuals.append(self.expr())
                self.expect(Tok.RPAREN)
                self.expect(Tok.SEMI)
                return A.Call(proc, tuple(actuals), loc, self.nid())
            target, _ = self.name()
            if self.kind() is not Tok.ASSIGN:
                raise self.fail([Tok.ASSIGN, Tok.DOT] + ([Tok.LPAREN] if not target.selectors else []))
            self.pos += 1
            if self.accept(Tok.KW_NEW):
                type_name = self.expect(Tok.IDENT).text
                self.expect(Tok.SEMI)
                return A.AssignNew(target, type_name, loc, self.nid())
            rhs = self.expr()
            self.expect(Tok.SEMI)
            return A.Assign(target, rhs, loc, self.nid())
        raise self.fail(_STMT_START)

    def stmt_list(self, terminator: Tok) -> list[A.Stmt]:
        stmts = [self.stmt()]
        while self.kind() is not terminator and self.kind() in _STMT_START:
            stmts.append(self.stmt())
        return stmts

    def stmt_seq(self, terminator: Tok) -> A.Stmt:
        loc = self.here()
        stmts = self.stmt_list(terminator)
        if len(stmts) == 1:
            return stmts[0]
        return A.Block(tuple(stmts), loc, self.nid())

    # -- declarations --------------------------------------------------------

    def params(self) -> list[A.Param]:
        self.expect(Tok.LPAREN)
        params = self.param_group()
        while self.accept(Tok.SEMI):
            params.extend(self.param_group())
        self.expect(Tok.RPAREN)
        return params

    def param_group(self) -> list[A.Param]:
        names = [self.expect(Tok.IDENT)]
        while self.accept(Tok.COMMA):
            names.append(self.expect(Tok.IDENT))
        self.expect(Tok.COLON)
        if self.accept(Tok.KW_OUT):
            mode = A.Mode.OUT
        elif self.accept(Tok.KW_IN):
            mode = A.Mode.IN
            if self.kind() is Tok.DASH and self.kind(1) is Tok.KW_OUT:
                self.pos += 2
                mode = A.Mode.IN_OUT
            elif self.accept(Tok.KW_OUT):
                mode = A.Mode.IN_OUT
        else:
            raise self.fail([Tok.KW_IN, Tok.KW_OUT])
        ty = self.type_expr()
        return [A.Param(tok.text, mode, ty, tok.location) for tok in names]

    def decls(self) -> list[A.Decl]:
        out: list[A.Decl] = []
        while True:
            k = self.kind()
            if k is Tok.KW_TYPE:
                out.append(self.record_decl())
            elif k is Tok.KW_PROCEDURE:
                out.append(self.proc_decl())
            elif k is Tok.IDENT:
                out.append(self.var_decl())
            elif k is Tok.KW_BEGIN:
                return out
            else:
                raise self.fail([Tok.KW_TYPE, Tok.KW_PROCEDURE, Tok.IDENT, Tok.KW_BEGIN])

    def var_decl(self) -> A.VarDecl:
        tok = self.expect(Tok.IDENT)
        self.expect(Tok.COLON)
        ty = self.type_expr()
        self.expect(Tok.SEMI)
        return A.VarDecl(tok.text, ty, tok.location, self.nid())

    def record_decl(self) -> A.RecordDecl:
        loc = self.expect(Tok.KW_TYPE).location
        name = self.expect(Tok.IDENT).text
        self.expect(Tok.KW_IS)
        self.expect(Tok.KW_RECORD)
        fields = []
        while True:
            tok = self.expect(Tok.IDENT)
            self.expect(Tok.COLON)
            ty = self.type_expr()
            self.expect(Tok.SEMI)
            fields.append(A.FieldDecl(tok.text, ty, tok.location))
            if self.kind() is not Tok.IDENT:
                break
        self.expect(Tok.KW_END)
        self.expect(Tok.KW_RECORD)
        self.expect(Tok.SEMI)
        return A.RecordDecl(name, tuple(fields), loc, self.nid())

    def body(self, name: str) -> A.Stmt:
        self.expect(Tok.KW_BEGIN)
        body = self.stmt_seq(Tok.KW_END)
        self.expect(Tok.KW_END)
        closing = self.peek()
        if closing is not None and closing.kind is Tok.IDENT:
            if closing.text != name:
                raise ParseError(f"'end {closing.text}' does not match procedure {name}",
                                 closing.location, (name,))
            self.pos += 1
        self.expect(Tok.SEMI)
        return body

    def proc_decl(self) -> A.ProcDecl:
        loc = self.expect(Tok.KW_PROCEDURE).location
        name = self.expect(Tok.IDENT).text
        params = self.params()
        self.expect(Tok.KW_IS)
        decls = self.decls()
        body = self.body(name)
        return A.ProcDecl(name, tuple(params), tuple(decls), body, loc, self.nid())

    def program(self) -> A.Program:
        loc = self.expect(Tok.KW_PROCEDURE).location
        name = self.expect(Tok.IDENT).text
        self.expect(Tok.KW_IS)
        decls = self.decls()
        body = self.body(name)
        if self.peek() is not None:
            raise self.fail([Tok.EOF])
        return A.Program(name, tuple(decls), body, loc, self.nid())


def parse_program(tokens: list[Token]) -> A.Program:
    """Parse a whole file.  Raises :class:`ParseError` on the first error."""
    return _Parser(list(tokens)).program()


def parse(source: str) -> A.Program:
    return parse_program(tokenize(source))


def parse_stmt(source: str) -> A.Stmt:
    """Parse a single statement (used by tests and tooling)."""
    p = _Parser(tokenize(source))
    s = p.stmt()
    if p.peek() is not None:
        raise p.fail([Tok.EOF])
    return s
