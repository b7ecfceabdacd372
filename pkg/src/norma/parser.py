"""Concrete ASCII syntax: tokenizer, recursive-descent parser and printer."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .syntax import (
    INT,
    And,
    Assign,
    BinOp,
    Call,
    Compare,
    Ctor,
    CtorDecl,
    DataDecl,
    DataType,
    Guard,
    Match,
    NonMatch,
    Pattern,
    Procedure,
    Program,
    Rule,
    SourceSpan,
    Statement,
    Tick,
    Term,
    TrueGuard,
    Type,
    TypeVar,
    Var,
    guard_atoms,
)

RESERVED = {"Int", "true", "match", "nonmatch", "data", "tick"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_'$]*)
  | (?P<sym>::|:=|<-|/\\|>=|[><=*+\-(),|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "sym", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError(
                f"unexpected character {text[pos]!r}",
                SourceSpan(file, line, col, col + 1),
            )
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _is_lower(name: str) -> bool:
    return name[0].islower() or name[0] == "_"


class _Parser:
    def __init__(self, text: str, file: str):
        self.file = file
        self.toks = tokenize(text, file)
        self.pos = 0
        self.data_names: set[str] = set()

    # -- token helpers -----------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def span(self, tok: Token | None = None) -> SourceSpan:
        tok = tok or self.peek()
        return SourceSpan(self.file, tok.line, tok.col, tok.col + max(len(tok.text), 1))

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        return ParseError(msg, self.span(tok))

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("sym", "ident") and t.text == text

    def advance(self) -> Token:
        t = self.peek()
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            t = self.peek()
            found = t.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self, what: str) -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        return self.advance()

    def lower_ident(self, what: str) -> str:
        t = self.ident(what)
        if t.text in RESERVED:
            raise self.error(f"reserved word {t.text!r} used as {what}", t)
        if not _is_lower(t.text):
            raise self.error(f"{what} must start with a lowercase letter: {t.text!r}", t)
        return t.text

    def upper_ident(self, what: str) -> str:
        t = self.ident(what)
        if t.text in RESERVED:
            raise self.error(f"reserved word {t.text!r} used as {what}", t)
        if _is_lower(t.text):
            raise self.error(f"{what} must start with an uppercase letter: {t.text!r}", t)
        return t.text

    # -- program -----------------------------------------------------------

    def program(self) -> Program:
        datas = []
        while self.at("data"):
            datas.append(self.datadecl())
        procs = []
        while self.peek().kind != "eof":
            if self.at("data"):
                raise self.error("data declarations must precede procedures")
            procs.append(self.procdecl())
        return Program.build(datas, procs)

    def datadecl(self) -> DataDecl:
        start = self.expect("data")
        name = self.upper_ident("type name")
        self.data_names.add(name)
        params: list[str] = []
        if self.at("<"):
            self.advance()
            params.append(self.upper_ident("type variable"))
            while self.at(","):
                self.advance()
                params.append(self.upper_ident("type variable"))
            self.expect(">")
        self.expect("=")
        ctors = [self.ctordecl(set(params))]
        while self.at("|"):
            self.advance()
            ctors.append(self.ctordecl(set(params)))
        return DataDecl(name, tuple(params), tuple(ctors), span=self.span(start))

    def ctordecl(self, params: set[str]) -> CtorDecl:
        name = self.upper_ident("constructor")
        args: list[Type] = []
        if self.at("("):
            self.advance()
            args.append(self.type_(params))
            while self.at(","):
                self.advance()
                args.append(self.type_(params))
            self.expect(")")
        return CtorDecl(name, tuple(args))

    def type_(self, params: set[str] | None) -> Type:
        """Parse a type. ``params`` is None inside procedure declarations."""
        tok = self.ident("type")
        name = tok.text
        if name == "Int":
            return INT
        if _is_lower(name):
            raise self.error(f"type names start with an uppercase letter: {name!r}", tok)
        if name in RESERVED:
            raise self.error(f"reserved word {name!r} used as type", tok)
        args: list[Type] = []
        if self.at("<"):
            self.advance()
            args.append(self.type_(params))
            while self.at(","):
                self.advance()
                args.append(self.type_(params))
            self.expect(">")
        if params is not None:
            is_var = name in params
        else:
            is_var = name not in self.data_names
        if is_var:
            if args:
                raise self.error(f"type variable {name!r} cannot take arguments", tok)
            return TypeVar(name)
        return DataType(name, tuple(args))

    def typelist(self) -> tuple[Type, ...]:
        self.expect("<")
        out: list[Type] = []
        if not self.at(">"):
            out.append(self.type_(None))
            while self.at(","):
                self.advance()
                out.append(self.type_(None))
        self.expect(">")
        return tuple(out)

    def procdecl(self) -> Procedure:
        start = self.peek()
        name = self.lower_ident("procedure name")
        self.expect("::")
        ins = self.typelist()
        self.expect("*")
        outs = self.typelist()
        rules = []
        while self.peek().kind == "ident" and self.at("(", 1):
            rules.append(self.rule(name))
        if not rules:
            raise self.error(f"procedure {name!r} has no rules")
        return Procedure(name, ins, outs, tuple(rules), span=self.span(start))

    def varlist(self) -> tuple[str, ...]:
        self.expect("<")
        out: list[str] = []
        if not self.at(">"):
            out.append(self.lower_ident("variable"))
            while self.at(","):
                self.advance()
                out.append(self.lower_ident("variable"))
        self.expect(">")
        return tuple(out)

    def rule(self, proc: str) -> Rule:
        start = self.peek()
        name = self.lower_ident("procedure name")
        if name != proc:
            raise self.error(f"rule for {name!r} inside the declaration of {proc!r}", start)
        self.expect("(")
        ins = self.varlist()
        self.expect(",")
        outs = self.varlist()
        self.expect(")")
        self.expect("<-")
        guard = self.guard()
        body: list[Statement] = []
        while self.at(","):
            self.advance()
            body.append(self.stmt())
        return Rule(proc, ins, outs, guard, tuple(body), span=self.span(start))

    # -- guards --------------------------------------------------------------

    def guard(self) -> Guard:
        g = self.gatom()
        while self.at("/\\"):
            self.advance()
            g = And(g, self.gatom())
        return g

    def gatom(self) -> Guard:
        tok = self.peek()
        if self.at("true"):
            self.advance()
            return TrueGuard(span=self.span(tok))
        if self.at("match") or self.at("nonmatch"):
            self.advance()
            self.expect("(")
            var = self.lower_ident("variable")
            self.expect(",")
            pat = self.pattern()
            self.expect(")")
            cls = Match if tok.text == "match" else NonMatch
            return cls(var, pat, span=self.span(tok))
        if self.peek().kind == "ident" and self.at(":=", 1):
            raise self.error("assignment is not allowed in a guard", tok)
        left = self.expr()
        op_tok = self.peek()
        if op_tok.text not in (">", ">=", "=") or op_tok.kind != "sym":
            raise self.error(f"expected comparison operator, found {op_tok.text!r}", op_tok)
        self.advance()
        right = self.expr()
        return Compare(op_tok.text, left, right, span=self.span(tok))

    def pattern(self) -> Pattern:
        ctor = self.upper_ident("constructor")
        vars_: list[str] = []
        if self.at("("):
            self.advance()
            vars_.append(self.lower_ident("pattern variable"))
            while self.at(","):
                self.advance()
                vars_.append(self.lower_ident("pattern variable"))
            self.expect(")")
        return Pattern(ctor, tuple(vars_))

    # -- statements ----------------------------------------------------------

    def stmt(self) -> Statement:
        tok = self.peek()
        if self.at("tick"):
            self.advance()
            self.expect("(")
            n = self.peek()
            if n.kind != "int":
                raise self.error("tick takes an integer literal", n)
            self.advance()
            self.expect(")")
            return Tick(int(n.text), span=self.span(tok))
        if tok.kind == "ident" and self.at(":=", 1):
            var = self.lower_ident("variable")
            self.advance()
            return Assign(var, self.term(), span=self.span(tok))
        if tok.kind == "ident" and self.at("(", 1):
            proc = self.lower_ident("procedure name")
            self.expect("(")
            ins = self.varlist()
            self.expect(",")
            outs = self.varlist()
            self.expect(")")
            return Call(proc, ins, outs, span=self.span(tok))
        if tok.kind in ("ident", "int") and self.peek(1).text in (">", ">=", "="):
            raise self.error("comparison is not allowed as a statement", tok)
        raise self.error(f"expected statement, found {tok.text or 'end of input'!r}", tok)

    # -- terms ---------------------------------------------------------------

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "ident" and not _is_lower(tok.text):
            name = self.upper_ident("constructor")
            args: list[Term] = []
            if self.at("("):
                self.advance()
                args.append(self.term())
                while self.at(","):
                    self.advance()
                    args.append(self.term())
                self.expect(")")
            return Ctor(name, tuple(args), span=self.span(tok))
        return self.expr()

    def expr(self) -> Term:
        left = self.product()
        while self.peek().kind == "sym" and self.peek().text in ("+", "-"):
            op = self.advance()
            right = self.product()
            left = BinOp(op.text, left, right, span=self.span(op))
        return left

    def product(self) -> Term:
        left = self.primary()
        while self.at("*"):
            op = self.advance()
            right = self.primary()
            left = BinOp("*", left, right, span=self.span(op))
        return left

    def primary(self) -> Term:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return int(tok.text)
        if self.at("-") and self.peek(1).kind == "int":
            self.advance()
            return -int(self.advance().text)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            if not _is_lower(tok.text):
                raise self.error("constructor terms cannot appear in arithmetic", tok)
            return Var(self.lower_ident("variable"), span=self.span(tok))
        raise self.error(f"expected expression, found {tok.text or 'end of input'!r}", tok)


def parse(text: str, file: str = "<input>") -> Program:
    """Parse program text. Raises :class:`ParseError` with a source span."""
    return _Parser(text, file).program()


def parse_term(text: str) -> Term:
    p = _Parser(text, "<term>")
    t = p.term()
    if p.peek().kind != "eof":
        raise p.error(f"trailing input {p.peek().text!r}")
    return t


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2}


def pretty_term(t: Term) -> str:
    if isinstance(t, bool):
        raise TypeError("booleans are not terms")
    if isinstance(t, int):
        return str(t)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Ctor):
        if not t.args:
            return t.name
        return f"{t.name}({', '.join(pretty_term(a) for a in t.args)})"
    if isinstance(t, BinOp):
        prec = _PREC[t.op]
        left = pretty_term(t.left)
        if isinstance(t.left, BinOp) and _PREC[t.left.op] < prec:
            left = f"({left})"
        right = pretty_term(t.right)
        if isinstance(t.right, BinOp) and _PREC[t.right.op] <= prec:
            right = f"({right})"
        return f"{left} {t.op} {right}"
    raise TypeError(f"not a term: {t!r}")


def pretty_type(t: Type) -> str:
    return str(t)


def pretty_guard(g: Guard) -> str:
    parts = []
    for a in guard_atoms(g):
        if isinstance(a, TrueGuard):
            parts.append("true")
        elif isinstance(a, Compare):
            parts.append(f"{pretty_term(a.left)} {a.op} {pretty_term(a.right)}")
        else:
            kw = "match" if isinstance(a, Match) else "nonmatch"
            parts.append(f"{kw}({a.var}, {pretty_pattern(a.pattern)})")
    return " /\\ ".join(parts)


def pretty_pattern(p: Pattern) -> str:
    return f"{p.ctor}({', '.join(p.vars)})" if p.vars else p.ctor


def pretty_stmt(b: Statement) -> str:
    if isinstance(b, Assign):
        return f"{b.var} := {pretty_term(b.term)}"
    if isinstance(b, Call):
        return f"{b.proc}(<{', '.join(b.ins)}>, <{', '.join(b.outs)}>)"
    return f"tick({b.amount})"


def pretty_rule(r: Rule) -> str:
    head = f"{r.proc}(<{', '.join(r.ins)}>, <{', '.join(r.outs)}>) <- {pretty_guard(r.guard)}"
    return ",\n  ".join([head] + [pretty_stmt(b) for b in r.body])


def pretty(program: Program) -> str:
    out: list[str] = []
    for d in program.datas:
        params = f"<{', '.join(d.params)}>" if d.params else ""
        ctors = []
        for c in d.ctors:
            if c.args:
                ctors.append(f"{c.name}({', '.join(map(pretty_type, c.args))})")
            else:
                ctors.append(c.name)
        out.append(f"data {d.name}{params} = {' | '.join(ctors)}")
    if program.datas:
        out.append("")
    for p in program.procs:
        ins = ", ".join(map(pretty_type, p.in_types))
        outs = ", ".join(map(pretty_type, p.out_types))
        out.append(f"{p.name} :: <{ins}> * <{outs}>")
        for r in p.rules:
            out.append(pretty_rule(r))
        out.append("")
    return "\n".join(out)
