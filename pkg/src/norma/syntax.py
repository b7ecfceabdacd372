"""Abstract syntax of rule-based programs.

All nodes are frozen dataclasses. Source spans are carried for diagnostics
but excluded from equality, so ``parse(pretty(p)) == p`` holds structurally.
Integer literals inside terms are plain ``int`` values; a closed term is
therefore also a runtime value.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Union


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    col_start: int
    col_end: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col_start}"


def _span() -> SourceSpan | None:
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntType:
    def __str__(self) -> str:
        return "Int"


@dataclass(frozen=True)
class DataType:
    name: str
    args: tuple["Type", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}<{', '.join(map(str, self.args))}>"


@dataclass(frozen=True)
class TypeVar:
    name: str

    def __str__(self) -> str:
        return self.name


Type = Union[IntType, DataType, TypeVar]
INT = IntType()


def type_vars(t: Type) -> Iterator[str]:
    if isinstance(t, TypeVar):
        yield t.name
    elif isinstance(t, DataType):
        for a in t.args:
            yield from type_vars(a)


def substitute_type(t: Type, subst: dict[str, Type]) -> Type:
    if isinstance(t, TypeVar):
        return subst.get(t.name, t)
    if isinstance(t, DataType) and t.args:
        return DataType(t.name, tuple(substitute_type(a, subst) for a in t.args))
    return t


def is_ground(t: Type) -> bool:
    return next(type_vars(t), None) is None


# ---------------------------------------------------------------------------
# Terms and patterns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str
    span: SourceSpan | None = _span()

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-" or "*"
    left: "Term"
    right: "Term"
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Ctor:
    name: str
    args: tuple["Term", ...] = ()
    span: SourceSpan | None = _span()


Term = Union[Var, int, BinOp, Ctor]
Value = Union[int, Ctor]


@dataclass(frozen=True)
class Pattern:
    ctor: str
    vars: tuple[str, ...] = ()


def term_vars(t: Term) -> Iterator[str]:
    """Variables of ``t`` in left-to-right order (with repetitions)."""
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, BinOp):
        yield from term_vars(t.left)
        yield from term_vars(t.right)
    elif isinstance(t, Ctor):
        for a in t.args:
            yield from term_vars(a)


def is_closed(t: Term) -> bool:
    return next(term_vars(t), None) is None


# ---------------------------------------------------------------------------
# Guards
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrueGuard:
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class And:
    left: "Guard"
    right: "Guard"


@dataclass(frozen=True)
class Compare:
    op: str  # ">", ">=" or "="
    left: Term
    right: Term
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Match:
    var: str
    pattern: Pattern
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class NonMatch:
    var: str
    pattern: Pattern
    span: SourceSpan | None = _span()


Guard = Union[TrueGuard, And, Compare, Match, NonMatch]


def guard_atoms(g: Guard) -> Iterator[Guard]:
    if isinstance(g, And):
        yield from guard_atoms(g.left)
        yield from guard_atoms(g.right)
    else:
        yield g


def conjoin(atoms: list[Guard]) -> Guard:
    if not atoms:
        return TrueGuard()
    g = atoms[0]
    for a in atoms[1:]:
        g = And(g, a)
    return g


def guard_vars(g: Guard) -> Iterator[str]:
    for a in guard_atoms(g):
        if isinstance(a, Compare):
            yield from term_vars(a.left)
            yield from term_vars(a.right)
        elif isinstance(a, (Match, NonMatch)):
            yield a.var
            yield from a.pattern.vars


# ---------------------------------------------------------------------------
# Statements, rules, programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Assign:
    var: str
    term: Term
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Call:
    proc: str
    ins: tuple[str, ...]
    outs: tuple[str, ...]
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Tick:
    amount: int
    span: SourceSpan | None = _span()


Statement = Union[Assign, Call, Tick]


def stmt_vars(b: Statement) -> Iterator[str]:
    if isinstance(b, Assign):
        yield b.var
        yield from term_vars(b.term)
    elif isinstance(b, Call):
        yield from b.ins
        yield from b.outs


@dataclass(frozen=True)
class Rule:
    proc: str
    ins: tuple[str, ...]
    outs: tuple[str, ...]
    guard: Guard
    body: tuple[Statement, ...]
    index: int = 0
    span: SourceSpan | None = _span()

    def variables(self) -> list[str]:
        """All variables of the rule, in order of first occurrence."""
        seen: dict[str, None] = {}
        for v in self.ins + self.outs:
            seen.setdefault(v)
        for v in guard_vars(self.guard):
            seen.setdefault(v)
        for b in self.body:
            for v in stmt_vars(b):
                seen.setdefault(v)
        return list(seen)


@dataclass(frozen=True)
class CtorDecl:
    name: str
    args: tuple[Type, ...] = ()


@dataclass(frozen=True)
class DataDecl:
    name: str
    params: tuple[str, ...]
    ctors: tuple[CtorDecl, ...]
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Procedure:
    name: str
    in_types: tuple[Type, ...]
    out_types: tuple[Type, ...]
    rules: tuple[Rule, ...]
    span: SourceSpan | None = _span()

    def type_params(self) -> list[str]:
        seen: dict[str, None] = {}
        for t in self.in_types + self.out_types:
            for v in type_vars(t):
                seen.setdefault(v)
        return list(seen)


@dataclass(frozen=True)
class Program:
    datas: tuple[DataDecl, ...] = ()
    procs: tuple[Procedure, ...] = ()

    @staticmethod
    def build(datas, procs) -> "Program":
        """Assemble a program, numbering rules 1..n in source order."""
        k = 0
        numbered = []
        for p in procs:
            rules = []
            for r in p.rules:
                k += 1
                rules.append(dataclasses.replace(r, index=k))
            numbered.append(dataclasses.replace(p, rules=tuple(rules)))
        return Program(tuple(datas), tuple(numbered))

    @cached_property
    def rules(self) -> tuple[Rule, ...]:
        return tuple(r for p in self.procs for r in p.rules)

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    def rule(self, i: int) -> Rule:
        if not 1 <= i <= self.n_rules:
            raise IndexError(f"rule index {i} out of range 1..{self.n_rules}")
        return self.rules[i - 1]

    @cached_property
    def _procs(self) -> dict[str, Procedure]:
        return {p.name: p for p in self.procs}

    @cached_property
    def _datas(self) -> dict[str, DataDecl]:
        return {d.name: d for d in self.datas}

    @cached_property
    def _ctors(self) -> dict[str, tuple[DataDecl, CtorDecl]]:
        return {c.name: (d, c) for d in self.datas for c in d.ctors}

    def proc(self, name: str) -> Procedure:
        return self._procs[name]

    def has_proc(self, name: str) -> bool:
        return name in self._procs

    def data(self, name: str) -> DataDecl:
        return self._datas[name]

    def has_data(self, name: str) -> bool:
        return name in self._datas

    def ctor(self, name: str) -> tuple[DataDecl, CtorDecl]:
        return self._ctors[name]

    def has_ctor(self, name: str) -> bool:
        return name in self._ctors

    def ctor_type(self, name: str) -> DataType:
        """Result type of a monomorphic constructor."""
        return DataType(self._ctors[name][0].name)

    def is_polymorphic(self) -> bool:
        return any(d.params for d in self.datas) or any(
            p.type_params() for p in self.procs
        )

    def int_literals(self) -> list[int]:
        out: list[int] = []

        def walk(t: Term) -> None:
            if isinstance(t, int):
                out.append(t)
            elif isinstance(t, BinOp):
                walk(t.left)
                walk(t.right)
            elif isinstance(t, Ctor):
                for a in t.args:
                    walk(a)

        for r in self.rules:
            for a in guard_atoms(r.guard):
                if isinstance(a, Compare):
                    walk(a.left)
                    walk(a.right)
            for b in r.body:
                if isinstance(b, Assign):
                    walk(b.term)
        return out
