"""Symbolic size expressions and linear constraints over them.

Smart constructors (:func:`add`, :func:`sub`, :func:`mul`, :func:`smax`)
flatten nested ``max`` and fold constants eagerly, so structurally equal
inputs give structurally equal expressions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Union

from .syntax import DataType, IntType, Type


# ---------------------------------------------------------------------------
# Size-variable keys
# ---------------------------------------------------------------------------

Path = tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class TermSizeKey:
    """Key of the untyped term-size norm (integers inside data count 0)."""

    def __str__(self) -> str:
        return "ts"


TERM_SIZE = TermSizeKey()

# A key is a plain Type, an annotated pair (Type, Path) or TERM_SIZE.
Key = Union[Type, tuple, TermSizeKey]


def key_type(key: Key) -> Type:
    if isinstance(key, tuple):
        return key[0]
    return key


def key_is_int(key: Key) -> bool:
    return isinstance(key_type(key), IntType)


def render_path(path: Path) -> str:
    return ".".join(f"{c}.{i}" for c, i in path)


def render_key(key: Key) -> str:
    if isinstance(key, tuple):
        t, path = key
        return f"{t}@{render_path(path)}" if path else str(t)
    return str(key)


def capitalize(var: str) -> str:
    return var[:1].upper() + var[1:]


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class NegInf:
    def __str__(self) -> str:
        return "-inf"


NEG_INF = NegInf()


@dataclass(frozen=True)
class SizeVar:
    """Size of variable ``var`` measured by ``key``; key None marks an auxiliary."""

    var: str
    key: Key | None = None

    @property
    def name(self) -> str:
        if self.key is None:
            return self.var
        return f"{capitalize(self.var)}_{render_key(self.key)}"

    def __str__(self) -> str:
        return self.name

    def renamed(self, f: Callable[[str], str]) -> "SizeVar":
        return SizeVar(f(self.var), self.key)


@dataclass(frozen=True)
class Add:
    left: "SizeExpr"
    right: "SizeExpr"

    def __str__(self) -> str:
        return f"{self.left} + {_paren(self.right)}"


@dataclass(frozen=True)
class Sub:
    left: "SizeExpr"
    right: "SizeExpr"

    def __str__(self) -> str:
        return f"{self.left} - {_paren(self.right)}"


@dataclass(frozen=True)
class Mul:
    left: "SizeExpr"
    right: "SizeExpr"

    def __str__(self) -> str:
        return f"{_paren(self.left)} * {_paren(self.right)}"


@dataclass(frozen=True)
class Max:
    args: tuple["SizeExpr", ...]

    def __str__(self) -> str:
        return f"max({', '.join(map(str, self.args))})"


SizeExpr = Union[Num, NegInf, SizeVar, Add, Sub, Mul, Max]


def _paren(e: SizeExpr) -> str:
    if isinstance(e, (Add, Sub)) or (isinstance(e, Num) and e.value < 0):
        return f"({e})"
    return str(e)


ZERO = Num(0)


def num(n: int) -> Num:
    return Num(n)


def add(a: SizeExpr, b: SizeExpr) -> SizeExpr:
    if a == NEG_INF or b == NEG_INF:
        return NEG_INF
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if b == ZERO:
        return a
    if a == ZERO:
        return b
    return Add(a, b)


def sub(a: SizeExpr, b: SizeExpr) -> SizeExpr:
    if a == NEG_INF:
        return NEG_INF
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if b == ZERO:
        return a
    return Sub(a, b)


def mul(a: SizeExpr, b: SizeExpr) -> SizeExpr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if a == ZERO or b == ZERO:
        return ZERO
    if a == Num(1):
        return b
    if b == Num(1):
        return a
    return Mul(a, b)


def smax(args) -> SizeExpr:
    """max with flattening, constant folding and -inf absorption."""
    flat: list[SizeExpr] = []
    for a in args:
        if isinstance(a, Max):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        raise ValueError("max of no arguments")
    consts = [a.value for a in flat if isinstance(a, Num)]
    rest: list[SizeExpr] = []
    for a in flat:
        if isinstance(a, (Num, NegInf)) or a in rest:
            continue
        rest.append(a)
    if consts:
        folded: list[SizeExpr] = [Num(max(consts))]
    elif not rest:
        return NEG_INF
    else:
        folded = []
    out = rest + folded
    if len(out) == 1:
        return out[0]
    return Max(tuple(out))


def ssum(args) -> SizeExpr:
    total: SizeExpr = ZERO
    for a in args:
        total = add(total, a)
    return total


def size_vars(e: SizeExpr) -> Iterator[SizeVar]:
    if isinstance(e, SizeVar):
        yield e
    elif isinstance(e, (Add, Sub, Mul)):
        yield from size_vars(e.left)
        yield from size_vars(e.right)
    elif isinstance(e, Max):
        for a in e.args:
            yield from size_vars(a)


def has_max(e: SizeExpr) -> bool:
    if isinstance(e, Max):
        return True
    if isinstance(e, (Add, Sub, Mul)):
        return has_max(e.left) or has_max(e.right)
    return False


def has_neg_inf(e: SizeExpr) -> bool:
    if isinstance(e, NegInf):
        return True
    if isinstance(e, (Add, Sub, Mul)):
        return has_neg_inf(e.left) or has_neg_inf(e.right)
    if isinstance(e, Max):
        return any(has_neg_inf(a) for a in e.args)
    return False


def is_linear(e: SizeExpr) -> bool:
    """No product of two non-constant subexpressions."""
    if isinstance(e, Mul):
        if not (_is_const(e.left) or _is_const(e.right)):
            return False
        return is_linear(e.left) and is_linear(e.right)
    if isinstance(e, (Add, Sub)):
        return is_linear(e.left) and is_linear(e.right)
    if isinstance(e, Max):
        return all(is_linear(a) for a in e.args)
    return True


def _is_const(e: SizeExpr) -> bool:
    return isinstance(e, Num) or (
        isinstance(e, (Add, Sub, Mul)) and _is_const(e.left) and _is_const(e.right)
    )


def map_vars(e: SizeExpr, f: Callable[[SizeVar], SizeExpr]) -> SizeExpr:
    """Replace each size variable through ``f``, re-folding on the way up."""
    if isinstance(e, SizeVar):
        return f(e)
    if isinstance(e, Add):
        return add(map_vars(e.left, f), map_vars(e.right, f))
    if isinstance(e, Sub):
        return sub(map_vars(e.left, f), map_vars(e.right, f))
    if isinstance(e, Mul):
        return mul(map_vars(e.left, f), map_vars(e.right, f))
    if isinstance(e, Max):
        return smax(map_vars(a, f) for a in e.args)
    return e


def replace_neg_inf(e: SizeExpr, const: int) -> SizeExpr:
    if isinstance(e, NegInf):
        return Num(const)
    if isinstance(e, Add):
        return add(replace_neg_inf(e.left, const), replace_neg_inf(e.right, const))
    if isinstance(e, Sub):
        return sub(replace_neg_inf(e.left, const), replace_neg_inf(e.right, const))
    if isinstance(e, Mul):
        return mul(replace_neg_inf(e.left, const), replace_neg_inf(e.right, const))
    if isinstance(e, Max):
        return smax(replace_neg_inf(a, const) for a in e.args)
    return e


def size_to_json(e: SizeExpr):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, NegInf):
        return "-inf"
    if isinstance(e, SizeVar):
        return e.name
    if isinstance(e, Add):
        return ["+", size_to_json(e.left), size_to_json(e.right)]
    if isinstance(e, Sub):
        return ["-", size_to_json(e.left), size_to_json(e.right)]
    if isinstance(e, Mul):
        return ["*", size_to_json(e.left), size_to_json(e.right)]
    return ["max"] + [size_to_json(a) for a in e.args]


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------

RELATIONS = ("=", ">=", ">")


@dataclass(frozen=True)
class Constraint:
    op: str
    lhs: SizeExpr
    rhs: SizeExpr

    def __post_init__(self):
        if self.op not in RELATIONS:
            raise ValueError(f"unknown relation {self.op!r}")

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"

    def vars(self) -> Iterator[SizeVar]:
        yield from size_vars(self.lhs)
        yield from size_vars(self.rhs)

    def map(self, f: Callable[[SizeExpr], SizeExpr]) -> "Constraint":
        return Constraint(self.op, f(self.lhs), f(self.rhs))

    def rename(self, f: Callable[[SizeVar], SizeExpr]) -> "Constraint":
        return self.map(lambda e: map_vars(e, f))

    def to_json(self) -> list:
        return [self.op, size_to_json(self.lhs), size_to_json(self.rhs)]


Conj = tuple[Constraint, ...]
TOP: Conj = ()
BOTTOM = Constraint(">", ZERO, ZERO)


def eq(a: SizeExpr, b: SizeExpr) -> Constraint:
    return Constraint("=", a, b)


def ge(a: SizeExpr, b: SizeExpr) -> Constraint:
    return Constraint(">=", a, b)


def format_conj(c: Conj) -> str:
    return " /\\ ".join(map(str, c)) if c else "true"


def is_data_key(key: Key) -> bool:
    t = key_type(key)
    return isinstance(t, DataType) or isinstance(key, TermSizeKey)
