"""Constituent types, closed and symbolic typed-norms, annotated variants."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import IntegerInTerm, NegativeIntUnderSum, UnknownType
from .sizes import (
    NEG_INF,
    TERM_SIZE,
    ZERO,
    Key,
    Num,
    Path,
    SizeExpr,
    SizeVar,
    TermSizeKey,
    add,
    mul,
    num,
    smax,
    ssum,
    sub,
)
from .syntax import INT, BinOp, Ctor, DataType, IntType, Program, Term, Type, Var

NEG_INFINITY = float("-inf")


class NormKind(enum.Enum):
    TERM_SIZE = "termsize"
    SUM = "sum"
    MAX = "max"


def _cache(program: Program) -> dict:
    return program.__dict__.setdefault("_norm_cache", {})


def _data_decl(program: Program, t: Type):
    if not isinstance(t, DataType) or not program.has_data(t.name):
        raise UnknownType(f"unknown type {t}")
    if t.args:
        raise UnknownType(f"norms need monomorphic types, got {t}")
    return program.data(t.name)


def _children(program: Program, t: Type) -> list[Type]:
    if isinstance(t, IntType):
        return []
    d = _data_decl(program, t)
    return [a for c in d.ctors for a in c.args]


# ---------------------------------------------------------------------------
# Constituent types
# ---------------------------------------------------------------------------


def deptypes(t: Type, program: Program) -> frozenset[Type]:
    """All types reachable from ``t`` through constructor arguments, plus ``t``."""
    cache = _cache(program)
    k = ("deptypes", t)
    if k not in cache:
        seen = {t}
        stack = [t]
        while stack:
            for c in _children(program, stack.pop()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        cache[k] = frozenset(seen)
    return cache[k]


def is_recursive(t: Type, program: Program) -> bool:
    if isinstance(t, IntType):
        return False
    return any(t in deptypes(c, program) for c in _children(program, t))


def type_depths(t: Type, program: Program) -> dict[Type, int]:
    """Shortest constructor-argument distance from ``t`` to each constituent."""
    cache = _cache(program)
    k = ("depths", t)
    if k not in cache:
        depth = {t: 0}
        queue = deque([t])
        while queue:
            cur = queue.popleft()
            for c in _children(program, cur):
                if c not in depth:
                    depth[c] = depth[cur] + 1
                    queue.append(c)
        cache[k] = depth
    return cache[k]


def canonical_types(root: Type, types: Iterable[Type], program: Program) -> list[Type]:
    depth = type_depths(root, program)
    return sorted(types, key=lambda t: (-depth.get(t, 0), str(t)))


def value_type(v, program: Program) -> Type:
    if isinstance(v, int):
        return INT
    return program.ctor_type(v.name)


# ---------------------------------------------------------------------------
# Closed norms
# ---------------------------------------------------------------------------


def term_size(t: Term) -> int:
    """Number of constructors in a constructor-only closed term."""
    if isinstance(t, int):
        raise IntegerInTerm("term-size is undefined on integers")
    if not isinstance(t, Ctor):
        raise ValueError(f"term-size needs a closed term, got {t!r}")
    return 1 + sum(term_size(a) for a in t.args)


def norm_closed(t, T: Type, kind: NormKind, program: Program):
    """Typed-norm of a closed term; returns an int or ``-inf``."""
    if kind is NormKind.TERM_SIZE:
        return term_size(t)
    if isinstance(t, int):
        if isinstance(T, IntType):
            if kind is NormKind.SUM and t < 0:
                raise NegativeIntUnderSum(f"negative integer {t} under the sum norm")
            return t
        return 0
    if not isinstance(t, Ctor):
        raise ValueError(f"norms need closed terms, got {t!r}")
    children = [norm_closed(a, T, kind, program) for a in t.args]
    if program.ctor_type(t.name) == T:
        return 1 + sum(children)
    if kind is NormKind.SUM:
        return sum(children)
    if children:
        return max(children)
    return NEG_INFINITY if isinstance(T, IntType) else 0


# ---------------------------------------------------------------------------
# Symbolic norms
# ---------------------------------------------------------------------------


def _neutral(T: Type, kind: NormKind) -> SizeExpr:
    return NEG_INF if kind is NormKind.MAX and isinstance(T, IntType) else ZERO


def _arith(op: str, a: SizeExpr, b: SizeExpr) -> SizeExpr:
    return add(a, b) if op == "+" else sub(a, b) if op == "-" else mul(a, b)


def norm_symbolic(
    t: Term, T: Type, kind: NormKind, ctx: Mapping[str, Type], program: Program
) -> SizeExpr:
    """Typed-norm of a possibly open term; variables become size variables."""
    if isinstance(t, Var):
        if T in deptypes(ctx[t.name], program):
            return SizeVar(t.name, T)
        return _neutral(T, kind)
    if isinstance(t, int):
        return num(t) if isinstance(T, IntType) else ZERO
    if isinstance(t, BinOp):
        if not isinstance(T, IntType):
            return ZERO
        left = norm_symbolic(t.left, T, kind, ctx, program)
        right = norm_symbolic(t.right, T, kind, ctx, program)
        return _arith(t.op, left, right)
    if isinstance(t, Ctor):
        children = [norm_symbolic(a, T, kind, ctx, program) for a in t.args]
        if program.ctor_type(t.name) == T:
            return add(num(1), ssum(children))
        if kind is NormKind.SUM:
            return ssum(children)
        if children:
            return smax(children)
        return _neutral(T, kind)
    raise TypeError(f"not a term: {t!r}")


def term_size_symbolic(
    t: Term, key: Key, ctx: Mapping[str, Type], program: Program
) -> SizeExpr:
    """Term-size abstraction: integers inside data count 0, Int variables keep their value."""
    if isinstance(key, TermSizeKey):
        if isinstance(t, Var):
            if isinstance(ctx[t.name], IntType):
                return ZERO
            return SizeVar(t.name, TERM_SIZE)
        if isinstance(t, Ctor):
            return add(num(1), ssum(term_size_symbolic(a, key, ctx, program) for a in t.args))
        return ZERO
    if isinstance(t, Var):
        return SizeVar(t.name, INT) if isinstance(ctx[t.name], IntType) else ZERO
    if isinstance(t, int):
        return num(t)
    if isinstance(t, BinOp):
        left = term_size_symbolic(t.left, key, ctx, program)
        right = term_size_symbolic(t.right, key, ctx, program)
        return _arith(t.op, left, right)
    return ZERO


# ---------------------------------------------------------------------------
# Annotated (context-sensitive) norms
# ---------------------------------------------------------------------------


def annotated_deptypes(t: Type, program: Program) -> frozenset[tuple[Type, Path]]:
    """Pairs (type, constructor-position path) of the unrolled type tree.

    Recursive argument positions fold back onto their own type and do not
    extend the path.
    """
    cache = _cache(program)
    k = ("annotated", t)
    if k in cache:
        return cache[k]
    out: set[tuple[Type, Path]] = {(t, ())}

    def walk(d: Type, path: Path) -> None:
        for c in _data_decl(program, d).ctors:
            for i, u in enumerate(c.args, 1):
                if u == d:
                    continue
                p2 = path + ((c.name, i),)
                out.add((u, p2))
                if isinstance(u, DataType):
                    walk(u, p2)

    if isinstance(t, DataType):
        walk(t, ())
    cache[k] = frozenset(out)
    return cache[k]


def norm_symbolic_annotated(
    t: Term,
    key: tuple[Type, Path],
    kind: NormKind,
    ctx: Mapping[str, Type],
    program: Program,
) -> SizeExpr:
    """Annotated typed-norm: only contributions located at ``key``'s path count."""
    T, target = key
    neutral = _neutral(T, kind)

    def walk(u: Term, here: Path) -> SizeExpr:
        if isinstance(u, Var):
            n = len(here)
            if target[:n] == here:
                rest = (T, target[n:])
                if rest in annotated_deptypes(ctx[u.name], program):
                    return SizeVar(u.name, rest)
            return neutral
        if isinstance(u, int):
            return num(u) if isinstance(T, IntType) and here == target else neutral
        if isinstance(u, BinOp):
            if not (isinstance(T, IntType) and here == target):
                return neutral
            return _arith(u.op, walk(u.left, here), walk(u.right, here))
        if isinstance(u, Ctor):
            d, cdecl = program.ctor(u.name)
            own = DataType(d.name)
            if own == T and here == target:
                rec = [walk(a, here) for a, at in zip(u.args, cdecl.args) if at == own]
                return add(num(1), ssum(rec))
            parts = []
            for i, (a, at) in enumerate(zip(u.args, cdecl.args), 1):
                child_path = here if at == own else here + ((u.name, i),)
                if target[: len(child_path)] != child_path:
                    continue
                parts.append(walk(a, child_path))
            if kind is NormKind.SUM:
                return ssum(parts)
            return smax(parts) if parts else neutral
        raise TypeError(f"not a term: {u!r}")

    return walk(t, ())


def _const_value(e: SizeExpr):
    if isinstance(e, Num):
        return e.value
    if e == NEG_INF:
        return NEG_INFINITY
    raise ValueError(f"not a constant size: {e}")


# ---------------------------------------------------------------------------
# Norm schemes used by the abstraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SizeScheme:
    """Which size variables a variable gets and how terms are measured."""

    kind: NormKind
    annotated: bool = False

    def keys(self, ty: Type, relevant, program: Program) -> list[Key]:
        """Ordered keys for a variable of type ``ty``; ``relevant`` None means all."""
        deps = deptypes(ty, program)
        rel = deps if relevant is None else deps & frozenset(relevant)
        if self.kind is NormKind.TERM_SIZE:
            if isinstance(ty, IntType):
                return [INT] if INT in rel else []
            return [TERM_SIZE] if any(isinstance(t, DataType) for t in rel) else []
        if self.annotated:
            pairs = [p for p in annotated_deptypes(ty, program) if p[0] in rel]
            return sorted(pairs, key=lambda p: (p[1], str(p[0])))
        return canonical_types(ty, rel, program)

    def symbolic(self, t: Term, key: Key, ctx: Mapping[str, Type], program: Program) -> SizeExpr:
        if self.kind is NormKind.TERM_SIZE:
            return term_size_symbolic(t, key, ctx, program)
        if self.annotated:
            return norm_symbolic_annotated(t, key, self.kind, ctx, program)
        return norm_symbolic(t, key, self.kind, ctx, program)

    def closed(self, v, key: Key, program: Program):
        """Size of a runtime value under ``key`` (int or ``-inf``)."""
        if self.kind is NormKind.TERM_SIZE:
            return _const_value(term_size_symbolic(v, key, {}, program))
        if self.annotated:
            if self.kind is NormKind.SUM and isinstance(key[0], IntType):
                _check_nonneg(v)
            return _const_value(norm_symbolic_annotated(v, key, self.kind, {}, program))
        return norm_closed(v, key, self.kind, program)


def _check_nonneg(v) -> None:
    if isinstance(v, int):
        if v < 0:
            raise NegativeIntUnderSum(f"negative integer {v} under the sum norm")
    elif isinstance(v, Ctor):
        for a in v.args:
            _check_nonneg(a)
