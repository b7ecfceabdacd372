"""Static checks: well-formed declarations, SSA discipline and typing.

Polymorphic declarations are supported so that the monomorphizer can read
off call-site instantiations; type variables of a procedure are rigid inside
its own rules, and constructor applications are typed by unification.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import (
    ArityMismatch,
    DuplicateConstructor,
    DuplicateDefinition,
    IndirectRecursion,
    SSAViolation,
    TypeMismatch,
    UnboundVariable,
    UnknownProcedure,
    UnknownType,
)
from .syntax import (
    INT,
    Assign,
    BinOp,
    Call,
    Compare,
    Ctor,
    DataType,
    IntType,
    Match,
    NonMatch,
    Program,
    Rule,
    Term,
    Tick,
    Type,
    TypeVar,
    Var,
    guard_atoms,
    substitute_type,
)


@dataclass(frozen=True)
class _Meta:
    """Unification variable (never escapes this module)."""

    id: int


class _Unifier:
    def __init__(self) -> None:
        self.subst: dict[int, object] = {}
        self._ids = itertools.count()

    def fresh(self) -> _Meta:
        return _Meta(next(self._ids))

    def walk(self, t):
        while isinstance(t, _Meta) and t.id in self.subst:
            t = self.subst[t.id]
        return t

    def resolve(self, t):
        t = self.walk(t)
        if isinstance(t, DataType) and t.args:
            return DataType(t.name, tuple(self.resolve(a) for a in t.args))
        return t

    def occurs(self, m: _Meta, t) -> bool:
        t = self.walk(t)
        if t == m:
            return True
        if isinstance(t, DataType):
            return any(self.occurs(m, a) for a in t.args)
        return False

    def unify(self, a, b) -> bool:
        a, b = self.walk(a), self.walk(b)
        if a == b:
            return True
        if isinstance(a, _Meta):
            if self.occurs(a, b):
                return False
            self.subst[a.id] = b
            return True
        if isinstance(b, _Meta):
            return self.unify(b, a)
        if isinstance(a, DataType) and isinstance(b, DataType):
            if a.name != b.name or len(a.args) != len(b.args):
                return False
            return all(self.unify(x, y) for x, y in zip(a.args, b.args))
        return False


def _has_meta(t) -> bool:
    if isinstance(t, _Meta):
        return True
    if isinstance(t, DataType):
        return any(_has_meta(a) for a in t.args)
    return False


@dataclass
class TypedProgram:
    """A program together with per-rule variable types."""

    program: Program
    var_types: dict[int, dict[str, Type]]
    call_instances: dict[tuple[int, int], tuple[Type, ...]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def types(self, i: int) -> dict[str, Type]:
        return self.var_types[i]

    def var_type(self, i: int, name: str) -> Type:
        try:
            return self.var_types[i][name]
        except KeyError:
            raise UnboundVariable(f"variable {name!r} has no type", rule=i) from None

    def type_of(self, i: int, term: Term) -> Type:
        """Type of ``term`` in the context of rule ``i``."""
        u = _Unifier()
        env = self.var_types[i]

        def var_type(name: str, span):
            if name not in env:
                raise UnboundVariable(f"variable {name!r} has no type", span, rule=i)
            return env[name]

        t = _infer_term(self.program, u, term, var_type, i)
        t = u.resolve(t)
        if _has_meta(t):
            raise TypeMismatch("ambiguous constructor type", rule=i)
        return t


def _check_type(program: Program, t: Type, params: set[str] | None, where: str) -> None:
    if isinstance(t, IntType):
        return
    if isinstance(t, TypeVar):
        if params is not None and t.name not in params:
            raise UnknownType(f"unbound type variable {t.name!r} in {where}")
        return
    if not program.has_data(t.name):
        raise UnknownType(f"unknown type {t.name!r} in {where}")
    d = program.data(t.name)
    if len(d.params) != len(t.args):
        raise ArityMismatch(
            f"type {t.name!r} expects {len(d.params)} argument(s), got {len(t.args)} in {where}"
        )
    for a in t.args:
        _check_type(program, a, params, where)


def _data_refs(t: Type) -> set[str]:
    if isinstance(t, DataType):
        out = {t.name}
        for a in t.args:
            out |= _data_refs(a)
        return out
    return set()


def _check_indirect_recursion(program: Program) -> None:
    graph = {
        d.name: set().union(*(_data_refs(a) for c in d.ctors for a in c.args))
        for d in program.datas
    }

    def reach(src: str) -> set[str]:
        seen: set[str] = set()
        stack = list(graph.get(src, ()))
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(graph.get(n, ()))
        return seen

    reach_of = {n: reach(n) for n in graph}
    for n in graph:
        for m in reach_of[n]:
            if m != n and n in reach_of.get(m, ()):
                raise IndirectRecursion(
                    f"types {n!r} and {m!r} are mutually recursive; "
                    "only direct recursion is supported",
                    program.data(n).span,
                )


def _instantiate_ctor(program: Program, u: _Unifier, name: str, span, rule: int):
    if not program.has_ctor(name):
        raise UnknownType(f"unknown constructor {name!r}", span, rule=rule)
    d, c = program.ctor(name)
    subst = {p: u.fresh() for p in d.params}
    result = DataType(d.name, tuple(subst[p] for p in d.params))
    args = tuple(substitute_type(a, subst) for a in c.args)
    return result, args


def _infer_term(program: Program, u: _Unifier, t: Term, var_type, rule: int):
    if isinstance(t, bool):
        raise TypeMismatch("boolean is not a term", rule=rule)
    if isinstance(t, int):
        return INT
    if isinstance(t, Var):
        return var_type(t.name, t.span)
    if isinstance(t, BinOp):
        for side in (t.left, t.right):
            st = _infer_term(program, u, side, var_type, rule)
            if not u.unify(st, INT):
                raise TypeMismatch(
                    f"arithmetic operand has type {u.resolve(st)}, expected Int", t.span, rule=rule
                )
        return INT
    if isinstance(t, Ctor):
        result, arg_types = _instantiate_ctor(program, u, t.name, t.span, rule)
        if len(arg_types) != len(t.args):
            raise ArityMismatch(
                f"constructor {t.name!r} expects {len(arg_types)} argument(s), got {len(t.args)}",
                t.span,
                rule=rule,
            )
        for a, expected in zip(t.args, arg_types):
            at = _infer_term(program, u, a, var_type, rule)
            if not u.unify(at, expected):
                raise TypeMismatch(
                    f"argument of {t.name!r} has type {u.resolve(at)}, expected {u.resolve(expected)}",
                    t.span,
                    rule=rule,
                )
        return result
    raise TypeMismatch(f"not a term: {t!r}", rule=rule)


class _RuleChecker:
    def __init__(self, program: Program, rule: Rule, typed: TypedProgram):
        self.program = program
        self.rule = rule
        self.i = rule.index
        self.typed = typed
        self.u = _Unifier()
        self.types: dict[str, object] = {}
        self.bound: set[str] = set()
        self.placeholders: set[str] = set()

    def err(self, cls, msg, span=None):
        return cls(msg, span or self.rule.span, rule=self.i)

    def read(self, name: str, span):
        if name not in self.bound:
            raise self.err(UnboundVariable, f"variable {name!r} is used before it is bound", span)
        return self.types[name]

    def term(self, t: Term):
        return _infer_term(self.program, self.u, t, self.read, self.i)

    def define(self, name: str, ty, span) -> None:
        """Bind a variable for the first time (assignment or call output)."""
        r = self.rule
        if name in r.ins:
            raise self.err(SSAViolation, f"input parameter {name!r} is assigned", span)
        if name in self.bound or name in self.placeholders:
            raise self.err(SSAViolation, f"variable {name!r} is assigned more than once", span)
        if name in self.types:
            if not self.u.unify(self.types[name], ty):
                raise self.err(
                    TypeMismatch,
                    f"{name!r} has type {self.u.resolve(self.types[name])}, "
                    f"assigned a value of type {self.u.resolve(ty)}",
                    span,
                )
        else:
            self.types[name] = ty
        self.bound.add(name)

    def check(self) -> None:
        r, program = self.rule, self.program
        proc = program.proc(r.proc)
        if len(r.ins) != len(proc.in_types) or len(r.outs) != len(proc.out_types):
            raise self.err(ArityMismatch, f"rule head arity does not match declaration of {r.proc!r}")
        params = r.ins + r.outs
        if len(set(params)) != len(params):
            raise self.err(SSAViolation, "rule parameters must be pairwise distinct")
        for v, t in zip(r.ins, proc.in_types):
            self.types[v] = t
            self.bound.add(v)
        for v, t in zip(r.outs, proc.out_types):
            self.types[v] = t

        for a in guard_atoms(r.guard):
            if isinstance(a, Compare):
                for side in (a.left, a.right):
                    st = self.term(side)
                    if not self.u.unify(st, INT):
                        raise self.err(TypeMismatch, "comparison between non-integers", a.span)
            elif isinstance(a, (Match, NonMatch)):
                xt = self.read(a.var, a.span)
                pat = a.pattern
                result, arg_types = _instantiate_ctor(program, self.u, pat.ctor, a.span, self.i)
                if len(arg_types) != len(pat.vars):
                    raise self.err(
                        ArityMismatch,
                        f"constructor {pat.ctor!r} expects {len(arg_types)} argument(s), "
                        f"pattern has {len(pat.vars)}",
                        a.span,
                    )
                if not self.u.unify(xt, result):
                    raise self.err(
                        TypeMismatch,
                        f"{a.var!r} has type {self.u.resolve(xt)}, pattern has type {self.u.resolve(result)}",
                        a.span,
                    )
                if len(set(pat.vars)) != len(pat.vars) or a.var in pat.vars:
                    raise self.err(SSAViolation, "pattern variables must be distinct and fresh", a.span)
                for v, t in zip(pat.vars, arg_types):
                    unbound_output = (
                        isinstance(a, Match) and v in r.outs and v not in self.bound
                    )
                    if unbound_output:
                        if not self.u.unify(self.types[v], t):
                            raise self.err(
                                TypeMismatch, f"output {v!r} does not fit the pattern", a.span
                            )
                        self.bound.add(v)
                        continue
                    if v in self.types or v in self.placeholders:
                        raise self.err(SSAViolation, f"pattern variable {v!r} is not fresh", a.span)
                    self.types[v] = t
                    if isinstance(a, Match):
                        self.bound.add(v)
                    else:
                        self.placeholders.add(v)

        for pos, b in enumerate(r.body):
            if isinstance(b, Assign):
                ty = self.term(b.term)
                self.define(b.var, ty, b.span)
            elif isinstance(b, Call):
                if not program.has_proc(b.proc):
                    raise self.err(UnknownProcedure, f"unknown procedure {b.proc!r}", b.span)
                callee = program.proc(b.proc)
                if len(b.ins) != len(callee.in_types) or len(b.outs) != len(callee.out_types):
                    raise self.err(
                        ArityMismatch,
                        f"call to {b.proc!r} expects {len(callee.in_types)} input(s) and "
                        f"{len(callee.out_types)} output(s)",
                        b.span,
                    )
                tparams = callee.type_params()
                inst = {p: self.u.fresh() for p in tparams}
                for v, t in zip(b.ins, callee.in_types):
                    vt = self.read(v, b.span)
                    expected = substitute_type(t, inst)
                    if not self.u.unify(vt, expected):
                        raise self.err(
                            TypeMismatch,
                            f"argument {v!r} has type {self.u.resolve(vt)}, "
                            f"{b.proc!r} expects {self.u.resolve(expected)}",
                            b.span,
                        )
                if len(set(b.outs)) != len(b.outs):
                    raise self.err(SSAViolation, "call outputs must be distinct", b.span)
                for v, t in zip(b.outs, callee.out_types):
                    self.define(v, substitute_type(t, inst), b.span)
                self._pending_calls.append((pos, tuple(inst[p] for p in tparams)))
            elif isinstance(b, Tick):
                if b.amount < 0:
                    raise self.err(TypeMismatch, "tick amount must be non-negative", b.span)

        for y in r.outs:
            if y not in self.bound:
                self.typed.warnings.append(
                    f"rule {self.i}: output {y!r} is never assigned (the rule cannot return)"
                )

    _pending_calls: list

    def run(self) -> None:
        self._pending_calls = []
        self.check()
        resolved: dict[str, Type] = {}
        for v, t in self.types.items():
            rt = self.u.resolve(t)
            if _has_meta(rt):
                raise self.err(TypeMismatch, f"cannot determine the type of {v!r}")
            resolved[v] = rt
        self.typed.var_types[self.i] = resolved
        for pos, inst in self._pending_calls:
            rts = tuple(self.u.resolve(t) for t in inst)
            if any(_has_meta(t) for t in rts):
                raise self.err(TypeMismatch, "cannot determine the instantiation of a call")
            self.typed.call_instances[(self.i, pos)] = rts


def typecheck(program) -> TypedProgram:
    """Check ``program`` and return its typing. Raises a TypeCheckError subclass."""
    if isinstance(program, TypedProgram):
        program = program.program
    names: set[str] = set()
    ctor_names: set[str] = set()
    for d in program.datas:
        if d.name in names or d.name == "Int":
            raise DuplicateDefinition(f"type {d.name!r} declared more than once", d.span)
        names.add(d.name)
        if len(set(d.params)) != len(d.params):
            raise DuplicateDefinition(f"repeated type parameter in {d.name!r}", d.span)
        for c in d.ctors:
            if c.name in ctor_names:
                raise DuplicateConstructor(f"constructor {c.name!r} declared more than once", d.span)
            ctor_names.add(c.name)
    for d in program.datas:
        for c in d.ctors:
            for a in c.args:
                _check_type(program, a, set(d.params), f"constructor {c.name!r}")
    _check_indirect_recursion(program)

    proc_names: set[str] = set()
    for p in program.procs:
        if p.name in proc_names:
            raise DuplicateDefinition(f"procedure {p.name!r} declared more than once", p.span)
        proc_names.add(p.name)
        for t in p.in_types + p.out_types:
            _check_type(program, t, None, f"declaration of {p.name!r}")
        for r in p.rules:
            if r.proc != p.name:
                raise TypeMismatch(f"rule for {r.proc!r} inside procedure {p.name!r}", r.span)

    expected = 1
    for r in program.rules:
        if r.index != expected:
            raise TypeMismatch(f"rule indices must be 1..n in order; found {r.index}", r.span)
        expected += 1

    typed = TypedProgram(program, {})
    for r in program.rules:
        _RuleChecker(program, r, typed).run()
    return typed


def require_monomorphic(program: Program) -> None:
    if program.is_polymorphic():
        raise TypeMismatch("this operation needs a monomorphic program; monomorphize it first")
