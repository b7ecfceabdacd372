"""Specialization of polymorphic programs into monomorphic ones."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import PolymorphicRecursion, TypeCheckError
from .syntax import (
    And,
    Assign,
    Call,
    Ctor,
    CtorDecl,
    DataDecl,
    DataType,
    Guard,
    IntType,
    Match,
    NonMatch,
    Pattern,
    Procedure,
    Program,
    Rule,
    Term,
    Type,
    TypeVar,
    substitute_type,
)
from .typecheck import TypedProgram, typecheck

SEP = "$"
DEPTH_CAP = 16


@dataclass(frozen=True, order=True)
class InstantiationKey:
    kind: str  # "data" or "proc"
    name: str
    types: tuple[Type, ...]

    def __str__(self) -> str:
        return f"{self.name}<{', '.join(map(str, self.types))}>"


# ---------------------------------------------------------------------------
# Names
# ---------------------------------------------------------------------------


def fresh_type_name(param: str) -> str:
    return f"{param}{SEP}fresh"


def fresh_ctor_name(param: str) -> str:
    return f"{param}{SEP}a"


def mangle_type(t: Type) -> str:
    """Surface name of a ground type: ``List<Int>`` becomes ``List$Int``."""
    if isinstance(t, IntType):
        return "Int"
    if isinstance(t, DataType):
        return SEP.join([t.name] + [mangle_type(a) for a in t.args])
    raise ValueError(f"type {t} is not ground")


def mangle(name: str, types: tuple[Type, ...]) -> str:
    return SEP.join([name] + [mangle_type(t) for t in types])


def type_depth(t: Type) -> int:
    if isinstance(t, DataType) and t.args:
        return 1 + max(type_depth(a) for a in t.args)
    return 0


def _check_hygiene(program: Program) -> None:
    names = [d.name for d in program.datas]
    names += [c.name for d in program.datas for c in d.ctors]
    names += [p.name for p in program.procs]
    names += [v for r in program.rules for v in r.variables()]
    bad = [n for n in names if SEP in n]
    if bad:
        raise TypeCheckError(f"identifier {bad[0]!r} uses the reserved character {SEP!r}")


# ---------------------------------------------------------------------------
# Instantiation discovery
# ---------------------------------------------------------------------------


class _Collector:
    def __init__(self, typed: TypedProgram):
        self.typed = typed
        self.program = typed.program
        self.keys: set[InstantiationKey] = set()
        self.todo: list[InstantiationKey] = []

    def add(self, key: InstantiationKey) -> None:
        if key in self.keys:
            return
        depth = max((type_depth(t) for t in key.types), default=0)
        if depth >= DEPTH_CAP:
            raise PolymorphicRecursion(f"instantiation {key} exceeds nesting depth {DEPTH_CAP}")
        self.keys.add(key)
        self.todo.append(key)

    def use_type(self, t: Type) -> None:
        """Record the data instantiations needed by the ground type ``t``."""
        if isinstance(t, DataType):
            if t.args:
                self.add(InstantiationKey("data", t.name, t.args))
            for a in t.args:
                self.use_type(a)

    def visit_rule(self, r: Rule, subst: dict[str, Type]) -> None:
        for t in self.typed.types(r.index).values():
            self.use_type(substitute_type(t, subst))
        for pos, b in enumerate(r.body):
            if isinstance(b, Call):
                inst = self.typed.call_instances.get((r.index, pos), ())
                if inst:
                    self.add(InstantiationKey("proc", b.proc, tuple(substitute_type(t, subst) for t in inst)))

    def visit(self, key: InstantiationKey) -> None:
        if key.kind == "data":
            d = self.program.data(key.name)
            subst = dict(zip(d.params, key.types))
            for c in d.ctors:
                for a in c.args:
                    self.use_type(substitute_type(a, subst))
        else:
            p = self.program.proc(key.name)
            subst = dict(zip(p.type_params(), key.types))
            for r in p.rules:
                self.visit_rule(r, subst)

    def drain(self) -> None:
        while self.todo:
            self.visit(self.todo.pop())

    def run(self) -> set[InstantiationKey]:
        p = self.program
        for d in p.datas:
            if not d.params:
                for c in d.ctors:
                    for a in c.args:
                        self.use_type(a)
        for proc in p.procs:
            if not proc.type_params():
                for t in proc.in_types + proc.out_types:
                    self.use_type(t)
                for r in proc.rules:
                    self.visit_rule(r, {})
        self.drain()
        # fresh-type closure
        for proc in p.procs:
            params = proc.type_params()
            if params:
                self.add(InstantiationKey("proc", proc.name, tuple(DataType(fresh_type_name(a)) for a in params)))
        self.drain()
        for d in p.datas:
            if d.params and not any(k.kind == "data" and k.name == d.name for k in self.keys):
                self.add(InstantiationKey("data", d.name, tuple(DataType(fresh_type_name(a)) for a in d.params)))
        self.drain()
        return self.keys


def collect_instantiations(program) -> set[InstantiationKey]:
    """Every generic (type or procedure) instantiation the program needs."""
    typed = program if isinstance(program, TypedProgram) else typecheck(program)
    _check_hygiene(typed.program)
    return _Collector(typed).run()


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------


class _Translator:
    def __init__(self, typed: TypedProgram, keys: set[InstantiationKey]):
        self.typed = typed
        self.program = typed.program
        self.keys = keys

    def ty(self, t: Type) -> Type:
        if isinstance(t, TypeVar):
            raise ValueError(f"type variable {t} left after substitution")
        if isinstance(t, DataType) and t.args:
            return DataType(mangle_type(t))
        return t

    def ctor_name(self, name: str, t: Type) -> str:
        return mangle(name, t.args) if isinstance(t, DataType) else name

    def term(self, t: Term, expected: Type) -> Term:
        if isinstance(t, Ctor):
            d, c = self.program.ctor(t.name)
            subst = dict(zip(d.params, expected.args))
            args = tuple(self.term(a, substitute_type(at, subst)) for a, at in zip(t.args, c.args))
            return replace(t, name=self.ctor_name(t.name, expected), args=args)
        return t

    def guard(self, g: Guard, types: dict[str, Type]) -> Guard:
        if isinstance(g, And):
            return replace(g, left=self.guard(g.left, types), right=self.guard(g.right, types))
        if isinstance(g, (Match, NonMatch)):
            pattern = Pattern(self.ctor_name(g.pattern.ctor, types[g.var]), g.pattern.vars)
            return replace(g, pattern=pattern)
        return g

    def rule(self, r: Rule, subst: dict[str, Type], name: str) -> Rule:
        types = {x: substitute_type(t, subst) for x, t in self.typed.types(r.index).items()}
        body = []
        for pos, b in enumerate(r.body):
            if isinstance(b, Assign):
                b = replace(b, term=self.term(b.term, types[b.var]))
            elif isinstance(b, Call):
                inst = self.typed.call_instances.get((r.index, pos), ())
                if inst:
                    b = replace(b, proc=mangle(b.proc, tuple(substitute_type(t, subst) for t in inst)))
            body.append(b)
        return replace(r, proc=name, guard=self.guard(r.guard, types), body=tuple(body), index=0)

    def proc(self, p: Procedure, types: tuple[Type, ...]) -> Procedure:
        subst = dict(zip(p.type_params(), types))
        name = mangle(p.name, types)
        return replace(
            p,
            name=name,
            in_types=tuple(self.ty(substitute_type(t, subst)) for t in p.in_types),
            out_types=tuple(self.ty(substitute_type(t, subst)) for t in p.out_types),
            rules=tuple(self.rule(r, subst, name) for r in p.rules),
        )

    def data(self, d: DataDecl, types: tuple[Type, ...]) -> DataDecl:
        subst = dict(zip(d.params, types))
        return replace(
            d,
            name=mangle(d.name, types),
            params=(),
            ctors=tuple(
                CtorDecl(mangle(c.name, types), tuple(self.ty(substitute_type(a, subst)) for a in c.args))
                for c in d.ctors
            ),
        )


def _fresh_params(keys: set[InstantiationKey]) -> list[str]:
    out: dict[str, None] = {}

    def walk(t: Type) -> None:
        if isinstance(t, DataType):
            if t.name.endswith(SEP + "fresh") and not t.args:
                out.setdefault(t.name[: -len(SEP + "fresh")])
            for a in t.args:
                walk(a)

    for k in sorted(keys, key=str):
        for t in k.types:
            walk(t)
    return list(out)


def monomorphize(program) -> Program:
    """Specialize every generic type and procedure at each needed instantiation."""
    typed = program if isinstance(program, TypedProgram) else typecheck(program)
    p = typed.program
    _check_hygiene(p)
    if not p.is_polymorphic():
        return p
    keys = _Collector(typed).run()
    tr = _Translator(typed, keys)

    def instances(kind: str, name: str) -> list[tuple[Type, ...]]:
        ks = [k for k in keys if k.kind == kind and k.name == name]
        return [k.types for k in sorted(ks, key=lambda k: mangle(k.name, k.types))]

    datas = [DataDecl(fresh_type_name(a), (), (CtorDecl(fresh_ctor_name(a)),)) for a in _fresh_params(keys)]
    for d in p.datas:
        if d.params:
            datas.extend(tr.data(d, ts) for ts in instances("data", d.name))
        else:
            datas.append(replace(d, ctors=tuple(CtorDecl(c.name, tuple(tr.ty(a) for a in c.args)) for c in d.ctors)))
    procs = []
    for proc in p.procs:
        if proc.type_params():
            procs.extend(tr.proc(proc, ts) for ts in instances("proc", proc.name))
        else:
            procs.append(tr.proc(proc, ()))
    out = Program.build(datas, procs)
    typecheck(out)
    return out


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


def translate_value(v, t: Type, program: Program):
    """Rename the constructors of ``v`` (of ground type ``t``) to their specialized names."""
    if isinstance(v, int):
        return v
    d, c = program.ctor(v.name)
    subst = dict(zip(d.params, t.args)) if isinstance(t, DataType) else {}
    args = tuple(translate_value(a, substitute_type(at, subst), program) for a, at in zip(v.args, c.args))
    return Ctor(mangle(v.name, t.args) if isinstance(t, DataType) else v.name, args)


def untranslate_value(v):
    """Strip specialization suffixes from constructor names."""
    if isinstance(v, int):
        return v
    return Ctor(v.name.split(SEP, 1)[0], tuple(untranslate_value(a) for a in v.args))
