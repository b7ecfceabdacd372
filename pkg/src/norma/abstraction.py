"""Size abstraction of programs into constraint rules, max linearization, emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Union

from .errors import SumNormNegativeLiteral, UnlinearizedMax
from .inference import InferenceOptions, InferenceResult, full_deptypes_mapping, infer_relevant_types
from .norms import NormKind, SizeScheme
from .sizes import (
    TOP,
    Add,
    Conj,
    Constraint,
    Max,
    Mul,
    NegInf,
    Num,
    SizeExpr,
    SizeVar,
    Sub,
    add,
    eq,
    format_conj,
    ge,
    has_max,
    has_neg_inf,
    is_data_key,
    is_linear,
    mul,
    replace_neg_inf,
    sub,
)
from .syntax import (
    INT,
    And,
    Assign,
    Call,
    Compare,
    Ctor,
    Guard,
    Match,
    NonMatch,
    Program,
    Statement,
    Tick,
    TrueGuard,
    Var,
)
from .typecheck import TypedProgram, typecheck

NEG_INF_POLICIES = ("min-const", "zero", "keep")
FORMATS = ("text", "native-json", "cofloco-like")


# ---------------------------------------------------------------------------
# Abstract programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbstractCall:
    proc: str
    ins: tuple[SizeVar, ...]
    outs: tuple[SizeVar, ...]

    def __str__(self) -> str:
        return f"{self.proc}(<{', '.join(map(str, self.ins))}>, <{', '.join(map(str, self.outs))}>)"


@dataclass(frozen=True)
class AbstractTick:
    amount: int

    def __str__(self) -> str:
        return f"tick({self.amount})"


AbstractStmt = Union[tuple, AbstractCall, AbstractTick]  # a tuple is a Conj


@dataclass(frozen=True)
class AbstractRule:
    index: int
    proc: str
    ins: tuple[SizeVar, ...]
    outs: tuple[SizeVar, ...]
    guard: Conj
    nonneg: Conj
    body: tuple[AbstractStmt, ...]

    @property
    def full_guard(self) -> Conj:
        return tuple(self.guard) + tuple(self.nonneg)

    @property
    def cost(self) -> int:
        return sum(b.amount for b in self.body if isinstance(b, AbstractTick))

    def constraints(self) -> Iterable[Constraint]:
        yield from self.full_guard
        for b in self.body:
            if isinstance(b, tuple):
                yield from b

    def size_vars(self) -> Iterable[SizeVar]:
        yield from self.ins
        yield from self.outs
        for c in self.constraints():
            yield from c.vars()
        for b in self.body:
            if isinstance(b, AbstractCall):
                yield from b.ins
                yield from b.outs

    def map_constraints(self, f: Callable[[Conj], Conj]) -> "AbstractRule":
        body = tuple(f(b) if isinstance(b, tuple) else b for b in self.body)
        return replace(self, guard=f(self.guard), nonneg=f(self.nonneg), body=body)

    def __str__(self) -> str:
        head = f"{self.index}: {self.proc}(<{', '.join(map(str, self.ins))}>, <{', '.join(map(str, self.outs))}>)"
        guard = format_conj(self.guard)
        if self.nonneg:
            guard = f"{guard} /\\ {format_conj(self.nonneg)}"
        lines = [f"{head} <- {guard}"]
        lines += [f"    {format_conj(b) if isinstance(b, tuple) else b}" for b in self.body]
        return ",\n".join(lines)


@dataclass(frozen=True)
class AbstractProgram:
    rules: tuple[AbstractRule, ...]
    scheme: SizeScheme
    signatures: dict = field(default_factory=dict, compare=False, hash=False)

    def rule(self, i: int) -> AbstractRule:
        if not 1 <= i <= len(self.rules):
            raise IndexError(f"abstract rule {i} out of range")
        return self.rules[i - 1]

    def proc_rules(self, name: str) -> list[AbstractRule]:
        return [r for r in self.rules if r.proc == name]

    def __str__(self) -> str:
        return "\n\n".join(map(str, self.rules))


# ---------------------------------------------------------------------------
# Abstraction of guards, statements and rules
# ---------------------------------------------------------------------------


class Abstractor:
    """Abstracts rules of a typed program under a scheme and relevant types.

    ``nu`` None means every variable keeps all its constituent types.
    """

    def __init__(self, program, scheme: SizeScheme, nu: InferenceResult | None = None):
        self.typed: TypedProgram = program if isinstance(program, TypedProgram) else typecheck(program)
        self.program: Program = self.typed.program
        self.scheme = scheme
        self.nu = nu if nu is not None else full_deptypes_mapping(self.typed)

    # keys -----------------------------------------------------------------

    def keys(self, i: int, x: str) -> list:
        return self.scheme.keys(self.typed.var_type(i, x), self.nu.nu(i, x), self.program)

    def all_keys(self, i: int, x: str) -> list:
        return self.scheme.keys(self.typed.var_type(i, x), None, self.program)

    def int_key(self):
        return (INT, ()) if self.scheme.annotated and self.scheme.kind is not NormKind.TERM_SIZE else INT

    def signature(self, proc: str) -> tuple[list[list], list[list]]:
        """Per formal position, the keys used for that parameter of ``proc``."""
        p = self.program.proc(proc)
        if p.rules:
            r = p.rules[0]
            return (
                [self.keys(r.index, x) for x in r.ins],
                [self.keys(r.index, y) for y in r.outs],
            )
        scheme = self.scheme
        return (
            [scheme.keys(t, None, self.program) for t in p.in_types],
            [scheme.keys(t, None, self.program) for t in p.out_types],
        )

    def ctx(self, i: int):
        return self.typed.types(i)

    def measure(self, i: int, t, key) -> SizeExpr:
        return self.scheme.symbolic(t, key, self.ctx(i), self.program)

    # guards and statements -------------------------------------------------

    def guard(self, i: int, g: Guard) -> Conj:
        if isinstance(g, TrueGuard):
            return TOP
        if isinstance(g, And):
            return self.guard(i, g.left) + self.guard(i, g.right)
        if isinstance(g, Compare):
            k = self.int_key()
            lhs, rhs = self.measure(i, g.left, k), self.measure(i, g.right, k)
            if not (is_linear(lhs) and is_linear(rhs)):
                return TOP
            return (Constraint(g.op, lhs, rhs),)
        if isinstance(g, Match):
            term = Ctor(g.pattern.ctor, tuple(Var(v) for v in g.pattern.vars))
            return self._equalities(i, g.var, term)
        if isinstance(g, NonMatch):
            return TOP
        raise TypeError(f"not a guard: {g!r}")

    def _equalities(self, i: int, x: str, term) -> Conj:
        out = []
        for key in self.keys(i, x):
            rhs = self.measure(i, term, key)
            if is_linear(rhs):
                out.append(eq(SizeVar(x, key), rhs))
        return tuple(out)

    def stmt(self, i: int, b: Statement) -> AbstractStmt:
        if isinstance(b, Assign):
            return self._equalities(i, b.var, b.term)
        if isinstance(b, Tick):
            return AbstractTick(b.amount)
        if isinstance(b, Call):
            ins_keys, outs_keys = self.signature(b.proc)
            ins = tuple(SizeVar(x, k) for x, ks in zip(b.ins, ins_keys) for k in ks)
            outs = tuple(SizeVar(y, k) for y, ks in zip(b.outs, outs_keys) for k in ks)
            return AbstractCall(b.proc, ins, outs)
        raise TypeError(f"not a statement: {b!r}")

    def nonneg(self, i: int, variables: Iterable[str]) -> Conj:
        return tuple(
            ge(SizeVar(x, k), Num(0))
            for x in variables
            for k in self.keys(i, x)
            if is_data_key(k)
        )

    def rule(self, i: int) -> AbstractRule:
        r = self.program.rule(i)
        ins_keys, outs_keys = self.signature(r.proc)
        ins = tuple(SizeVar(x, k) for x, ks in zip(r.ins, ins_keys) for k in ks)
        outs = tuple(SizeVar(y, k) for y, ks in zip(r.outs, outs_keys) for k in ks)
        return AbstractRule(
            index=i,
            proc=r.proc,
            ins=ins,
            outs=outs,
            guard=self.guard(i, r.guard),
            nonneg=self.nonneg(i, r.variables()),
            body=tuple(self.stmt(i, b) for b in r.body),
        )


def abstract_guard(program, i: int, g: Guard, scheme: SizeScheme, nu=None) -> Conj:
    return Abstractor(program, scheme, nu).guard(i, g)


def abstract_stmt(program, i: int, b: Statement, scheme: SizeScheme, nu=None) -> AbstractStmt:
    return Abstractor(program, scheme, nu).stmt(i, b)


def nonneg(program, i: int, variables: Iterable[str], scheme: SizeScheme, nu=None) -> Conj:
    return Abstractor(program, scheme, nu).nonneg(i, variables)


# ---------------------------------------------------------------------------
# Post-processing: -inf policy and max linearization
# ---------------------------------------------------------------------------


def neg_inf_constant(program: Program, policy: str) -> int | None:
    if policy not in NEG_INF_POLICIES:
        raise ValueError(f"unknown -inf policy {policy!r}")
    if policy == "keep":
        return None
    if policy == "zero":
        return 0
    literals = program.int_literals()
    return min(literals) if literals else 0


def apply_neg_inf(c: Conj, const: int | None) -> Conj:
    if const is None:
        return c
    return tuple(
        Constraint(k.op, replace_neg_inf(k.lhs, const), replace_neg_inf(k.rhs, const)) for k in c
    )


def _provably_nonneg(e: SizeExpr, facts: set[str]) -> bool:
    if isinstance(e, Num):
        return e.value >= 0
    if isinstance(e, SizeVar):
        return (e.key is not None and is_data_key(e.key)) or e.name in facts
    if isinstance(e, Add):
        return _provably_nonneg(e.left, facts) and _provably_nonneg(e.right, facts)
    if isinstance(e, Mul):
        return _provably_nonneg(e.left, facts) and _provably_nonneg(e.right, facts)
    if isinstance(e, Max):
        return any(_provably_nonneg(a, facts) for a in e.args)
    return False


def _nonneg_facts(c: Conj) -> set[str]:
    """Names of size variables bounded below by a nonnegative constant in ``c``."""
    out = set()
    for k in c:
        if isinstance(k.lhs, SizeVar) and isinstance(k.rhs, Num) and k.rhs.value >= 0:
            out.add(k.lhs.name)
        elif k.op == "=" and isinstance(k.rhs, SizeVar) and isinstance(k.lhs, Num) and k.lhs.value >= 0:
            out.add(k.rhs.name)
    return out


class _Linearizer:
    def __init__(self, facts: set[str], prefix: str = "Max") -> None:
        self.facts = facts
        self.prefix = prefix
        self.count = 0
        self.extra: list[Constraint] = []

    def expr(self, e: SizeExpr) -> SizeExpr:
        if isinstance(e, Max):
            args = [self.expr(a) for a in e.args]
            self.count += 1
            aux = SizeVar(f"{self.prefix}{self.count}")
            self.extra.extend(ge(aux, a) for a in args)
            if all(_provably_nonneg(a, self.facts) for a in args):
                total = args[0]
                for a in args[1:]:
                    total = add(total, a)
                self.extra.append(ge(total, aux))
            return aux
        if isinstance(e, Add):
            return add(self.expr(e.left), self.expr(e.right))
        if isinstance(e, Sub):
            return sub(self.expr(e.left), self.expr(e.right))
        if isinstance(e, Mul):
            return mul(self.expr(e.left), self.expr(e.right))
        return e

    def conj(self, c: Conj) -> Conj:
        out = []
        for k in c:
            self.extra = []
            new = Constraint(k.op, self.expr(k.lhs), self.expr(k.rhs))
            out.append(new)
            out.extend(self.extra)
        return tuple(out)


def linearize_max(c: Conj, facts: Iterable[Constraint] = ()) -> Conj:
    """Replace each max by an auxiliary bounded below by its arguments.

    The sum of the arguments bounds the auxiliary from above when every
    argument is provably nonnegative (a nonnegative literal, a data size, or
    a variable bounded below by a nonnegative constant in ``c`` or ``facts``).
    """
    c = tuple(c)
    lin = _Linearizer(_nonneg_facts(c + tuple(facts)))
    return lin.conj(c)


def linearize_rule(r: AbstractRule) -> AbstractRule:
    facts = _nonneg_facts(tuple(r.constraints()))
    lin = _Linearizer(facts)
    return r.map_constraints(lin.conj)


# ---------------------------------------------------------------------------
# Whole programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbstractionOptions:
    kind: NormKind = NormKind.MAX
    annotated: bool = False
    inference: bool = True
    inference_options: InferenceOptions = InferenceOptions()
    neg_inf: str = "keep"
    linearize: bool = False

    def __post_init__(self):
        if self.neg_inf not in NEG_INF_POLICIES:
            raise ValueError(f"unknown -inf policy {self.neg_inf!r}")

    @property
    def scheme(self) -> SizeScheme:
        return SizeScheme(self.kind, self.annotated)


def check_sum_applicable(program: Program) -> None:
    negatives = [n for n in program.int_literals() if n < 0]
    if negatives:
        raise SumNormNegativeLiteral(
            f"the sum norm needs non-negative integers; the program contains {negatives[0]}"
        )


def relevant_types(typed: TypedProgram, options: AbstractionOptions) -> InferenceResult:
    if options.inference:
        return infer_relevant_types(typed, options.inference_options)
    return full_deptypes_mapping(typed)


def abstract_program(program, options: AbstractionOptions = AbstractionOptions(), nu=None) -> AbstractProgram:
    typed = program if isinstance(program, TypedProgram) else typecheck(program)
    p = typed.program
    if options.kind is NormKind.SUM:
        check_sum_applicable(p)
    if nu is None:
        nu = relevant_types(typed, options)
    ab = Abstractor(typed, options.scheme, nu)
    rules = tuple(ab.rule(r.index) for r in p.rules)
    const = neg_inf_constant(p, options.neg_inf)
    if const is not None:
        rules = tuple(r.map_constraints(lambda c: apply_neg_inf(c, const)) for r in rules)
    if options.linearize:
        rules = tuple(linearize_rule(r) for r in rules)
    signatures = {proc.name: ab.signature(proc.name) for proc in p.procs}
    return AbstractProgram(rules, options.scheme, signatures)


def abstract_program_annotated(program, options: AbstractionOptions = AbstractionOptions(), nu=None) -> AbstractProgram:
    return abstract_program(program, replace(options, annotated=True), nu)


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

_SANITIZE = (("'", "_p"), ("@", "_at_"), (".", "_"), ("$", "_S_"), ("#", "_h"))


def sanitize(name: str) -> str:
    for a, b in _SANITIZE:
        name = name.replace(a, b)
    return name


def render_expr(e: SizeExpr, name: Callable[[SizeVar], str] = lambda v: v.name) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, NegInf):
        return "-inf"
    if isinstance(e, SizeVar):
        return name(e)
    if isinstance(e, Add):
        right = render_expr(e.right, name)
        if isinstance(e.right, (Add, Sub)) or (isinstance(e.right, Num) and e.right.value < 0):
            right = f"({right})"
        return f"{render_expr(e.left, name)}+{right}"
    if isinstance(e, Sub):
        right = render_expr(e.right, name)
        if isinstance(e.right, (Add, Sub)) or (isinstance(e.right, Num) and e.right.value < 0):
            right = f"({right})"
        return f"{render_expr(e.left, name)}-{right}"
    if isinstance(e, Mul):
        return f"({render_expr(e.left, name)})*({render_expr(e.right, name)})"
    return f"max([{','.join(render_expr(a, name) for a in e.args)}])"


def _cofloco_name(v: SizeVar) -> str:
    return sanitize(v.name)


def _cofloco_constraint(c: Constraint) -> str:
    return f"{render_expr(c.lhs, _cofloco_name)}{c.op}{render_expr(c.rhs, _cofloco_name)}"


def _cofloco_call(proc: str, ins, outs) -> str:
    args = ",".join(_cofloco_name(v) for v in tuple(ins) + tuple(outs))
    return f"{sanitize(proc)}({args})" if args else sanitize(proc)


def emit_cofloco(ap: AbstractProgram) -> str:
    lines = []
    for r in ap.rules:
        constraints = list(r.constraints())
        for c in constraints:
            if has_max(c.lhs) or has_max(c.rhs):
                raise UnlinearizedMax(f"rule {r.index} still contains max; linearize first")
            if has_neg_inf(c.lhs) or has_neg_inf(c.rhs):
                raise ValueError(f"rule {r.index} still contains -inf; choose a constant policy")
        calls = [_cofloco_call(b.proc, b.ins, b.outs) for b in r.body if isinstance(b, AbstractCall)]
        cs = [_cofloco_constraint(c) for c in constraints]
        lines.append(
            f"eq({_cofloco_call(r.proc, r.ins, r.outs)},{r.cost},[{','.join(calls)}],[{','.join(cs)}])."
        )
    return "\n".join(lines) + ("\n" if lines else "")


def _stmt_json(b: AbstractStmt) -> dict:
    if isinstance(b, tuple):
        return {"kind": "cs", "constraints": [c.to_json() for c in b]}
    if isinstance(b, AbstractCall):
        return {"kind": "call", "name": b.proc, "in": [v.name for v in b.ins], "out": [v.name for v in b.outs]}
    return {"kind": "tick", "amount": b.amount}


def to_json(ap: AbstractProgram) -> dict:
    return {
        "rules": [
            {
                "index": r.index,
                "head": {"name": r.proc, "in": [v.name for v in r.ins], "out": [v.name for v in r.outs]},
                "guard": [c.to_json() for c in r.full_guard],
                "body": [_stmt_json(b) for b in r.body],
                "cost": r.cost,
            }
            for r in ap.rules
        ]
    }


def emit_cost_relations(ap: AbstractProgram, fmt: str = "native-json") -> str:
    if fmt == "native-json":
        return json.dumps(to_json(ap), ensure_ascii=False, indent=2) + "\n"
    if fmt == "cofloco-like":
        return emit_cofloco(ap)
    if fmt == "text":
        return str(ap) + ("\n" if ap.rules else "")
    raise ValueError(f"unknown format {fmt!r}")


def rename_rule(r: AbstractRule, f: Callable[[str], str]) -> AbstractRule:
    """Apply ``f`` to the concrete variable of every size variable of ``r``."""

    def v(s: SizeVar) -> SizeVar:
        return s.renamed(f)

    def conj(c: Conj) -> Conj:
        return tuple(k.rename(v) for k in c)

    body = []
    for b in r.body:
        if isinstance(b, tuple):
            body.append(conj(b))
        elif isinstance(b, AbstractCall):
            body.append(AbstractCall(b.proc, tuple(map(v, b.ins)), tuple(map(v, b.outs))))
        else:
            body.append(b)
    return replace(
        r,
        ins=tuple(map(v, r.ins)),
        outs=tuple(map(v, r.outs)),
        guard=conj(r.guard),
        nonneg=conj(r.nonneg),
        body=tuple(body),
    )

