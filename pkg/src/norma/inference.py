"""Relevant-type inference: mapping lattice, transfer functions, Kleene fixpoint."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import LengthMismatch, RenameClash
from .norms import canonical_types, deptypes, is_recursive
from .syntax import (
    INT,
    And,
    Assign,
    Call,
    Compare,
    Guard,
    Match,
    NonMatch,
    Program,
    Statement,
    Tick,
    TrueGuard,
    Type,
    term_vars,
)
from .typecheck import TypedProgram, typecheck

RuleMapping = Mapping[str, frozenset]
ProgramMapping = tuple[RuleMapping, ...]

EMPTY: RuleMapping = {}


# ---------------------------------------------------------------------------
# Lattice operations
# ---------------------------------------------------------------------------


def rm_combine(a: RuleMapping, b: RuleMapping) -> dict[str, frozenset]:
    """Pointwise union on shared variables, passthrough elsewhere."""
    out = dict(a)
    for x, s in b.items():
        out[x] = out[x] | s if x in out else frozenset(s)
    return out


def rm_leq(a: RuleMapping, b: RuleMapping) -> bool:
    return all(x in b and s <= b[x] for x, s in a.items())


def _check_lengths(a: ProgramMapping, b: ProgramMapping) -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"program mappings of lengths {len(a)} and {len(b)}")


def pm_leq(a: ProgramMapping, b: ProgramMapping) -> bool:
    _check_lengths(a, b)
    return all(rm_leq(x, y) for x, y in zip(a, b))


def pm_combine(a: ProgramMapping, b: ProgramMapping) -> ProgramMapping:
    _check_lengths(a, b)
    return tuple(rm_combine(x, y) for x, y in zip(a, b))


def pm_combine_all(n: int, mappings: Iterable[ProgramMapping]) -> ProgramMapping:
    acc = [dict() for _ in range(n)]
    for m in mappings:
        _check_lengths(acc, m)
        for k, mu in enumerate(m):
            acc[k] = rm_combine(acc[k], mu)
    return tuple(acc)


def rm_restrict(mu: RuleMapping, keep: Iterable[str]) -> dict[str, frozenset]:
    keep = set(keep)
    return {x: s for x, s in mu.items() if x in keep}


def rm_rename(mu: RuleMapping, xs, ys) -> dict[str, frozenset]:
    """Rename ``xs`` to ``ys``; requires xs in the domain and ys fresh."""
    xs, ys = tuple(xs), tuple(ys)
    if len(xs) != len(ys):
        raise RenameClash("renaming lists of different lengths")
    missing = [x for x in xs if x not in mu]
    if missing:
        raise RenameClash(f"renamed variables {missing} are not in the domain")
    clash = [y for y in ys if y in mu and y not in xs]
    if clash or len(set(ys)) != len(ys):
        raise RenameClash(f"renaming targets {clash or list(ys)} clash with the domain")
    return _transport(mu, xs, ys)


def _transport(mu: RuleMapping, xs, ys) -> dict[str, frozenset]:
    """Lenient simultaneous renaming used by the transfer functions.

    Variables outside the domain are skipped and repeated targets are joined,
    so restriction followed by renaming never needs the strict preconditions.
    """
    out: dict[str, frozenset] = {}
    for x, y in zip(xs, ys):
        if x in mu:
            out[y] = out[y] | mu[x] if y in out else mu[x]
    return out


def extend_to_program(mu: RuleMapping, n: int, i: int) -> ProgramMapping:
    if not 1 <= i <= n:
        raise IndexError(f"rule index {i} out of range 1..{n}")
    return tuple(dict(mu) if k == i else {} for k in range(1, n + 1))


def empty_program_mapping(n: int) -> ProgramMapping:
    return tuple({} for _ in range(n))


# ---------------------------------------------------------------------------
# Transfer functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InferenceOptions:
    """``mode`` "default" marks the tested type at every match/nonmatch;
    "literal" follows the transfer table exactly (recursive types at match only)."""

    mode: str = "default"
    nonrec_match_opt: bool = False

    def __post_init__(self):
        if self.mode not in ("default", "literal"):
            raise ValueError(f"unknown inference mode {self.mode!r}")


class _Analysis:
    def __init__(self, typed: TypedProgram, options: InferenceOptions):
        self.typed = typed
        self.program = typed.program
        self.options = options
        self.n = self.program.n_rules
        self._recursive_procs = _recursive_procs(self.program) if options.nonrec_match_opt else None

    def ty(self, i: int, x: str) -> Type:
        return self.typed.var_type(i, x)

    def tested_type(self, i: int, x: str, negated: bool) -> frozenset:
        """Type of x made relevant by a (non)match test on it."""
        t = self.ty(i, x)
        rec = is_recursive(t, self.program)
        if self.options.mode == "literal":
            keep = rec and not negated
        else:
            keep = True
        if keep and rec and self._recursive_procs is not None:
            keep = self.program.rule(i).proc in self._recursive_procs
        return frozenset({t}) if keep else frozenset()

    def guard(self, i: int, g: Guard, theta: ProgramMapping) -> dict[str, frozenset]:
        if isinstance(g, TrueGuard):
            return {}
        if isinstance(g, And):
            return rm_combine(self.guard(i, g.left, theta), self.guard(i, g.right, theta))
        if isinstance(g, Compare):
            names = set(term_vars(g.left)) | set(term_vars(g.right))
            return {x: frozenset({INT}) for x in names}
        if isinstance(g, (Match, NonMatch)):
            mu_i = theta[i - 1]
            from_pattern = frozenset().union(
                *(mu_i.get(y, frozenset()) for y in g.pattern.vars)
            )
            own = self.tested_type(i, g.var, isinstance(g, NonMatch))
            return {g.var: own | from_pattern}
        raise TypeError(f"not a guard: {g!r}")

    def stmt(self, i: int, b: Statement, theta: ProgramMapping) -> ProgramMapping:
        n = self.n
        if isinstance(b, Assign):
            rel = theta[i - 1].get(b.var, frozenset())
            mu = {y: rel & deptypes(self.ty(i, y), self.program) for y in term_vars(b.term)}
            return extend_to_program(mu, n, i)
        if isinstance(b, Tick):
            return empty_program_mapping(n)
        if isinstance(b, Call):
            parts = []
            for r in self.program.proc(b.proc).rules:
                j = r.index
                a = _transport(rm_restrict(theta[j - 1], r.ins), r.ins, b.ins)
                parts.append(extend_to_program(a, n, i))
                bb = _transport(rm_restrict(theta[i - 1], b.outs), b.outs, r.outs)
                parts.append(extend_to_program(bb, n, j))
            return pm_combine_all(n, parts)
        raise TypeError(f"not a statement: {b!r}")

    def body(self, i: int, theta: ProgramMapping) -> ProgramMapping:
        return pm_combine_all(self.n, (self.stmt(i, b, theta) for b in self.program.rule(i).body))

    def siblings(self, i: int, theta: ProgramMapping) -> dict[str, frozenset]:
        r = self.program.rule(i)
        params = r.ins + r.outs
        mu: dict[str, frozenset] = {}
        for s in self.program.proc(r.proc).rules:
            formals = s.ins + s.outs
            mu = rm_combine(mu, _transport(rm_restrict(theta[s.index - 1], formals), formals, params))
        return mu

    def rule(self, i: int, theta: ProgramMapping) -> ProgramMapping:
        g = extend_to_program(self.guard(i, self.program.rule(i).guard, theta), self.n, i)
        sib = extend_to_program(self.siblings(i, theta), self.n, i)
        return pm_combine_all(self.n, (g, self.body(i, theta), sib))

    def apply(self, theta: ProgramMapping) -> ProgramMapping:
        return pm_combine_all(
            self.n, [theta] + [self.rule(i, theta) for i in range(1, self.n + 1)]
        )


def _recursive_procs(program: Program) -> set[str]:
    calls = {
        p.name: {b.proc for r in p.rules for b in r.body if isinstance(b, Call)}
        for p in program.procs
    }
    out = set()
    for p in calls:
        seen, stack = set(), list(calls[p])
        while stack:
            q = stack.pop()
            if q == p:
                out.add(p)
                break
            if q not in seen:
                seen.add(q)
                stack.extend(calls.get(q, ()))
    return out


def _typed(program) -> TypedProgram:
    return program if isinstance(program, TypedProgram) else typecheck(program)


def transfer_guard(program, i: int, g: Guard, theta: ProgramMapping, options=InferenceOptions()):
    return _Analysis(_typed(program), options).guard(i, g, theta)


def transfer_stmt(program, i: int, b: Statement, theta: ProgramMapping, options=InferenceOptions()):
    return _Analysis(_typed(program), options).stmt(i, b, theta)


def transfer_rule(program, i: int, theta: ProgramMapping, options=InferenceOptions()):
    return _Analysis(_typed(program), options).rule(i, theta)


def transfer_program(program, theta: ProgramMapping, options=InferenceOptions()):
    """One application of the global function F to ``theta``."""
    return _Analysis(_typed(program), options).apply(theta)


# ---------------------------------------------------------------------------
# Fixpoint
# ---------------------------------------------------------------------------


def _normalize(theta: ProgramMapping) -> ProgramMapping:
    return tuple({x: frozenset(s) for x, s in mu.items()} for mu in theta)


@dataclass
class InferenceResult:
    typed: TypedProgram
    mapping: ProgramMapping
    iterations: int
    chain: list[ProgramMapping] = field(default_factory=list, repr=False)

    def nu(self, i: int, x: str) -> frozenset:
        return self.mapping[i - 1].get(x, frozenset())

    def relevant(self) -> dict[int, dict[str, frozenset]]:
        """Per rule, every variable with its (possibly empty) relevant set."""
        program = self.typed.program
        return {
            r.index: {x: self.nu(r.index, x) for x in r.variables()} for r in program.rules
        }

    def to_json(self) -> dict:
        program = self.typed.program
        rules = []
        for r in program.rules:
            vars_ = {}
            for x in r.variables():
                t = self.typed.var_type(r.index, x)
                vars_[x] = [str(u) for u in canonical_types(t, self.nu(r.index, x), program)]
            rules.append({"index": r.index, "vars": vars_})
        return {"rules": rules}


def infer_relevant_types(program, options: InferenceOptions = InferenceOptions(), keep_chain=False) -> InferenceResult:
    """Least fixpoint of F from the all-empty mapping by Kleene iteration.

    ``iterations`` counts applications of F up to and including the one
    that first returns its argument unchanged.
    """
    typed = _typed(program)
    analysis = _Analysis(typed, options)
    theta = empty_program_mapping(analysis.n)
    chain = [theta]
    k = 0
    while True:
        k += 1
        nxt = _normalize(analysis.apply(theta))
        if keep_chain:
            chain.append(nxt)
        if nxt == theta:
            return InferenceResult(typed, nxt, k, chain if keep_chain else [])
        theta = nxt


def full_deptypes_mapping(program) -> InferenceResult:
    """Every variable gets all its constituent types (inference disabled)."""
    typed = _typed(program)
    p = typed.program
    mapping = tuple(
        {x: deptypes(typed.var_type(r.index, x), p) for x in r.variables()} for r in p.rules
    )
    return InferenceResult(typed, mapping, 0)


def iteration_bound(program) -> int:
    """Height bound: n_rules times the number of (variable, constituent type) pairs."""
    typed = _typed(program)
    p = typed.program
    total = sum(
        len(deptypes(typed.var_type(r.index, x), p)) for r in p.rules for x in r.variables()
    )
    return p.n_rules * max(total, 1)
