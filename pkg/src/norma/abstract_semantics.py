"""Abstract operational semantics over constraint stores, and soundness replay."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .abstraction import (
    AbstractCall,
    AbstractionOptions,
    AbstractProgram,
    AbstractRule,
    AbstractTick,
    Abstractor,
    abstract_program,
    relevant_types,
    rename_rule,
)
from .errors import SoundnessViolation, Stuck
from .inference import InferenceResult
from .interpreter import (
    ASSIGN_STEP,
    RETURN_STEP,
    TICK_STEP,
    Configuration,
    StepDecoration,
    Trace,
    call_step,
    fresh_name,
    run,
)
from .norms import NEG_INFINITY
from .sizes import NEG_INF, Conj, Constraint, Num, SizeVar, eq, format_conj
from .solver import check_model, sat
from .typecheck import TypedProgram, typecheck


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbstractFrame:
    """Remaining abstract statements; ``link`` equates caller and callee outputs."""

    proc: str
    rule: int | None
    stmts: tuple
    link: Conj | None = None


@dataclass(frozen=True)
class AbstractConfiguration:
    frames: tuple[AbstractFrame, ...]  # frames[0] is the top
    psi: Conj = ()
    cost: int = 0
    counter: int = 1

    def is_terminal(self) -> bool:
        return len(self.frames) == 1 and not self.frames[0].stmts

    def __str__(self) -> str:
        recs = " . ".join(
            "<" + " . ".join(format_conj(s) if isinstance(s, tuple) else str(s) for s in f.stmts) + ">"
            for f in self.frames
        )
        return f"{recs} | {format_conj(self.psi)}"


def _renamer(tag: int):
    return lambda v: fresh_name(v, tag)


def instantiate(r: AbstractRule, tag: int) -> AbstractRule:
    return rename_rule(r, _renamer(tag))


class Consistency:
    """Satisfiability oracle with an optional candidate model tried first.

    A partial hint is extended by solving only the constraints that mention
    unassigned variables, with the hinted values substituted.
    """

    def __init__(self, hint: Mapping[str, object] | None = None):
        self.hint = hint
        self.solver_calls = 0
        self.hint_hits = 0

    def _extend_hint(self, constraints: tuple[Constraint, ...]) -> bool:
        known, residual = [], []
        for c in constraints:
            (known if all(v.name in self.hint for v in c.vars()) else residual).append(c)
        if not check_model(known, self.hint):
            return False

        def subst(v: SizeVar):
            if v.name not in self.hint:
                return v
            value = self.hint[v.name]
            return NEG_INF if value == NEG_INFINITY else Num(int(value))

        return sat([c.rename(subst) for c in residual]).sat

    def __call__(self, constraints: Iterable[Constraint]) -> bool:
        constraints = tuple(constraints)
        if self.hint is not None:
            if check_model(constraints, self.hint) or self._extend_hint(constraints):
                self.hint_hits += 1
                return True
        self.solver_calls += 1
        return sat(constraints).sat


def abs_step(
    ac: AbstractConfiguration, ap: AbstractProgram, consistent=None, want: StepDecoration | None = None
) -> list[tuple[StepDecoration, AbstractConfiguration]]:
    """All successors of ``ac``; empty when terminal or stuck.

    ``want`` restricts a call step to the rule it names.
    """
    consistent = consistent or Consistency()
    top, rest = ac.frames[0], ac.frames[1:]
    if not top.stmts:
        if not rest:
            return []
        link = top.link or ()
        psi = ac.psi + link
        if not consistent(psi):
            return []
        return [(RETURN_STEP, replace(ac, frames=rest, psi=psi))]
    b, remaining = top.stmts[0], top.stmts[1:]
    new_top = replace(top, stmts=remaining)
    if isinstance(b, tuple):
        psi = ac.psi + b
        if not consistent(psi):
            return []
        return [(ASSIGN_STEP, replace(ac, frames=(new_top,) + rest, psi=psi))]
    if isinstance(b, AbstractTick):
        return [(TICK_STEP, replace(ac, frames=(new_top,) + rest, cost=ac.cost - b.amount))]
    if isinstance(b, AbstractCall):
        tag = ac.counter
        out = []
        for r in ap.proc_rules(b.proc):
            if want is not None and want.rule != r.index:
                continue
            fr = instantiate(r, tag)
            passing = tuple(eq(x, y) for x, y in zip(b.ins, fr.ins))
            psi = ac.psi + passing + fr.full_guard
            if not consistent(psi):
                continue
            link = tuple(eq(y, y2) for y, y2 in zip(b.outs, fr.outs))
            callee = AbstractFrame(r.proc, r.index, fr.body, link)
            out.append(
                (
                    call_step(r.index),
                    AbstractConfiguration((callee, new_top) + rest, psi, ac.cost, tag + 1),
                )
            )
        return out
    raise TypeError(f"not an abstract statement: {b!r}")


# ---------------------------------------------------------------------------
# Abstraction of concrete configurations
# ---------------------------------------------------------------------------


def _size_const(v) -> object:
    return NEG_INF if v == NEG_INFINITY else Num(int(v))


class ConfigurationAbstractor:
    """Maps concrete configurations to abstract ones for a fixed abstraction."""

    def __init__(self, ab: Abstractor, ap: AbstractProgram):
        self.ab = ab
        self.ap = ap

    def lv_alpha(self, rule: int, env: Mapping, tag: int) -> Conj:
        out = []
        for x, v in env.items():
            for k in self.ab.keys(rule, x):
                value = self.ab.scheme.closed(v, k, self.ab.program)
                out.append(eq(SizeVar(fresh_name(x, tag), k), _size_const(value)))
        return tuple(out)

    def hint_entries(self, rule: int, env: Mapping, tag: int, into: dict) -> None:
        """Sizes of every variable under every key (not only relevant ones)."""
        for x, v in env.items():
            for k in self.ab.all_keys(rule, x):
                into[SizeVar(fresh_name(x, tag), k).name] = self.ab.scheme.closed(v, k, self.ab.program)

    def of(self, c: Configuration) -> AbstractConfiguration:
        frames = []
        psi: list[Constraint] = []
        for k, f in enumerate(c.frames):
            if f.rule is None:
                raise ValueError("configuration frames must come from program rules")
            r = instantiate(self.ap.rule(f.rule), f.tag)
            n = len(f.stmts)
            stmts = r.body[len(r.body) - n :] if n else ()
            frames.append(AbstractFrame(f.proc, f.rule, stmts, None))
            psi.extend(self.lv_alpha(f.rule, f.env, f.tag))
        # output links live on the callee record
        for k, f in enumerate(c.frames):
            if f.link and k > 0:
                callee = c.frames[k - 1]
                _, out_keys = self.ab.signature(callee.proc)
                link = []
                for (callee_out, caller_out), ks in zip(f.link, out_keys):
                    for key in ks:
                        link.append(
                            eq(SizeVar(fresh_name(caller_out, f.tag), key), SizeVar(fresh_name(callee_out, callee.tag), key))
                        )
                frames[k - 1] = replace(frames[k - 1], link=tuple(link))
        return AbstractConfiguration(tuple(frames), tuple(psi), c.cost, c.counter)


def _setup(program, options: AbstractionOptions, nu: InferenceResult | None):
    typed = program if isinstance(program, TypedProgram) else typecheck(program)
    if nu is None:
        nu = relevant_types(typed, options)
    ap = abstract_program(typed, options, nu)
    return typed, ConfigurationAbstractor(Abstractor(typed, options.scheme, nu), ap)


def abstract_configuration_of(
    c: Configuration, program, options: AbstractionOptions = AbstractionOptions(), nu: InferenceResult | None = None
) -> AbstractConfiguration:
    return _setup(program, options, nu)[1].of(c)


# ---------------------------------------------------------------------------
# Soundness replay
# ---------------------------------------------------------------------------


@dataclass
class StepCheck:
    idx: int
    decoration: str
    sat_guard: bool
    sat_cross: bool
    cost_ok: bool = True

    def to_json(self) -> dict:
        d = {"idx": self.idx, "decoration": self.decoration, "sat_guard": self.sat_guard, "sat_cross": self.sat_cross}
        if not self.cost_ok:
            d["cost_ok"] = False
        return d


@dataclass
class SoundnessReport:
    steps: list[StepCheck] = field(default_factory=list)
    result: str = "verified"
    failing_step: int | None = None
    solver_calls: int = 0

    @property
    def ok(self) -> bool:
        return self.result == "verified"

    def to_json(self) -> dict:
        d = {"steps": [s.to_json() for s in self.steps], "result": self.result}
        if self.failing_step is not None:
            d["failing_step"] = self.failing_step
        return d


def verify_trace(
    trace: Trace,
    program,
    options: AbstractionOptions = AbstractionOptions(),
    nu: InferenceResult | None = None,
    raise_on_violation: bool = False,
    abstract: AbstractProgram | None = None,
) -> SoundnessReport:
    """Replay ``trace`` in the abstract semantics, checking every side condition.

    ``abstract`` replaces the computed abstraction (used to test the checker).
    """
    _, conv = _setup(program, options, nu)
    if abstract is not None:
        conv.ap = abstract
    ap = conv.ap

    hint: dict[str, object] = {}
    for conf in trace.configurations():
        for f in conf.frames:
            if f.rule is not None:
                conv.hint_entries(f.rule, f.env, f.tag, hint)
    consistent = Consistency(hint)

    c0 = trace.initial
    ac = conv.of(c0)
    entry = instantiate(ap.rule(trace.entry_rule), c0.top.tag)
    ac = replace(ac, psi=ac.psi + entry.full_guard)
    report = SoundnessReport()
    if not consistent(ac.psi):
        report.result = "violation"
        report.failing_step = 0
    for idx, (dec, conf) in enumerate(trace.steps, 1):
        if not report.ok:
            break
        successors = abs_step(ac, ap, consistent, want=dec)
        match = [a for d, a in successors if d == dec]
        sat_guard = bool(match)
        sat_cross = False
        cost_ok = True
        if match:
            ac = match[0]
            cross = ac.psi + conv.of(conf).psi
            sat_cross = consistent(cross)
            cost_ok = ac.cost == conf.cost
        report.steps.append(StepCheck(idx, str(dec), sat_guard, sat_cross, cost_ok))
        if not (sat_guard and sat_cross and cost_ok):
            report.result = "violation"
            report.failing_step = idx
    report.solver_calls = consistent.solver_calls
    if not report.ok and raise_on_violation:
        raise SoundnessViolation(f"abstract replay failed at step {report.failing_step}")
    return report


def verify_soundness(
    program,
    entry: str,
    args,
    options: AbstractionOptions = AbstractionOptions(),
    nu: InferenceResult | None = None,
    bound: int = 10_000,
    budget: int | None = None,
    raise_on_violation: bool = False,
) -> SoundnessReport:
    """Run ``entry`` concretely and replay its decorations abstractly."""
    typed = program if isinstance(program, TypedProgram) else typecheck(program)
    trace = run(typed.program, entry, args, max_steps=bound, budget=budget)
    return verify_trace(trace, typed, options, nu, raise_on_violation)


def explore(ac: AbstractConfiguration, ap: AbstractProgram, max_steps: int = 1000):
    """Program-order depth-first abstract run; returns the decoration list."""
    consistent = Consistency()
    path = []
    stack = [iter(abs_step(ac, ap, consistent))]
    current = ac
    while True:
        if current.is_terminal():
            return [d for d, _ in path]
        if len(path) >= max_steps:
            raise Stuck(f"no abstract result within {max_steps} steps")
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            if not path:
                raise Stuck("abstract evaluation is stuck")
            path.pop()
            current = path[-1][1] if path else ac
            continue
        path.append(nxt)
        current = nxt[1]
        stack.append(iter(abs_step(current, ap, consistent)))
