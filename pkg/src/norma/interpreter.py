"""Concrete small-step semantics with trace decorations and cost counting.

Fresh renaming of rule variables is implicit: every activation record has a
``tag`` and the variable ``x`` of a record tagged ``k`` stands for ``x#k``.
Tags are handed out from the configuration's counter, one per call step, so
two records never share a variable.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import BudgetExceeded, ExplosionGuard, StepLimit, Stuck
from .syntax import (
    And,
    Assign,
    BinOp,
    Call,
    Compare,
    Ctor,
    Guard,
    Match,
    NonMatch,
    Program,
    Statement,
    Term,
    Tick,
    TrueGuard,
    Value,
    Var,
)

VarMapping = Mapping[str, Value]


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Undefined"

    def __bool__(self) -> bool:
        return False


UNDEFINED = _Undefined()
FAIL = None


def fresh_name(var: str, tag: int) -> str:
    return f"{var}#{tag}"


def base_name(var: str) -> str:
    return var.split("#", 1)[0]


# ---------------------------------------------------------------------------
# Term and guard evaluation
# ---------------------------------------------------------------------------


def eval_term(t: Term, lv: VarMapping):
    """Value of ``t`` under ``lv``, or UNDEFINED when a variable is unbound."""
    if isinstance(t, int):
        return t
    if isinstance(t, Var):
        return lv.get(t.name, UNDEFINED)
    if isinstance(t, BinOp):
        a = eval_term(t.left, lv)
        b = eval_term(t.right, lv)
        if not isinstance(a, int) or not isinstance(b, int):
            return UNDEFINED
        if t.op == "+":
            return a + b
        if t.op == "-":
            return a - b
        return a * b
    if isinstance(t, Ctor):
        args = []
        for a in t.args:
            v = eval_term(a, lv)
            if v is UNDEFINED:
                return UNDEFINED
            args.append(v)
        return Ctor(t.name, tuple(args))
    raise TypeError(f"not a term: {t!r}")


def eval_guard(g: Guard, lv: VarMapping):
    """Pattern bindings produced by ``g`` (possibly empty), or None on failure."""
    if isinstance(g, TrueGuard):
        return {}
    if isinstance(g, And):
        lv1 = eval_guard(g.left, lv)
        if lv1 is None:
            return None
        lv2 = eval_guard(g.right, {**lv, **lv1})
        if lv2 is None:
            return None
        return {**lv1, **lv2}
    if isinstance(g, Compare):
        a = eval_term(g.left, lv)
        b = eval_term(g.right, lv)
        if not isinstance(a, int) or not isinstance(b, int):
            return None
        ok = a > b if g.op == ">" else a >= b if g.op == ">=" else a == b
        return {} if ok else None
    if isinstance(g, (Match, NonMatch)):
        v = lv.get(g.var, UNDEFINED)
        if v is UNDEFINED:
            return None
        fits = (
            isinstance(v, Ctor)
            and v.name == g.pattern.ctor
            and len(v.args) == len(g.pattern.vars)
        )
        if isinstance(g, NonMatch):
            return None if fits else {}
        if not fits:
            return None
        return dict(zip(g.pattern.vars, v.args))
    raise TypeError(f"not a guard: {g!r}")


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """Activation record: remaining statements and a tagged variable mapping."""

    proc: str
    rule: int | None
    stmts: tuple[Statement, ...]
    env: Mapping[str, Value]
    tag: int
    link: tuple[tuple[str, str], ...] | None = None  # (callee output, caller output)

    def renamed_env(self) -> dict[str, Value]:
        return {fresh_name(x, self.tag): v for x, v in self.env.items()}


@dataclass(frozen=True)
class Configuration:
    frames: tuple[Frame, ...]  # frames[0] is the top of the stack
    cost: int = 0
    counter: int = 1

    @property
    def top(self) -> Frame:
        return self.frames[0]

    def is_terminal(self) -> bool:
        return len(self.frames) == 1 and not self.frames[0].stmts


@dataclass(frozen=True)
class StepDecoration:
    """Semantic rule (1, 2, 3 or "tick") and, for rule 2, the program rule used."""

    sem: int | str
    rule: int | None = None

    def __post_init__(self):
        if (self.sem == 2) != (self.rule is not None):
            raise ValueError("a rule index is present exactly for semantic rule 2")

    def __str__(self) -> str:
        return f"({self.sem})·{self.rule if self.rule is not None else 'ε'}"

    def to_json(self) -> list:
        return [self.sem, self.rule]


ASSIGN_STEP = StepDecoration(1)
RETURN_STEP = StepDecoration(3)
TICK_STEP = StepDecoration("tick")


_SEM_CODES = {1: 1, 2: 2, 3: 3, "tick": 4}


def call_step(rule: int) -> StepDecoration:
    return StepDecoration(2, rule)


def decoration_code(d: StepDecoration) -> int:
    """Injective integer encoding, cheap to hash inside long sequences."""
    return _SEM_CODES[d.sem] + 8 * (d.rule or 0)


def step(config: Configuration, program: Program) -> list[tuple[StepDecoration, Configuration]]:
    """All successors of ``config``; empty when terminal or stuck."""
    top = config.top
    rest = config.frames[1:]
    if not top.stmts:
        if not rest:
            return []
        caller = rest[0]
        env = dict(caller.env)
        for callee_out, caller_out in caller.link or ():
            if callee_out not in top.env:
                return []
            env[caller_out] = top.env[callee_out]
        new_caller = Frame(caller.proc, caller.rule, caller.stmts, env, caller.tag, None)
        return [(RETURN_STEP, Configuration((new_caller,) + rest[1:], config.cost, config.counter))]

    b = top.stmts[0]
    remaining = top.stmts[1:]
    if isinstance(b, Assign):
        v = eval_term(b.term, top.env)
        if v is UNDEFINED:
            return []
        if b.var in top.env:
            raise RuntimeError(f"variable {b.var} assigned twice")
        new_top = Frame(top.proc, top.rule, remaining, {**top.env, b.var: v}, top.tag, top.link)
        return [(ASSIGN_STEP, Configuration((new_top,) + rest, config.cost, config.counter))]
    if isinstance(b, Tick):
        new_top = Frame(top.proc, top.rule, remaining, top.env, top.tag, top.link)
        return [(TICK_STEP, Configuration((new_top,) + rest, config.cost - b.amount, config.counter))]
    if isinstance(b, Call):
        args = []
        for x in b.ins:
            if x not in top.env:
                return []
            args.append(top.env[x])
        tag = config.counter
        out = []
        for r in program.proc(b.proc).rules:
            lv1 = dict(zip(r.ins, args))
            lv2 = eval_guard(r.guard, lv1)
            if lv2 is None:
                continue
            if lv2.keys() & lv1.keys():
                raise RuntimeError("guard bindings overlap the input mapping")
            callee = Frame(r.proc, r.index, r.body, {**lv1, **lv2}, tag)
            linked = Frame(top.proc, top.rule, remaining, top.env, top.tag, tuple(zip(r.outs, b.outs)))
            out.append(
                (
                    call_step(r.index),
                    Configuration((callee, linked) + rest, config.cost, tag + 1),
                )
            )
        return out
    raise TypeError(f"not a statement: {b!r}")


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


@dataclass
class Trace:
    initial: Configuration
    steps: list[tuple[StepDecoration, Configuration]] = field(default_factory=list)
    entry: str = ""
    entry_rule: int = 0
    args: tuple[Value, ...] = ()
    out_names: tuple[str, ...] = ()

    @property
    def decorations(self) -> list[StepDecoration]:
        return [d for d, _ in self.steps]

    @property
    def final(self) -> Configuration:
        return self.steps[-1][1] if self.steps else self.initial

    def configurations(self) -> list[Configuration]:
        return [self.initial] + [c for _, c in self.steps]

    @property
    def outputs(self) -> dict[str, Value]:
        final = self.final.top
        return {y: final.env[y] for y in self.out_names if y in final.env}

    @property
    def cost(self) -> int:
        """Resources consumed along the trace."""
        return self.initial.cost - self.final.cost


def initial_configurations(program: Program, entry: str, args: Iterable[Value], budget: int | None = None):
    """One initial configuration per entry rule whose guard accepts ``args``."""
    args = tuple(args)
    proc = program.proc(entry)
    if len(args) != len(proc.in_types):
        raise ValueError(f"{entry} expects {len(proc.in_types)} argument(s), got {len(args)}")
    out = []
    for r in proc.rules:
        lv1 = dict(zip(r.ins, args))
        lv2 = eval_guard(r.guard, lv1)
        if lv2 is None:
            continue
        frame = Frame(r.proc, r.index, r.body, {**lv1, **lv2}, 0)
        out.append((r, Configuration((frame,), budget or 0, 1)))
    return out


def run(
    program: Program,
    entry: str,
    args: Iterable[Value],
    max_steps: int = 10_000,
    budget: int | None = None,
) -> Trace:
    """Execute ``entry`` depth-first, trying rules in program order.

    Raises Stuck when every branch gets stuck, StepLimit when a branch grows
    beyond ``max_steps`` and BudgetExceeded when the cost register drops
    below zero with a budget set.
    """
    args = tuple(args)
    starts = initial_configurations(program, entry, args, budget)
    if not starts:
        raise Stuck(f"no rule of {entry!r} accepts the arguments")
    last_stuck = f"no rule of {entry!r} completes"
    for rule, c0 in starts:
        path: list[tuple[StepDecoration, Configuration]] = []
        stack = [iter(step(c0, program))]
        current = c0
        while True:
            if current.is_terminal():
                return Trace(c0, path, entry, rule.index, args, rule.outs)
            if len(path) >= max_steps:
                raise StepLimit(f"no result after {max_steps} steps")
            nxt = next(stack[-1], None)
            if nxt is None:
                if current.top.stmts and isinstance(current.top.stmts[0], Call):
                    last_stuck = f"stuck at call to {current.top.stmts[0].proc!r} in rule {current.top.rule}"
                stack.pop()
                if not path:
                    break
                path.pop()
                current = path[-1][1] if path else c0
                continue
            dec, conf = nxt
            if budget is not None and conf.cost < 0:
                raise BudgetExceeded(f"cost budget {budget} exceeded")
            path.append((dec, conf))
            current = conf
            stack.append(iter(step(conf, program)))
    raise Stuck(last_stuck)


def trace_steps_set(
    program: Program,
    initial: Configuration,
    bound: int,
    node_cap: int = 100_000,
) -> frozenset[tuple[StepDecoration, ...]]:
    """All decoration sequences of length <= ``bound`` from ``initial``."""
    if bound < 0:
        raise ValueError("bound must be non-negative")
    seen: set[tuple[StepDecoration, ...]] = {()}
    frontier = deque([(initial, ())])
    nodes = 0
    while frontier:
        conf, seq = frontier.popleft()
        if len(seq) >= bound:
            continue
        for dec, nxt in step(conf, program):
            s = seq + (dec,)
            seen.add(s)
            frontier.append((nxt, s))
            nodes += 1
            if nodes > node_cap:
                raise ExplosionGuard(f"trace exploration exceeded {node_cap} nodes")
    return frozenset(seen)


def trace_maximal_sequences(
    program: Program,
    initial: Configuration,
    bound: int,
    node_cap: int = 100_000,
) -> frozenset[tuple[int, ...]]:
    """Maximal elements of ``trace_steps_set`` under the prefix order, as coded sequences.

    Two prefix-closed sets are equal iff their maximal elements are, so this
    is an exact and much cheaper fingerprint of the bounded step set.
    """
    if bound < 0:
        raise ValueError("bound must be non-negative")
    leaves: list[tuple[int, ...]] = []
    frontier = deque([(initial, ())])
    nodes = 0
    while frontier:
        conf, seq = frontier.popleft()
        succ = step(conf, program) if len(seq) < bound else []
        if not succ:
            leaves.append(seq)
            continue
        for dec, nxt in succ:
            frontier.append((nxt, seq + (decoration_code(dec),)))
            nodes += 1
            if nodes > node_cap:
                raise ExplosionGuard(f"trace exploration exceeded {node_cap} nodes")
    leaves = sorted(set(leaves))
    maximal = [a for a, b in zip(leaves, leaves[1:]) if b[: len(a)] != a]
    if leaves:
        maximal.append(leaves[-1])
    return frozenset(maximal)


# ---------------------------------------------------------------------------
# JSON interchange of values and reports
# ---------------------------------------------------------------------------


def value_to_json(v: Value):
    if isinstance(v, int):
        return v
    return [v.name] + [value_to_json(a) for a in v.args]


def value_from_json(data) -> Value:
    if isinstance(data, bool):
        raise ValueError("booleans are not values")
    if isinstance(data, int):
        return data
    if isinstance(data, list) and data and isinstance(data[0], str):
        return Ctor(data[0], tuple(value_from_json(a) for a in data[1:]))
    raise ValueError(f"cannot read a value from {data!r}")


def format_value(v: Value) -> str:
    if isinstance(v, int):
        return str(v)
    if not v.args:
        return v.name
    return f"{v.name}({', '.join(format_value(a) for a in v.args)})"


def run_report(trace: Trace) -> dict:
    return {
        "entry": trace.entry,
        "args": [value_to_json(a) for a in trace.args],
        "outputs": {k: value_to_json(v) for k, v in trace.outputs.items()},
        "steps": [d.to_json() for d in trace.decorations],
        "cost": trace.cost,
    }


def run_report_json(trace: Trace) -> str:
    return json.dumps(run_report(trace), ensure_ascii=False)
