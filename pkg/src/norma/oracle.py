"""Brute-force usefulness oracle for relevant types, and random value generation."""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass
from typing import Iterator

from .errors import BudgetExceeded, ExplosionGuard
from .interpreter import Configuration, Frame, trace_maximal_sequences
from .syntax import Assign, Call, Ctor, IntType, Match, Program, Rule, Type, guard_atoms
from .typecheck import TypedProgram, typecheck


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


def min_depths(program: Program) -> dict[str, float]:
    """Smallest constructor depth of a finite value of each data type."""
    cache = program.__dict__.setdefault("_norm_cache", {})
    if "min_depths" in cache:
        return cache["min_depths"]
    depth = {d.name: float("inf") for d in program.datas}

    def arg_depth(t: Type) -> float:
        return 0 if isinstance(t, IntType) else depth[t.name]

    changed = True
    while changed:
        changed = False
        for d in program.datas:
            best = min(
                (1 + max((arg_depth(a) for a in c.args), default=0) for c in d.ctors),
                default=float("inf"),
            )
            if best < depth[d.name]:
                depth[d.name] = best
                changed = True
    cache["min_depths"] = depth
    return depth


def random_value(
    t: Type, program: Program, rng: random.Random, depth: int = 3, int_range: int = 2, nonneg: bool = False
):
    """A random value of type ``t`` with constructor depth at most ``depth``."""
    if isinstance(t, IntType):
        return rng.randint(0 if nonneg else -int_range, int_range)
    md = min_depths(program)
    if md[t.name] > depth:
        raise ValueError(f"no value of {t} fits in depth {depth}")
    d = program.data(t.name)

    def ctor_depth(c) -> float:
        return 1 + max((0 if isinstance(a, IntType) else md[a.name] for a in c.args), default=0)

    choices = [c for c in d.ctors if ctor_depth(c) <= depth]
    c = rng.choice(choices)
    return Ctor(c.name, tuple(random_value(a, program, rng, depth - 1, int_range, nonneg) for a in c.args))


def positions(v, t: Type, target: Type, program: Program, path=()) -> Iterator[tuple[int, ...]]:
    """Paths (argument indices) of the components of ``v`` whose type is ``target``."""
    if t == target:
        yield path
    if isinstance(v, Ctor):
        _, c = program.ctor(v.name)
        for k, (a, at) in enumerate(zip(v.args, c.args)):
            yield from positions(a, at, target, program, path + (k,))


def replace_at(v, path: tuple[int, ...], new):
    if not path:
        return new
    k = path[0]
    args = list(v.args)
    args[k] = replace_at(args[k], path[1:], new)
    return Ctor(v.name, tuple(args))


def variations(v, t: Type, target: Type, program: Program, rng: random.Random, count: int, depth: int, int_range: int):
    """Up to ``count`` distinct single-component variations of ``v`` wrt ``target``."""
    paths = list(positions(v, t, target, program))
    if not paths:
        return []
    out, seen = [], {v}
    for _ in range(count * 4):
        path = rng.choice(paths)
        budget = max(depth - len(path), 1)
        try:
            new = random_value(target, program, rng, budget, int_range)
        except ValueError:
            continue
        w = replace_at(v, path, new)
        if w not in seen:
            seen.add(w)
            out.append(w)
            if len(out) >= count:
                break
    return out


# ---------------------------------------------------------------------------
# Configurations at a rule
# ---------------------------------------------------------------------------


def bound_before(rule: Rule, k: int) -> list[str]:
    """Variables bound when the body of ``rule`` is about to run statement ``k``."""
    out: dict[str, None] = dict.fromkeys(rule.ins)
    for a in guard_atoms(rule.guard):
        if isinstance(a, Match):
            out.update(dict.fromkeys(a.pattern.vars))
    for b in rule.body[:k]:
        if isinstance(b, Call):
            out.update(dict.fromkeys(b.outs))
        elif isinstance(b, Assign):
            out[b.var] = None
    return list(out)


def _rng(*key) -> random.Random:
    """Generator seeded stably across processes (``hash`` of str is salted)."""
    return random.Random(zlib.crc32(repr(key).encode()))


@dataclass(frozen=True)
class OracleBudget:
    value_depth: int = 3
    int_range: int = 2
    trace_bound: int = 40
    bases: int = 6
    variations: int = 8
    node_cap: int = 20_000
    strict: bool = False
    seed: int = 0


@dataclass(frozen=True)
class _Site:
    """Template of a configuration at rule i: a body suffix or a synthetic entry call."""

    kind: str  # "body" or "entry"
    position: int
    variables: tuple[str, ...]


class UsefulnessOracle:
    """Decides usefulness of (rule, variable, type) triples by sampling.

    A triple is useful when some sampled configuration at the rule and some
    variation of the variable's value wrt the type give different sets of
    bounded trace-step sequences.
    """

    def __init__(self, program, budget: OracleBudget = OracleBudget()):
        self.typed = program if isinstance(program, TypedProgram) else typecheck(program)
        self.program = self.typed.program
        self.budget = budget
        self._call_sites: dict[str, list[tuple[int, int]]] = {}
        for r in self.program.rules:
            for k, b in enumerate(r.body):
                if isinstance(b, Call):
                    self._call_sites.setdefault(b.proc, []).append((r.index, k))
        self._bases: dict[tuple, list] = {}
        self._explored: dict[tuple, object] = {}
        self.skipped = 0

    # configurations -------------------------------------------------------

    def sites(self, i: int, x: str) -> list[_Site]:
        rule = self.program.rule(i)
        out = []
        for k in range(len(rule.body) + 1):
            vs = tuple(bound_before(rule, k))
            if x in vs:
                out.append(_Site("body", k, vs))
        if x in rule.ins:
            out.append(_Site("entry", rule.ins.index(x), rule.ins))
        return out

    def _value(self, rule: int, var: str, rng: random.Random):
        return random_value(
            self.typed.var_type(rule, var), self.program, rng, self.budget.value_depth, self.budget.int_range
        )

    def _caller_frame(self, site: tuple[int, int], rng: random.Random) -> tuple[Frame, Call]:
        j, k = site
        r = self.program.rule(j)
        call = r.body[k]
        env = {v: self._value(j, v, rng) for v in bound_before(r, k)}
        return Frame(r.proc, j, r.body[k + 1 :], env, 0, link=None), call

    def _bases_for(self, i: int, site: _Site) -> list[tuple[dict, tuple[Frame, Call] | None]]:
        key = (i, site)
        if key in self._bases:
            return self._bases[key]
        rng = _rng(self.budget.seed, i, site.kind, site.position)
        rule = self.program.rule(i)
        callers = [None] + self._call_sites.get(rule.proc, []) if site.kind == "body" else [None]
        out = []
        for _ in range(self.budget.bases):
            try:
                env = {v: self._value(i, v, rng) for v in site.variables}
                caller = rng.choice(callers)
                below = self._caller_frame(caller, rng) if caller else None
            except ValueError:
                continue
            out.append((env, below))
        self._bases[key] = out
        return out

    def configuration(self, i: int, site: _Site, env: dict, below) -> Configuration:
        rule = self.program.rule(i)
        if site.kind == "entry":
            names = tuple(f"$in{k}" for k in range(len(rule.ins)))
            outs = tuple(f"$out{k}" for k in range(len(rule.outs)))
            args = {n: env[x] for n, x in zip(names, rule.ins)}
            frame = Frame("$oracle", None, (Call(rule.proc, names, outs),), args, 0)
            return Configuration((frame,), 0, 1)
        frame = Frame(rule.proc, i, rule.body[site.position :], dict(env), 1)
        if below is None:
            return Configuration((frame,), 0, 2)
        caller, call = below
        linked = Frame(caller.proc, caller.rule, caller.stmts, caller.env, 0, tuple(zip(self.program.rule(i).outs, call.outs)))
        return Configuration((frame, linked), 0, 2)

    def _steps(self, i: int, site: _Site, env: dict, below):
        """Fingerprint of the bounded step set, memoized; ExplosionGuard is cached too."""
        key = (i, site, frozenset(env.items()), id(below))
        hit = self._explored.get(key)
        if hit is None:
            conf = self.configuration(i, site, env, below)
            try:
                hit = trace_maximal_sequences(self.program, conf, self.budget.trace_bound, self.budget.node_cap)
            except ExplosionGuard as e:
                hit = e
            self._explored[key] = hit
        if isinstance(hit, ExplosionGuard):
            raise hit
        return hit

    # decision -------------------------------------------------------------

    def useful(self, i: int, x: str, target: Type) -> bool:
        t = self.typed.var_type(i, x)
        rng = _rng(self.budget.seed, i, x, target)
        for site in self.sites(i, x):
            for env, below in self._bases_for(i, site):
                if not any(True for _ in positions(env[x], t, target, self.program)):
                    continue
                try:
                    base = self._steps(i, site, env, below)
                except ExplosionGuard:
                    if self.budget.strict:
                        raise BudgetExceeded(f"trace exploration too large at rule {i}") from None
                    self.skipped += 1
                    continue
                for w in variations(
                    env[x], t, target, self.program, rng, self.budget.variations,
                    self.budget.value_depth, self.budget.int_range,
                ):
                    try:
                        other = self._steps(i, site, {**env, x: w}, below)
                    except ExplosionGuard:
                        self.skipped += 1
                        continue
                    if other != base:
                        return True
        return False


def oracle_useful_types(program, i: int, x: str, target: Type, budget: OracleBudget = OracleBudget()) -> bool:
    return UsefulnessOracle(program, budget).useful(i, x, target)
