"""Random well-typed, terminating programs for property campaigns."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import EvaluationError
from .interpreter import Trace, run
from .oracle import random_value
from .syntax import (
    INT,
    Assign,
    BinOp,
    Call,
    Compare,
    Ctor,
    CtorDecl,
    DataDecl,
    DataType,
    Match,
    NonMatch,
    Pattern,
    Procedure,
    Program,
    Rule,
    Tick,
    Type,
    Var,
    conjoin,
)
from .typecheck import typecheck

_IL = DataType("IntList")

# IntList is always present; the others are sampled per program.
LIBRARY: tuple[DataDecl, ...] = (
    DataDecl("IntList", (), (CtorDecl("Nil"), CtorDecl("Cons", (INT, _IL)))),
    DataDecl("Dir", (), (CtorDecl("Up"), CtorDecl("Down"))),
    DataDecl("Opt", (), (CtorDecl("Nothing"), CtorDecl("Just", (INT,)))),
    DataDecl("Tree", (), (CtorDecl("Leaf"), CtorDecl("Node", (DataType("Tree"), INT, DataType("Tree"))))),
    DataDecl("Pair", (), (CtorDecl("Pair", (_IL, _IL)),)),
    DataDecl("Box", (), (CtorDecl("Box", (INT, _IL)),)),
)


@dataclass(frozen=True)
class GenConfig:
    max_procs: int = 4
    max_rules: int = 3
    max_stmts: int = 3
    value_depth: int = 3
    int_range: int = 2
    max_steps: int = 60
    tries: int = 200
    trivial_rate: float = 0.2  # share of accepted runs that make no call
    nonneg: bool = False  # no negative literals or subtraction, so the sum norm applies


@dataclass
class Case:
    program: Program
    entry: str
    args: tuple
    trace: Trace = field(repr=False)
    seed: int = 0


class _ProgramGen:
    def __init__(self, rng: random.Random, cfg: GenConfig):
        self.rng = rng
        self.cfg = cfg
        self.datas = [LIBRARY[0]] + [d for d in LIBRARY[1:] if rng.random() < 0.5]
        self.program_stub = Program.build(self.datas, ())
        self.types: list[Type] = [INT] + [DataType(d.name) for d in self.datas]

    # helpers ---------------------------------------------------------------

    def const(self) -> int:
        return self.rng.randint(0 if self.cfg.nonneg else -self.cfg.int_range, self.cfg.int_range)

    def term(self, t: Type, avail: dict[str, Type], depth: int = 2):
        rng = self.rng
        same = [x for x, u in avail.items() if u == t]
        if t == INT:
            r = rng.random()
            if same and r < 0.45:
                return Var(rng.choice(same))
            if depth > 0 and r < 0.75:
                op = rng.choice(["+", "+", "*"] if self.cfg.nonneg else ["+", "-", "+", "*"])
                return BinOp(op, self.term(INT, avail, depth - 1), self.term(INT, avail, depth - 1))
            return self.const()
        if same and rng.random() < 0.5:
            return Var(rng.choice(same))
        d = self.program_stub.data(t.name)
        ctors = list(d.ctors)
        if depth <= 0:
            ctors = [c for c in ctors if all(a == INT for a in c.args if a != t)] or ctors
            ctors = [c for c in ctors if t not in c.args] or ctors
        c = rng.choice(ctors)
        return Ctor(c.name, tuple(self.term(a, avail, depth - 1) for a in c.args))

    # procedures ------------------------------------------------------------

    def signature(self) -> tuple[tuple[Type, ...], tuple[Type, ...]]:
        n_in = self.rng.randint(1, 2)
        return tuple(self.rng.choice(self.types) for _ in range(n_in)), (self.rng.choice(self.types),)

    def rule(self, k: int, sigs: list, dec: int, last: bool) -> Rule:
        rng = self.rng
        name = f"p{k}"
        in_types, out_types = sigs[k]
        ins = tuple(f"a{j}" for j in range(len(in_types)))
        outs = ("r",)
        avail: dict[str, Type] = dict(zip(ins, in_types))
        counter = iter(range(1000))

        def fresh() -> str:
            return f"v{next(counter)}"

        atoms = []
        smaller: list[str] = []  # strict subterms or decremented ints of the decreasing input
        dec_var = ins[dec]
        dec_type = in_types[dec]
        if not (last and rng.random() < 0.6):
            for x, t in list(zip(ins, in_types)):
                if rng.random() < 0.5 and x != dec_var:
                    continue
                if t == INT:
                    op = rng.choice([">", ">=", "="])
                    other = [y for y, u in zip(ins, in_types) if u == INT and y != x]
                    rhs = Var(rng.choice(other)) if other and rng.random() < 0.3 else self.const()
                    atoms.append(Compare(op, Var(x), rhs) if rng.random() < 0.5 else Compare(op, rhs, Var(x)))
                    if x == dec_var and atoms[-1] == Compare(">", Var(x), 0):
                        smaller.append("int")
                else:
                    d = self.program_stub.data(t.name)
                    c = rng.choice(d.ctors)
                    vs = tuple(fresh() for _ in c.args)
                    if rng.random() < 0.8:
                        atoms.append(Match(x, Pattern(c.name, vs)))
                        avail.update(zip(vs, c.args))
                        if x == dec_var:
                            smaller.extend(v for v, a in zip(vs, c.args) if a == t)
                    else:
                        atoms.append(NonMatch(x, Pattern(c.name, vs)))
            if dec_type == INT and "int" not in smaller and rng.random() < 0.5:
                atoms.append(Compare(">", Var(dec_var), 0))
                smaller.append("int")
        body = []
        for _ in range(rng.randint(1, self.cfg.max_stmts)):
            r = rng.random()
            if r < 0.1:
                body.append(Tick(rng.randint(0, 3)))
            elif r < 0.3:
                t = rng.choice(self.types)
                v = fresh()
                body.append(Assign(v, self.term(t, avail)))
                avail[v] = t
            else:
                callees = list(range(k + 1, len(sigs)))
                if smaller:
                    callees.append(k)
                if not callees:
                    continue
                j = rng.choice(callees)
                cin, cout = sigs[j]
                args = []
                for pos, t in enumerate(cin):
                    if j == k and pos == dec:
                        s = rng.choice(smaller)
                        if s == "int":
                            v = fresh()
                            body.append(Assign(v, BinOp("-", Var(dec_var), 1)))
                            avail[v] = INT
                            args.append(v)
                        else:
                            args.append(s)
                        continue
                    same = [x for x, u in avail.items() if u == t]
                    if same and rng.random() < 0.6:
                        args.append(rng.choice(same))
                    else:
                        v = fresh()
                        body.append(Assign(v, self.term(t, avail)))
                        avail[v] = t
                        args.append(v)
                res = tuple(fresh() for _ in cout)
                body.append(Call(f"p{j}", tuple(args), res))
                avail.update(zip(res, cout))
        body.append(Assign("r", self.term(out_types[0], avail)))
        return Rule(name, ins, outs, conjoin(atoms), tuple(body))

    def program(self) -> Program:
        n = self.rng.randint(1, self.cfg.max_procs)
        sigs = [self.signature() for _ in range(n)]
        procs = []
        for k in range(n):
            dec = self.rng.randrange(len(sigs[k][0]))
            n_rules = self.rng.randint(1, self.cfg.max_rules)
            rules = tuple(self.rule(k, sigs, dec, i == n_rules - 1) for i in range(n_rules))
            procs.append(Procedure(f"p{k}", sigs[k][0], sigs[k][1], rules))
        return Program.build(self.datas, procs)


def random_program(rng: random.Random, cfg: GenConfig = GenConfig()) -> Program:
    program = _ProgramGen(rng, cfg).program()
    typecheck(program)
    return program


def random_case(seed: int, cfg: GenConfig = GenConfig()) -> Case:
    """A generated program with entry ``p0`` and arguments that terminate in ``cfg.max_steps``."""
    rng = random.Random(seed)
    for _ in range(cfg.tries):
        program = random_program(rng, cfg)
        proc = program.proc("p0")
        for _ in range(5):
            args = tuple(
                random_value(t, program, rng, cfg.value_depth, cfg.int_range, cfg.nonneg) for t in proc.in_types
            )
            try:
                trace = run(program, "p0", args, max_steps=cfg.max_steps)
            except EvaluationError:
                continue
            if not any(d.sem == 2 for d in trace.decorations) and rng.random() >= cfg.trivial_rate:
                break
            return Case(program, "p0", args, trace, seed)
    raise RuntimeError(f"no terminating case found for seed {seed}")
