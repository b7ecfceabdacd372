from __future__ import annotations

import math

import pytest

from norma.errors import BudgetExceeded, StepLimit, Stuck
from norma.interpreter import (
    ASSIGN_STEP,
    RETURN_STEP,
    TICK_STEP,
    UNDEFINED,
    Configuration,
    Frame,
    call_step,
    eval_guard,
    eval_term,
    initial_configurations,
    run,
    step,
    decoration_code,
    trace_maximal_sequences,
    trace_steps_set,
    value_from_json,
    value_to_json,
)
from norma.parser import parse, parse_term
from norma.syntax import Ctor, Match, NonMatch, Pattern, Compare, Var

NIL = Ctor("Nil")


def cons(h, t):
    return Ctor("Cons", (h, t))


def test_eval_term():
    assert eval_term(parse_term("n - 1"), {"n": 2}) == 1
    assert eval_term(parse_term("Cons(2, Nil)"), {}) == cons(2, NIL)
    assert eval_term(parse_term("x + y"), {"x": 1}) is UNDEFINED


def test_eval_guard():
    lv = {"l": cons(2, NIL)}
    assert eval_guard(Match("l", Pattern("Cons", ("e", "l1"))), lv) == {"e": 2, "l1": NIL}
    assert eval_guard(Compare(">=", 0, Var("n")), {"n": 2}) is None
    assert eval_guard(NonMatch("l", Pattern("Nil")), lv) == {}


def _ar3(running):
    """The configuration that calls while_1 on Cons(2, Nil) (after factSum's assignment)."""
    r4 = running.rule(4)
    top = Frame("factSum", 4, r4.body[1:], {"l": cons(2, NIL), "sum": 0}, 2)
    below = Frame("main", 7, (), {"l": cons(2, NIL)}, 0, link=(("sum'", "r'"),))
    return Configuration((top, below), 0, 3)


def test_step_selects_rule_6(running):
    succ = step(_ar3(running), running)
    assert [d for d, _ in succ] == [call_step(6)]
    callee = succ[0][1].top
    assert callee.env == {"l": cons(2, NIL), "sum": 0, "e": 2, "l1": NIL}
    assert callee.tag == 3


def test_singleton_empty_record_is_terminal(running):
    c = Configuration((Frame("main", 7, (), {}, 0),))
    assert c.is_terminal() and step(c, running) == []


def test_return_copies_output(running):
    callee = Frame("fact", 1, (), {"prod'": 6}, 5)
    caller = Frame("while_1", 6, (), {}, 3, link=(("prod'", "prod"),))
    ((dec, c),) = step(Configuration((callee, caller)), running)
    assert dec == RETURN_STEP
    assert c.top.env == {"prod": 6} and c.top.link is None


def test_run_main(running):
    tr = run(running, "main", [])
    assert tr.outputs == {"r'": 2}
    decs = tr.decorations
    assert decs[:4] == [ASSIGN_STEP, call_step(4), ASSIGN_STEP, call_step(6)]
    assert decs[-2:] == [RETURN_STEP, RETURN_STEP]


@pytest.mark.parametrize("n", range(0, 7))
def test_fact_matches_reference(running, n):
    # independent oracle: math.factorial
    assert run(running, "fact", [n]).outputs == {"prod'": math.factorial(n)}


def test_fact_3_frozen(running):
    assert run(running, "fact", [3]).outputs == {"prod'": 6}


def test_while_0_base(running):
    assert run(running, "while_0", [0, 7]).outputs == {"prod'": 7}


def test_stuck_and_limits(running):
    src = "data D = A | B\nf :: <D> * <Int>\nf(<x>, <y>) <- match(x, A), y := 1"
    p = parse(src)
    with pytest.raises(Stuck):
        run(p, "f", [Ctor("B")])
    with pytest.raises(StepLimit):
        run(running, "fact", [50], max_steps=20)


def test_budget(running):
    from norma import load_corpus

    ticks = load_corpus("ticks")
    tr = run(ticks, "walk", [cons(1, cons(2, NIL))], budget=20)
    assert tr.cost == 11
    assert tr.final.cost == 9
    assert TICK_STEP in tr.decorations
    with pytest.raises(BudgetExceeded):
        run(ticks, "walk", [cons(1, cons(2, NIL))], budget=10)


def test_trace_steps_set_bound_one(running):
    ((_, c0),) = initial_configurations(running, "main", [])
    assert trace_steps_set(running, c0, 1) == {(), (ASSIGN_STEP,)}


def test_trace_steps_deterministic_prefixes(running):
    tr = run(running, "main", [])
    ((_, c0),) = initial_configurations(running, "main", [])
    full = tuple(tr.decorations)
    got = trace_steps_set(running, c0, len(full) + 5)
    assert got == {full[:k] for k in range(len(full) + 1)}


def test_trace_steps_branching():
    p = parse("f :: <Int> * <Int>\nf(<x>, <y>) <- x >= 0, y := 1\nf(<x>, <y>) <- x >= 1, y := 2\n"
              "g :: <> * <Int>\ng(<>, <z>) <- true, f(<1>, <z>)".replace("<1>", "<one>")
              .replace("g(<>, <z>) <- true,", "g(<>, <z>) <- true, one := 1,"))
    ((_, c0),) = initial_configurations(p, "g", [])
    got = trace_steps_set(p, c0, 2)
    # by hand: assign, then both f rules apply to 1
    assert got == {(), (ASSIGN_STEP,), (ASSIGN_STEP, call_step(1)), (ASSIGN_STEP, call_step(2))}


@pytest.mark.parametrize("seed", range(30))
def test_maximal_sequences_generate_the_step_set(seed):
    from norma.generate import random_case

    case = random_case(seed)
    for _, c0 in initial_configurations(case.program, case.entry, case.args):
        for bound in (3, 12):
            full = {tuple(map(decoration_code, s)) for s in trace_steps_set(case.program, c0, bound)}
            maxi = trace_maximal_sequences(case.program, c0, bound)
            assert {m[:k] for m in maxi for k in range(len(m) + 1)} == full
            assert all(not (a != b and b[: len(a)] == a) for a in maxi for b in maxi)


def test_value_json_round_trip():
    v = cons(2, cons(-1, NIL))
    assert value_to_json(v) == ["Cons", 2, ["Cons", -1, ["Nil"]]]
    assert value_from_json(value_to_json(v)) == v
    with pytest.raises(ValueError):
        value_from_json(True)
