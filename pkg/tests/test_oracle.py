from __future__ import annotations

import random

from norma.oracle import OracleBudget, UsefulnessOracle, oracle_useful_types, positions, random_value, replace_at
from norma.parser import parse
from norma.syntax import INT, Ctor, DataType

IL = DataType("IntList")


def test_loop_counter_is_useful(running):
    assert oracle_useful_types(running, 2, "n", INT)


def test_list_shape_is_useful(running):
    assert oracle_useful_types(running, 4, "l", IL)


def test_accumulator_is_not_useful(running):
    # prod only flows into the result, never into a guard
    assert not oracle_useful_types(running, 3, "prod", INT)


def test_unused_variable_is_not_useful():
    prog = parse("p :: <Int, Int> * <Int>\np(<x, y>, <z>) <- x > 0, z := 1\np(<x, y>, <z>) <- 0 >= x, z := 0\n")
    assert oracle_useful_types(prog, 1, "x", INT)
    assert not oracle_useful_types(prog, 1, "y", INT)


def test_oracle_is_deterministic(running):
    a = UsefulnessOracle(running).useful(6, "e", INT)
    b = UsefulnessOracle(running).useful(6, "e", INT)
    assert a == b is True


def test_random_value_respects_budget(running):
    rng = random.Random(0)
    for _ in range(200):
        v = random_value(IL, running, rng, depth=3, int_range=2)
        depth = 0
        while isinstance(v, Ctor) and v.name == "Cons":
            assert -2 <= v.args[0] <= 2
            v = v.args[1]
            depth += 1
        assert v == Ctor("Nil", ()) and depth <= 3


def test_positions_and_replace(running):
    v = Ctor("Cons", (1, Ctor("Cons", (2, Ctor("Nil", ())))))
    ints = list(positions(v, IL, INT, running))
    assert sorted(ints) == [(0,), (1, 0)]
    assert replace_at(v, (1, 0), 7) == Ctor("Cons", (1, Ctor("Cons", (7, Ctor("Nil", ())))))


def test_budget_defaults():
    b = OracleBudget()
    assert (b.value_depth, b.int_range, b.trace_bound) == (3, 2, 40)
