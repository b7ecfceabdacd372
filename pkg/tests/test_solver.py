from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from campaigns import grid_feasible, random_conjunction, sat_campaign
from norma.sizes import NEG_INF, Constraint, SizeVar, add, eq, ge, mul, num, smax
from norma.solver import NEG_OMEGA, Ext, check_model, evaluate, ext, sat

X, Y, Z = SizeVar("X"), SizeVar("Y"), SizeVar("Z")


def gt(a, b):
    return Constraint(">", a, b)


def test_contradictory_equalities_unsat():
    assert not sat([eq(X, num(1)), eq(X, num(2))]).sat


def test_list_length_chain_unsat():
    # L2 = L4, L4 = 1, L0 = L2, L0 = 2
    L0, L2, L4 = SizeVar("L0"), SizeVar("L2"), SizeVar("L4")
    assert not sat([eq(L2, L4), eq(L4, num(1)), eq(L0, L2), eq(L0, num(2))]).sat


def test_successor_sat_with_witness():
    cs = [ge(X, num(0)), eq(Y, add(X, num(1)))]
    res = sat(cs)
    assert res.sat
    assert check_model(cs, res.model)
    assert evaluate(Y, res.model) == evaluate(X, res.model) + ext(1)


def test_strict_cycle_unsat():
    assert not sat([gt(X, Y), gt(Y, X)]).sat


def test_empty_conjunction_sat():
    assert sat([]).sat


def test_neg_inf_below_every_constant():
    assert not sat([eq(X, NEG_INF), ge(X, num(-1000))]).sat
    res = sat([eq(X, NEG_INF), ge(num(0), X)])
    assert res.sat
    assert res.model["X"] == NEG_OMEGA


def test_max_absorbs_neg_inf():
    cs = [eq(X, smax([NEG_INF, num(3)]))]
    res = sat(cs)
    assert res.sat and evaluate(X, res.model) == ext(3)
    assert not sat(cs + [eq(X, num(2))]).sat


def test_max_disjunction_needs_case_split():
    # max(X, Y) = 5 with X < 5 forces Y = 5
    cs = [eq(smax([X, Y]), num(5)), gt(num(5), X)]
    res = sat(cs)
    assert res.sat and evaluate(Y, res.model) == ext(5)
    assert not sat(cs + [gt(num(5), Y)]).sat


def test_rational_witness_allowed():
    # 2X = 1 has no integer solution but a rational one
    res = sat([eq(mul(num(2), X), num(1))])
    assert res.sat and res.model["X"] == ext(Fraction(1, 2))


def test_ext_order_is_lexicographic():
    assert NEG_OMEGA < ext(-10**9)
    assert Ext(Fraction(5), Fraction(-1)) < Ext(Fraction(0))
    assert ext(float("-inf")) == NEG_OMEGA


def test_check_model_missing_variable():
    assert not check_model([eq(X, num(1))], {})


@settings(max_examples=300)
@given(st.integers(0, 2**31 - 1))
def test_grid_point_implies_sat(seed):
    nvars, cs = random_conjunction(random.Random(seed))
    names = ["X", "Y", "Z", "W"][:nvars]
    constraints = [c.constraint(names) for c in cs]
    res = sat(constraints)
    if res.sat:
        assert check_model(constraints, res.model)
    else:
        assert not grid_feasible(nvars, cs)


def test_sat_campaign_small():
    tally = sat_campaign(1000, seed=7)
    assert tally.ok, tally.failures[:3]
    # the generator must produce both outcomes in quantity
    assert 200 < tally.extra["sat"] < 900


@pytest.mark.parametrize("k", [1, 2, 3])
def test_max_of_var_list(k):
    vs = [SizeVar(f"V{j}") for j in range(k)]
    cs = [eq(smax(vs), num(4))] + [ge(num(4), v) for v in vs]
    res = sat(cs)
    assert res.sat and check_model(cs, res.model)
