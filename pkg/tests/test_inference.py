from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from norma import load_corpus
from norma.errors import LengthMismatch, RenameClash
from norma.generate import random_case
from norma.inference import (
    InferenceOptions,
    empty_program_mapping,
    extend_to_program,
    full_deptypes_mapping,
    infer_relevant_types,
    iteration_bound,
    pm_combine,
    pm_leq,
    rm_combine,
    rm_leq,
    rm_rename,
    rm_restrict,
    transfer_guard,
    transfer_program,
    transfer_rule,
    transfer_stmt,
)
from norma.oracle import oracle_useful_types
from norma.parser import parse
from norma.syntax import INT, Assign, Compare, DataType, Match, Pattern, TrueGuard, Var

IL = DataType("IntList")
TREE = DataType("Tree")
F = frozenset

MU1 = {"x": F({INT}), "y": F({INT, IL})}
MU2 = {"y": F({IL})}
MU3 = {"y": F({INT})}


def test_operation_examples():
    assert rm_combine(MU2, MU3) == {"y": F({INT, IL})}
    assert rm_leq(MU2, MU1) and not rm_leq(MU1, MU2)
    assert not rm_leq(MU2, MU3)
    assert rm_leq(MU1, MU1)
    assert rm_restrict(MU1, {"x"}) == {"x": F({INT})}
    assert rm_restrict(MU1, set()) == {}
    assert rm_rename(MU1, ("x", "y"), ("a", "b")) == {"a": F({INT}), "b": F({INT, IL})}


def test_rename_preconditions():
    with pytest.raises(RenameClash):
        rm_rename(MU1, ("x",), ("y",))
    with pytest.raises(RenameClash):
        rm_rename(MU1, ("q",), ("a",))


def test_extend_to_program():
    assert extend_to_program({}, 3, 2) == ({}, {}, {})
    assert extend_to_program({"x": F({INT})}, 2, 1) == ({"x": F({INT})}, {})
    with pytest.raises(IndexError):
        extend_to_program({}, 2, 3)
    with pytest.raises(LengthMismatch):
        pm_combine(({},), ({}, {}))


# ---------------------------------------------------------------------------
# Transfer functions on the running example
# ---------------------------------------------------------------------------


def _theta(n, **entries):
    theta = [dict() for _ in range(n)]
    for key, types in entries.items():
        rule, var = key.split("_", 1)
        theta[int(rule[1:]) - 1][var] = F(types)
    return tuple(theta)


def test_transfer_guard(running):
    theta = empty_program_mapping(7)
    assert transfer_guard(running, 2, Compare(">=", 0, Var("n")), theta) == {"n": F({INT})}
    assert transfer_guard(running, 2, TrueGuard(), theta) == {}
    th = _theta(7, r6_e={INT})
    got = transfer_guard(running, 6, Match("l", Pattern("Cons", ("e", "l1"))), th)
    assert got["l"] >= {INT, IL}


def test_transfer_stmt(running):
    call = running.rule(1).body[1]
    got = transfer_stmt(running, 1, call, _theta(7, r2_n={INT}))
    assert INT in got[0]["n"]
    call = running.rule(6).body[0]
    got = transfer_stmt(running, 6, call, _theta(7, r1_n={INT}))
    assert INT in got[5]["e"]
    got = transfer_stmt(running, 1, Assign("x", 5), _theta(7, r1_x={INT}))
    assert got == empty_program_mapping(7)


def test_transfer_rule(running):
    got = transfer_rule(running, 2, empty_program_mapping(7))
    assert INT in got[1]["n"]


def test_single_rule_procedure_adds_nothing_new():
    p = parse("f :: <Int> * <Int>\nf(<x>, <y>) <- true, y := x")
    theta = ({"y": F({INT})},)
    got = transfer_rule(p, 1, theta)
    assert got == ({"y": F({INT}), "x": F({INT})},)


def test_running_fixpoint(running):
    res = infer_relevant_types(running, keep_chain=True)
    nu = res.nu
    assert INT in nu(2, "n") and INT in nu(1, "n")
    assert INT in nu(6, "e") and INT in nu(6, "l")
    assert {INT, IL} <= nu(4, "l")
    assert res.iterations <= 10
    assert transfer_program(running, res.mapping) == res.mapping
    for a, b in zip(res.chain, res.chain[1:]):
        assert pm_leq(a, b)
    assert pm_leq(res.mapping, full_deptypes_mapping(running).mapping)


def test_inference_json(running):
    data = infer_relevant_types(running).to_json()
    assert data["rules"][3]["vars"]["l"] == ["Int", "IntList"]


def test_no_guards_gives_empty_fixpoint():
    p = parse("f :: <Int> * <Int>\nf(<x>, <y>) <- true, y := x + 1")
    res = infer_relevant_types(p)
    assert all(not types for mu in res.mapping for types in mu.values())
    assert res.relevant() == {1: {"x": F(), "y": F()}}


def test_lengthp(lengthp):
    pair = DataType("IntListPair")
    lit = infer_relevant_types(lengthp, InferenceOptions("literal"))
    assert lit.nu(1, "p") == {IL}
    assert lit.nu(1, "l1") == {IL} and lit.nu(1, "l2") == {IL}
    default = infer_relevant_types(lengthp)
    assert default.nu(1, "p") == {IL, pair}


def test_literal_mode_misses_sum_type():
    price = load_corpus("price")
    dir_ = DataType("Dir")
    lit = infer_relevant_types(price, InferenceOptions("literal"))
    assert dir_ not in lit.nu(1, "x")
    # the oracle shows Dir matters for x: literal transfer table is unsound here
    assert oracle_useful_types(price, 1, "x", dir_)
    assert dir_ in infer_relevant_types(price).nu(1, "x")


def test_unknown_mode():
    with pytest.raises(ValueError):
        InferenceOptions("bogus")


@pytest.mark.parametrize("seed", range(40))
def test_fixpoint_on_generated(seed):
    case = random_case(seed)
    res = infer_relevant_types(case.program)
    assert res.iterations <= iteration_bound(case.program) + 1
    assert transfer_program(case.program, res.mapping) == res.mapping
    assert pm_leq(res.mapping, full_deptypes_mapping(case.program).mapping)


# ---------------------------------------------------------------------------
# Lattice laws
# ---------------------------------------------------------------------------

VARS = ["x", "y", "z", "w"]
TYPES = [INT, IL, TREE]
N = 3
LAW_EXAMPLES = 1500

rule_mappings = st.dictionaries(st.sampled_from(VARS), st.frozensets(st.sampled_from(TYPES)), max_size=4)
program_mappings = st.tuples(*[rule_mappings] * N)


@settings(max_examples=LAW_EXAMPLES)
@given(rule_mappings, rule_mappings)
def test_combine_commutative(a, b):
    assert rm_combine(a, b) == rm_combine(b, a)


@settings(max_examples=LAW_EXAMPLES)
@given(rule_mappings, rule_mappings, rule_mappings)
def test_combine_associative(a, b, c):
    assert rm_combine(rm_combine(a, b), c) == rm_combine(a, rm_combine(b, c))


@settings(max_examples=LAW_EXAMPLES)
@given(rule_mappings)
def test_combine_idempotent_and_identity(a):
    assert rm_combine(a, a) == a
    assert rm_combine(a, {}) == a == rm_combine({}, a)


@settings(max_examples=LAW_EXAMPLES)
@given(rule_mappings, rule_mappings, rule_mappings)
def test_leq_order(a, b, c):
    assert rm_leq(a, a)
    ab = rm_combine(a, b)
    abc = rm_combine(ab, c)
    assert rm_leq(a, ab) and rm_leq(ab, abc) and rm_leq(a, abc)
    if rm_leq(a, b) and rm_leq(b, a):
        assert a == b
    if rm_leq(a, b) and rm_leq(b, c):
        assert rm_leq(a, c)


@settings(max_examples=LAW_EXAMPLES)
@given(rule_mappings, rule_mappings)
def test_leq_antisymmetric(a, b):
    ab = rm_combine(a, b)
    assert rm_leq(ab, rm_combine(b, a)) and rm_leq(rm_combine(b, a), ab)
    assert rm_combine(b, a) == ab


@settings(max_examples=LAW_EXAMPLES)
@given(program_mappings, program_mappings, program_mappings)
def test_program_mapping_laws(a, b, c):
    assert pm_combine(a, b) == pm_combine(b, a)
    assert pm_combine(pm_combine(a, b), c) == pm_combine(a, pm_combine(b, c))
    assert pm_combine(a, a) == a
    assert pm_combine(a, empty_program_mapping(N)) == a
    assert pm_leq(a, a) and pm_leq(a, pm_combine(a, b))


_RUNNING = load_corpus("running")
_RUNNING_VARS = [r.variables() for r in _RUNNING.rules]
running_mappings = st.tuples(
    *[
        st.dictionaries(st.sampled_from(vs), st.frozensets(st.sampled_from([INT, IL])), max_size=len(vs))
        for vs in _RUNNING_VARS
    ]
)


@settings(max_examples=LAW_EXAMPLES)
@given(running_mappings, running_mappings)
def test_transfer_monotone(a, b):
    ab = pm_combine(a, b)
    assert pm_leq(transfer_program(_RUNNING, a), transfer_program(_RUNNING, ab))
