from __future__ import annotations

import json
import random

import pytest

from norma import load_corpus
from norma.abstraction import (
    AbstractCall,
    AbstractionOptions,
    AbstractTick,
    Abstractor,
    abstract_program,
    emit_cost_relations,
    linearize_max,
    to_json,
)
from norma.errors import SumNormNegativeLiteral, UnlinearizedMax
from norma.norms import NormKind, SizeScheme
from norma.parser import parse
from norma.sizes import Constraint, SizeVar, eq, ge, has_max, num, smax
from norma.solver import check_model, evaluate, sat
from norma.syntax import INT, DataType, Match, Pattern, Program

IL = DataType("IntList")
MAX_FULL = AbstractionOptions(kind=NormKind.MAX, inference=False)


def strs(conj):
    return sorted(map(str, conj))


# Rules 4 to 7 of the running program, abstracted with every constituent type
# under the max norm, transcribed by hand from the reference listing.
EXPECTED_RUNNING = {
    4: dict(
        head="factSum(<L_Int, L_IntList>, <Sum'_Int>)",
        guard=[],
        nonneg=["L_IntList >= 0"],
        body=[["Sum_Int = 0"], "while_1(<L_Int, L_IntList, Sum_Int>, <Sum'_Int>)"],
    ),
    5: dict(
        head="while_1(<L_Int, L_IntList, Sum_Int>, <Sum'_Int>)",
        guard=["L_Int = -inf", "L_IntList = 1"],
        nonneg=["L_IntList >= 0"],
        body=[["Sum'_Int = Sum_Int"]],
    ),
    6: dict(
        head="while_1(<L_Int, L_IntList, Sum_Int>, <Sum'_Int>)",
        guard=["L_Int = max(E_Int, L1_Int)", "L_IntList = 1 + L1_IntList"],
        nonneg=["L1_IntList >= 0", "L_IntList >= 0"],
        body=[
            "fact(<E_Int>, <Prod_Int>)",
            ["Sum1_Int = Sum_Int + Prod_Int"],
            "while_1(<L1_Int, L1_IntList, Sum1_Int>, <Sum'_Int>)",
        ],
    ),
    7: dict(
        head="main(<>, <R'_Int>)",
        guard=[],
        nonneg=["L_IntList >= 0"],
        body=[["L_IntList = 2", "L_Int = 2"], "factSum(<L_Int, L_IntList>, <R'_Int>)"],
    ),
}


def shape(r):
    head = str(r).split(" <- ")[0].split(": ", 1)[1]
    body = [strs(b) if isinstance(b, tuple) else str(b) for b in r.body]
    return dict(head=head, guard=strs(r.guard), nonneg=strs(r.nonneg), body=body)


@pytest.mark.parametrize("i", [4, 5, 6, 7])
def test_running_rules_match_reference_listing(running, i):
    ap = abstract_program(running, MAX_FULL)
    want = dict(EXPECTED_RUNNING[i])
    want["body"] = [sorted(b) if isinstance(b, list) else b for b in want["body"]]
    assert shape(ap.rule(i)) == want


def test_rule_count_preserved(running):
    ap = abstract_program(running)
    assert [r.index for r in ap.rules] == [r.index for r in running.rules]


def test_arity_uniform_per_procedure(running):
    for opts in (AbstractionOptions(), MAX_FULL, AbstractionOptions(kind=NormKind.SUM)):
        ap = abstract_program(running, opts)
        for proc in running.procs:
            arities = {(len(r.ins), len(r.outs)) for r in ap.proc_rules(proc.name)}
            assert len(arities) == 1


def test_inferred_variables_subset_of_full(running):
    full = abstract_program(running, MAX_FULL)
    inferred = abstract_program(running)
    for a, b in zip(inferred.rules, full.rules):
        assert {v.name for v in a.size_vars()} <= {v.name for v in b.size_vars()}


def test_inference_drops_accumulators(running):
    ap = abstract_program(running)
    assert str(ap.rule(6).body[0]) == "fact(<E_Int>, <>)"
    assert ap.rule(4).body[0] == ()


def test_match_cons_constant_list():
    prog = parse("data IntList = Nil | Cons(Int, IntList)\np :: <IntList> * <> \np(<z>, <>) <- true, tick(0)\n")
    ab = Abstractor(prog, SizeScheme(NormKind.MAX), None)
    i = prog.rules[0].index
    # a constant pattern is not expressible in guards, so measure the term directly
    from norma.parser import parse_term

    t = parse_term("Cons(6, Nil)")
    ctx = {"z": IL}
    z_int = ab.scheme.symbolic(t, INT, ctx, prog)
    z_il = ab.scheme.symbolic(t, IL, ctx, prog)
    # max(6, 0) folds to 6
    assert (str(z_int), str(z_il)) == ("6", "2")
    assert i == 1


def test_nonmatch_is_top(lengthp):
    ap = abstract_program(lengthp)
    assert all("Nil" not in str(c) for c in ap.rule(2).guard)
    # no l1 size constraint besides the pair decomposition
    assert not any(str(c).startswith("L1_IntList = 1") for c in ap.rule(2).guard)


def test_price_abstraction_is_nondeterministic():
    ap = abstract_program(load_corpus("price"))
    assert len(ap.rules) == 2
    for r in ap.rules:
        assert "X_Dir = 1" in strs(r.guard)
    assert strs(ap.rules[0].full_guard) == strs(ap.rules[1].full_guard)


def test_empty_program():
    ap = abstract_program(Program.build([], []))
    assert ap.rules == ()
    assert emit_cost_relations(ap, "cofloco-like") == ""
    assert to_json(ap) == {"rules": []}


def test_annotated_lengthp_distinguishes_positions(lengthp):
    ap = abstract_program(lengthp, AbstractionOptions(annotated=True))
    r1 = ap.rule(1)
    names = {v.name for v in r1.ins}
    assert {"P_IntList@Pair.1", "P_IntList@Pair.2"} <= names
    guard = strs(r1.guard)
    assert "P_IntList@Pair.1 = L1_IntList" in guard
    assert "L1_IntList = 1" in guard
    # the first rule forces the first component to be empty
    first = SizeVar("p", (IL, (("Pair", 1),)))
    assert first.name == "P_IntList@Pair.1"
    assert not sat(list(r1.full_guard) + [Constraint(">", first, num(1))]).sat
    assert not sat(list(r1.full_guard) + [Constraint(">", num(1), first)]).sat


def test_annotated_int_only_procedure_matches_plain(running):
    plain = abstract_program(running)
    annotated = abstract_program(running, AbstractionOptions(annotated=True))
    for i in (1, 2, 3):
        assert str(plain.rule(i)) == str(annotated.rule(i))


def test_sum_rejects_negative_literals():
    prog = parse("p :: <Int> * <Int>\np(<x>, <y>) <- true, y := x - 3\n")
    abstract_program(prog, AbstractionOptions(kind=NormKind.SUM))
    neg = parse("p :: <Int> * <Int>\np(<x>, <y>) <- true, y := -3\n")
    with pytest.raises(SumNormNegativeLiteral):
        abstract_program(neg, AbstractionOptions(kind=NormKind.SUM))


# linearization ---------------------------------------------------------------

L, E, L1 = SizeVar("L", INT), SizeVar("E", INT), SizeVar("L1", INT)


def test_linearize_int_max_has_no_sum_bound():
    out = linearize_max((eq(L, smax([E, L1])),))
    assert strs(out) == sorted(["L_Int = Max1", "Max1 >= E_Int", "Max1 >= L1_Int"])


def test_linearize_with_nonneg_arguments():
    X, Y = SizeVar("X", INT), SizeVar("Y", IL)
    out = linearize_max((eq(X, smax([num(5), Y])), ge(Y, num(0))))
    assert strs(out) == sorted(["X_Int = Max1", "Max1 >= 5", "Max1 >= Y_IntList", "Y_IntList + 5 >= Max1", "Y_IntList >= 0"])


def test_linearize_max_free_unchanged():
    c = (eq(L, E), ge(E, num(0)))
    assert linearize_max(c) == c


def test_linearization_extends_every_model():
    rng = random.Random(3)
    X, Y, Z = SizeVar("X"), SizeVar("Y"), SizeVar("Z")
    for _ in range(500):
        args = [rng.choice([Y, Z, num(rng.randint(-3, 3))]) for _ in range(rng.randint(2, 3))]
        model = {"Y": rng.randint(-4, 4), "Z": rng.randint(-4, 4)}
        model["X"] = evaluate(smax(args), model)
        conj = (eq(X, smax(args)), ge(Z, num(0))) if model["Z"] >= 0 else (eq(X, smax(args)),)
        lin = linearize_max(conj)
        assert check_model(lin, {**model, "Max1": model["X"]}), (conj, lin, model)


def test_linearize_rule_removes_all_max(running):
    ap = abstract_program(running, AbstractionOptions(linearize=True))
    for r in ap.rules:
        assert not any(has_max(c.lhs) or has_max(c.rhs) for c in r.constraints())


# emission ----------------------------------------------------------------------


def test_cofloco_costs_from_ticks():
    ap = abstract_program(load_corpus("ticks"), AbstractionOptions(linearize=True, neg_inf="min-const"))
    assert [r.cost for r in ap.rules] == [1, 5]
    text = emit_cost_relations(ap, "cofloco-like")
    assert text.splitlines()[1].startswith("eq(walk(L_IntList),5,[walk(T_IntList)],")


def test_tick_free_costs_zero(running):
    ap = abstract_program(running, AbstractionOptions(linearize=True, neg_inf="zero"))
    assert all(r.cost == 0 for r in ap.rules)
    for line in emit_cost_relations(ap, "cofloco-like").splitlines():
        assert ",0,[" in line


def test_cofloco_rule5_neg_inf_policies(running):
    for policy, const in (("zero", "0"), ("min-const", "0")):
        ap = abstract_program(running, AbstractionOptions(inference=False, linearize=True, neg_inf=policy))
        line = emit_cost_relations(ap, "cofloco-like").splitlines()[4]
        assert line == (
            "eq(while_1(L_Int,L_IntList,Sum_Int,Sum_p_Int),0,[],"
            f"[L_Int={const},L_IntList=1,L_IntList>=0,Sum_p_Int=Sum_Int])."
        )


def test_cofloco_requires_linearization(running):
    with pytest.raises(UnlinearizedMax):
        emit_cost_relations(abstract_program(running, AbstractionOptions(neg_inf="zero")), "cofloco-like")


def test_native_json_round_trips(running):
    text = emit_cost_relations(abstract_program(running), "native-json")
    data = json.loads(text)
    assert [r["index"] for r in data["rules"]] == list(range(1, 8))
    call = data["rules"][6]["body"][1]
    assert call == {"kind": "call", "name": "factSum", "in": ["L_Int", "L_IntList"], "out": []}


def test_tick_kept_in_body():
    ap = abstract_program(load_corpus("ticks"))
    assert [b for b in ap.rule(2).body if isinstance(b, AbstractTick)] == [AbstractTick(3), AbstractTick(2)]
    assert isinstance(ap.rule(2).body[2], AbstractCall)


def test_match_guard_constructor():
    g = Match("l", Pattern("Cons", ("e", "l1")))
    prog = load_corpus("running")
    ab = Abstractor(prog, SizeScheme(NormKind.MAX), None)
    assert strs(ab.guard(6, g)) == ["L_Int = max(E_Int, L1_Int)", "L_IntList = 1 + L1_IntList"]
