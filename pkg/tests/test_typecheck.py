from __future__ import annotations

import pytest

from norma.errors import (
    ArityMismatch,
    DuplicateConstructor,
    IndirectRecursion,
    SSAViolation,
    TypeMismatch,
    UnboundVariable,
    UnknownProcedure,
    UnknownType,
)
from norma.parser import parse, parse_term
from norma.syntax import INT, DataType
from norma.typecheck import require_monomorphic, typecheck

IL = "data IntList = Nil | Cons(Int, IntList)\n"


def test_running_types(running):
    typed = typecheck(running)
    assert typed.var_type(6, "l") == DataType("IntList")
    assert typed.var_type(6, "e") == INT
    assert typed.type_of(6, parse_term("3 + 4")) == INT
    assert typed.type_of(6, parse_term("Cons(e, l1)")) == DataType("IntList")


def test_polymorphic_call_instances(polrunning):
    typed = typecheck(polrunning)
    # while_1's second rule calls head at Int
    assert typed.call_instances[(8, 0)] == (INT,)


@pytest.mark.parametrize(
    "src, err",
    [
        (IL + "f :: <IntList> * <IntList>\nf(<x>, <y>) <- true, x := Cons(1, Nil), y := x", SSAViolation),
        (IL + "f :: <Int> * <Int>\nf(<x>, <y>) <- true, z := 1, z := 2, y := z", SSAViolation),
        (IL + "f :: <IntList> * <Int>\nf(<l>, <y>) <- match(l, Cons(e)), y := e", ArityMismatch),
        (IL + "f :: <IntList> * <Int>\nf(<l>, <y>) <- true, y := l + 1", TypeMismatch),
        (IL + "f :: <Int> * <Int>\nf(<x>, <y>) <- true, y := w", UnboundVariable),
        (IL + "f :: <Int> * <Int>\nf(<x>, <y>) <- true, g(<x>, <y>)", UnknownProcedure),
        ("data A = K(Foo)", UnknownType),
        (IL + "f :: <Int> * <Int>\nf(<x>, <y>) <- true, y := Bar", UnknownType),
        ("data A = C\ndata B = C", DuplicateConstructor),
        ("data A = K(B)\ndata B = L(A) | M", IndirectRecursion),
    ],
)
def test_errors(src, err):
    with pytest.raises(err):
        typecheck(parse(src))


def test_error_reports_rule_index():
    with pytest.raises(TypeMismatch) as e:
        typecheck(parse(IL + "f :: <IntList> * <Int>\nf(<l>, <y>) <- true, y := l + 1"))
    assert e.value.rule == 1 and "rule 1" in str(e.value)


def test_require_monomorphic(polrunning, running):
    require_monomorphic(running)
    with pytest.raises(TypeMismatch):
        require_monomorphic(polrunning)
