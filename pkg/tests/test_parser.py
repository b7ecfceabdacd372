from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from norma import corpus_text, load_corpus
from norma.errors import ParseError
from norma.parser import parse, parse_term, pretty, pretty_term
from norma.syntax import BinOp, Ctor, DataType, Tick, TypeVar, Var

CORPUS = ["running", "trees", "price", "lengthp", "polrunning", "ticks"]


def test_running_shape(running):
    assert running.n_rules == 7
    assert len(running.datas) == 1
    assert [c.name for c in running.datas[0].ctors] == ["Nil", "Cons"]


def test_empty_file():
    p = parse("")
    assert p.datas == () and p.procs == ()


def test_polymorphic_data_decl():
    p = parse("data L<A> = N | C(A, L<A>)")
    (d,) = p.datas
    assert d.params == ("A",)
    assert d.ctors[1].args == (TypeVar("A"), DataType("L", (TypeVar("A"),)))


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_round_trip(name):
    p = load_corpus(name)
    assert parse(pretty(p)) == p
    assert pretty(parse(pretty(p))) == pretty(p)


def test_tick_printed():
    p = load_corpus("ticks")
    assert "tick(3)" in pretty(p)
    assert Tick(3) in p.rule(2).body


def test_nested_constructor_printing():
    t = Ctor("Cons", (1, Ctor("Cons", (2, Ctor("Nil")))))
    assert pretty_term(t) == "Cons(1, Cons(2, Nil))"


def test_comments_and_spans():
    with pytest.raises(ParseError) as e:
        parse("// header\ndata T = A |\n")
    assert e.value.span is not None and e.value.span.line >= 2


@pytest.mark.parametrize(
    "bad",
    [
        "data t = A",
        "f :: <Int> * <Int>\nf(<x>, <y>) <- x >, y := 1",
        "f :: <Int> * <Int>\nf(<x>, <y>) <- true, y := %",
    ],
)
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse(bad)


def test_source_spans_point_at_offender():
    with pytest.raises(ParseError) as e:
        parse("data T = A\n\nf :: <T> * <T>\nf(<x>, <y>) <- true, y := ?")
    assert e.value.span.line == 4


_ints = st.integers(min_value=-20, max_value=20)
_vars = st.sampled_from(["x", "y", "z"]).map(Var)


def _arith(children):
    return st.builds(BinOp, st.sampled_from(["+", "-", "*"]), children, children)


arith_terms = st.recursive(_ints | _vars, _arith, max_leaves=8)


@given(arith_terms)
def test_term_round_trip(t):
    assert parse_term(pretty_term(t)) == t


def test_corpus_text_has_declarations():
    assert "data IntList" in corpus_text("running")
