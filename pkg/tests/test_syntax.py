"""Formula and sequent syntax, printing, and signature validation."""

import pytest
from hypothesis import given, strategies as st

from actomega.syntax import (
    Bang,
    EMPTY_SIGNATURE,
    FormulaSyntaxError,
    Limp,
    MalformedFile,
    NotUpwardClosed,
    One,
    Plus,
    Rimp,
    Sequent,
    Star,
    Tensor,
    Var,
    With,
    Zero,
    bang_labels,
    complexity,
    make_signature,
    parse_formula,
    parse_sequent,
    parse_signature,
    print_formula,
    print_sequent,
)


# -- strategies --------------------------------------------------------------

atoms = st.sampled_from([Var("p"), Var("q"), Var("r"), One(), Zero()])


def formulas(max_depth=4):
    return st.recursive(
        atoms,
        lambda sub: st.one_of(
            st.builds(Limp, sub, sub),
            st.builds(Rimp, sub, sub),
            st.builds(Tensor, sub, sub),
            st.builds(With, sub, sub),
            st.builds(Plus, sub, sub),
            st.builds(Star, sub),
            st.builds(Bang, st.sampled_from(["s", "c", "e"]), sub),
        ),
        max_leaves=12,
    )


sequents = st.builds(
    Sequent, st.tuples(*[]) | st.lists(formulas(), max_size=4).map(tuple), formulas()
)


# -- parsing and printing ----------------------------------------------------

def test_connective_parsing():
    assert parse_formula("a \\ b") == Limp(Var("a"), Var("b"))
    assert parse_formula("a / b") == Rimp(Var("a"), Var("b"))
    assert parse_formula("a . b") == Tensor(Var("a"), Var("b"))
    assert parse_formula("a & b") == With(Var("a"), Var("b"))
    assert parse_formula("a + b") == Plus(Var("a"), Var("b"))
    assert parse_formula("a*") == Star(Var("a"))
    assert parse_formula("!{s}a") == Bang("s", Var("a"))
    assert parse_formula("1") == One()
    assert parse_formula("0") == Zero()


def test_precedence():
    # unary > product > additive > division
    assert parse_formula("a . b + c") == Plus(Tensor(Var("a"), Var("b")), Var("c"))
    assert parse_formula("a + b \\ c") == Limp(Plus(Var("a"), Var("b")), Var("c"))
    assert parse_formula("a . b*") == Tensor(Var("a"), Star(Var("b")))
    assert parse_formula("(a . b)*") == Star(Tensor(Var("a"), Var("b")))


def test_sequent_parsing():
    s = parse_sequent("a, a \\ b |- b")
    assert s.antecedent == (Var("a"), Limp(Var("a"), Var("b")))
    assert s.succedent == Var("b")
    assert parse_sequent("|- 1").antecedent == ()


def test_parse_errors():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("a +")
    with pytest.raises(FormulaSyntaxError):
        parse_formula("(a")
    with pytest.raises(FormulaSyntaxError):
        parse_sequent("a, b")
    with pytest.raises(FormulaSyntaxError):
        parse_formula("!s a")


@given(formulas())
def test_print_parse_roundtrip(f):
    assert parse_formula(print_formula(f)) == f


@given(sequents)
def test_sequent_print_parse_roundtrip(s):
    assert parse_sequent(print_sequent(s)) == s


# -- complexity and labels ---------------------------------------------------

def test_complexity():
    # counts every variable, constant, and connective occurrence
    assert complexity(Var("p")) == 1
    assert complexity(parse_formula("p . q")) == 3
    assert complexity(parse_formula("(p . q)*")) == 4
    assert complexity(parse_formula("!{s}(p \\ q)")) == 4


@given(formulas())
def test_complexity_subformula_monotone(f):
    assert complexity(f) >= 1
    for attr in ("left", "right", "body"):
        sub = getattr(f, attr, None)
        if sub is not None and not isinstance(sub, str):
            assert complexity(sub) < complexity(f)


def test_bang_labels():
    assert bang_labels(parse_formula("!{a}(p . !{b}q)")) == {"a", "b"}
    assert bang_labels(Var("p")) == frozenset()


# -- signatures --------------------------------------------------------------

def test_make_signature_closure():
    sig = make_signature(
        ["a", "b"], order=[("a", "b")], weakenable=["a", "b"],
        contractible=[], exchangeable=["a", "b"],
    )
    assert ("a", "b") in sig.order
    assert sig.weakenable == frozenset({"a", "b"})


def test_signature_upward_closure_enforced():
    with pytest.raises(NotUpwardClosed):
        make_signature(["a", "b"], order=[("a", "b")], weakenable=["a"])


def test_signature_wc_subset_e():
    # weakening + contraction forces exchange
    with pytest.raises(Exception):
        make_signature(["s"], weakenable=["s"], contractible=["s"])
    make_signature(["s"], weakenable=["s"], contractible=["s"], exchangeable=["s"])


def test_parse_signature():
    sig = parse_signature("labels: a b\norder: a<=b\nW: a b\nC:\nE: a b\n")
    assert sig.labels == frozenset({"a", "b"})
    assert not sig.contractible
    with pytest.raises(MalformedFile):
        parse_signature("order: a<=b\n")
    with pytest.raises(MalformedFile):
        parse_signature("labels: a\nbogus: x\n")


def test_empty_signature():
    assert EMPTY_SIGNATURE.labels == frozenset()
