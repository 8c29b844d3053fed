"""Ordinal measures: number sequences, CNF ordinals, and eta complexity."""

from hypothesis import given, strategies as st

from actomega.ordinal import (
    IOTA,
    NSEQ_ZERO,
    CnfOrdinal,
    cnf_cmp,
    eta_formula,
    eta_sequent,
    nseq,
    nseq_add,
    nseq_cmp,
    nseq_lift,
    nu,
)
from actomega.syntax import parse_formula, parse_sequent


nseqs = st.lists(st.integers(min_value=0, max_value=9), max_size=5).map(nseq)


# -- number sequences ----------------------------------------------------------

def test_nseq_trims_trailing_zeros():
    assert nseq([1, 0, 2, 0, 0]) == nseq([1, 0, 2])
    assert nseq([0, 0]) == NSEQ_ZERO
    assert nseq([1]) == IOTA


def test_nseq_cmp_examples():
    # longer sequences dominate; ties broken from the highest position down
    assert nseq_cmp(NSEQ_ZERO, IOTA) == -1
    assert nseq_cmp(nseq([9, 9]), nseq([0, 0, 1])) == -1
    assert nseq_cmp(nseq([0, 2]), nseq([5, 1])) == 1
    assert nseq_cmp(nseq([3, 2]), nseq([1, 2])) == 1
    assert nseq_cmp(nseq([3, 2]), nseq([3, 2])) == 0


@given(nseqs, nseqs)
def test_nseq_cmp_antisymmetric(a, b):
    assert nseq_cmp(a, b) == -nseq_cmp(b, a)
    assert (nseq_cmp(a, b) == 0) == (a == b)


@given(nseqs, nseqs, nseqs)
def test_nseq_cmp_transitive(a, b, c):
    ordered = sorted([a, b, c], key=lambda x: (len(x.coeffs), tuple(reversed(x.coeffs))))
    assert nseq_cmp(ordered[0], ordered[1]) <= 0
    assert nseq_cmp(ordered[1], ordered[2]) <= 0
    assert nseq_cmp(ordered[0], ordered[2]) <= 0


@given(nseqs, nseqs)
def test_nseq_add_commutative_and_monotone(a, b):
    assert nseq_add(a, b) == nseq_add(b, a)
    assert nseq_add(a, NSEQ_ZERO) == a
    if b != NSEQ_ZERO:
        assert nseq_cmp(nseq_add(a, b), a) == 1


def test_nseq_lift():
    assert nseq_lift(NSEQ_ZERO) == NSEQ_ZERO
    assert nseq_lift(nseq([2, 1])) == nseq([0, 2, 1])
    # lifting strictly increases any nonzero sequence
    assert nseq_cmp(nseq_lift(IOTA), IOTA) == 1


# -- CNF ordinals and the order isomorphism ------------------------------------

def test_nu_examples():
    assert nu(NSEQ_ZERO) == CnfOrdinal(())
    assert nu(IOTA) == CnfOrdinal(((0, 1),))
    assert str(nu(nseq([2, 2]))) == "w*2 + 2"
    assert str(nu(nseq([0, 0, 3]))) == "w^2*3"


@given(nseqs, nseqs)
def test_nu_is_an_order_isomorphism(a, b):
    assert cnf_cmp(nu(a), nu(b)) == nseq_cmp(a, b)


@given(nseqs, nseqs)
def test_nu_respects_addition_order(a, b):
    # natural (Hessenberg) sum ordering transfers through nu
    total = nseq_add(a, b)
    assert cnf_cmp(nu(total), nu(a)) >= 0
    assert cnf_cmp(nu(total), nu(b)) >= 0


# -- eta complexity ------------------------------------------------------------

def test_eta_formula_examples():
    assert eta_formula(parse_formula("p")) == IOTA
    assert eta_formula(parse_formula("1")) == IOTA
    assert eta_formula(parse_formula("0")) == IOTA
    assert eta_formula(parse_formula("p . q")) == nseq([3])
    assert eta_formula(parse_formula("p*")) == nseq([1, 1])
    assert eta_formula(parse_formula("p**")) == nseq([1, 1, 1])
    assert eta_formula(parse_formula("!{s}p")) == nseq([2])
    assert eta_formula(parse_formula("(p . q)*")) == nseq([1, 3])


def test_eta_sequent_examples():
    assert eta_sequent(parse_sequent("p* |- p*")) == nseq([2, 2])
    assert eta_sequent(parse_sequent("|- 1")) == IOTA
    assert eta_sequent(parse_sequent("p, p \\ q |- q")) == nseq([5])


def test_eta_star_dominates_any_starfree_pile():
    # a single star outweighs arbitrarily large star-free measures
    starfree = eta_formula(parse_formula("((p.q).(p.q)).((p.q).(p.q))"))
    assert nseq_cmp(eta_formula(parse_formula("p*")), starfree) == 1
