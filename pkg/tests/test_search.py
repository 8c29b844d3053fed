"""Proof search verdicts, soundness of refutations, and the fixpoint oracle."""

import itertools

import pytest

from actomega.derivation import Bounded, Invalid, check, is_cut_free
from actomega.search import (
    BUDGET_EXHAUSTED,
    OMEGA_SAMPLED,
    Derivable,
    MissingDepthBudget,
    NotDerivable,
    SearchBudget,
    StarPresent,
    Unknown,
    UnknownLabel,
    decide_starfree,
    fixpoint_oracle,
    prove,
    sequent_has_star,
)
from actomega.syntax import (
    EMPTY_SIGNATURE,
    Sequent,
    Var,
    make_signature,
    parse_formula,
    parse_sequent,
)

S = parse_sequent

WCE_S = make_signature(["s"], weakenable=["s"], contractible=["s"], exchangeable=["s"])
E_ONLY = make_signature(["e"], exchangeable=["e"])


def assert_derivable(text, sig=EMPTY_SIGNATURE, budget=SearchBudget()):
    res = prove(S(text), sig, budget)
    assert isinstance(res, Derivable), f"{text}: {res}"
    report = check(res.derivation, sig, mode=Bounded(budget.omega_bound))
    assert not isinstance(report, Invalid), f"{text}: {report}"
    assert is_cut_free(res.derivation)
    assert res.derivation.conclusion == S(text)


# -- derivable sequents ----------------------------------------------------------

def test_multiplicative_core():
    for text in [
        "p |- p",
        "p, p \\ q |- q",
        "q / p, p |- q",
        "p, q |- p . q",
        "p . q |- p . q",
        "|- 1",
        "1, p |- p",
        "|- p / p",
        "|- p \\ p",
        "p |- q / (p \\ q)",
    ]:
        assert_derivable(text)


def test_additive_rules():
    for text in [
        "p & q |- p",
        "p & q |- q",
        "p |- p + q",
        "p + p |- p",
        "p + q |- q + p",
        "0 |- q",
        "0, p |- q",
        "p & (q & r) |- r",
    ]:
        assert_derivable(text)


def test_star_sequents():
    for text in [
        "|- p*",
        "p |- p*",
        "p* |- p*",
        "1* |- 1",
    ]:
        assert_derivable(text)


def test_star_omega_sampling_limits():
    # omega branches whose samples do not generalize into one template are
    # reported as inconclusive rather than claimed derivable or refuted
    for text in ["p, p* |- p*", "p*, p* |- p*", "p* . p* |- p*"]:
        res = prove(S(text), EMPTY_SIGNATURE)
        assert isinstance(res, Unknown), text
        assert res.reason == OMEGA_SAMPLED


def test_subexponential_rules():
    assert_derivable("!{s}p |- p", WCE_S, SearchBudget(depth=4))
    assert_derivable("!{s}p, q |- q", WCE_S, SearchBudget(depth=6))  # weakening
    assert_derivable("q, !{s}p |- p . q", WCE_S, SearchBudget(depth=8))  # exchange
    assert_derivable("!{s}p |- p . p", WCE_S, SearchBudget(depth=8))  # contraction
    assert_derivable("!{s}p |- !{s}p", WCE_S, SearchBudget(depth=6))  # promotion
    assert_derivable("q, !{e}p |- p . q", E_ONLY)  # exchange without weakening


def test_distributivity_needs_contraction():
    # the directed additive distribution is underivable bare ...
    bare = prove(S("a & (b + c) |- (a & b) + (a & c)"), EMPTY_SIGNATURE)
    assert isinstance(bare, NotDerivable)
    # ... but becomes derivable with a contractible bang on the antecedent
    assert_derivable(
        "!{s}(a & (b + c)) |- (a . b) + (a . c)", WCE_S, SearchBudget(depth=10)
    )


# -- refutations are sound ---------------------------------------------------------

def test_not_derivable():
    for text in [
        "p |- q",
        "|- p",
        "p, q |- q . p",
        "p . q |- q . p",
        "p |- p . p",
        "p + q |- p",
        "p |- p & q",
        "q, p \\ q |- q",
        "|- 0",
        "1 |- 0",
    ]:
        assert isinstance(prove(S(text), EMPTY_SIGNATURE), NotDerivable), text


def test_unknown_budget_exhausted():
    res = prove(
        S("!{s}(a & (b + c)) |- (a & b) + (a & c)"), WCE_S, SearchBudget(depth=8)
    )
    assert isinstance(res, Unknown)
    assert res.reason == BUDGET_EXHAUSTED


def test_prove_input_validation():
    with pytest.raises(UnknownLabel):
        prove(S("!{z}p |- p"), EMPTY_SIGNATURE)
    with pytest.raises(MissingDepthBudget):
        prove(S("!{s}p |- p"), WCE_S)  # contraction available, no depth budget


# -- star-free decision procedure ----------------------------------------------------

def test_decide_starfree():
    assert decide_starfree(S("p, p \\ q |- q"), EMPTY_SIGNATURE)
    assert not decide_starfree(S("p |- q"), EMPTY_SIGNATURE)
    # with the empty-antecedent rule forms, |- a / a holds, hence:
    assert decide_starfree(S("b / (a / a) |- b"), EMPTY_SIGNATURE)
    with pytest.raises(StarPresent):
        decide_starfree(S("p* |- p*"), EMPTY_SIGNATURE)


def test_decide_starfree_total_on_small_slice():
    # every antecedent/succedent pair over a tiny formula pool gets a verdict
    pool = [parse_formula(t) for t in ["p", "q", "p . q", "p + q", "p & q", "1"]]
    for a, b in itertools.product(pool, repeat=2):
        verdict = decide_starfree(Sequent((a,), b), EMPTY_SIGNATURE)
        assert isinstance(verdict, bool)
        if a == b:
            assert verdict


def test_sequent_has_star():
    assert sequent_has_star(S("p* |- q"))
    assert sequent_has_star(S("p |- !{s}(q*)"))
    assert not sequent_has_star(S("p . q |- p"))


# -- fixpoint oracle -------------------------------------------------------------

def test_oracle_ranks():
    universe = [S("p |- p"), S("p, p \\ q |- q"), S("q |- q"), S("p |- q")]
    report = fixpoint_oracle(universe, EMPTY_SIGNATURE)
    results = report.results
    assert results[S("p |- p")] == (True, 1)
    assert results[S("q |- q")] == (True, 1)
    assert results[S("p, p \\ q |- q")] == (True, 2)
    assert results[S("p |- q")][0] is False


def test_oracle_agrees_with_search_on_slice():
    pool = [parse_formula(t) for t in ["p", "q", "p . q", "p + q"]]
    universe = [Sequent((a,), b) for a in pool for b in pool]
    # close under the premises the rules will need
    universe += [Sequent((Var("p"), Var("q")), b) for b in pool]
    universe += [Sequent((), b) for b in pool]
    report = fixpoint_oracle(universe, EMPTY_SIGNATURE)
    for a in pool:
        for b in pool:
            s = Sequent((a,), b)
            expected = isinstance(prove(s, EMPTY_SIGNATURE), Derivable)
            assert report.results[s][0] == expected, s


def test_oracle_cut_closure():
    # p |- r needs a cut through q when only hypotheses bridge the gap
    universe = [S("p |- q"), S("q |- r"), S("p |- r"), S("p |- p")]
    plain = fixpoint_oracle(
        universe, EMPTY_SIGNATURE, extra_axioms=frozenset({S("p |- q"), S("q |- r")})
    )
    assert plain.results[S("p |- r")][0] is False
    cut = fixpoint_oracle(
        universe,
        EMPTY_SIGNATURE,
        extra_axioms=frozenset({S("p |- q"), S("q |- r")}),
        allow_cut=True,
    )
    assert cut.results[S("p |- r")][0] is True
