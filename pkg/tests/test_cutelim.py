"""Cut and mix elimination: principal pairs, permutations, omega templates."""

import itertools

import pytest

from actomega.cutelim import (
    BoundedFamily,
    CutConfiguration,
    MixConfiguration,
    NonUniformTemplate,
    eliminate_all,
    eliminate_mix,
    eliminate_one_cut,
)
from actomega.derivation import (
    Derivation,
    OmegaTemplate,
    Rep,
    RuleId,
    RuleInstance,
    Valid,
    ValidUpTo,
    check,
    is_cut_free,
    lin_param,
)
from actomega.search import Derivable, SearchBudget, prove
from actomega.syntax import (
    EMPTY_SIGNATURE,
    Sequent,
    Star,
    make_signature,
    parse_formula,
    parse_sequent,
)

S = parse_sequent
F = parse_formula

WCE_S = make_signature(["s"], weakenable=["s"], contractible=["s"], exchangeable=["s"])


def axiom(text):
    return Derivation(S(text), RuleInstance(RuleId.ID))


def derivation_of(text, sig=EMPTY_SIGNATURE, depth=None):
    budget = SearchBudget(depth=depth) if depth else SearchBudget()
    res = prove(S(text), sig, budget)
    assert isinstance(res, Derivable), f"{text}: {res}"
    return res.derivation


def assert_good(out, goal_text, sig=EMPTY_SIGNATURE):
    assert out.conclusion == S(goal_text)
    assert is_cut_free(out)
    assert isinstance(check(out, sig), (Valid, ValidUpTo))


def omega_star_identity():
    p, ps = F("p"), F("p*")
    body = Derivation(
        Sequent((Rep(p, lin_param("n")),), ps),
        RuleInstance(
            RuleId.ITER,
            inner=RuleInstance(RuleId.STAR_R, position=0),
            iter_count=lin_param("n"),
        ),
        (axiom("p |- p"),),
    )
    return Derivation(
        Sequent((ps,), ps),
        RuleInstance(RuleId.STAR_L_OMEGA, position=0),
        (),
        OmegaTemplate("n", body),
    )


# -- single cuts -------------------------------------------------------------------

def test_cut_against_left_axiom_is_identity():
    right = Derivation(
        S("b, a |- b . a"),
        RuleInstance(RuleId.TENSOR_R, block=1),
        (axiom("b |- b"), axiom("a |- a")),
    )
    out = eliminate_one_cut(CutConfiguration(axiom("a |- a"), right, 1))
    assert out is right


def test_cut_principal_tensor_pair():
    tens_r = Derivation(
        S("a, b |- a . b"),
        RuleInstance(RuleId.TENSOR_R, block=1),
        (axiom("a |- a"), axiom("b |- b")),
    )
    tens_l = Derivation(
        S("a . b |- a . b"), RuleInstance(RuleId.TENSOR_L, position=0), (tens_r,)
    )
    trace = []
    out = eliminate_one_cut(CutConfiguration(tens_r, tens_l, 0), trace=trace)
    assert_good(out, "a, b |- a . b")
    assert trace and all(isinstance(step[0], str) for step in trace)


def test_cut_principal_star_pair():
    p, ps = F("p"), Star(F("p"))
    star_r2 = Derivation(
        Sequent((p, p), ps),
        RuleInstance(RuleId.STAR_R, count=2, splits=(1, 1)),
        (axiom("p |- p"), axiom("p |- p")),
    )
    out = eliminate_one_cut(CutConfiguration(star_r2, omega_star_identity(), 0))
    assert_good(out, "p, p |- p*")
    assert isinstance(check(out, EMPTY_SIGNATURE), Valid)


CUT_ROUNDTRIPS = [
    ("p |- p", "p, p \\ q |- q", 0),
    ("p, p \\ q |- q", "q, q \\ r |- r", 0),
    ("|- q / q", "q / q, q |- q", 0),
    ("p . q |- p . q", "p . q |- p . q", 0),
    ("p, q |- p . q", "p . q, (p . q) \\ r |- r", 0),
    ("p |- p + q", "p + q |- q + p", 0),
    ("p & q |- p", "p, p \\ r |- r", 0),
    ("1* |- 1", "1, r |- r", 0),
    ("p |- p*", "p* |- (p+q)*", 0),
]


@pytest.mark.parametrize("left_text,right_text,pos", CUT_ROUNDTRIPS)
def test_cut_roundtrips(left_text, right_text, pos):
    left, right = derivation_of(left_text), derivation_of(right_text)
    lseq, rseq = S(left_text), S(right_text)
    out = eliminate_one_cut(CutConfiguration(left, right, pos))
    goal = Sequent(
        rseq.antecedent[:pos] + lseq.antecedent + rseq.antecedent[pos + 1 :],
        rseq.succedent,
    )
    assert out.conclusion == goal
    assert is_cut_free(out)
    assert isinstance(check(out, EMPTY_SIGNATURE), (Valid, ValidUpTo))


def test_cut_small_fuzz():
    # every composable pair from a small pool eliminates to a valid cut-free proof
    pool = [
        "p |- p",
        "p, p \\ q |- q",
        "q |- q + p",
        "q + p |- p + q",
        "p & q |- q",
        "q, r |- q . r",
    ]
    derivs = {t: derivation_of(t) for t in pool}
    tried = 0
    for lt, rt in itertools.product(pool, repeat=2):
        lseq, rseq = S(lt), S(rt)
        for pos, f in enumerate(rseq.antecedent):
            if f != lseq.succedent:
                continue
            tried += 1
            out = eliminate_one_cut(CutConfiguration(derivs[lt], derivs[rt], pos))
            goal = Sequent(
                rseq.antecedent[:pos] + lseq.antecedent + rseq.antecedent[pos + 1 :],
                rseq.succedent,
            )
            assert out.conclusion == goal, (lt, rt, pos)
            assert is_cut_free(out)
            assert isinstance(check(out, EMPTY_SIGNATURE), (Valid, ValidUpTo))
    assert tried >= 7


def test_cut_with_contraction_signature():
    left = Derivation(
        S("!{s}p |- !{s}p"),
        RuleInstance(RuleId.BANG_R, index=0),
        (
            Derivation(
                S("!{s}p |- p"),
                RuleInstance(RuleId.BANG_L, position=0),
                (axiom("p |- p"),),
            ),
        ),
    )
    right = derivation_of("!{s}p |- p . p", WCE_S, depth=8)
    out = eliminate_one_cut(CutConfiguration(left, right, 0))
    assert_good(out, "!{s}p |- p . p", WCE_S)


# -- non-uniform omega interaction -------------------------------------------------

def test_nonuniform_template_raises_then_bounded_family():
    left = omega_star_identity()
    right = derivation_of("p* |- (p+q)*")
    with pytest.raises(NonUniformTemplate):
        eliminate_one_cut(CutConfiguration(left, right, 0))
    fam = eliminate_one_cut(CutConfiguration(left, right, 0), fallback_bound=3)
    assert isinstance(fam, BoundedFamily)
    assert len(fam.instances) == 4
    p = F("p")
    for n, inst in enumerate(fam.instances):
        assert inst.conclusion == Sequent((p,) * n, F("(p+q)*"))
        assert is_cut_free(inst)
        assert isinstance(check(inst, EMPTY_SIGNATURE), (Valid, ValidUpTo))


# -- mix elimination ---------------------------------------------------------------

def promotion():
    return Derivation(
        S("!{s}p |- !{s}p"),
        RuleInstance(RuleId.BANG_R, index=0),
        (
            Derivation(
                S("!{s}p |- p"),
                RuleInstance(RuleId.BANG_L, position=0),
                (axiom("p |- p"),),
            ),
        ),
    )


def dereliction_one():
    return Derivation(
        S("!{s}p |- p"), RuleInstance(RuleId.BANG_L, position=0), (axiom("p |- p"),)
    )


def test_mix_right_axiom():
    ax = Derivation(S("!{s}p |- !{s}p"), RuleInstance(RuleId.ID))
    out = eliminate_mix(MixConfiguration(promotion(), ax, (0,), 0))
    assert_good(out, "!{s}p |- !{s}p", WCE_S)


def test_mix_principal_two_occurrences():
    der2 = Derivation(
        S("!{s}p, !{s}p |- p . p"),
        RuleInstance(RuleId.BANG_L, position=0),
        (
            Derivation(
                S("p, !{s}p |- p . p"),
                RuleInstance(RuleId.BANG_L, position=1),
                (
                    Derivation(
                        S("p, p |- p . p"),
                        RuleInstance(RuleId.TENSOR_R, block=1),
                        (axiom("p |- p"), axiom("p |- p")),
                    ),
                ),
            ),
        ),
    )
    assert check(der2, WCE_S) == Valid()
    out = eliminate_mix(MixConfiguration(promotion(), der2, (0, 1), 0))
    assert_good(out, "!{s}p |- p . p", WCE_S)


def test_mix_occurrences_split_across_branches():
    star2 = Derivation(
        S("!{s}p, !{s}p |- p*"),
        RuleInstance(RuleId.STAR_R, count=2, splits=(1, 1)),
        (dereliction_one(), dereliction_one()),
    )
    assert check(star2, WCE_S) == Valid()
    out = eliminate_mix(MixConfiguration(promotion(), star2, (0, 1), 0))
    assert_good(out, "!{s}p |- p*", WCE_S)


def test_mix_weakening_on_active_occurrence():
    weak_then = Derivation(
        S("!{s}p, !{s}p |- p"),
        RuleInstance(RuleId.WEAK, position=0),
        (dereliction_one(),),
    )
    assert check(weak_then, WCE_S) == Valid()
    out = eliminate_mix(MixConfiguration(promotion(), weak_then, (0, 1), 0))
    assert_good(out, "!{s}p |- p", WCE_S)


def test_mix_contraction_below():
    der2 = Derivation(
        S("!{s}p, !{s}p |- p . p"),
        RuleInstance(RuleId.BANG_L, position=0),
        (
            Derivation(
                S("p, !{s}p |- p . p"),
                RuleInstance(RuleId.BANG_L, position=1),
                (
                    Derivation(
                        S("p, p |- p . p"),
                        RuleInstance(RuleId.TENSOR_R, block=1),
                        (axiom("p |- p"), axiom("p |- p")),
                    ),
                ),
            ),
        ),
    )
    nc = Derivation(
        S("!{s}p |- p . p"),
        RuleInstance(RuleId.NCONTR1, positions=(0, 1)),
        (der2,),
    )
    assert check(nc, WCE_S) == Valid()
    out = eliminate_mix(MixConfiguration(promotion(), nc, (0,), 0))
    assert_good(out, "!{s}p |- p . p", WCE_S)


# -- full elimination --------------------------------------------------------------

def test_eliminate_all_stacked_cuts():
    inner = Derivation(
        S("p, p \\ q |- q"),
        RuleInstance(RuleId.CUT, position=1),
        (
            axiom("p \\ q |- p \\ q"),
            Derivation(
                S("p, p \\ q |- q"),
                RuleInstance(RuleId.LIMP_L, position=1, block=1),
                (axiom("p |- p"), axiom("q |- q")),
            ),
        ),
    )
    stacked = Derivation(
        S("p, p \\ q, q \\ r |- r"),
        RuleInstance(RuleId.CUT, position=0),
        (
            inner,
            Derivation(
                S("q, q \\ r |- r"),
                RuleInstance(RuleId.LIMP_L, position=1, block=1),
                (axiom("q |- q"), axiom("r |- r")),
            ),
        ),
    )
    assert check(stacked, EMPTY_SIGNATURE) == Valid()
    out = eliminate_all(stacked)
    assert_good(out, "p, p \\ q, q \\ r |- r")


def test_eliminate_all_on_cut_free_input():
    d = derivation_of("p, p \\ q |- q")
    assert eliminate_all(d).conclusion == d.conclusion
