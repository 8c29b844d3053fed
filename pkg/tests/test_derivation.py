"""Derivation nodes, rule application conventions, checking, and text format."""

import pytest

from actomega.derivation import (
    Bounded,
    Derivation,
    Full,
    Invalid,
    OmegaTemplate,
    Rep,
    RuleError,
    RuleId,
    RuleInstance,
    Valid,
    ValidUpTo,
    check,
    goal,
    height,
    instantiate_template,
    is_cut_free,
    lin,
    lin_param,
    parse_derivation,
    parse_linexpr,
    rule_premises,
    to_text,
)
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


# -- linear expressions --------------------------------------------------------

def test_linexpr_parse_eval():
    e = parse_linexpr("2*n + 1")
    assert e.eval({"n": 3}) == 7
    assert not e.is_const
    assert lin(4).is_const and lin(4).eval({}) == 4
    assert lin_param("n").subst({"n": 5}) == lin(5)


# -- rule_premises conventions ---------------------------------------------------

def test_id_premises():
    assert rule_premises(S("p |- p"), RuleInstance(RuleId.ID), EMPTY_SIGNATURE) == ()
    with pytest.raises(RuleError):
        rule_premises(S("p, q |- p"), RuleInstance(RuleId.ID), EMPTY_SIGNATURE)


def test_limp_l_premises():
    # Pi sits immediately before the principal formula and proves its argument
    concl = S("a, p, p \\ q, b |- r")
    prems = rule_premises(
        concl, RuleInstance(RuleId.LIMP_L, position=2, block=1), EMPTY_SIGNATURE
    )
    assert prems == (S("p |- p"), S("a, q, b |- r"))


def test_rimp_l_premises():
    # Pi sits immediately after the principal formula and proves its argument
    concl = S("a, q / p, p, b |- r")
    prems = rule_premises(
        concl, RuleInstance(RuleId.RIMP_L, position=1, block=1), EMPTY_SIGNATURE
    )
    assert prems == (S("p |- p"), S("a, q, b |- r"))


def test_division_right_premises():
    assert rule_premises(
        S("a |- p \\ q"), RuleInstance(RuleId.LIMP_R), EMPTY_SIGNATURE
    ) == (S("p, a |- q"),)
    assert rule_premises(
        S("a |- q / p"), RuleInstance(RuleId.RIMP_R), EMPTY_SIGNATURE
    ) == (S("a, p |- q"),)


def test_tensor_premises():
    assert rule_premises(
        S("a, p . q, b |- r"), RuleInstance(RuleId.TENSOR_L, position=1),
        EMPTY_SIGNATURE,
    ) == (S("a, p, q, b |- r"),)
    assert rule_premises(
        S("a, b |- p . q"), RuleInstance(RuleId.TENSOR_R, block=1), EMPTY_SIGNATURE
    ) == (S("a |- p"), S("b |- q"))


def test_additive_premises():
    assert rule_premises(
        S("p + q |- r"), RuleInstance(RuleId.PLUS_L, position=0), EMPTY_SIGNATURE
    ) == (S("p |- r"), S("q |- r"))
    assert rule_premises(
        S("a |- p + q"), RuleInstance(RuleId.PLUS_R, index=1), EMPTY_SIGNATURE
    ) == (S("a |- p"),)
    assert rule_premises(
        S("p & q |- p"), RuleInstance(RuleId.WITH_L, position=0, index=1),
        EMPTY_SIGNATURE,
    ) == (S("p |- p"),)
    assert rule_premises(
        S("a |- p & q"), RuleInstance(RuleId.WITH_R), EMPTY_SIGNATURE
    ) == (S("a |- p"), S("a |- q"))


def test_zero_and_unit_premises():
    assert rule_premises(
        S("a, 0, b |- r"), RuleInstance(RuleId.ZERO_L, position=1), EMPTY_SIGNATURE
    ) == ()
    assert rule_premises(
        S("a, 1, b |- r"), RuleInstance(RuleId.ONE_L, position=1), EMPTY_SIGNATURE
    ) == (S("a, b |- r"),)
    assert rule_premises(S("|- 1"), RuleInstance(RuleId.ONE_R), EMPTY_SIGNATURE) == ()


def test_star_r_premises():
    prems = rule_premises(
        S("p, p |- p*"), RuleInstance(RuleId.STAR_R, count=2, splits=(1, 1)),
        EMPTY_SIGNATURE,
    )
    assert prems == (S("p |- p"), S("p |- p"))
    # the zero-premise case proves the empty word
    assert rule_premises(
        S("|- p*"), RuleInstance(RuleId.STAR_R, count=0, splits=()), EMPTY_SIGNATURE
    ) == ()


def test_bang_rules_respect_signature():
    assert rule_premises(
        S("!{s}p |- p"), RuleInstance(RuleId.BANG_L, position=0), WCE_S
    ) == (S("p |- p"),)
    # promotion: every antecedent label must dominate the introduced one
    assert rule_premises(
        S("!{s}p |- !{s}p"), RuleInstance(RuleId.BANG_R), WCE_S
    ) == (S("!{s}p |- p"),)
    with pytest.raises(RuleError):
        rule_premises(S("p |- !{s}p"), RuleInstance(RuleId.BANG_R), WCE_S)


def test_structural_rules_respect_signature():
    # weakening requires the label to be weakenable
    assert rule_premises(
        S("p, !{s}q |- p"), RuleInstance(RuleId.WEAK, position=1), WCE_S
    ) == (S("p |- p"),)
    with pytest.raises(RuleError):
        rule_premises(
            S("p, !{s}q |- p"), RuleInstance(RuleId.WEAK, position=1), EMPTY_SIGNATURE
        )
    # contraction merges two copies: the premise carries the extra copy at q
    assert rule_premises(
        S("!{s}p, q |- r"),
        RuleInstance(RuleId.NCONTR1, positions=(0, 2)),
        WCE_S,
    ) == (S("!{s}p, q, !{s}p |- r"),)
    # permutation: the premise has the block moved to the other side
    assert rule_premises(
        S("!{s}p, q |- r"), RuleInstance(RuleId.PERM1, position=0, block=1), WCE_S
    ) == (S("q, !{s}p |- r"),)


# -- checking hand-built derivations --------------------------------------------

def test_check_valid_tree():
    d = Derivation(
        S("p, p \\ q |- q"),
        RuleInstance(RuleId.LIMP_L, position=1, block=1),
        (axiom("p |- p"), axiom("q |- q")),
    )
    assert check(d, EMPTY_SIGNATURE) == Valid()
    assert is_cut_free(d)
    assert goal(d) == S("p, p \\ q |- q")
    assert height(d) == 2


def test_check_reports_invalid_path():
    # a premise whose conclusion disagrees with the rule is caught at the parent
    bad = Derivation(
        S("p, p \\ q |- q"),
        RuleInstance(RuleId.LIMP_L, position=1, block=1),
        (axiom("p |- p"), axiom("p |- q")),
    )
    res = check(bad, EMPTY_SIGNATURE)
    assert isinstance(res, Invalid)
    assert res.path == ()
    # a rule misapplied deeper in the tree is reported with its path
    bad2 = Derivation(
        S("p, p \\ q |- q"),
        RuleInstance(RuleId.LIMP_L, position=1, block=1),
        (axiom("p |- p"), Derivation(S("q |- q"), RuleInstance(RuleId.ONE_R))),
    )
    res2 = check(bad2, EMPTY_SIGNATURE)
    assert isinstance(res2, Invalid)
    assert res2.path == (1,)


def test_check_wrong_premise_count():
    res = check(
        Derivation(S("p . q |- p . q"), RuleInstance(RuleId.TENSOR_L, position=0), ()),
        EMPTY_SIGNATURE,
    )
    assert isinstance(res, Invalid)


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


def test_check_omega_node():
    d = omega_star_identity()
    assert check(d, EMPTY_SIGNATURE) == ValidUpTo(5)
    assert check(d, EMPTY_SIGNATURE, mode=Bounded(9)) == ValidUpTo(9)
    assert is_cut_free(d)


def test_instantiate_template():
    d = omega_star_identity()
    inst3 = instantiate_template(d.template, 3)
    assert inst3.conclusion == S("p, p, p |- p*")
    assert check(inst3, EMPTY_SIGNATURE) == Valid()
    inst0 = instantiate_template(d.template, 0)
    assert inst0.conclusion == S("|- p*")


def test_check_cut_and_axioms():
    right = Derivation(
        S("q, q \\ r |- r"),
        RuleInstance(RuleId.LIMP_L, position=1, block=1),
        (axiom("q |- q"), axiom("r |- r")),
    )
    hyp = Derivation(S("p |- q"), RuleInstance(RuleId.HYP))
    cut = Derivation(
        S("p, q \\ r |- r"),
        RuleInstance(RuleId.CUT, position=0),
        (hyp, right),
    )
    # hypothesis leaves are only accepted under an explicit axiom set
    assert isinstance(check(cut, EMPTY_SIGNATURE), Invalid)
    assert check(cut, EMPTY_SIGNATURE, axioms=frozenset({S("p |- q")})) == Valid()
    assert not is_cut_free(cut)


def test_allowed_rules_restriction():
    d = Derivation(
        S("p & q |- p"),
        RuleInstance(RuleId.WITH_L, position=0, index=1),
        (axiom("p |- p"),),
    )
    assert check(d, EMPTY_SIGNATURE) == Valid()
    res = check(d, EMPTY_SIGNATURE, allowed_rules=frozenset({RuleId.ID}))
    assert isinstance(res, Invalid)


# -- text exchange format --------------------------------------------------------

def test_to_text_parse_roundtrip():
    d = Derivation(
        S("p, p \\ q |- q"),
        RuleInstance(RuleId.LIMP_L, position=1, block=1),
        (axiom("p |- p"), axiom("q |- q")),
    )
    text = to_text(d)
    assert parse_derivation(text) == d


def test_to_text_parse_roundtrip_omega():
    d = omega_star_identity()
    again = parse_derivation(to_text(d))
    assert again == d
    assert check(again, EMPTY_SIGNATURE) == ValidUpTo(5)
