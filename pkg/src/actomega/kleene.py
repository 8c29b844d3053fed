"""The Kleene-algebra fragment and hypothesis encodings.

A sequent in the restricted language of Kleene algebras (variables, 1, 0,
product, sum, iteration) that is derivable from a finite set of hypotheses
``U_i |- V_i`` can be encoded as plain derivability by prefixing the
antecedent with banged division formulas.  Two encodings are provided: one
using a contractible label together with unit cancellers, and one using a
label that admits both weakening and contraction.  The reverse direction
erases the encoding material from a cut-free derivation, yielding a
derivation from the hypotheses in the star-fragment calculus with cut.
"""

from __future__ import annotations

from dataclasses import dataclass

from .derivation import (
    Derivation,
    OmegaTemplate,
    Rep,
    RuleId,
    RuleInstance,
    rule_premises,
)
from .search import (
    OracleReport,
    Unknown,
    UniverseTooLarge,
    fixpoint_oracle,
    sequent_has_star,
)
from .syntax import (
    Bang,
    Formula,
    One,
    Plus,
    Rimp,
    Sequent,
    Star,
    SubexpSignature,
    Tensor,
    Var,
    Zero,
)


class LanguageViolation(ValueError):
    """A formula falls outside the Kleene-algebra language."""


class LabelNotContractible(ValueError):
    """The encoding label does not admit contraction."""


class LabelNotWC(ValueError):
    """The encoding label does not admit both weakening and contraction."""


class NotAnEncoding(ValueError):
    """The derivation's goal is not an encoding of the given hypotheses."""


def check_ka_language(f: Formula) -> bool:
    """True iff the formula uses only variables, 1, 0, product, sum, star."""
    if isinstance(f, (Var, One, Zero)):
        return True
    if isinstance(f, Star):
        return check_ka_language(f.body)
    if isinstance(f, (Tensor, Plus)):
        return check_ka_language(f.left) and check_ka_language(f.right)
    return False


def _require_ka_sequent(s: Sequent, what: str) -> None:
    for f in (*s.antecedent, s.succedent):
        if not isinstance(f, Formula) or not check_ka_language(f):
            raise LanguageViolation(f"{what} is not in the Kleene-algebra language: {s}")


def normalize_hypothesis(h: Sequent) -> Sequent:
    """Fold a compound left-hand side into a single formula.

    An empty antecedent becomes 1; several formulas become their product.
    """
    _require_ka_sequent(h, "hypothesis")
    ant = h.antecedent
    if not ant:
        u: Formula = One()
    else:
        u = ant[0]
        for f in ant[1:]:
            u = Tensor(u, f)
    return Sequent((u,), h.succedent)


def _hyp_division(h: Sequent) -> Rimp:
    norm = normalize_hypothesis(h)
    return Rimp(norm.succedent, norm.antecedent[0])


def encode_unit_cancellers(
    goal: Sequent, hyps: tuple[Sequent, ...], c: str, sig: SubexpSignature
) -> Sequent:
    """Prefix the goal with !c(1 / !c(V_i / U_i)), !c(V_i / U_i) pairs."""
    _require_ka_sequent(goal, "goal")
    if hyps and c not in sig.contractible:
        raise LabelNotContractible(f"label {c!r} is not contractible")
    prefix: tuple[Formula, ...] = ()
    for h in hyps:
        inner = Bang(c, _hyp_division(h))
        prefix += (Bang(c, Rimp(One(), inner)), inner)
    return Sequent(prefix + goal.antecedent, goal.succedent)


def encode_weakening(
    goal: Sequent, hyps: tuple[Sequent, ...], s: str, sig: SubexpSignature
) -> Sequent:
    """Prefix the goal with !s(V_i / U_i), one per hypothesis."""
    _require_ka_sequent(goal, "goal")
    if hyps and not (s in sig.weakenable and s in sig.contractible):
        raise LabelNotWC(f"label {s!r} does not admit weakening and contraction")
    prefix = tuple(Bang(s, _hyp_division(h)) for h in hyps)
    return Sequent(prefix + goal.antecedent, goal.succedent)


def decode_goal(encoded: Sequent, hyps: tuple[Sequent, ...]) -> Sequent:
    """Strip the weakening-encoding prefix, verifying it matches ``hyps``."""
    n = len(hyps)
    prefix = encoded.antecedent[:n]
    divisions = tuple(_hyp_division(h) for h in hyps)
    for item, want in zip(prefix, divisions):
        if not (isinstance(item, Bang) and item.body == want):
            raise NotAnEncoding(f"prefix item {item} does not encode {want}")
    if len(prefix) != n:
        raise NotAnEncoding("the encoded antecedent is shorter than the prefix")
    rest = Sequent(encoded.antecedent[n:], encoded.succedent)
    _require_ka_sequent(rest, "encoded payload")
    return rest


# ---------------------------------------------------------------------------
# Erasure back-translation


#: Rules allowed in the star-fragment calculus with hypotheses and cut.
KA_RULES = frozenset(
    {
        RuleId.ID,
        RuleId.HYP,
        RuleId.CUT,
        RuleId.TENSOR_L,
        RuleId.TENSOR_R,
        RuleId.ONE_L,
        RuleId.ONE_R,
        RuleId.ZERO_L,
        RuleId.PLUS_L,
        RuleId.PLUS_R,
        RuleId.STAR_L_OMEGA,
        RuleId.STAR_R,
        RuleId.ITER,
    }
)

#: Rules that vanish entirely under erasure: they only touch encoding
#: material, so the erased premise equals the erased conclusion.
_TRANSPARENT = frozenset(
    {
        RuleId.BANG_L,
        RuleId.WEAK,
        RuleId.PERM1,
        RuleId.PERM2,
        RuleId.NCONTR1,
        RuleId.NCONTR2,
    }
)


def _keeps(item) -> bool:
    """Whether an antecedent item survives erasure."""
    if isinstance(item, Rep):
        return True
    return check_ka_language(item)


def _erase_sequent(s: Sequent) -> Sequent:
    if not check_ka_language(s.succedent):
        raise NotAnEncoding(f"succedent {s.succedent} is not erasable")
    return Sequent(tuple(x for x in s.antecedent if _keeps(x)), s.succedent)


def _erased_index(ant: tuple, i: int) -> int:
    return sum(1 for x in ant[:i] if _keeps(x))


def erase_translation(d: Derivation, hyps: tuple[Sequent, ...]) -> Derivation:
    """Erase the encoding material from a cut-free derivation.

    The result derives the decoded goal in the star-fragment calculus
    extended with the (normalized) hypotheses as axiom leaves and with cut:
    each division step on an encoded hypothesis becomes two cuts through a
    hypothesis leaf, and every rule that only touches encoding material
    disappears.
    """
    decode_goal(d.conclusion, hyps)  # raises NotAnEncoding if it does not fit
    axioms = {_hyp_division(h): normalize_hypothesis(h) for h in hyps}
    return _erase(d, axioms)


def _erase(d: Derivation, axioms: dict) -> Derivation:
    rule = d.rule
    inst = d.instance
    concl = _erase_sequent(d.conclusion)
    ant = d.conclusion.antecedent

    if rule in _TRANSPARENT:
        out = _erase(d.premises[0], axioms)
        if out.conclusion != concl:
            raise NotAnEncoding(
                f"a {rule.value} step changed the erased sequent"
            )
        return out

    if rule == RuleId.RIMP_L:
        f = ant[inst.position]
        if not isinstance(f, Rimp) or f not in axioms:
            raise NotAnEncoding(f"division step on a non-hypothesis formula {f}")
        hyp_seq = axioms[f]
        u, v = hyp_seq.antecedent[0], hyp_seq.succedent
        arg = _erase(d.premises[0], axioms)  # erased Pi |- U
        rest = _erase(d.premises[1], axioms)  # Gamma', V, Delta' |- B
        pos = _erased_index(ant, inst.position)
        hyp_leaf = Derivation(hyp_seq, RuleInstance(RuleId.HYP))
        inner_concl = Sequent(
            rest.conclusion.antecedent[:pos]
            + (u,)
            + rest.conclusion.antecedent[pos + 1 :],
            rest.conclusion.succedent,
        )
        inner = Derivation(
            inner_concl, RuleInstance(RuleId.CUT, position=pos), (hyp_leaf, rest)
        )
        outer = Derivation(
            concl, RuleInstance(RuleId.CUT, position=pos), (arg, inner)
        )
        return outer

    if rule == RuleId.ID:
        return Derivation(concl, RuleInstance(RuleId.ID))

    if rule in (RuleId.ONE_R,):
        return Derivation(concl, RuleInstance(RuleId.ONE_R))

    if rule in (RuleId.TENSOR_L, RuleId.ONE_L, RuleId.ZERO_L, RuleId.PLUS_L):
        pos = _erased_index(ant, inst.position)
        new_inst = RuleInstance(rule, position=pos, index=inst.index)
        premises = tuple(_erase(p, axioms) for p in d.premises)
        return Derivation(concl, new_inst, premises)

    if rule == RuleId.PLUS_R:
        return Derivation(
            concl,
            RuleInstance(RuleId.PLUS_R, index=inst.index),
            (_erase(d.premises[0], axioms),),
        )

    if rule == RuleId.TENSOR_R:
        b = inst.block or 0
        new_inst = RuleInstance(RuleId.TENSOR_R, block=_erased_index(ant, b))
        premises = tuple(_erase(p, axioms) for p in d.premises)
        return Derivation(concl, new_inst, premises)

    if rule == RuleId.STAR_R:
        splits = inst.splits or ()
        new_splits = []
        start = 0
        for length in splits:
            new_splits.append(
                _erased_index(ant, start + length) - _erased_index(ant, start)
            )
            start += length
        new_inst = RuleInstance(
            RuleId.STAR_R, count=inst.count, splits=tuple(new_splits)
        )
        premises = tuple(_erase(p, axioms) for p in d.premises)
        return Derivation(concl, new_inst, premises)

    if rule == RuleId.STAR_L_OMEGA:
        pos = _erased_index(ant, inst.position)
        template = OmegaTemplate(
            d.template.param, _erase(d.template.body, axioms)
        )
        explicit = tuple(_erase(e, axioms) for e in d.explicit)
        return Derivation(
            concl,
            RuleInstance(RuleId.STAR_L_OMEGA, position=pos),
            (),
            template,
            explicit,
        )

    if rule == RuleId.ITER:
        inner = inst.inner
        kw = {}
        if inner.position is not None:
            kw["position"] = _erased_index(ant, inner.position)
        if inner.block is not None:
            kw["block"] = inner.block
        if inner.index is not None:
            kw["index"] = inner.index
        new_inner = RuleInstance(inner.rule, **kw)
        premises = tuple(_erase(p, axioms) for p in d.premises)
        return Derivation(
            concl,
            RuleInstance(RuleId.ITER, inner=new_inner, iter_count=inst.iter_count),
            premises,
        )

    if rule == RuleId.CUT:
        a = d.premises[0].conclusion.succedent
        if not check_ka_language(a):
            raise NotAnEncoding(f"cut on a non-erasable formula {a}")
        pos = _erased_index(ant, inst.position)
        premises = tuple(_erase(p, axioms) for p in d.premises)
        return Derivation(concl, RuleInstance(RuleId.CUT, position=pos), premises)

    raise NotAnEncoding(f"rule {rule.value} has no erasure")


# ---------------------------------------------------------------------------
# The entailment oracle


def _subformulas_ka(f: Formula, out: dict) -> None:
    out.setdefault(f, None)
    if isinstance(f, Star):
        _subformulas_ka(f.body, out)
    elif isinstance(f, (Tensor, Plus)):
        _subformulas_ka(f.left, out)
        _subformulas_ka(f.right, out)


def ka_entails_oracle(
    goal: Sequent,
    hyps: tuple[Sequent, ...],
    universe_cap: int = 100_000,
) -> bool | Unknown:
    """Exact derivability from hypotheses on the star-free slice.

    Builds the subformula-closed universe of sequents over the goal and the
    hypotheses, bounded in antecedent length, and iterates the fixpoint
    oracle with the hypotheses as extra axioms and cut enabled.  Sequents
    mentioning iteration return Unknown: the omega rule escapes any finite
    universe.
    """
    _require_ka_sequent(goal, "goal")
    norm = tuple(normalize_hypothesis(h) for h in hyps)
    if sequent_has_star(goal) or any(sequent_has_star(h) for h in norm):
        return Unknown("star present: the omega rule escapes finite universes")

    from .syntax import EMPTY_SIGNATURE

    forms: dict[Formula, None] = {}
    for f in (*goal.antecedent, goal.succedent):
        _subformulas_ka(f, forms)
    for h in norm:
        _subformulas_ka(h.antecedent[0], forms)
        _subformulas_ka(h.succedent, forms)
    formulas = list(forms)

    # antecedents can grow by one slot per product occurrence of any
    # formula that can appear as an item
    def _tensor_count(f: Formula) -> int:
        if isinstance(f, Tensor):
            return 1 + _tensor_count(f.left) + _tensor_count(f.right)
        if isinstance(f, (Plus, Star)):
            left = getattr(f, "left", None)
            if left is not None:
                return _tensor_count(f.left) + _tensor_count(f.right)
            return _tensor_count(f.body)
        return 0

    deepest = max((_tensor_count(f) for f in formulas), default=0)
    max_len = max(
        len(goal.antecedent) + sum(_tensor_count(f) for f in goal.antecedent),
        1 + deepest,
    )

    k = len(formulas)
    size = k * sum(k**i for i in range(max_len + 1))
    if size > universe_cap:
        raise UniverseTooLarge(
            f"{size} sequents (length cap {max_len} over {k} formulas) "
            f"exceeds the cap {universe_cap}"
        )

    universe: list[Sequent] = []
    frontier: list[tuple[Formula, ...]] = [()]
    for _ in range(max_len + 1):
        for ant in frontier:
            for b in formulas:
                universe.append(Sequent(ant, b))
        frontier = [ant + (f,) for ant in frontier for f in formulas]
    universe.append(goal)
    universe.extend(norm)

    report: OracleReport = fixpoint_oracle(
        universe,
        EMPTY_SIGNATURE,
        extra_axioms=frozenset(norm),
        allow_cut=True,
        max_universe=universe_cap,
    )
    derivable, _ = report.results[goal]
    return bool(derivable)
