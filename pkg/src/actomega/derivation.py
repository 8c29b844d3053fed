"""Derivation trees, the rule checker, and omega-node templates.

A Derivation is a finite tree of rule applications. The omega rule for the
Kleene star on the left has one premise per natural number; such nodes are
finitely presented by an OmegaTemplate (a schematic derivation over a
parameter n) plus optional explicit instances, and the checker validates
them by instantiating the template at n = 0..K.

Template bodies may contain two schematic constructs:

  - Rep(A, e): a block of e copies of formula A in an antecedent, where e
    is a linear expression in template parameters;
  - Iter nodes: e-fold repetition of a rule. Supported shapes are e-fold
    stacking of an insertion rule (one-l or weak) at a fixed position, and
    the e-premise right star rule over e copies of one part derivation.

All positional fields of a RuleInstance are item indices into the
antecedent of the node's own conclusion (or, for cut/mix/ncontr, of a
premise), where a Rep block counts as a single item.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .syntax import (
    Bang,
    Formula,
    Limp,
    One,
    Plus,
    Rimp,
    Sequent,
    Star,
    SubexpSignature,
    Tensor,
    Var,
    With,
    Zero,
    bang_labels,
    parse_formula,
    print_formula,
    print_sequent,
)

DEFAULT_OMEGA_BOUND = 5


# ---------------------------------------------------------------------------
# Linear expressions and repetition blocks


@dataclass(frozen=True)
class LinExpr:
    """A linear expression over template parameters: sum of c*p terms plus a constant."""

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    def __post_init__(self):
        names = [p for p, _ in self.coeffs]
        if names != sorted(names) or len(set(names)) != len(names):
            raise ValueError("LinExpr terms must be sorted and distinct")
        if any(c <= 0 for _, c in self.coeffs) or self.const < 0:
            raise ValueError("LinExpr coefficients must be positive, constant nonnegative")

    @property
    def is_const(self) -> bool:
        return not self.coeffs

    def eval(self, env: dict[str, int]) -> int:
        return self.const + sum(c * env[p] for p, c in self.coeffs)

    def subst(self, env: dict[str, int]) -> "LinExpr":
        """Substitute the known parameters, keeping the rest symbolic."""
        const = self.const
        keep = []
        for p, c in self.coeffs:
            if p in env:
                const += c * env[p]
            else:
                keep.append((p, c))
        return LinExpr(tuple(keep), const)

    def params(self) -> frozenset[str]:
        return frozenset(p for p, _ in self.coeffs)

    def __str__(self) -> str:
        parts = [f"{c}*{p}" for p, c in self.coeffs]
        if self.const or not parts:
            parts.append(str(self.const))
        return "+".join(parts)


def lin(const: int) -> LinExpr:
    return LinExpr((), const)


def lin_param(name: str, coef: int = 1, const: int = 0) -> LinExpr:
    return LinExpr(((name, coef),), const)


def parse_linexpr(text: str) -> LinExpr:
    const = 0
    coeffs: dict[str, int] = {}
    for term in text.split("+"):
        term = term.strip()
        m = re.fullmatch(r"(\d+)\s*\*\s*([A-Za-z_]\w*)", term)
        if m:
            coeffs[m.group(2)] = coeffs.get(m.group(2), 0) + int(m.group(1))
            continue
        if re.fullmatch(r"[A-Za-z_]\w*", term):
            coeffs[term] = coeffs.get(term, 0) + 1
            continue
        if re.fullmatch(r"\d+", term):
            const += int(term)
            continue
        raise ValueError(f"bad linear expression term {term!r}")
    return LinExpr(tuple(sorted(coeffs.items())), const)


@dataclass(frozen=True)
class Rep:
    """A schematic antecedent block: ``count`` adjacent copies of ``formula``."""

    formula: Formula
    count: LinExpr

    def __str__(self) -> str:
        inner = print_formula(self.formula)
        if not isinstance(self.formula, (Var, One, Zero)):
            inner = "(" + inner + ")"
        return f"{inner}^[{self.count}]"


def item_formula(item) -> Formula:
    return item.formula if isinstance(item, Rep) else item


def sequent_is_concrete(s: Sequent) -> bool:
    return all(isinstance(x, Formula) for x in s.antecedent)


# ---------------------------------------------------------------------------
# Rules


class RuleId(str, Enum):
    ID = "id"
    LIMP_L = "limp-l"
    LIMP_R = "limp-r"
    RIMP_L = "rimp-l"
    RIMP_R = "rimp-r"
    TENSOR_L = "tensor-l"
    TENSOR_R = "tensor-r"
    ONE_L = "one-l"
    ONE_R = "one-r"
    ZERO_L = "zero-l"
    PLUS_L = "plus-l"
    PLUS_R = "plus-r"
    WITH_L = "with-l"
    WITH_R = "with-r"
    STAR_L_OMEGA = "star-l-omega"
    STAR_R = "star-r"
    BANG_L = "bang-l"
    BANG_R = "bang-r"
    WEAK = "weak"
    PERM1 = "perm1"
    PERM2 = "perm2"
    NCONTR1 = "ncontr1"
    NCONTR2 = "ncontr2"
    CUT = "cut"
    MIX = "mix"
    HYP = "hyp"
    ITER = "iter"


STRUCTURAL_RULES = frozenset(
    {RuleId.WEAK, RuleId.PERM1, RuleId.PERM2, RuleId.NCONTR1, RuleId.NCONTR2}
)


@dataclass(frozen=True)
class RuleInstance:
    """A rule application with explicit positional data.

    position: principal item index (or the cut formula's index in the right
    premise for cut). block: length of the adjacent context Pi (or the first
    part for tensor-r, the moved block for perms). index: 1 or 2 for the
    additive one-sided rules. count/splits: premise count and part lengths
    for star-r. positions: (kept, inserted) for ncontr, occurrence indices
    in the right premise for mix. target: gap receiving Pi for mix.
    inner/iter_count: the repeated application and repetition count of an
    iter node.
    """

    rule: RuleId
    position: int | None = None
    block: int | None = None
    index: int | None = None
    count: int | None = None
    splits: tuple[int, ...] | None = None
    positions: tuple[int, ...] | None = None
    target: int | None = None
    inner: "RuleInstance | None" = None
    iter_count: LinExpr | None = None


@dataclass(frozen=True)
class OmegaTemplate:
    """Finite presentation of an omega node's premise family."""

    param: str
    body: "Derivation"


@dataclass(frozen=True)
class Derivation:
    conclusion: Sequent
    instance: RuleInstance
    premises: tuple["Derivation", ...] = ()
    template: OmegaTemplate | None = None
    explicit: tuple["Derivation", ...] = ()

    @property
    def rule(self) -> RuleId:
        return self.instance.rule


def goal(d: Derivation) -> Sequent:
    return d.conclusion


def is_cut_free(d: Derivation) -> bool:
    if d.rule in (RuleId.CUT, RuleId.MIX):
        return False
    if d.template is not None and not is_cut_free(d.template.body):
        return False
    return all(is_cut_free(p) for p in d.premises) and all(
        is_cut_free(e) for e in d.explicit
    )


def height(d: Derivation) -> int:
    """Finite tree height; an omega or iter node counts as its body plus one."""
    if d.rule == RuleId.STAR_L_OMEGA:
        assert d.template is not None
        return height(d.template.body) + 1
    if not d.premises:
        return 1
    return 1 + max(height(p) for p in d.premises)


class RuleError(Exception):
    """A rule application that does not fit the conclusion."""


def _item_at(ant: tuple, i: int, what: str = "position"):
    if not 0 <= i < len(ant):
        raise RuleError(f"{what} {i} out of range for antecedent of length {len(ant)}")
    return ant[i]


def _formula_at(ant: tuple, i: int, what: str = "position") -> Formula:
    item = _item_at(ant, i, what)
    if not isinstance(item, Formula):
        raise RuleError(f"{what} {i} refers to a repetition block, not a formula")
    return item


def rule_premises(
    concl: Sequent, inst: RuleInstance, sig: SubexpSignature
) -> tuple[Sequent, ...]:
    """Compute the premise sequents a rule application demands.

    Covers every rule whose premises are determined by the conclusion plus
    the instance data; cut, mix, the omega rule, iter blocks, and hypothesis
    leaves are handled by the checker directly.
    """
    ant, succ = concl.antecedent, concl.succedent
    rule = inst.rule

    if rule == RuleId.ID:
        if len(ant) != 1 or ant[0] != succ:
            raise RuleError("identity axiom requires a sequent of the form A |- A")
        return ()

    if rule == RuleId.LIMP_L:
        f = _formula_at(ant, inst.position)
        if not isinstance(f, Limp):
            raise RuleError("principal formula is not a left division")
        b = inst.block or 0
        if b < 0 or b > inst.position:
            raise RuleError("context block does not fit before the principal formula")
        pi = ant[inst.position - b : inst.position]
        rest = ant[: inst.position - b] + (f.right,) + ant[inst.position + 1 :]
        return (Sequent(pi, f.left), Sequent(rest, succ))

    if rule == RuleId.LIMP_R:
        if not isinstance(succ, Limp):
            raise RuleError("succedent is not a left division")
        return (Sequent((succ.left,) + ant, succ.right),)

    if rule == RuleId.RIMP_L:
        f = _formula_at(ant, inst.position)
        if not isinstance(f, Rimp):
            raise RuleError("principal formula is not a right division")
        b = inst.block or 0
        if b < 0 or inst.position + 1 + b > len(ant):
            raise RuleError("context block does not fit after the principal formula")
        pi = ant[inst.position + 1 : inst.position + 1 + b]
        rest = ant[: inst.position] + (f.left,) + ant[inst.position + 1 + b :]
        return (Sequent(pi, f.right), Sequent(rest, succ))

    if rule == RuleId.RIMP_R:
        if not isinstance(succ, Rimp):
            raise RuleError("succedent is not a right division")
        return (Sequent(ant + (succ.right,), succ.left),)

    if rule == RuleId.TENSOR_L:
        f = _formula_at(ant, inst.position)
        if not isinstance(f, Tensor):
            raise RuleError("principal formula is not a product")
        rest = ant[: inst.position] + (f.left, f.right) + ant[inst.position + 1 :]
        return (Sequent(rest, succ),)

    if rule == RuleId.TENSOR_R:
        if not isinstance(succ, Tensor):
            raise RuleError("succedent is not a product")
        k = inst.block or 0
        if k < 0 or k > len(ant):
            raise RuleError("product split point out of range")
        return (Sequent(ant[:k], succ.left), Sequent(ant[k:], succ.right))

    if rule == RuleId.ONE_L:
        f = _formula_at(ant, inst.position)
        if not isinstance(f, One):
            raise RuleError("principal formula is not the unit")
        return (Sequent(ant[: inst.position] + ant[inst.position + 1 :], succ),)

    if rule == RuleId.ONE_R:
        if ant or not isinstance(succ, One):
            raise RuleError("unit axiom is |- 1 with empty antecedent")
        return ()

    if rule == RuleId.ZERO_L:
        f = _formula_at(ant, inst.position)
        if not isinstance(f, Zero):
            raise RuleError("principal formula is not zero")
        return ()

    if rule == RuleId.PLUS_L:
        f = _formula_at(ant, inst.position)
        if not isinstance(f, Plus):
            raise RuleError("principal formula is not a sum")
        before, after = ant[: inst.position], ant[inst.position + 1 :]
        return (
            Sequent(before + (f.left,) + after, succ),
            Sequent(before + (f.right,) + after, succ),
        )

    if rule == RuleId.PLUS_R:
        if not isinstance(succ, Plus):
            raise RuleError("succedent is not a sum")
        if inst.index not in (1, 2):
            raise RuleError("sum introduction needs index 1 or 2")
        return (Sequent(ant, succ.left if inst.index == 1 else succ.right),)

    if rule == RuleId.WITH_L:
        f = _formula_at(ant, inst.position)
        if not isinstance(f, With):
            raise RuleError("principal formula is not an additive conjunction")
        if inst.index not in (1, 2):
            raise RuleError("conjunction elimination needs index 1 or 2")
        part = f.left if inst.index == 1 else f.right
        return (Sequent(ant[: inst.position] + (part,) + ant[inst.position + 1 :], succ),)

    if rule == RuleId.WITH_R:
        if not isinstance(succ, With):
            raise RuleError("succedent is not an additive conjunction")
        return (Sequent(ant, succ.left), Sequent(ant, succ.right))

    if rule == RuleId.STAR_R:
        if not isinstance(succ, Star):
            raise RuleError("succedent is not a star")
        n = inst.count
        if n is None or n < 0:
            raise RuleError("star introduction needs a premise count n >= 0")
        splits = inst.splits if inst.splits is not None else ()
        if len(splits) != n:
            raise RuleError("star introduction needs one part length per premise")
        if n == 0:
            if ant:
                raise RuleError("the zero-premise star axiom needs an empty antecedent")
            return ()
        if any(l < 1 for l in splits):
            raise RuleError("every star part must be non-empty")
        if sum(splits) != len(ant):
            raise RuleError("star parts must cover the antecedent exactly")
        premises = []
        offset = 0
        for length in splits:
            premises.append(Sequent(ant[offset : offset + length], succ.body))
            offset += length
        return tuple(premises)

    if rule == RuleId.BANG_L:
        f = _formula_at(ant, inst.position)
        if not isinstance(f, Bang):
            raise RuleError("principal formula is not a subexponential")
        return (Sequent(ant[: inst.position] + (f.body,) + ant[inst.position + 1 :], succ),)

    if rule == RuleId.BANG_R:
        if not isinstance(succ, Bang):
            raise RuleError("succedent is not a subexponential")
        if succ.label not in sig.labels:
            raise RuleError(f"unknown label {succ.label!r}")
        for item in ant:
            f = item_formula(item)
            if not isinstance(f, Bang) or not sig.leq(succ.label, f.label):
                raise RuleError(
                    "subexponential promotion requires every antecedent formula "
                    "to carry a label above the introduced one"
                )
        return (Sequent(ant, succ.body),)

    if rule == RuleId.WEAK:
        f = _formula_at(ant, inst.position)
        if not isinstance(f, Bang) or f.label not in sig.weakenable:
            raise RuleError("weakening needs a weakenable subexponential formula")
        return (Sequent(ant[: inst.position] + ant[inst.position + 1 :], succ),)

    if rule in (RuleId.PERM1, RuleId.PERM2):
        f = _formula_at(ant, inst.position)
        if not isinstance(f, Bang) or f.label not in sig.exchangeable:
            raise RuleError("permutation needs an exchangeable subexponential formula")
        b = inst.block
        if b is None or b < 1:
            raise RuleError("permutation needs a positive block length")
        p = inst.position
        if rule == RuleId.PERM1:
            if p + 1 + b > len(ant):
                raise RuleError("permutation block does not fit after the formula")
            moved = ant[p + 1 : p + 1 + b]
            return (Sequent(ant[:p] + moved + (f,) + ant[p + 1 + b :], succ),)
        if b > p:
            raise RuleError("permutation block does not fit before the formula")
        moved = ant[p - b : p]
        return (Sequent(ant[: p - b] + (f,) + moved + ant[p + 1 :], succ),)

    if rule in (RuleId.NCONTR1, RuleId.NCONTR2):
        if inst.positions is None or len(inst.positions) != 2:
            raise RuleError("contraction needs the kept and inserted positions")
        p, q = inst.positions
        f = _formula_at(ant, p, "kept position")
        if not isinstance(f, Bang) or f.label not in sig.contractible:
            raise RuleError("contraction needs a contractible subexponential formula")
        if not 0 <= q <= len(ant):
            raise RuleError("inserted position out of range")
        if rule == RuleId.NCONTR1 and q <= p:
            raise RuleError("this contraction keeps the left copy, so q > p is required")
        if rule == RuleId.NCONTR2 and q > p:
            raise RuleError("this contraction keeps the right copy, so q <= p is required")
        return (Sequent(ant[:q] + (f,) + ant[q:], succ),)

    raise RuleError(f"premises of {rule.value} are not determined by the conclusion")


# ---------------------------------------------------------------------------
# Template instantiation


class TemplateError(Exception):
    """A template that cannot be instantiated to a plain derivation."""


def _expand_antecedent(ant: tuple, env: dict[str, int]) -> tuple[tuple, list[int]]:
    """Expand Rep blocks whose counts become known under env.

    Returns the new item tuple and the prefix-sum table mapping old item
    indices to new ones (``starts[i]`` is where old item i begins).
    """
    items: list = []
    starts = [0]
    for item in ant:
        if isinstance(item, Rep):
            count = item.count.subst(env)
            if count.is_const:
                items.extend([item.formula] * count.const)
            else:
                items.append(Rep(item.formula, count))
        else:
            items.append(item)
        starts.append(len(items))
    return tuple(items), starts


def _remap_instance(
    inst: RuleInstance, starts: list[int], premise_starts
) -> RuleInstance:
    """Translate item-index fields of ``inst`` through the expansion maps."""
    rule = inst.rule
    p = inst.position
    kw = {
        "position": inst.position,
        "block": inst.block,
        "splits": inst.splits,
        "positions": inst.positions,
    }

    def point(i: int, table=None) -> int:
        table = starts if table is None else table
        if not 0 <= i < len(table) - 1:
            raise TemplateError(f"position {i} out of range in template")
        return table[i]

    if rule in (
        RuleId.TENSOR_L,
        RuleId.ONE_L,
        RuleId.ZERO_L,
        RuleId.PLUS_L,
        RuleId.WITH_L,
        RuleId.BANG_L,
        RuleId.WEAK,
        RuleId.STAR_L_OMEGA,
    ):
        kw["position"] = point(p)
    elif rule == RuleId.LIMP_L:
        b = inst.block or 0
        kw["position"] = point(p)
        kw["block"] = starts[p] - starts[p - b]
    elif rule == RuleId.RIMP_L:
        b = inst.block or 0
        kw["position"] = point(p)
        kw["block"] = starts[p + 1 + b] - starts[p + 1]
    elif rule == RuleId.PERM1:
        kw["position"] = point(p)
        kw["block"] = starts[p + 1 + inst.block] - starts[p + 1]
    elif rule == RuleId.PERM2:
        kw["position"] = point(p)
        kw["block"] = starts[p] - starts[p - inst.block]
    elif rule == RuleId.TENSOR_R:
        kw["block"] = starts[inst.block or 0]
    elif rule == RuleId.STAR_R:
        offset = 0
        new_splits = []
        for length in inst.splits or ():
            new_splits.append(starts[offset + length] - starts[offset])
            offset += length
        kw["splits"] = tuple(new_splits)
    elif rule in (RuleId.NCONTR1, RuleId.NCONTR2):
        kept, inserted = inst.positions
        kw["positions"] = (point(kept), starts[inserted])
    elif rule == RuleId.CUT:
        kw["position"] = point(p, premise_starts[1])
    elif rule == RuleId.MIX:
        table = premise_starts[1]
        kw["positions"] = tuple(point(i, table) for i in inst.positions)
    return RuleInstance(
        rule=rule,
        index=inst.index,
        count=inst.count,
        target=inst.target,
        inner=inst.inner,
        iter_count=inst.iter_count,
        **kw,
    )


def _substitute(d: Derivation, env: dict[str, int]) -> Derivation:
    """Substitute known parameters throughout, expanding what becomes concrete."""
    ant, starts = _expand_antecedent(d.conclusion.antecedent, env)
    concl = Sequent(ant, d.conclusion.succedent)
    inst = d.instance

    if inst.rule == RuleId.ITER:
        count = inst.iter_count.subst(env)
        inner = inst.inner
        if count.is_const:
            return _expand_iter(d, concl, starts, inner, count.const, env)
        body = _substitute(d.premises[0], env)
        new_inst = RuleInstance(
            RuleId.ITER, inner=inner, iter_count=count
        )
        return Derivation(concl, new_inst, (body,))

    if inst.rule == RuleId.STAR_L_OMEGA:
        template = d.template
        sub_env = {k: v for k, v in env.items() if k != template.param}
        new_template = OmegaTemplate(template.param, _substitute(template.body, sub_env))
        new_explicit = tuple(_substitute(e, env) for e in d.explicit)
        new_inst = _remap_instance(inst, starts, None)
        return Derivation(concl, new_inst, (), new_template, new_explicit)

    premise_starts = None
    if inst.rule in (RuleId.CUT, RuleId.MIX):
        premise_starts = [
            _expand_antecedent(p.conclusion.antecedent, env)[1] for p in d.premises
        ]
    new_inst = _remap_instance(inst, starts, premise_starts)
    new_premises = tuple(_substitute(p, env) for p in d.premises)
    return Derivation(concl, new_inst, new_premises)


def _expand_iter(
    d: Derivation,
    concl: Sequent,
    starts: list[int],
    inner: RuleInstance,
    count: int,
    env: dict[str, int],
) -> Derivation:
    old_ant = d.conclusion.antecedent
    slot = inner.position
    if not 0 <= slot < len(old_ant) or not isinstance(old_ant[slot], Rep):
        raise TemplateError("iter node must point at a repetition block")
    rep: Rep = old_ant[slot]
    declared = rep.count.subst(env)
    if not declared.is_const or declared.const != count:
        raise TemplateError("iter count disagrees with its repetition block")

    if inner.rule == RuleId.STAR_R:
        if len(old_ant) != 1 or not isinstance(concl.succedent, Star):
            raise TemplateError(
                "an iterated star introduction must consume exactly its repetition block"
            )
        part = _substitute(d.premises[0], env)
        new_inst = RuleInstance(RuleId.STAR_R, count=count, splits=(1,) * count)
        return Derivation(concl, new_inst, (part,) * count)

    if inner.rule in (RuleId.ONE_L, RuleId.WEAK):
        pos = starts[slot]
        current = _substitute(d.premises[0], env)
        for _ in range(count):
            ant = current.conclusion.antecedent
            new_ant = ant[:pos] + (rep.formula,) + ant[pos:]
            current = Derivation(
                Sequent(new_ant, concl.succedent),
                RuleInstance(inner.rule, position=pos),
                (current,),
            )
        return current

    raise TemplateError(f"unsupported iterated rule {inner.rule.value}")


def instantiate_template(t: OmegaTemplate, k: int) -> Derivation:
    """Instantiate the premise template at n = k, yielding a plain derivation."""
    if k < 0:
        raise TemplateError("template instances exist for n >= 0 only")
    return _substitute(t.body, {t.param: k})


# ---------------------------------------------------------------------------
# Checking


@dataclass(frozen=True)
class Valid:
    pass


@dataclass(frozen=True)
class ValidUpTo:
    bound: int


@dataclass(frozen=True)
class Invalid:
    path: tuple[int, ...]
    reason: str


@dataclass(frozen=True)
class Full:
    pass


@dataclass(frozen=True)
class Bounded:
    bound: int

    def __post_init__(self):
        if self.bound < 1:
            raise ValueError("omega bound must be at least 1")


CheckReport = Valid | ValidUpTo | Invalid


def check(
    d: Derivation,
    sig: SubexpSignature,
    mode: Full | Bounded = Full(),
    axioms: frozenset[Sequent] = frozenset(),
    allowed_rules: frozenset[RuleId] | None = None,
) -> CheckReport:
    """Validate every rule application in the tree.

    Omega nodes are checked by instantiating their template (and explicit
    instances) at n = 0..K; their presence turns Valid into ValidUpTo(K).
    ``axioms`` admits hypothesis leaves; ``allowed_rules`` restricts the rule
    set (used for checking fragment derivations).
    """
    bound = mode.bound if isinstance(mode, Bounded) else DEFAULT_OMEGA_BOUND
    saw_omega = False
    queue: list[tuple[tuple[int, ...], Derivation]] = [((), d)]
    while queue:
        path, node = queue.pop(0)
        problem = _check_node(node, sig, bound, axioms, allowed_rules)
        if problem is not None:
            return Invalid(path, problem)
        if node.rule == RuleId.STAR_L_OMEGA:
            saw_omega = True
            continue
        for i, premise in enumerate(node.premises):
            queue.append((path + (i,), premise))
    return ValidUpTo(bound) if saw_omega else Valid()


def _check_node(
    node: Derivation,
    sig: SubexpSignature,
    bound: int,
    axioms: frozenset[Sequent],
    allowed_rules: frozenset[RuleId] | None,
) -> str | None:
    concl = node.conclusion
    inst = node.instance
    if not sequent_is_concrete(concl) or inst.rule == RuleId.ITER:
        return "schematic construct outside an omega template"
    for f in (*concl.antecedent, concl.succedent):
        for label in bang_labels(f):
            if label not in sig.labels:
                return f"UnknownLabel: {label!r}"
    if allowed_rules is not None and inst.rule not in allowed_rules:
        return f"rule {inst.rule.value} is not allowed in this fragment"

    if inst.rule == RuleId.HYP:
        if node.premises:
            return "hypothesis leaves take no premises"
        if concl not in axioms:
            return "sequent is not among the admitted hypotheses"
        return None

    if inst.rule == RuleId.CUT:
        if len(node.premises) != 2:
            return "cut takes exactly two premises"
        left, right = (p.conclusion for p in node.premises)
        p = inst.position
        if p is None or not 0 <= p < len(right.antecedent):
            return "cut position out of range in the right premise"
        cut_formula = right.antecedent[p]
        if not isinstance(cut_formula, Formula) or left.succedent != cut_formula:
            return "left premise does not prove the cut formula"
        expected = Sequent(
            right.antecedent[:p] + left.antecedent + right.antecedent[p + 1 :],
            right.succedent,
        )
        if concl != expected:
            return f"cut conclusion should be {print_sequent(expected)!r}"
        return None

    if inst.rule == RuleId.MIX:
        return _check_mix(node, sig)

    if inst.rule == RuleId.STAR_L_OMEGA:
        return _check_omega(node, sig, bound, axioms, allowed_rules)

    try:
        expected = rule_premises(concl, inst, sig)
    except RuleError as e:
        return str(e)
    if len(node.premises) != len(expected):
        return f"rule {inst.rule.value} takes {len(expected)} premises, found {len(node.premises)}"
    for want, have in zip(expected, node.premises):
        if have.conclusion != want:
            return (
                f"premise should conclude {print_sequent(want)!r}, "
                f"found {print_sequent(have.conclusion)!r}"
            )
    return None


def _check_mix(node: Derivation, sig: SubexpSignature) -> str | None:
    if len(node.premises) != 2:
        return "mix takes exactly two premises"
    left_d, right_d = node.premises
    if left_d.rule != RuleId.BANG_R:
        return "InvariantViolation: the left premise of mix must end in a promotion"
    bang = left_d.conclusion.succedent
    if not isinstance(bang, Bang) or bang.label not in sig.contractible:
        return "mix requires a contractible subexponential on the left"
    positions = node.instance.positions
    if not positions or list(positions) != sorted(set(positions)):
        return "mix positions must be nonempty and strictly increasing"
    right = right_d.conclusion
    for p in positions:
        if not 0 <= p < len(right.antecedent) or right.antecedent[p] != bang:
            return "every mix position must hold the mixed formula"
    t = node.instance.target
    if t is None or not 0 <= t <= len(positions):
        return "mix target gap out of range"
    expected = mix_conclusion(left_d.conclusion, right, positions, t)
    if node.conclusion != expected:
        return f"mix conclusion should be {print_sequent(expected)!r}"
    return None


def mix_conclusion(
    left: Sequent, right: Sequent, positions: tuple[int, ...], target: int
) -> Sequent:
    """The mix conclusion: occurrences removed, Pi inserted at the target gap."""
    remaining = [
        item for i, item in enumerate(right.antecedent) if i not in set(positions)
    ]
    if target < len(positions):
        insert_at = positions[target] - target
    else:
        insert_at = len(right.antecedent) - len(positions)
    merged = tuple(remaining[:insert_at]) + left.antecedent + tuple(remaining[insert_at:])
    return Sequent(merged, right.succedent)


def _check_omega(
    node: Derivation,
    sig: SubexpSignature,
    bound: int,
    axioms: frozenset[Sequent],
    allowed_rules: frozenset[RuleId] | None,
) -> str | None:
    concl = node.conclusion
    p = node.instance.position
    if p is None or not 0 <= p < len(concl.antecedent):
        return "omega-rule position out of range"
    star = concl.antecedent[p]
    if not isinstance(star, Star):
        return "omega-rule principal formula is not a star"
    if node.template is None:
        return "omega node is missing its premise template"
    if node.premises:
        return "omega premises live in the template, not the premise list"

    def expected_at(k: int) -> Sequent:
        return Sequent(
            concl.antecedent[:p] + (star.body,) * k + concl.antecedent[p + 1 :],
            concl.succedent,
        )

    for k in range(bound + 1):
        try:
            inst_d = instantiate_template(node.template, k)
        except TemplateError as e:
            return f"omega instance n={k}: {e}"
        if inst_d.conclusion != expected_at(k):
            return (
                f"omega instance n={k} concludes "
                f"{print_sequent(inst_d.conclusion)!r}, expected "
                f"{print_sequent(expected_at(k))!r}"
            )
        report = check(inst_d, sig, Bounded(bound), axioms, allowed_rules)
        if isinstance(report, Invalid):
            return f"omega instance n={k}: {report.reason} at {report.path}"
    for j, ex in enumerate(node.explicit):
        if ex.conclusion != expected_at(j):
            return f"explicit omega instance n={j} has the wrong conclusion"
        report = check(ex, sig, Bounded(bound), axioms, allowed_rules)
        if isinstance(report, Invalid):
            return f"explicit omega instance n={j}: {report.reason} at {report.path}"
    return None


# ---------------------------------------------------------------------------
# Exchange format


def _compact(text: str) -> str:
    return text.replace(" ", "")


def _format_params(inst: RuleInstance) -> str:
    parts = []
    if inst.position is not None:
        parts.append(f"pos={inst.position}")
    if inst.block is not None:
        parts.append(f"block={inst.block}")
    if inst.index is not None:
        parts.append(f"index={inst.index}")
    if inst.count is not None:
        parts.append(f"count={inst.count}")
    if inst.splits is not None:
        parts.append("splits=" + ",".join(str(x) for x in inst.splits))
    if inst.positions is not None:
        parts.append("positions=" + ",".join(str(x) for x in inst.positions))
    if inst.target is not None:
        parts.append(f"target={inst.target}")
    return " ".join(parts)


def _quote_sequent(s: Sequent) -> str:
    return '"' + print_sequent(s) + '"'


def to_text(d: Derivation, indent: int = 0) -> str:
    """Serialize a derivation to the parenthesized exchange format."""
    pad = "  " * indent
    inst = d.instance
    if inst.rule == RuleId.STAR_L_OMEGA:
        body = to_text(d.template.body, indent + 2)
        explicit = "".join("\n" + to_text(e, indent + 2) for e in d.explicit)
        return (
            f"{pad}(star-l-omega ({_format_params(inst)}) {_quote_sequent(d.conclusion)}\n"
            f"{pad}  (template {d.template.param}\n{body})\n"
            f"{pad}  (explicit{explicit}))"
        )
    if inst.rule == RuleId.ITER:
        count = inst.iter_count
        coef = dict(count.coeffs)
        if len(coef) > 1:
            raise ValueError("iter counts over several parameters cannot be serialized")
        a = next(iter(coef.values()), 0)
        inner = inst.inner
        body = to_text(d.premises[0], indent + 1)
        return (
            f"{pad}(iter {inner.rule.value} ({a} {count.const}) "
            f"({_format_params(inner)}) {_quote_sequent(d.conclusion)}\n{body})"
        )
    head = f"{pad}({inst.rule.value} ({_format_params(inst)}) {_quote_sequent(d.conclusion)}"
    if not d.premises:
        return head + ")"
    body = "\n".join(to_text(p, indent + 1) for p in d.premises)
    return head + "\n" + body + ")"


class DerivationFormatError(ValueError):
    pass


_SEXP_TOKEN = re.compile(r'\s*(\(|\)|"[^"]*"|[^\s()"]+)')


def _sexp_tokens(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:].strip()
            if rest:
                raise DerivationFormatError(f"unreadable input near {rest[:20]!r}")
            break
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def _parse_sexp(tokens: list[str], i: int):
    if tokens[i] == "(":
        items = []
        i += 1
        while i < len(tokens) and tokens[i] != ")":
            item, i = _parse_sexp(tokens, i)
            items.append(item)
        if i >= len(tokens):
            raise DerivationFormatError("unbalanced parentheses")
        return items, i + 1
    return tokens[i], i + 1


def _split_top(text: str, sep: str) -> list[str]:
    parts = []
    depth = 0
    start = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
        elif depth == 0 and text.startswith(sep, i):
            parts.append(text[start:i])
            start = i + len(sep)
            i += len(sep)
            continue
        i += 1
    parts.append(text[start:])
    return parts


def parse_schematic_sequent(text: str) -> Sequent:
    """Parse a sequent whose antecedent may contain ``F^[expr]`` blocks."""
    halves = _split_top(text, "|-")
    if len(halves) != 2:
        raise DerivationFormatError(f"expected one turnstile in {text!r}")
    left, right = halves
    items: list = []
    if left.strip():
        for chunk in _split_top(left, ","):
            chunk = chunk.strip()
            caret = chunk.find("^[")
            if caret != -1 and chunk.endswith("]"):
                f = parse_formula(chunk[:caret])
                items.append(Rep(f, parse_linexpr(chunk[caret + 2 : -1])))
            else:
                items.append(parse_formula(chunk))
    return Sequent(tuple(items), parse_formula(right.strip()))


def _parse_params(tokens) -> dict:
    out: dict = {}
    for tok in tokens:
        if "=" not in tok:
            raise DerivationFormatError(f"bad parameter {tok!r}")
        key, _, value = tok.partition("=")
        if key in ("pos", "block", "index", "count", "target"):
            out["position" if key == "pos" else key] = int(value)
        elif key in ("splits", "positions"):
            out[key] = tuple(int(x) for x in value.split(",")) if value else ()
        else:
            raise DerivationFormatError(f"unknown parameter {key!r}")
    return out


_RULE_BY_NAME = {r.value: r for r in RuleId}


def _build_derivation(form) -> Derivation:
    if not isinstance(form, list) or not form:
        raise DerivationFormatError("expected a parenthesized derivation node")
    name = form[0]
    if name == "iter":
        if len(form) != 6:
            raise DerivationFormatError("iter takes rule, counts, params, sequent, body")
        inner_rule = _RULE_BY_NAME.get(form[1])
        a, b = (int(x) for x in form[2])
        params = _parse_params(form[3])
        concl = parse_schematic_sequent(form[4].strip('"'))
        body = _build_derivation(form[5])
        slot = params.get("position")
        rep = concl.antecedent[slot] if slot is not None else None
        count = rep.count if isinstance(rep, Rep) else lin(b)
        inner = RuleInstance(inner_rule, **params)
        return Derivation(
            concl, RuleInstance(RuleId.ITER, inner=inner, iter_count=count), (body,)
        )
    rule = _RULE_BY_NAME.get(name)
    if rule is None:
        raise DerivationFormatError(f"unknown rule {name!r}")
    params = _parse_params(form[1])
    concl = parse_schematic_sequent(form[2].strip('"'))
    if rule == RuleId.STAR_L_OMEGA:
        template = None
        explicit: tuple[Derivation, ...] = ()
        for extra in form[3:]:
            if isinstance(extra, list) and extra and extra[0] == "template":
                template = OmegaTemplate(extra[1], _build_derivation(extra[2]))
            elif isinstance(extra, list) and extra and extra[0] == "explicit":
                explicit = tuple(_build_derivation(e) for e in extra[1:])
            else:
                raise DerivationFormatError("omega nodes take (template ...) and (explicit ...)")
        if template is None:
            raise DerivationFormatError("omega node is missing its template")
        return Derivation(concl, RuleInstance(rule, **params), (), template, explicit)
    premises = tuple(_build_derivation(p) for p in form[3:])
    return Derivation(concl, RuleInstance(rule, **params), premises)


def parse_derivation(text: str) -> Derivation:
    tokens = _sexp_tokens(text)
    if not tokens:
        raise DerivationFormatError("empty derivation file")
    form, end = _parse_sexp(tokens, 0)
    if end != len(tokens):
        raise DerivationFormatError("trailing input after the derivation")
    return _build_derivation(form)
