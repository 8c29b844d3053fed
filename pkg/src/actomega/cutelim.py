"""One-step cut and mix elimination, and whole-derivation normalization.

The eliminator is a pure tree-to-tree transformation driven by a nested
induction on (complexity of the cut formula, height of the left premise,
height of the right premise). Every recursive call is checked against that
lexicographic measure and recorded in an optional trace.

Mix (simultaneous contraction-plus-cut of several occurrences of a
contractible subexponential formula) is eliminated only when its left
premise ends in a promotion; that restriction is what the joint induction
needs and is the only form the cut cases ever produce.

Omega-rule premise families are transformed symbolically: the template
parameter is carried through untouched and the template body is rewritten
pointwise. When a transformation would need to look inside the iterated
segment itself (for example, cutting a star formula whose introduction
count is symbolic), the eliminator raises NonUniformTemplate; callers may
request a bounded fallback, which instantiates the offending parameter at
n = 0..K and returns the resulting family of cut-free derivations with an
explicit partiality marker.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .derivation import (
    Derivation,
    LinExpr,
    OmegaTemplate,
    Rep,
    RuleId,
    RuleInstance,
    instantiate_template,
    mix_conclusion,
    _substitute,
)
from .syntax import (
    Bang,
    Formula,
    Limp,
    One,
    Plus,
    Rimp,
    Sequent,
    Star,
    Tensor,
    With,
    Zero,
    complexity,
    print_sequent,
)


class NonUniformTemplate(Exception):
    """The transformation would have to enter an iterated segment."""

    def __init__(self, message: str, path: tuple[int, ...] = ()):
        super().__init__(message)
        self.path = path
        # context for the bounded fallback, filled at the raise site
        self.left: Derivation | None = None
        self.right: Derivation | None = None
        self.position: int | None = None
        self.param: str | None = None


class InvariantViolation(Exception):
    """A configuration invariant or the termination measure was violated."""


@dataclass(frozen=True)
class CutConfiguration:
    """A single cut: left proves Pi |- A, right proves Gamma, A, Delta |- B."""

    left: Derivation
    right: Derivation
    position: int


@dataclass(frozen=True)
class MixConfiguration:
    """A mix: left ends in a promotion of a contractible formula which
    occurs in the right goal at every listed position; Pi lands in the
    target gap."""

    left: Derivation
    right: Derivation
    positions: tuple[int, ...]
    target: int


@dataclass(frozen=True)
class BoundedFamily:
    """Bounded-instantiation fallback output: one cut-free derivation per
    value of the non-uniform parameter, with a partiality marker."""

    instances: tuple[Derivation, ...]
    bound: int
    partial: bool = True


# Left roots that introduce the succedent's main connective.
_RIGHT_RULES = frozenset(
    {
        RuleId.LIMP_R,
        RuleId.RIMP_R,
        RuleId.TENSOR_R,
        RuleId.PLUS_R,
        RuleId.WITH_R,
        RuleId.STAR_R,
        RuleId.BANG_R,
        RuleId.ONE_R,
    }
)


def _measure(formula: Formula, left: Derivation, right: Derivation):
    return (complexity(formula), _height(left), _height(right))


def _height(d: Derivation) -> int:
    if d.rule == RuleId.STAR_L_OMEGA:
        return _height(d.template.body) + 1
    if not d.premises:
        return 1
    return 1 + max(_height(p) for p in d.premises)


def _replace(s: Sequent, p: int, items: tuple) -> Sequent:
    return Sequent(s.antecedent[:p] + items + s.antecedent[p + 1 :], s.succedent)


# ---------------------------------------------------------------------------
# Parameter bookkeeping for omega templates


def _expr_params(e: LinExpr | None) -> set[str]:
    return {p for p, _ in e.coeffs} if e is not None else set()


def _params_used(d: Derivation) -> set[str]:
    out: set[str] = set()
    for item in d.conclusion.antecedent:
        if isinstance(item, Rep):
            out |= _expr_params(item.count)
    out |= _expr_params(d.instance.iter_count)
    if d.template is not None:
        out.add(d.template.param)
        out |= _params_used(d.template.body)
    for p in d.premises:
        out |= _params_used(p)
    for e in d.explicit:
        out |= _params_used(e)
    return out


def _rename_expr(e: LinExpr, old: str, new: str) -> LinExpr:
    coeffs = tuple(
        sorted((new if name == old else name, c) for name, c in e.coeffs)
    )
    return LinExpr(coeffs, e.const)


def _rename_param(d: Derivation, old: str, new: str) -> Derivation:
    ant = tuple(
        Rep(item.formula, _rename_expr(item.count, old, new))
        if isinstance(item, Rep)
        else item
        for item in d.conclusion.antecedent
    )
    concl = Sequent(ant, d.conclusion.succedent)
    inst = d.instance
    if inst.iter_count is not None:
        inst = RuleInstance(
            rule=inst.rule,
            position=inst.position,
            block=inst.block,
            index=inst.index,
            count=inst.count,
            splits=inst.splits,
            positions=inst.positions,
            target=inst.target,
            inner=inst.inner,
            iter_count=_rename_expr(inst.iter_count, old, new),
        )
    template = d.template
    if template is not None and template.param != old:
        template = OmegaTemplate(template.param, _rename_param(template.body, old, new))
    return Derivation(
        concl,
        inst,
        tuple(_rename_param(p, old, new) for p in d.premises),
        template,
        tuple(_rename_param(e, old, new) for e in d.explicit),
    )


# ---------------------------------------------------------------------------
# Occurrence tracking and instance rebuilding


def _occurrence_maps(concl: Sequent, inst: RuleInstance) -> list[dict[int, int]]:
    """For each premise, map conclusion antecedent indices of untouched
    items to their premise indices. Principal and consumed items are
    omitted; items merely moved by a permutation are included."""
    ant = concl.antecedent
    n = len(ant)
    rule = inst.rule
    i = inst.position

    def span(lo, hi, shift):
        return {x: x + shift for x in range(lo, hi)}

    if rule in (RuleId.ID, RuleId.ONE_R, RuleId.ZERO_L):
        return []
    if rule == RuleId.LIMP_L:
        b = inst.block or 0
        first = span(i - b, i, -(i - b))
        second = span(0, i - b, 0) | span(i + 1, n, -b)
        return [first, second]
    if rule == RuleId.RIMP_L:
        b = inst.block or 0
        first = span(i + 1, i + 1 + b, -(i + 1))
        second = span(0, i, 0) | span(i + 1 + b, n, -b)
        return [first, second]
    if rule == RuleId.LIMP_R:
        return [span(0, n, 1)]
    if rule in (RuleId.RIMP_R, RuleId.PLUS_R, RuleId.BANG_R):
        return [span(0, n, 0)]
    if rule == RuleId.WITH_R:
        return [span(0, n, 0), span(0, n, 0)]
    if rule == RuleId.TENSOR_L:
        return [span(0, i, 0) | span(i + 1, n, 1)]
    if rule == RuleId.TENSOR_R:
        k = inst.block or 0
        return [span(0, k, 0), span(k, n, -k)]
    if rule in (RuleId.ONE_L, RuleId.WEAK):
        return [span(0, i, 0) | span(i + 1, n, -1)]
    if rule == RuleId.PLUS_L:
        m = span(0, i, 0) | span(i + 1, n, 0)
        return [m, dict(m)]
    if rule in (RuleId.WITH_L, RuleId.BANG_L):
        return [span(0, i, 0) | span(i + 1, n, 0)]
    if rule == RuleId.STAR_R:
        maps = []
        offset = 0
        for length in inst.splits or ():
            maps.append(span(offset, offset + length, -offset))
            offset += length
        return maps
    if rule == RuleId.PERM1:
        b = inst.block
        m = span(0, i, 0) | span(i + 1, i + 1 + b, -1) | span(i + 1 + b, n, 0)
        m[i] = i + b
        return [m]
    if rule == RuleId.PERM2:
        b = inst.block
        m = span(0, i - b, 0) | span(i - b, i, 1) | span(i + 1, n, 0)
        m[i] = i - b
        return [m]
    if rule in (RuleId.NCONTR1, RuleId.NCONTR2):
        _, q = inst.positions
        return [span(0, q, 0) | span(q, n, 1)]
    if rule == RuleId.ITER and inst.inner is not None and inst.inner.rule in (
        RuleId.ONE_L,
        RuleId.WEAK,
    ):
        slot = inst.inner.position
        return [span(0, slot, 0) | span(slot + 1, n, -1)]
    raise InvariantViolation(f"cannot track occurrences through {rule.value}")


def _rebuild_instance(inst: RuleInstance, point, slot) -> RuleInstance:
    """Remap the positional fields of a rule instance through an index map.

    ``point`` maps old item indices to new ones; ``slot`` maps old gap
    indices (0..len) to new gap indices.
    """
    rule = inst.rule
    kw = dict(
        position=inst.position,
        block=inst.block,
        index=inst.index,
        count=inst.count,
        splits=inst.splits,
        positions=inst.positions,
        target=inst.target,
        inner=inst.inner,
        iter_count=inst.iter_count,
    )
    i = inst.position
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
        kw["position"] = point(i)
    elif rule == RuleId.LIMP_L:
        b = inst.block or 0
        kw["position"] = point(i)
        kw["block"] = slot(i) - slot(i - b)
    elif rule == RuleId.RIMP_L:
        b = inst.block or 0
        kw["position"] = point(i)
        kw["block"] = slot(i + 1 + b) - slot(i + 1)
    elif rule == RuleId.PERM1:
        kw["position"] = point(i)
        kw["block"] = slot(i + 1 + inst.block) - slot(i + 1)
    elif rule == RuleId.PERM2:
        kw["position"] = point(i)
        kw["block"] = slot(i) - slot(i - inst.block)
    elif rule == RuleId.TENSOR_R:
        kw["block"] = slot(inst.block or 0)
    elif rule == RuleId.STAR_R:
        offset = 0
        new_splits = []
        for length in inst.splits or ():
            new_splits.append(slot(offset + length) - slot(offset))
            offset += length
        kw["splits"] = tuple(new_splits)
    elif rule in (RuleId.NCONTR1, RuleId.NCONTR2):
        kept, q = inst.positions
        kw["positions"] = (point(kept), slot(q))
    elif rule == RuleId.ITER:
        kw["inner"] = RuleInstance(
            inst.inner.rule, position=point(inst.inner.position)
        )
    return RuleInstance(rule=rule, **kw)


def _shift_instance(inst: RuleInstance, g: int) -> RuleInstance:
    """Shift every positional field by g (context prepended as a block)."""
    return _rebuild_instance(inst, lambda x: x + g, lambda x: x + g)


def _subst_maps(p: int, width: int):
    """Index maps for replacing the single item at p by ``width`` items."""

    def point(x: int) -> int:
        return x + width - 1 if x > p else x

    def slot(x: int) -> int:
        return x + width - 1 if x > p else x

    return point, slot


# ---------------------------------------------------------------------------
# Structural-rule chains


def _move_block_left(d: Derivation, s: int, m: int, b: int) -> Derivation:
    """Permute the block [s, s+m) of d's conclusion left over b items."""
    cur = d
    for j in range(m):
        a = cur.conclusion.antecedent
        i = s - b + j
        new_ant = a[:i] + (a[i + b],) + a[i : i + b] + a[i + b + 1 :]
        cur = Derivation(
            Sequent(new_ant, cur.conclusion.succedent),
            RuleInstance(RuleId.PERM1, position=i, block=b),
            (cur,),
        )
    return cur


def _move_block_right(d: Derivation, s: int, m: int, b: int) -> Derivation:
    """Permute the block [s, s+m) of d's conclusion right over b items."""
    cur = d
    for j in range(m - 1, -1, -1):
        a = cur.conclusion.antecedent
        p = s + j
        new_ant = a[:p] + a[p + 1 : p + 1 + b] + (a[p],) + a[p + 1 + b :]
        cur = Derivation(
            Sequent(new_ant, cur.conclusion.succedent),
            RuleInstance(RuleId.PERM2, position=p + b, block=b),
            (cur,),
        )
    return cur


def _weaken_block(d: Derivation, g: int, items: tuple) -> Derivation:
    """Insert ``items`` at index g of d's conclusion, one weakening each."""
    cur = d
    for j, f in enumerate(items):
        a = cur.conclusion.antecedent
        cur = Derivation(
            Sequent(a[: g + j] + (f,) + a[g + j :], cur.conclusion.succedent),
            RuleInstance(RuleId.WEAK, position=g + j),
            (cur,),
        )
    return cur


def _contract_blocks(d: Derivation, x: int, y: int, m: int) -> Derivation:
    """Contract the extra block [x, x+m) into the identical kept block
    starting at y (both in d's conclusion), one contraction per item."""
    cur = d
    for i in range(m):
        a = cur.conclusion.antecedent
        new_ant = a[:x] + a[x + 1 :]
        if x < y:
            inst = RuleInstance(RuleId.NCONTR2, positions=(y - 1, x))
        else:
            inst = RuleInstance(RuleId.NCONTR1, positions=(y + i, x))
        cur = Derivation(Sequent(new_ant, cur.conclusion.succedent), inst, (cur,))
    return cur


# ---------------------------------------------------------------------------
# The eliminator


class _Eliminator:
    def __init__(self, trace: list | None = None):
        self.trace = trace
        self.fresh_counter = 0

    def _fresh(self, *trees: Derivation) -> str:
        used = set()
        for t in trees:
            used |= _params_used(t)
        while True:
            self.fresh_counter += 1
            name = f"n{self.fresh_counter}"
            if name not in used:
                return name

    def _step(self, case: str, goal: Sequent, measure, parent) -> None:
        if parent is not None and not measure < parent:
            raise InvariantViolation(
                f"termination measure did not decrease at {case}: "
                f"{measure} under {parent}"
            )
        if self.trace is not None:
            self.trace.append((case, print_sequent(goal)))

    # -- cut ---------------------------------------------------------------

    def cut(self, left: Derivation, right: Derivation, p: int, parent=None) -> Derivation:
        item = right.conclusion.antecedent[p] if p < len(right.conclusion.antecedent) else None
        if not isinstance(item, Formula):
            err = NonUniformTemplate("cut occurrence inside an iterated segment")
            err.left, err.right, err.position = left, right, p
            raise err
        a = item
        if left.conclusion.succedent != a:
            raise InvariantViolation("left premise does not prove the cut formula")
        goal = _replace(right.conclusion, p, left.conclusion.antecedent)
        measure = _measure(a, left, right)

        lrule = left.rule
        if lrule == RuleId.ID:
            self._step("left-axiom", goal, measure, parent)
            return right
        if lrule == RuleId.HYP or right.rule == RuleId.HYP:
            raise InvariantViolation("cannot eliminate a cut against a hypothesis leaf")
        left_principal = lrule in _RIGHT_RULES or (
            lrule == RuleId.ITER and left.instance.inner.rule == RuleId.STAR_R
        )
        if not left_principal:
            return self._left_nonprincipal(left, right, p, goal, measure, parent)
        return self._left_principal(left, right, p, a, goal, measure, parent)

    def _left_nonprincipal(self, left, right, p, goal, measure, parent) -> Derivation:
        self._step("left-non-principal", goal, measure, parent)
        g = p  # width of the right context Gamma before the occurrence
        inst = left.instance

        if inst.rule == RuleId.STAR_L_OMEGA:
            fresh = self._fresh(left, right)
            body = _rename_param(left.template.body, left.template.param, fresh)
            new_body = self.cut(body, right, p, measure)
            new_explicit = tuple(
                self.cut(e, right, p, measure) for e in left.explicit
            )
            return Derivation(
                goal,
                RuleInstance(RuleId.STAR_L_OMEGA, position=g + inst.position),
                (),
                OmegaTemplate(fresh, new_body),
                new_explicit,
            )

        if inst.rule in (RuleId.LIMP_L, RuleId.RIMP_L):
            # only the residue premise still proves the cut formula; the
            # argument premise is carried over unchanged
            new_premises = (
                left.premises[0],
                self.cut(left.premises[1], right, p, measure),
            )
        else:
            new_premises = tuple(
                self.cut(prem, right, p, measure) for prem in left.premises
            )
        return Derivation(goal, _shift_instance(inst, g), new_premises)

    def _left_principal(self, left, right, p, a, goal, measure, parent) -> Derivation:
        rrule = right.rule
        rinst = right.instance

        if rrule == RuleId.ID:
            self._step("right-axiom", goal, measure, parent)
            return left

        principal_right = (
            rinst.position == p
            and rrule
            in (
                RuleId.LIMP_L,
                RuleId.RIMP_L,
                RuleId.TENSOR_L,
                RuleId.ONE_L,
                RuleId.PLUS_L,
                RuleId.WITH_L,
                RuleId.STAR_L_OMEGA,
                RuleId.BANG_L,
            )
        )
        structural_right = (
            (rrule in (RuleId.WEAK, RuleId.PERM1, RuleId.PERM2) and rinst.position == p)
            or (
                rrule in (RuleId.NCONTR1, RuleId.NCONTR2)
                and rinst.positions[0] == p
            )
        )
        if principal_right:
            return self._principal_pair(left, right, p, a, goal, measure, parent)
        if structural_right:
            return self._principal_structural(left, right, p, a, goal, measure, parent)
        return self._right_nonprincipal(left, right, p, goal, measure, parent)

    def _right_nonprincipal(self, left, right, p, goal, measure, parent) -> Derivation:
        self._step("right-non-principal", goal, measure, parent)
        width = len(left.conclusion.antecedent)
        point, slot = _subst_maps(p, width)
        rinst = right.instance

        if rinst.rule == RuleId.STAR_L_OMEGA:
            fresh = self._fresh(left, right)
            body = _rename_param(right.template.body, right.template.param, fresh)
            new_body = self.cut(left, body, p, measure)
            new_explicit = tuple(
                self.cut(left, e, p + (0 if rinst.position > p else 0), measure)
                for e in right.explicit
            )
            return Derivation(
                goal,
                RuleInstance(RuleId.STAR_L_OMEGA, position=point(rinst.position)),
                (),
                OmegaTemplate(fresh, new_body),
                new_explicit,
            )

        maps = _occurrence_maps(right.conclusion, rinst)
        new_premises = []
        for prem, mp in zip(right.premises, maps):
            if p in mp:
                new_premises.append(self.cut(left, prem, mp[p], measure))
            else:
                new_premises.append(prem)
        new_inst = _rebuild_instance(rinst, point, slot)
        if new_inst.rule == RuleId.STAR_R and new_inst.splits:
            # a part consisting solely of the cut occurrence may have become
            # empty when Pi is empty; drop such parts together with their
            # premises
            kept = [
                (length, prem)
                for length, prem in zip(new_inst.splits, new_premises)
                if length > 0
            ]
            new_inst = RuleInstance(
                RuleId.STAR_R,
                count=len(kept),
                splits=tuple(length for length, _ in kept),
            )
            new_premises = [prem for _, prem in kept]
        return Derivation(goal, new_inst, tuple(new_premises))

    def _principal_pair(self, left, right, p, a, goal, measure, parent) -> Derivation:
        pi = left.conclusion.antecedent

        if isinstance(a, One):
            self._step("principal-pair-unit", goal, measure, parent)
            return right.premises[0]

        if isinstance(a, Limp):
            self._step("principal-pair-left-division", goal, measure, parent)
            b = right.instance.block or 0
            arg_d, rest_d = right.premises
            inner = self.cut(left.premises[0], rest_d, p - b, measure)
            return self.cut(arg_d, inner, p - b, measure)

        if isinstance(a, Rimp):
            self._step("principal-pair-right-division", goal, measure, parent)
            arg_d, rest_d = right.premises
            inner = self.cut(left.premises[0], rest_d, p, measure)
            return self.cut(arg_d, inner, p + len(pi), measure)

        if isinstance(a, Tensor):
            self._step("principal-pair-product", goal, measure, parent)
            k = left.instance.block or 0
            inner = self.cut(left.premises[1], right.premises[0], p + 1, measure)
            return self.cut(left.premises[0], inner, p, measure)

        if isinstance(a, Plus):
            self._step("principal-pair-sum", goal, measure, parent)
            branch = right.premises[left.instance.index - 1]
            return self.cut(left.premises[0], branch, p, measure)

        if isinstance(a, With):
            self._step("principal-pair-conjunction", goal, measure, parent)
            part = left.premises[right.instance.index - 1]
            return self.cut(part, right.premises[0], p, measure)

        if isinstance(a, Star):
            if left.rule == RuleId.ITER:
                err = NonUniformTemplate(
                    "a star introduced with a symbolic count meets its own "
                    "unfolding rule"
                )
                err.left, err.right, err.position = left, right, p
                params = sorted(_expr_params(left.instance.iter_count))
                err.param = params[0] if params else None
                raise err
            self._step("principal-pair-star", goal, measure, parent)
            n = left.instance.count
            cur = instantiate_template(right.template, n)
            # the omega premise at k=n holds n copies of the body at
            # positions p..p+n-1; replace them right to left so the earlier
            # positions stay put
            for j in range(n - 1, -1, -1):
                cur = self.cut(left.premises[j], cur, p + j, measure)
            return cur

        if isinstance(a, Bang):
            self._step("principal-pair-subexponential", goal, measure, parent)
            return self.cut(left.premises[0], right.premises[0], p, measure)

        raise InvariantViolation(f"no principal pair case for {a}")

    def _principal_structural(self, left, right, p, a, goal, measure, parent) -> Derivation:
        pi = left.conclusion.antecedent
        m = len(pi)
        rrule = right.rule
        rinst = right.instance

        if rrule == RuleId.WEAK:
            self._step("principal-weakening", goal, measure, parent)
            return _weaken_block(right.premises[0], p, pi)

        if rrule == RuleId.PERM1:
            # the occurrence sits b items further right in the premise
            self._step("principal-permutation", goal, measure, parent)
            b = rinst.block
            inner = self.cut(left, right.premises[0], p + b, measure)
            return _move_block_left(inner, p + b, m, b)

        if rrule == RuleId.PERM2:
            self._step("principal-permutation", goal, measure, parent)
            b = rinst.block
            inner = self.cut(left, right.premises[0], p - b, measure)
            return _move_block_right(inner, p - b, m, b)

        # non-local contraction: replace the cut by a merge of the two
        # copies in the premise
        self._step("principal-contraction", goal, measure, parent)
        _, q = rinst.positions
        if rrule == RuleId.NCONTR1:
            positions, target = (p, q), 0
        else:
            positions, target = (q, p + 1), 1
        return self.mix(left, right.premises[0], positions, target, measure)

    # -- mix ---------------------------------------------------------------

    def mix(
        self,
        left: Derivation,
        right: Derivation,
        positions: tuple[int, ...],
        target: int,
        parent=None,
    ) -> Derivation:
        if left.rule != RuleId.BANG_R:
            raise InvariantViolation(
                "the left premise of a merge must end in a promotion"
            )
        bang = left.conclusion.succedent
        positions = tuple(sorted(positions))
        for x in positions:
            item = right.conclusion.antecedent[x] if x < len(right.conclusion.antecedent) else None
            if item != bang:
                raise InvariantViolation("every merge position must hold the mixed formula")
        if not 0 <= target <= len(positions):
            raise InvariantViolation("merge target gap out of range")
        if len(positions) == 1 and target == 0:
            return self.cut(left, right, positions[0], parent)
        goal = mix_conclusion(left.conclusion, right.conclusion, positions, target)
        measure = _measure(bang, left, right)
        rrule = right.rule
        rinst = right.instance

        if rrule == RuleId.ID:
            self._step("merge-right-axiom", goal, measure, parent)
            return left
        if rrule == RuleId.HYP:
            raise InvariantViolation("cannot eliminate a merge against a hypothesis leaf")

        principal = rrule == RuleId.BANG_L and rinst.position in positions
        structural = (
            (rrule in (RuleId.WEAK, RuleId.PERM1, RuleId.PERM2) and rinst.position in positions)
            or (
                rrule in (RuleId.NCONTR1, RuleId.NCONTR2)
                and rinst.positions[0] in positions
            )
        )
        if principal:
            return self._mix_principal(left, right, positions, target, goal, measure, parent)
        if structural:
            return self._mix_structural(left, right, positions, target, goal, measure, parent)
        return self._mix_nonprincipal(left, right, positions, target, goal, measure, parent)

    def _local_target(self, positions, target, mapped, mp):
        """Translate the global target into a premise-local one.

        ``mapped`` is the sorted tuple of premise positions; ``mp`` is the
        occurrence map of that premise. Returns the local target when the
        active occurrence lands here, else None.
        """
        if target == len(positions):
            return None
        active = positions[target]
        if active in mp and mp[active] in mapped:
            return mapped.index(mp[active])
        return None

    def _mix_nonprincipal(self, left, right, positions, target, goal, measure, parent):
        rinst = right.instance
        pi = left.conclusion.antecedent
        m = len(pi)

        if rinst.rule == RuleId.STAR_L_OMEGA:
            self._step("merge-non-principal", goal, measure, parent)
            fresh = self._fresh(left, right)
            body = _rename_param(right.template.body, right.template.param, fresh)
            new_body = self.mix(left, body, positions, target, measure)
            new_explicit = tuple(
                self.mix(left, e, positions, target, measure) for e in right.explicit
            )
            point, slot = self._mix_maps(positions, target, m, len(right.conclusion.antecedent))
            return Derivation(
                goal,
                RuleInstance(RuleId.STAR_L_OMEGA, position=point(rinst.position)),
                (),
                OmegaTemplate(fresh, new_body),
                new_explicit,
            )

        maps = _occurrence_maps(right.conclusion, rinst)
        per_premise = []
        for mp in maps:
            local = tuple(sorted(mp[x] for x in positions if x in mp))
            per_premise.append(local)
        if len(maps) != len(right.premises):
            raise InvariantViolation("merge occurrences were lost while tracking")

        splitting = rinst.rule in (
            RuleId.LIMP_L,
            RuleId.RIMP_L,
            RuleId.TENSOR_R,
            RuleId.STAR_R,
        )
        if splitting and sum(1 for loc in per_premise if loc) > 1:
            return self._mix_branching(
                left, right, positions, target, goal, measure, parent, maps, per_premise
            )
        if splitting:
            # all occurrences landed in one part; reuse the branching
            # machinery with a single auxiliary block, which also rebuilds
            # the part boundaries correctly
            return self._mix_branching(
                left, right, positions, target, goal, measure, parent, maps, per_premise
            )

        self._step("merge-non-principal", goal, measure, parent)
        new_premises = []
        for prem, mp, local in zip(right.premises, maps, per_premise):
            if not local:
                new_premises.append(prem)
                continue
            if target == len(positions):
                lt = len(local)
            else:
                lt = self._local_target(positions, target, local, mp)
                if lt is None:
                    raise InvariantViolation(
                        "the target gap did not follow the occurrences"
                    )
            new_premises.append(self.mix(left, prem, local, lt, measure))
        new_inst = self._rebuild_for_mix(rinst, right, positions, target, m)
        return Derivation(goal, new_inst, tuple(new_premises))

    def _mix_branching(
        self, left, right, positions, target, goal, measure, parent, maps, per_premise
    ):
        self._step("merge-branching", goal, measure, parent)
        pi = left.conclusion.antecedent
        m = len(pi)
        rinst = right.instance
        if target == len(positions):
            raise InvariantViolation(
                "a trailing merge target cannot be rebuilt across branches"
            )
        active = positions[target]
        home = None
        for idx, (mp, local) in enumerate(zip(maps, per_premise)):
            if local and active in mp and mp[active] in local:
                home = idx
        if home is None:
            raise InvariantViolation("the target occurrence was not tracked")

        new_premises = []
        pi_local: dict[int, int] = {}  # premise index -> Pi start within it
        for idx, (prem, mp, local) in enumerate(zip(right.premises, maps, per_premise)):
            if not local:
                new_premises.append(prem)
                continue
            lt = local.index(mp[active]) if idx == home else 0
            new_premises.append(self.mix(left, prem, local, lt, measure))
            pi_local[idx] = local[lt] - lt

        if rinst.rule in (RuleId.STAR_R, RuleId.TENSOR_R):
            lengths = [len(p.conclusion.antecedent) for p in new_premises]
            offsets = []
            acc = 0
            for length in lengths:
                offsets.append(acc)
                acc += length
            conclusion_ant: tuple = ()
            for prem in new_premises:
                conclusion_ant += prem.conclusion.antecedent
            if rinst.rule == RuleId.TENSOR_R:
                new_inst = RuleInstance(RuleId.TENSOR_R, block=lengths[0])
                kept_premises = tuple(new_premises)
            else:
                kept = [
                    (length, prem)
                    for length, prem in zip(lengths, new_premises)
                    if length > 0
                ]
                new_inst = RuleInstance(
                    RuleId.STAR_R,
                    count=len(kept),
                    splits=tuple(length for length, _ in kept),
                )
                kept_premises = tuple(prem for _, prem in kept)
            pi_starts = {
                idx: offsets[idx] + pi_local[idx] for idx in pi_local
            }
        else:
            # divisions: premise 0 is the argument block, premise 1 carries
            # the residue formula at a known index
            local1 = per_premise[1]
            if rinst.rule == RuleId.LIMP_L:
                old_res = rinst.position - (rinst.block or 0)
            else:
                old_res = rinst.position
            r = old_res - sum(1 for x in local1 if x < old_res)
            new_res = r + (m if 1 in pi_local and r >= pi_local[1] else 0)
            new_up = new_premises[0].conclusion.antecedent
            new_rest = new_premises[1].conclusion.antecedent
            u = len(new_up)
            f = right.conclusion.antecedent[rinst.position]
            if rinst.rule == RuleId.LIMP_L:
                conclusion_ant = (
                    new_rest[:new_res] + new_up + (f,) + new_rest[new_res + 1 :]
                )
                new_inst = RuleInstance(
                    RuleId.LIMP_L, position=new_res + u, block=u
                )
                up_offset = new_res
            else:
                conclusion_ant = (
                    new_rest[:new_res] + (f,) + new_up + new_rest[new_res + 1 :]
                )
                new_inst = RuleInstance(RuleId.RIMP_L, position=new_res, block=u)
                up_offset = new_res + 1
            pi_starts = {}
            if 0 in pi_local:
                pi_starts[0] = up_offset + pi_local[0]
            if 1 in pi_local:
                s = pi_local[1]
                pi_starts[1] = s if s <= new_res else s + u
            kept_premises = tuple(new_premises)

        cur = Derivation(
            Sequent(conclusion_ant, right.conclusion.succedent),
            new_inst,
            kept_premises,
        )
        home_start = pi_starts[home]
        for idx in sorted(
            (i for i in pi_starts if i != home),
            key=lambda i: pi_starts[i],
            reverse=True,
        ):
            x = pi_starts[idx]
            y = home_start if x > home_start else home_start - m
            cur = _contract_blocks(cur, x, y, m)
            if x < home_start:
                home_start -= m
        if cur.conclusion != goal:
            raise InvariantViolation("branch merge did not reproduce the goal")
        return cur

    def _mix_maps(self, positions, target, pi_len, ant_len):
        """Index maps from the old right antecedent to the mix conclusion."""
        pos_list = list(positions)
        if target < len(positions):
            insert_at = positions[target] - target
        else:
            insert_at = ant_len - len(positions)

        def remaining(x: int) -> int:
            return x - sum(1 for q in pos_list if q < x)

        def point(x: int) -> int:
            r = remaining(x)
            return r + pi_len if r >= insert_at else r

        def slot(x: int) -> int:
            r = x - sum(1 for q in pos_list if q < x)
            return r + pi_len if r >= insert_at else r

        return point, slot

    def _rebuild_for_mix(self, rinst, right, positions, target, pi_len):
        point, slot = self._mix_maps(
            positions, target, pi_len, len(right.conclusion.antecedent)
        )
        return _rebuild_instance(rinst, point, slot)

    def _mix_principal(self, left, right, positions, target, goal, measure, parent):
        self._step("merge-principal", goal, measure, parent)
        x = right.instance.position
        k = len(positions)
        rest = tuple(q for q in positions if q != x)
        if not rest:
            raise InvariantViolation(
                "a merge whose only occurrence is derelicted is a plain cut"
            )
        # interim target: the active occurrence if it survives, else the
        # nearest remaining occurrence
        if target < k and positions[target] != x:
            t2 = rest.index(positions[target])
            final_slot = positions[target]
        elif target < k:
            t2 = min(target, len(rest) - 1)
            final_slot = positions[target]
        else:
            t2 = len(rest)
            final_slot = None
        inner = self.mix(left, right.premises[0], rest, t2, measure)
        # the derelicted body formula now sits at x adjusted for the merge
        point, _ = self._mix_maps(rest, t2, len(left.conclusion.antecedent),
                                  len(right.premises[0].conclusion.antecedent))
        body_pos = point(x)
        body_left = left.premises[0]
        cur = self.cut(body_left, inner, body_pos, measure)
        # cur now holds two copies of Pi; contract the one that is not at
        # the goal gap into the one that is
        pi_len = len(left.conclusion.antecedent)
        kept_start, extra_start = self._locate_pi_blocks(
            cur.conclusion, goal, pi_len
        )
        cur = _contract_blocks(cur, extra_start, kept_start, pi_len)
        if cur.conclusion != goal:
            raise InvariantViolation("principal merge did not reproduce the goal")
        return cur

    def _locate_pi_blocks(self, have: Sequent, goal: Sequent, m: int):
        """Find the Pi block positions in ``have``: the one aligned with the
        goal (kept) and the extra one (to be contracted away)."""
        ha, ga = have.antecedent, goal.antecedent
        assert len(ha) == len(ga) + m
        # leftmost index where the sequences diverge marks one block edge;
        # try every placement of the extra block and keep the first that
        # restores the goal
        for x in range(len(ha) - m + 1):
            if ha[:x] + ha[x + m :] == ga:
                # kept block = the block in the goal coordinates holding Pi;
                # locate it by comparing with goal around the target gap
                remainder = ha[:x] + ha[x + m :]
                # the kept block lies wherever goal and remainder share Pi;
                # scan goal for a block of m items matching ha[x:x+m]
                blk = ha[x : x + m]
                for y0 in range(len(ga) - m + 1):
                    if ga[y0 : y0 + m] == blk:
                        # translate the goal index back into have-coordinates
                        y = y0 if y0 < x else y0 + m
                        if y != x:
                            return y, x
        raise InvariantViolation("could not locate the duplicated context block")

    def _mix_structural(self, left, right, positions, target, goal, measure, parent):
        rinst = right.instance
        rrule = right.rule
        k = len(positions)
        pi = left.conclusion.antecedent
        m = len(pi)
        active = positions[target] if target < k else None
        maps = _occurrence_maps(right.conclusion, rinst)
        mp = maps[0]

        if rrule in (RuleId.NCONTR1, RuleId.NCONTR2):
            self._step("merge-contraction", goal, measure, parent)
            _, q = rinst.positions
            kept = rinst.positions[0]
            new_copy = q
            new_positions = sorted({mp[x] for x in positions} | {new_copy})
            if active is not None:
                t2 = new_positions.index(mp[active])
            else:
                t2 = len(new_positions)
            out = self.mix(left, right.premises[0], tuple(new_positions), t2, measure)
            if out.conclusion != goal:
                raise InvariantViolation("contraction merge did not reproduce the goal")
            return out

        if rrule == RuleId.WEAK:
            x = rinst.position
            if x != active:
                self._step("merge-weakening", goal, measure, parent)
                new_positions = tuple(sorted(mp[y] for y in positions if y != x))
                if not new_positions:
                    # the weakened copy was the only occurrence and it is not
                    # the active one, so Pi trails: weaken Pi in at the gap
                    point, slot = self._mix_maps(positions, target, 0,
                                                 len(right.conclusion.antecedent))
                    insert = slot(len(right.conclusion.antecedent))
                    return _weaken_block(right.premises[0], insert, pi)
                if active is not None:
                    t2 = new_positions.index(mp[active])
                else:
                    t2 = len(new_positions)
                return self.mix(left, right.premises[0], new_positions, t2, measure)
            # the active occurrence is weakened
            others = tuple(sorted(mp[y] for y in positions if y != x))
            if not others:
                self._step("merge-weakening", goal, measure, parent)
                return _weaken_block(right.premises[0], positions[target] - sum(
                    1 for q in positions if q < positions[target]
                ), pi)
            self._step("merge-weakening", goal, measure, parent)
            inner = self.mix(left, right.premises[0], others, 0, measure)
            return self._permute_to_goal(inner, goal, m)

        # permutation of an occurrence
        self._step("merge-permutation", goal, measure, parent)
        new_positions = tuple(sorted(mp[x] for x in positions))
        if active is not None:
            t2 = new_positions.index(mp[active])
        else:
            t2 = len(new_positions)
        inner = self.mix(left, right.premises[0], new_positions, t2, measure)
        if inner.conclusion == goal:
            return inner
        return self._permute_to_goal(inner, goal, m)

    def _permute_to_goal(self, inner: Derivation, goal: Sequent, m: int) -> Derivation:
        """Move the Pi block of ``inner`` to where ``goal`` wants it."""
        if inner.conclusion == goal:
            return inner
        ha, ga = inner.conclusion.antecedent, goal.antecedent
        if len(ha) != len(ga):
            raise InvariantViolation("permutation repair on unequal antecedents")
        lo = 0
        while lo < len(ha) and ha[lo] == ga[lo]:
            lo += 1
        hi = len(ha)
        while hi > lo and ha[hi - 1] == ga[hi - 1]:
            hi -= 1
        # within [lo, hi) the block of m items moved; it sits at one end
        if ha[lo : lo + m] == ga[hi - m : hi]:
            out = _move_block_right(inner, lo, m, hi - lo - m)
        elif ha[hi - m : hi] == ga[lo : lo + m]:
            out = _move_block_left(inner, hi - m, m, hi - lo - m)
        else:
            raise InvariantViolation("could not realign the context block")
        if out.conclusion != goal:
            raise InvariantViolation("permutation repair did not reach the goal")
        return out


# ---------------------------------------------------------------------------
# Public API


def eliminate_one_cut(
    cfg: CutConfiguration,
    trace: list | None = None,
    fallback_bound: int | None = None,
) -> Derivation | BoundedFamily:
    """Eliminate a single cut, returning a cut-free derivation of the
    composed goal. With ``fallback_bound`` set, a non-uniform template is
    answered by a BoundedFamily of instantiations instead of an error."""
    a = cfg.right.conclusion.antecedent[cfg.position]
    if cfg.left.conclusion.succedent != a:
        raise InvariantViolation("left premise does not prove the cut formula")
    elim = _Eliminator(trace)
    try:
        return elim.cut(cfg.left, cfg.right, cfg.position)
    except NonUniformTemplate as err:
        if fallback_bound is None or err.param is None:
            raise
        instances = []
        for n in range(fallback_bound + 1):
            left_n = _substitute(err.left, {err.param: n})
            right_n = _substitute(err.right, {err.param: n})
            pos = err.position
            ant = right_n.conclusion.antecedent
            if not (
                pos < len(ant) and ant[pos] == left_n.conclusion.succedent
            ):
                # instantiation expanded repetitions before the occurrence;
                # find it again
                cut_formula = left_n.conclusion.succedent
                candidates = [
                    i for i, item in enumerate(ant) if item == cut_formula
                ]
                if not candidates:
                    raise InvariantViolation(
                        "the cut occurrence was lost during instantiation"
                    ) from err
                pos = min(candidates, key=lambda i: abs(i - err.position))
            instances.append(_Eliminator(trace).cut(left_n, right_n, pos))
        return BoundedFamily(tuple(instances), fallback_bound)


def eliminate_mix(cfg: MixConfiguration, trace: list | None = None) -> Derivation:
    """Eliminate a mix whose left premise ends in a promotion."""
    if cfg.left.rule != RuleId.BANG_R:
        raise InvariantViolation(
            "the left premise of a merge must end in a promotion"
        )
    return _Eliminator(trace).mix(
        cfg.left, cfg.right, tuple(cfg.positions), cfg.target
    )


def eliminate_all(d: Derivation, trace: list | None = None) -> Derivation:
    """Remove every cut and mix, innermost first, left to right."""
    return _eliminate_all(d, trace, ())


def _eliminate_all(d: Derivation, trace, path) -> Derivation:
    new_premises = tuple(
        _eliminate_all(p, trace, path + (i,)) for i, p in enumerate(d.premises)
    )
    template = d.template
    if template is not None:
        template = OmegaTemplate(
            template.param, _eliminate_all(template.body, trace, path + (0,))
        )
    explicit = tuple(
        _eliminate_all(e, trace, path + (i,)) for i, e in enumerate(d.explicit)
    )
    elim = _Eliminator(trace)
    try:
        if d.rule == RuleId.CUT:
            return elim.cut(new_premises[0], new_premises[1], d.instance.position)
        if d.rule == RuleId.MIX:
            return elim.mix(
                new_premises[0],
                new_premises[1],
                d.instance.positions,
                d.instance.target,
            )
    except NonUniformTemplate as err:
        err.path = path
        raise
    if (
        new_premises == d.premises
        and template is d.template
        and explicit == d.explicit
    ):
        return d
    return Derivation(d.conclusion, d.instance, new_premises, template, explicit)
