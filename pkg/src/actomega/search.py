"""Backward proof search and the brute-force fixpoint oracle.

Search works over generalized applications: a non-permutation rule with a
chain of permutations below it. With contraction unavailable every
generalized premise has strictly smaller eta measure, so the search is a
terminating decision procedure; with contraction a depth budget is
mandatory and exhaustion yields Unknown. Omega-rule branches are sampled
at n = 0..K and certified as Derivable only when a premise template can be
synthesized from the sampled proofs.
"""

from __future__ import annotations

import collections
import itertools
from dataclasses import dataclass, field

from .derivation import (
    Derivation,
    OmegaTemplate,
    Rep,
    RuleId,
    RuleInstance,
    check,
    Valid,
    lin_param,
    rule_premises,
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
    SubexpSignature,
    Tensor,
    With,
    Zero,
    bang_labels,
)

# Backward contraction is pruned once a contractible formula already has
# this many copies in the antecedent; pruning downgrades refutation to
# Unknown(BudgetExhausted).
CONTRACTION_COPY_CAP = 2

# With contraction available the antecedent can grow without bound through
# derelict-and-contract cycles, so search states are pruned once the
# antecedent exceeds a structural length allowance computed from the goal
# (see _length_allowance). Like the copy cap, this pruning can only
# downgrade a refutation to Unknown(BudgetExhausted), never flip a verdict.


class UnknownLabel(ValueError):
    pass


class MissingDepthBudget(ValueError):
    pass


class StarPresent(ValueError):
    pass


class ContractionPresent(ValueError):
    pass


class UniverseTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SearchBudget:
    omega_bound: int = 5
    depth: int | None = None
    perm_window: int | None = 4

    def __post_init__(self):
        if self.omega_bound < 1:
            raise ValueError("omega bound must be at least 1")
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth budget must be at least 1 when finite")


OMEGA_SAMPLED = "omega-sampled"
BUDGET_EXHAUSTED = "budget-exhausted"

# Sentinel dependency level: the verdict relies on no ancestor.
_NO_DEP = float("inf")


@dataclass(frozen=True)
class Derivable:
    derivation: Derivation


@dataclass(frozen=True)
class NotDerivable:
    pass


@dataclass(frozen=True)
class Unknown:
    reason: str


SearchResult = Derivable | NotDerivable | Unknown


@dataclass(frozen=True)
class GeneralizedApplication:
    """A non-permutation core with a permutation chain below it.

    ``chain`` runs from the overall conclusion upward: each entry is a
    permutation instance together with the sequent it concludes, and the
    topmost entry's premise is ``conclusion``, the core's own conclusion.
    """

    core: RuleInstance
    conclusion: Sequent
    chain: tuple[tuple[RuleInstance, Sequent], ...] = ()

    def build(self, premises: tuple[Derivation, ...], **node_extras) -> Derivation:
        d = Derivation(self.conclusion, self.core, premises, **node_extras)
        for inst, concl in reversed(self.chain):
            d = Derivation(concl, inst, (d,))
        return d


def _compositions(total: int, parts: int):
    """All ways to write total as an ordered sum of ``parts`` positive numbers."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def core_instances(
    s: Sequent, sig: SubexpSignature, contraction_cap: int | None = None
) -> tuple[list[RuleInstance], bool]:
    """All non-permutation, non-cut backward rule instances concluding s.

    Returns the list plus a flag marking that contraction instances were
    pruned by the copy cap.
    """
    ant, succ = s.antecedent, s.succedent
    out: list[RuleInstance] = []
    expanding: list[RuleInstance] = []
    capped = False

    if len(ant) == 1 and ant[0] == succ:
        out.append(RuleInstance(RuleId.ID))
    if not ant and isinstance(succ, One):
        out.append(RuleInstance(RuleId.ONE_R))

    if isinstance(succ, Limp):
        out.append(RuleInstance(RuleId.LIMP_R))
    elif isinstance(succ, Rimp):
        out.append(RuleInstance(RuleId.RIMP_R))
    elif isinstance(succ, Tensor):
        out.extend(
            RuleInstance(RuleId.TENSOR_R, block=k) for k in range(len(ant) + 1)
        )
    elif isinstance(succ, Plus):
        out.append(RuleInstance(RuleId.PLUS_R, index=1))
        out.append(RuleInstance(RuleId.PLUS_R, index=2))
    elif isinstance(succ, With):
        out.append(RuleInstance(RuleId.WITH_R))
    elif isinstance(succ, Star):
        if not ant:
            out.append(RuleInstance(RuleId.STAR_R, count=0, splits=()))
        else:
            for n in range(1, len(ant) + 1):
                for splits in _compositions(len(ant), n):
                    out.append(RuleInstance(RuleId.STAR_R, count=n, splits=splits))
    elif isinstance(succ, Bang) and succ.label in sig.labels:
        if all(
            isinstance(f, Bang) and sig.leq(succ.label, f.label) for f in ant
        ):
            out.append(RuleInstance(RuleId.BANG_R))

    for i, f in enumerate(ant):
        if isinstance(f, Zero):
            out.append(RuleInstance(RuleId.ZERO_L, position=i))
        elif isinstance(f, One):
            out.append(RuleInstance(RuleId.ONE_L, position=i))
        elif isinstance(f, Tensor):
            out.append(RuleInstance(RuleId.TENSOR_L, position=i))
        elif isinstance(f, Plus):
            out.append(RuleInstance(RuleId.PLUS_L, position=i))
        elif isinstance(f, With):
            out.append(RuleInstance(RuleId.WITH_L, position=i, index=1))
            out.append(RuleInstance(RuleId.WITH_L, position=i, index=2))
        elif isinstance(f, Star):
            out.append(RuleInstance(RuleId.STAR_L_OMEGA, position=i))
        elif isinstance(f, Limp):
            out.extend(
                RuleInstance(RuleId.LIMP_L, position=i, block=b) for b in range(i + 1)
            )
        elif isinstance(f, Rimp):
            out.extend(
                RuleInstance(RuleId.RIMP_L, position=i, block=b)
                for b in range(len(ant) - i)
            )
        elif isinstance(f, Bang):
            out.append(RuleInstance(RuleId.BANG_L, position=i))
            if f.label in sig.weakenable:
                out.append(RuleInstance(RuleId.WEAK, position=i))
            if f.label in sig.contractible:
                if contraction_cap is not None and ant.count(f) >= contraction_cap:
                    capped = True
                else:
                    for q in range(i + 1, len(ant) + 1):
                        expanding.append(
                            RuleInstance(RuleId.NCONTR1, positions=(i, q))
                        )
                    for q in range(i + 1):
                        expanding.append(
                            RuleInstance(RuleId.NCONTR2, positions=(i, q))
                        )
    # contraction grows the antecedent backward, so those instances go last
    return out + expanding, capped


def _perm_instances(s: Sequent, sig: SubexpSignature) -> list[RuleInstance]:
    ant = s.antecedent
    out = []
    for i, f in enumerate(ant):
        if not (isinstance(f, Bang) and f.label in sig.exchangeable):
            continue
        for b in range(1, len(ant) - i):
            out.append(RuleInstance(RuleId.PERM1, position=i, block=b))
        for b in range(1, i + 1):
            out.append(RuleInstance(RuleId.PERM2, position=i, block=b))
    return out


def applicable_rules(
    s: Sequent,
    sig: SubexpSignature,
    window: int | None = 4,
    contraction_cap: int | None = None,
) -> tuple[list[GeneralizedApplication], bool, bool]:
    """Enumerate the generalized applications concluding s.

    Returns (applications, window_truncated, contraction_capped). With
    ``window=None`` the permutation chains are explored exhaustively over
    the (finite) set of reachable reorderings.
    """
    seen_sequents = {s}
    frontier: list[tuple[Sequent, tuple]] = [(s, ())]
    reached: list[tuple[Sequent, tuple]] = [(s, ())]
    depth = 0
    truncated = False
    while frontier:
        if window is not None and depth >= window:
            truncated = True
            break
        depth += 1
        next_frontier = []
        for seq, chain in frontier:
            for inst in _perm_instances(seq, sig):
                premise = rule_premises(seq, inst, sig)[0]
                if premise in seen_sequents:
                    continue
                seen_sequents.add(premise)
                entry = (premise, chain + ((inst, seq),))
                next_frontier.append(entry)
                reached.append(entry)
        frontier = next_frontier

    apps = []
    seen_cores = set()
    capped = False
    for seq, chain in reached:
        cores, was_capped = core_instances(seq, sig, contraction_cap)
        capped = capped or was_capped
        for core in cores:
            key = (seq, core)
            if key in seen_cores:
                continue
            seen_cores.add(key)
            apps.append(GeneralizedApplication(core, seq, chain))
    return apps, truncated, capped


# ---------------------------------------------------------------------------
# Template synthesis


def synthesize_template(
    s0: Sequent,
    position: int,
    star: Star,
    samples: list[Derivation],
    sig: SubexpSignature,
    fresh: str,
) -> OmegaTemplate | None:
    """Build a premise template generalizing the sampled omega-premise proofs.

    Two shapes are recognized by comparing the top two samples: one more
    stacked insertion (one-l or weak) of the star's body, and one more part
    in a right star introduction over identical single-formula parts. The
    candidate is accepted only after its instances at n = 0..K re-check.
    """
    k = len(samples) - 1
    if k < 1:
        return None
    top, below = samples[k], samples[k - 1]
    body = star.body
    before = s0.antecedent[:position]
    after = s0.antecedent[position + 1 :]
    candidate: OmegaTemplate | None = None

    inst = top.instance
    if (
        inst.rule in (RuleId.ONE_L, RuleId.WEAK)
        and top.premises == (below,)
        and inst.position is not None
        and position <= inst.position < position + k
        and top.conclusion.antecedent[inst.position] == body
    ):
        schematic = Sequent(
            before + (Rep(body, lin_param(fresh)),) + after, s0.succedent
        )
        iter_inst = RuleInstance(
            RuleId.ITER,
            inner=RuleInstance(inst.rule, position=position),
            iter_count=lin_param(fresh),
        )
        candidate = OmegaTemplate(fresh, Derivation(schematic, iter_inst, (samples[0],)))

    if (
        candidate is None
        and not before
        and not after
        and inst.rule == RuleId.STAR_R
        and inst.count == k
        and inst.splits == (1,) * k
        and len(set(top.premises)) == 1
        and top.premises[0].conclusion.antecedent == (body,)
    ):
        part = top.premises[0]
        schematic = Sequent((Rep(body, lin_param(fresh)),), s0.succedent)
        iter_inst = RuleInstance(
            RuleId.ITER,
            inner=RuleInstance(RuleId.STAR_R, position=0),
            iter_count=lin_param(fresh),
        )
        candidate = OmegaTemplate(fresh, Derivation(schematic, iter_inst, (part,)))

    if candidate is None:
        return None
    from .derivation import TemplateError, instantiate_template

    for n in range(k + 1):
        expected = Sequent(before + (body,) * n + after, s0.succedent)
        try:
            instance = instantiate_template(candidate, n)
        except TemplateError:
            return None
        if instance.conclusion != expected or not isinstance(
            check(instance, sig), Valid
        ):
            return None
    return candidate


# ---------------------------------------------------------------------------
# Proof search


def _validate_labels(s: Sequent, sig: SubexpSignature):
    for f in (*s.antecedent, s.succedent):
        for label in bang_labels(f):
            if label not in sig.labels:
                raise UnknownLabel(f"label {label!r} does not occur in the signature")


class _Prover:
    """Bottom-up saturation over the reachable backward search space.

    Phase 1 collects every sequent reachable from the goal by backward rule
    application, subject to the contraction caps, the permutation window,
    and the optional depth bound (measured as backward distance from the
    goal). Phase 2 computes the least fixpoint of derivability over that
    space, building witness derivations as sequents become derivable and
    synthesizing omega templates when all sampled premises of an omega
    branch are proved. Phase 3 propagates "taint": a non-derivable sequent
    is tainted when its refutation relies on a pruned branch or on an
    omega branch whose samples were derivable but not generalizable; only
    untainted failures are reported as NotDerivable.
    """

    def __init__(self, sig: SubexpSignature, budget: SearchBudget, max_len: int | None):
        self.sig = sig
        self.budget = budget
        self.max_len = max_len
        self.cap = CONTRACTION_COPY_CAP if sig.contractible else None
        self.fresh_counter = 0
        # sequent -> list of (app, premises, is_omega); parallel pruned flags
        self.apps: dict = {}
        self.pruned: dict = {}

    def fresh_param(self) -> str:
        self.fresh_counter += 1
        return f"n{self.fresh_counter}"

    def _omega_premises(self, app: GeneralizedApplication) -> tuple[Sequent, ...]:
        s0 = app.conclusion
        pos = app.core.position
        star = s0.antecedent[pos]
        return tuple(
            Sequent(
                s0.antecedent[:pos] + (star.body,) * n + s0.antecedent[pos + 1 :],
                s0.succedent,
            )
            for n in range(self.budget.omega_bound + 1)
        )

    def _explore(self, goal: Sequent):
        queue = collections.deque([(goal, 0)])
        depth = self.budget.depth
        while queue:
            s, dist = queue.popleft()
            if s in self.apps:
                continue
            if depth is not None and dist >= depth:
                self.apps[s] = []
                self.pruned[s] = True
                continue
            if self.max_len is not None and len(s.antecedent) > self.max_len:
                self.apps[s] = []
                self.pruned[s] = True
                continue
            apps, truncated, capped = applicable_rules(
                s, self.sig, self.budget.perm_window, self.cap
            )
            entries = []
            for app in apps:
                if app.core.rule == RuleId.STAR_L_OMEGA:
                    premises = self._omega_premises(app)
                    entries.append((app, premises, True))
                else:
                    premises = rule_premises(app.conclusion, app.core, self.sig)
                    entries.append((app, premises, False))
            self.apps[s] = entries
            self.pruned[s] = truncated or capped
            for _, premises, _ in entries:
                for p in premises:
                    if p not in self.apps:
                        queue.append((p, dist + 1))

    def _saturate(self):
        deriv: dict = {}
        synth_failed: set = set()
        # pending[(s, idx)] = number of premises of that app not yet derived;
        # watchers[p] = apps waiting on premise p.
        pending: dict = {}
        watchers: dict = {}
        ready: list = []
        for s, entries in self.apps.items():
            for idx, (_, premises, _) in enumerate(entries):
                key = (s, idx)
                open_count = 0
                for p in set(premises):
                    if p not in deriv:
                        open_count += 1
                        watchers.setdefault(p, []).append(key)
                pending[key] = open_count
                if open_count == 0:
                    ready.append(key)

        def settle(key) -> bool:
            s, idx = key
            if s in deriv:
                return False
            app, premises, is_omega = self.apps[s][idx]
            if is_omega:
                pos = app.core.position
                star = app.conclusion.antecedent[pos]
                template = synthesize_template(
                    app.conclusion,
                    pos,
                    star,
                    [deriv[p] for p in premises],
                    self.sig,
                    self.fresh_param(),
                )
                if template is None:
                    synth_failed.add(s)
                    return False
                deriv[s] = app.build((), template=template)
            else:
                deriv[s] = app.build(tuple(deriv[p] for p in premises))
            return True

        # settle in waves so every witness uses premises from strictly
        # earlier waves; this keeps witness height close to minimal instead
        # of threading long chains through the structural-rule graph
        while ready:
            settled = [key[0] for key in ready if settle(key)]
            ready = []
            for s in settled:
                for watcher in watchers.pop(s, ()):
                    pending[watcher] -= 1
                    if pending[watcher] == 0:
                        ready.append(watcher)
        return deriv, synth_failed

    def _taint(self, deriv: dict, synth_failed: set) -> dict:
        """Least fixpoint of unsoundness reasons over non-derivable sequents."""
        taint: dict = {}
        for s in self.apps:
            if s in deriv:
                continue
            if self.pruned.get(s):
                taint[s] = BUDGET_EXHAUSTED
            if s in synth_failed:
                taint[s] = OMEGA_SAMPLED
        changed = True
        while changed:
            changed = False
            for s, entries in self.apps.items():
                if s in deriv or s in taint:
                    continue
                for app, premises, is_omega in entries:
                    open_premises = [p for p in premises if p not in deriv]
                    # The branch fails soundly only if some premise is
                    # refuted outright; if every failing premise is itself
                    # tainted, this branch might still go through.
                    if open_premises and all(p in taint for p in open_premises):
                        reasons = {taint[p] for p in open_premises}
                        taint[s] = (
                            OMEGA_SAMPLED if OMEGA_SAMPLED in reasons else BUDGET_EXHAUSTED
                        )
                        changed = True
                        break
        return taint

    def solve(self, goal: Sequent) -> SearchResult:
        self._explore(goal)
        deriv, synth_failed = self._saturate()
        if goal in deriv:
            return Derivable(deriv[goal])
        taint = self._taint(deriv, synth_failed)
        if goal in taint:
            return Unknown(taint[goal])
        return NotDerivable()


def _subformulas(f: Formula) -> set[Formula]:
    out = {f}
    if isinstance(f, (Bang, Star)):
        out |= _subformulas(f.body)
    elif isinstance(f, (Limp, Rimp, Tensor, With, Plus)):
        out |= _subformulas(f.left) | _subformulas(f.right)
    return out


def _count_occurrences(f: Formula, kinds: tuple[type, ...]) -> int:
    n = 1 if isinstance(f, kinds) else 0
    if isinstance(f, (Bang, Star)):
        return n + _count_occurrences(f.body, kinds)
    if isinstance(f, (Limp, Rimp, Tensor, With, Plus)):
        return (
            n
            + _count_occurrences(f.left, kinds)
            + _count_occurrences(f.right, kinds)
        )
    return n


def _length_allowance(s: Sequent, sig: SubexpSignature) -> int:
    """Structural bound on antecedent growth during backward search.

    Starting length, plus extra copies the contraction cap permits for each
    distinct contractible banged subformula, plus one slot per tensor
    occurrence anywhere in the goal and per division occurrence in the
    succedent (the only other length-increasing decompositions).
    """
    closure: set[Formula] = set()
    for f in s.antecedent:
        closure |= _subformulas(f)
    closure |= _subformulas(s.succedent)
    contractible = sum(
        1
        for f in closure
        if isinstance(f, Bang) and f.label in sig.contractible
    )
    tensors = sum(
        _count_occurrences(f, (Tensor,)) for f in s.antecedent
    ) + _count_occurrences(s.succedent, (Tensor,))
    divisions = _count_occurrences(s.succedent, (Limp, Rimp))
    return (
        len(s.antecedent)
        + (CONTRACTION_COPY_CAP - 1) * contractible
        + tensors
        + divisions
    )


def prove(s: Sequent, sig: SubexpSignature, budget: SearchBudget = SearchBudget()) -> SearchResult:
    """Backward proof search returning a three-valued verdict.

    Derivable results carry a cut-free derivation that re-checks (up to the
    omega sampling bound when omega nodes occur). NotDerivable is returned
    only on sound exhaustion of the search space: every failure is traced
    to genuinely refuted premises, never to a budget cutoff.
    """
    _validate_labels(s, sig)
    if sig.contractible and budget.depth is None:
        raise MissingDepthBudget(
            "a finite depth budget is required when contraction is available"
        )
    max_len = _length_allowance(s, sig) if sig.contractible else None
    return _Prover(sig, budget, max_len).solve(s)

def _has_star(f: Formula) -> bool:
    if isinstance(f, Star):
        return True
    if isinstance(f, Bang):
        return _has_star(f.body)
    if hasattr(f, "left"):
        return _has_star(f.left) or _has_star(f.right)
    return False


def sequent_has_star(s: Sequent) -> bool:
    return any(_has_star(f) for f in (*s.antecedent, s.succedent))


def decide_starfree(s: Sequent, sig: SubexpSignature) -> bool:
    """Total decision procedure for the star-free, contraction-free fragment."""
    if sequent_has_star(s):
        raise StarPresent("the star-free decision procedure got a starred sequent")
    if sig.contractible:
        raise ContractionPresent(
            "the star-free decision procedure requires an empty contraction set"
        )
    result = prove(s, sig, SearchBudget(perm_window=None))
    if isinstance(result, Derivable):
        return True
    assert isinstance(result, NotDerivable), "star-free search cannot be inconclusive"
    return False


# ---------------------------------------------------------------------------
# Fixpoint oracle


@dataclass(frozen=True)
class OracleReport:
    results: dict
    rounds: int
    note: str


def _collect_formulas(universe) -> list[Formula]:
    seen: dict[Formula, None] = {}
    for s in universe:
        for f in (*s.antecedent, s.succedent):
            seen.setdefault(f, None)
    return list(seen)


def fixpoint_oracle(
    universe,
    sig: SubexpSignature,
    extra_axioms: frozenset = frozenset(),
    allow_cut: bool = False,
    max_universe: int = 100_000,
) -> OracleReport:
    """Iterate the immediate-derivability operator over a finite universe.

    Only rule applications whose conclusion and premises all lie in the
    universe are considered; the omega rule is excluded. The rank of a
    sequent is the first iteration at which it appears. The result is exact
    for fragments whose derivations stay inside the universe and an
    under-approximation otherwise.
    """
    universe = list(dict.fromkeys(universe))
    if len(universe) > max_universe:
        raise UniverseTooLarge(f"{len(universe)} sequents exceeds the cap {max_universe}")
    in_universe = set(universe)
    rank: dict[Sequent, int] = {}
    cut_formulas = _collect_formulas(universe) if allow_cut else []

    def newly_derivable(s: Sequent) -> bool:
        cores, _ = core_instances(s, sig)
        instances = cores + _perm_instances(s, sig)
        for inst in instances:
            if inst.rule == RuleId.STAR_L_OMEGA:
                continue
            premises = rule_premises(s, inst, sig)
            if all(p in rank for p in premises):
                return True
        if allow_cut:
            ant = s.antecedent
            for i in range(len(ant) + 1):
                for j in range(i, len(ant) + 1):
                    for a in cut_formulas:
                        left = Sequent(ant[i:j], a)
                        right = Sequent(ant[:i] + (a,) + ant[j:], s.succedent)
                        if left in rank and right in rank:
                            return True
        return False

    rounds = 0
    pending = set(universe)
    for s in extra_axioms:
        if s in in_universe:
            rank[s] = 1
            pending.discard(s)
    changed = True
    while changed:
        rounds += 1
        changed = False
        found = [s for s in pending if newly_derivable(s)]
        for s in found:
            rank[s] = rounds
            pending.discard(s)
            changed = True
    stars = any(sequent_has_star(s) for s in universe)
    notes = []
    if stars:
        notes.append("stars present: the omega rule is not modeled, under-approximation")
    if allow_cut:
        notes.append("cut formulas restricted to formulas occurring in the universe")
    if sig.contractible:
        notes.append("contraction present: completeness depends on universe closure")
    note = "; ".join(notes) if notes else "exact for cut-free derivations inside the universe"
    results = {s: (s in rank, rank.get(s)) for s in universe}
    return OracleReport(results, rounds, note)
