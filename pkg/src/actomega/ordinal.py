"""Ordinal vectors below omega^omega and the eta complexity measure.

NSeq models eventually-zero sequences of naturals under the
anti-lexicographic order; nu maps them isomorphically onto ordinals below
omega^omega in Cantor normal form. The eta measure assigns such a vector to
every formula and sequent; it strictly decreases along backward proof
search in the contraction-free fragment, which is what makes that search
terminate.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import zip_longest

from .syntax import Bang, Formula, One, Sequent, Star, Var, Zero


@dataclass(frozen=True)
class NSeq:
    """An eventually-zero sequence of naturals, stored without trailing zeros."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        if self.coeffs and self.coeffs[-1] == 0:
            raise ValueError("NSeq coefficients must not end in zero")
        if any(c < 0 for c in self.coeffs):
            raise ValueError("NSeq coefficients must be naturals")

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.coeffs) + ")"


def nseq(coeffs) -> NSeq:
    """Build an NSeq from any iterable, trimming trailing zeros."""
    items = list(coeffs)
    while items and items[-1] == 0:
        items.pop()
    return NSeq(tuple(items))


NSEQ_ZERO = NSeq(())
IOTA = NSeq((1,))


def nseq_cmp(a: NSeq, b: NSeq) -> int:
    """Anti-lexicographic comparison: -1, 0, or 1.

    The larger of two distinct sequences is the one with the bigger
    coefficient at the largest index where they differ.
    """
    if len(a.coeffs) != len(b.coeffs):
        return -1 if len(a.coeffs) < len(b.coeffs) else 1
    for x, y in zip(reversed(a.coeffs), reversed(b.coeffs)):
        if x != y:
            return -1 if x < y else 1
    return 0


def nseq_add(a: NSeq, b: NSeq) -> NSeq:
    return nseq(x + y for x, y in zip_longest(a.coeffs, b.coeffs, fillvalue=0))


def nseq_lift(a: NSeq) -> NSeq:
    if not a.coeffs:
        return a
    return NSeq((0,) + a.coeffs)


@dataclass(frozen=True)
class CnfOrdinal:
    """An ordinal below omega^omega in Cantor normal form.

    Terms are (exponent, coefficient) pairs with strictly decreasing
    exponents and positive coefficients.
    """

    terms: tuple[tuple[int, int], ...]

    def __post_init__(self):
        exps = [e for e, _ in self.terms]
        if exps != sorted(exps, reverse=True) or len(set(exps)) != len(exps):
            raise ValueError("CNF exponents must be strictly decreasing")
        if any(c <= 0 for _, c in self.terms):
            raise ValueError("CNF coefficients must be positive")

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            if e == 0:
                parts.append(str(c))
            elif e == 1:
                parts.append(f"w*{c}")
            else:
                parts.append(f"w^{e}*{c}")
        return " + ".join(parts)


def nu(a: NSeq) -> CnfOrdinal:
    """Order isomorphism from NSeq onto ordinals below omega^omega."""
    terms = [
        (i, c) for i, c in reversed(list(enumerate(a.coeffs))) if c != 0
    ]
    return CnfOrdinal(tuple(terms))


def cnf_cmp(a: CnfOrdinal, b: CnfOrdinal) -> int:
    """Lexicographic CNF comparison by leading terms."""
    for (ea, ca), (eb, cb) in zip(a.terms, b.terms):
        if ea != eb:
            return -1 if ea < eb else 1
        if ca != cb:
            return -1 if ca < cb else 1
    if len(a.terms) != len(b.terms):
        return -1 if len(a.terms) < len(b.terms) else 1
    return 0


def eta_formula(f: Formula) -> NSeq:
    """The eta complexity vector of a formula.

    Variables and both constants measure iota; binary connectives add the
    operand measures plus iota; a bang adds iota; a star lifts the body's
    measure by one position and adds iota. The constant 0 is assigned iota
    by convention so every formula contributes at least iota.
    """
    if isinstance(f, (Var, One, Zero)):
        return IOTA
    if isinstance(f, Bang):
        return nseq_add(eta_formula(f.body), IOTA)
    if isinstance(f, Star):
        return nseq_add(nseq_lift(eta_formula(f.body)), IOTA)
    return nseq_add(
        nseq_add(eta_formula(f.left), eta_formula(f.right)), IOTA  # type: ignore[attr-defined]
    )


def eta_sequent(s: Sequent) -> NSeq:
    total = eta_formula(s.succedent)
    for f in s.antecedent:
        total = nseq_add(total, eta_formula(f))
    return total
