"""Categorial-grammar front door.

A lexicon maps words to one or more syntactic types (formulas).  A sentence
is grammatical when some assignment of one type per word yields a derivable
sequent ``T(w1), ..., T(wn) |- goal``.  Verdicts are three-valued: search
budget limits and omega sampling can leave a sentence Unknown, and such
verdicts are reported as-is.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

from .derivation import Derivation
from .search import (
    Derivable,
    NotDerivable,
    SearchBudget,
    SearchResult,
    Unknown,
    prove,
)
from .syntax import (
    Formula,
    MalformedFile,
    SubexpSignature,
    Sequent,
    Var,
    bang_labels,
    parse_formula,
    parse_signature,
    EMPTY_SIGNATURE,
)

#: Hard cap on the number of type assignments tried per sentence.
ASSIGNMENT_CAP = 10_000

#: Depth budget used for contraction-bearing signatures when the caller
#: does not set one (proof search requires a finite depth there).
DEFAULT_CONTRACTION_DEPTH = 10


class UnknownWord(KeyError):
    """A sentence word has no lexicon entry."""

    def __init__(self, word: str):
        super().__init__(word)
        self.word = word

    def __str__(self) -> str:
        return f"word {self.word!r} is not in the lexicon"


@dataclass(frozen=True)
class Lexicon:
    entries: dict[str, tuple[Formula, ...]]
    goal: Formula = field(default_factory=lambda: Var("s"))
    signature: SubexpSignature = EMPTY_SIGNATURE

    def __post_init__(self):
        labels = set(self.signature.labels)
        for word, types in self.entries.items():
            if not types:
                raise MalformedFile(f"word {word!r} has no types")
            for t in types:
                missing = bang_labels(t) - labels
                if missing:
                    raise MalformedFile(
                        f"type of {word!r} uses labels {sorted(missing)} "
                        "absent from the signature"
                    )


def parse_lexicon(text: str, base: Path | None = None) -> Lexicon:
    """Parse the line-oriented lexicon format.

    Lines are ``word : formula`` (repeatable per word for ambiguity), plus
    the directives ``goal: formula`` and ``sig: path`` (resolved relative to
    ``base``).  ``#`` starts a comment.
    """
    entries: dict[str, list[Formula]] = {}
    goal: Formula = Var("s")
    signature = EMPTY_SIGNATURE
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise MalformedFile(f"expected 'word : formula', found {raw!r}")
        head, _, tail = line.partition(":")
        head, tail = head.strip(), tail.strip()
        if not head or not tail:
            raise MalformedFile(f"expected 'word : formula', found {raw!r}")
        if head == "goal":
            goal = parse_formula(tail)
        elif head == "sig":
            path = Path(tail)
            if base is not None and not path.is_absolute():
                path = base / path
            signature = parse_signature(path.read_text())
        else:
            entries.setdefault(head, []).append(parse_formula(tail))
    return Lexicon(
        {w: tuple(ts) for w, ts in entries.items()}, goal, signature
    )


def load_lexicon(path: str | Path) -> Lexicon:
    path = Path(path)
    return parse_lexicon(path.read_text(), base=path.parent)


@dataclass(frozen=True)
class Grammatical:
    derivation: Derivation
    assignment: tuple[Formula, ...]


@dataclass(frozen=True)
class NotGrammatical:
    pass


ParseVerdict = Grammatical | NotGrammatical | Unknown


def sentence_sequent(
    words: list[str], lex: Lexicon, assignment: tuple[Formula, ...]
) -> Sequent:
    return Sequent(assignment, lex.goal)


def parse_sentence(
    words: list[str], lex: Lexicon, budget: SearchBudget | None = None
) -> ParseVerdict:
    """Try every type assignment in lexicon order; first Derivable wins."""
    for w in words:
        if w not in lex.entries:
            raise UnknownWord(w)
    if budget is None:
        budget = SearchBudget()
    if lex.signature.contractible and budget.depth is None:
        budget = SearchBudget(
            omega_bound=budget.omega_bound,
            depth=DEFAULT_CONTRACTION_DEPTH,
            perm_window=budget.perm_window,
        )
    assignments = itertools.product(*(lex.entries[w] for w in words))
    saw_unknown: Unknown | None = None
    truncated = False
    for i, assignment in enumerate(assignments):
        if i >= ASSIGNMENT_CAP:
            truncated = True
            break
        result: SearchResult = prove(
            sentence_sequent(words, lex, assignment), lex.signature, budget
        )
        if isinstance(result, Derivable):
            return Grammatical(result.derivation, assignment)
        if isinstance(result, Unknown) and saw_unknown is None:
            saw_unknown = result
    if truncated:
        return Unknown("assignment enumeration capped")
    if saw_unknown is not None:
        return saw_unknown
    return NotGrammatical()
