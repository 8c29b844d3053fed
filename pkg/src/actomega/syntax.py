"""Formulas, sequents, subexponential signatures, and their text syntax.

Grammar (ASCII), loosest to tightest:

    divisions   F \ F   |   F / F      (same precedence, left-associative)
    additives   F & F   |   F + F      (same precedence, left-associative)
    product     F . F                  (left-associative)
    unary       !{label} F  |  F *     (tightest)
    atoms       identifiers, constants "1" and "0", parentheses

Sequents are written "A, B |- C"; an empty antecedent is "|- C".
"""

from __future__ import annotations

import re
from dataclasses import dataclass


# ---------------------------------------------------------------------------
# Formulas


def _cached_hash(cls):
    """Memoize a frozen dataclass's hash on the instance.

    Formula trees and sequents get hashed millions of times during proof
    search; the generated dataclass hash walks the whole tree each call.
    """
    generated = cls.__hash__

    def __hash__(self):
        try:
            return self._hash_cache
        except AttributeError:
            h = generated(self)
            object.__setattr__(self, "_hash_cache", h)
            return h

    cls.__hash__ = __hash__
    return cls


class Formula:
    """Base class for formula AST nodes. All nodes are immutable."""

    __slots__ = ()

    def __str__(self) -> str:
        return print_formula(self)


@_cached_hash
@dataclass(frozen=True)
class Var(Formula):
    name: str


@_cached_hash
@dataclass(frozen=True)
class One(Formula):
    pass


@_cached_hash
@dataclass(frozen=True)
class Zero(Formula):
    pass


@_cached_hash
@dataclass(frozen=True)
class Limp(Formula):
    """A \\ B: consumes an A on the left to produce a B."""

    left: Formula
    right: Formula


@_cached_hash
@dataclass(frozen=True)
class Rimp(Formula):
    """B / A: consumes an A on the right to produce a B."""

    left: Formula   # the result B
    right: Formula  # the argument A


@_cached_hash
@dataclass(frozen=True)
class Tensor(Formula):
    left: Formula
    right: Formula


@_cached_hash
@dataclass(frozen=True)
class With(Formula):
    left: Formula
    right: Formula


@_cached_hash
@dataclass(frozen=True)
class Plus(Formula):
    left: Formula
    right: Formula


@_cached_hash
@dataclass(frozen=True)
class Star(Formula):
    body: Formula


@_cached_hash
@dataclass(frozen=True)
class Bang(Formula):
    label: str
    body: Formula


ONE = One()
ZERO = Zero()

_BINARY = {Limp: " \\ ", Rimp: " / ", Tensor: " . ", With: " & ", Plus: " + "}

# Precedence levels used by the printer: larger binds tighter.
_PREC_DIV, _PREC_ADD, _PREC_PROD, _PREC_UNARY, _PREC_ATOM = 0, 1, 2, 3, 4


def _prec(f: Formula) -> int:
    if isinstance(f, (Limp, Rimp)):
        return _PREC_DIV
    if isinstance(f, (With, Plus)):
        return _PREC_ADD
    if isinstance(f, Tensor):
        return _PREC_PROD
    if isinstance(f, (Star, Bang)):
        return _PREC_UNARY
    return _PREC_ATOM


def print_formula(f: Formula) -> str:
    """Render a formula, parenthesizing only where precedence requires it."""
    return _render(f, _PREC_DIV)


def _render(f: Formula, minimum: int) -> str:
    if isinstance(f, Var):
        return f.name
    if isinstance(f, One):
        return "1"
    if isinstance(f, Zero):
        return "0"
    if isinstance(f, Star):
        # The operand of a postfix star must be an atom or another star:
        # "!{s}a*" reads as the bang of a star, not the star of a bang.
        inner_min = _PREC_UNARY if isinstance(f.body, Star) else _PREC_ATOM
        text = _render(f.body, inner_min) + "*"
    elif isinstance(f, Bang):
        text = "!{" + f.label + "}" + _render(f.body, _PREC_UNARY)
    else:
        own = _prec(f)
        text = (
            _render(f.left, own)
            + _BINARY[type(f)]
            + _render(f.right, own + 1)
        )
    if _prec(f) < minimum:
        return "(" + text + ")"
    return text


def complexity(f: Formula) -> int:
    """Total number of variable, constant, and connective occurrences."""
    if isinstance(f, (Var, One, Zero)):
        return 1
    if isinstance(f, (Star, Bang)):
        return 1 + complexity(f.body)
    return 1 + complexity(f.left) + complexity(f.right)  # type: ignore[attr-defined]


def bang_labels(f: Formula) -> frozenset[str]:
    """All subexponential labels occurring in a formula."""
    if isinstance(f, (Var, One, Zero)):
        return frozenset()
    if isinstance(f, Star):
        return bang_labels(f.body)
    if isinstance(f, Bang):
        return bang_labels(f.body) | {f.label}
    return bang_labels(f.left) | bang_labels(f.right)  # type: ignore[attr-defined]


# ---------------------------------------------------------------------------
# Sequents


@_cached_hash
@dataclass(frozen=True)
class Sequent:
    """An intuitionistic sequent: ordered antecedent, single succedent.

    Inside omega-rule templates the antecedent may additionally contain
    repetition items (see the derivation module); everywhere else every
    entry is a plain Formula.
    """

    antecedent: tuple
    succedent: Formula

    def __str__(self) -> str:
        return print_sequent(self)


def sequent(antecedent, succedent: Formula) -> Sequent:
    return Sequent(tuple(antecedent), succedent)


def print_sequent(s: Sequent) -> str:
    parts = []
    for item in s.antecedent:
        if isinstance(item, Formula):
            parts.append(print_formula(item))
        else:  # repetition item from a template body
            parts.append(str(item))
    left = ", ".join(parts)
    if left:
        return left + " |- " + print_formula(s.succedent)
    return "|- " + print_formula(s.succedent)


# ---------------------------------------------------------------------------
# Lexer / parser


class FormulaSyntaxError(ValueError):
    """Raised on malformed formula or sequent text; carries a 1-based column."""

    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<turnstile>\|-)
  | (?P<ident>[a-zA-Z_][a-zA-Z0-9_]*)
  | (?P<const>[10])
  | (?P<punct>[!{}()*.&+\\/,\[\]\^]|-)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    column: int  # 1-based


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
        kind = m.lastgroup or ""
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise FormulaSyntaxError(
                f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.column
            )
        return tok

    def fail(self, message: str):
        tok = self.peek()
        raise FormulaSyntaxError(message, tok.column)

    # divisions (loosest, left-associative)
    def formula(self) -> Formula:
        left = self.additive()
        while self.peek().text in ("\\", "/"):
            op = self.next().text
            right = self.additive()
            left = Limp(left, right) if op == "\\" else Rimp(left, right)
        return left

    def additive(self) -> Formula:
        left = self.product()
        while self.peek().text in ("&", "+"):
            op = self.next().text
            right = self.product()
            left = With(left, right) if op == "&" else Plus(left, right)
        return left

    def product(self) -> Formula:
        left = self.unary()
        while self.peek().text == ".":
            self.next()
            left = Tensor(left, self.unary())
        return left

    def unary(self) -> Formula:
        if self.peek().text == "!":
            self.next()
            self.expect("{")
            tok = self.next()
            if tok.kind != "ident":
                raise FormulaSyntaxError("expected a subexponential label", tok.column)
            self.expect("}")
            return Bang(tok.text, self.unary())
        return self.postfix()

    def postfix(self) -> Formula:
        f = self.primary()
        while self.peek().text == "*":
            self.next()
            f = Star(f)
        return f

    def primary(self) -> Formula:
        tok = self.next()
        if tok.text == "(":
            f = self.formula()
            self.expect(")")
            return f
        if tok.kind == "const":
            return ONE if tok.text == "1" else ZERO
        if tok.kind == "ident":
            return Var(tok.text)
        raise FormulaSyntaxError(
            f"expected a formula, found {tok.text or 'end of input'!r}", tok.column
        )

    def sequent(self) -> Sequent:
        antecedent: list[Formula] = []
        if self.peek().kind != "turnstile":
            antecedent.append(self.formula())
            while self.peek().text == ",":
                self.next()
                antecedent.append(self.formula())
        tok = self.next()
        if tok.kind != "turnstile":
            raise FormulaSyntaxError(
                f"expected '|-', found {tok.text or 'end of input'!r}", tok.column
            )
        succ = self.formula()
        return Sequent(tuple(antecedent), succ)

    def done(self):
        tok = self.peek()
        if tok.kind != "eof":
            raise FormulaSyntaxError(f"unexpected trailing input {tok.text!r}", tok.column)


def parse_formula(text: str) -> Formula:
    parser = _Parser(text)
    f = parser.formula()
    parser.done()
    return f


def parse_sequent(text: str) -> Sequent:
    parser = _Parser(text)
    s = parser.sequent()
    parser.done()
    return s


# ---------------------------------------------------------------------------
# Subexponential signatures


class SignatureError(ValueError):
    pass


class MalformedFile(SignatureError):
    pass


class NotUpwardClosed(SignatureError):
    def __init__(self, set_name: str, witness: tuple[str, str]):
        lo, hi = witness
        super().__init__(
            f"set {set_name} is not upward closed: contains {lo!r} but not {hi!r} >= {lo!r}"
        )
        self.set_name = set_name
        self.witness = witness


class WCnotInE(SignatureError):
    def __init__(self, label: str):
        super().__init__(
            f"label {label!r} allows weakening and contraction but not exchange"
        )
        self.label = label


@dataclass(frozen=True)
class SubexpSignature:
    """A subexponential signature: labels, preorder, and structural permits.

    ``order`` is stored as the reflexive-transitive closure of the
    user-supplied relation; the three permit sets must be upward closed and
    weakenable & contractible labels must also be exchangeable.
    """

    labels: frozenset[str]
    order: frozenset[tuple[str, str]]
    weakenable: frozenset[str]
    contractible: frozenset[str]
    exchangeable: frozenset[str]

    def leq(self, a: str, b: str) -> bool:
        """True when a <= b in the label preorder."""
        return (a, b) in self.order


def _closure(labels: frozenset[str], pairs) -> frozenset[tuple[str, str]]:
    rel = {(a, a) for a in labels}
    rel.update(pairs)
    changed = True
    while changed:
        changed = False
        for a, b in list(rel):
            for c, d in list(rel):
                if b == c and (a, d) not in rel:
                    rel.add((a, d))
                    changed = True
    return frozenset(rel)


def make_signature(labels, order=(), weakenable=(), contractible=(), exchangeable=()) -> SubexpSignature:
    """Build and validate a signature; the order is closed before validation."""
    label_set = frozenset(labels)
    for a, b in order:
        if a not in label_set or b not in label_set:
            raise MalformedFile(f"order mentions unknown label in {a!r} <= {b!r}")
    for name, group in (("W", weakenable), ("C", contractible), ("E", exchangeable)):
        for x in group:
            if x not in label_set:
                raise MalformedFile(f"set {name} mentions unknown label {x!r}")
    closed = _closure(label_set, order)
    sets = {
        "W": frozenset(weakenable),
        "C": frozenset(contractible),
        "E": frozenset(exchangeable),
    }
    for name, group in sets.items():
        for lo in group:
            for a, b in closed:
                if a == lo and b not in group:
                    raise NotUpwardClosed(name, (lo, b))
    for label in sets["W"] & sets["C"]:
        if label not in sets["E"]:
            raise WCnotInE(label)
    return SubexpSignature(label_set, closed, sets["W"], sets["C"], sets["E"])


EMPTY_SIGNATURE = make_signature(())


def parse_signature(text: str) -> SubexpSignature:
    """Parse the line-oriented signature file format.

    Keys: ``labels:``, ``order:`` (pairs written ``a<=b``), ``W:``, ``C:``,
    ``E:``. A ``#`` starts a comment.
    """
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise MalformedFile(f"expected 'key: values', found {raw!r}")
        key, _, value = line.partition(":")
        key = key.strip()
        if key not in ("labels", "order", "W", "C", "E"):
            raise MalformedFile(f"unknown key {key!r}")
        if key in fields:
            raise MalformedFile(f"duplicate key {key!r}")
        fields[key] = value.strip()
    if "labels" not in fields:
        raise MalformedFile("missing 'labels:' line")
    labels = tuple(fields["labels"].split())
    order = []
    for pair in fields.get("order", "").split():
        if "<=" not in pair:
            raise MalformedFile(f"order entries must look like a<=b, found {pair!r}")
        a, _, b = pair.partition("<=")
        if not a or not b:
            raise MalformedFile(f"order entries must look like a<=b, found {pair!r}")
        order.append((a, b))
    return make_signature(
        labels,
        order,
        fields.get("W", "").split(),
        fields.get("C", "").split(),
        fields.get("E", "").split(),
    )
