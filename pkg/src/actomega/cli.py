"""Command-line entry point.

One binary with subcommands; every subcommand accepts one or more inputs
and processes them in order.  ``--jobs N`` parallelizes across inputs while
keeping the output order (and bytes) identical to the sequential run.

Exit codes: 0 derivable/valid, 1 not derivable/invalid, 2 inconclusive,
64 usage error, 66 missing or malformed file, 70 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import cutelim as cutelim_mod
from . import grammar as grammar_mod
from .cutelim import (
    BoundedFamily,
    CutConfiguration,
    InvariantViolation,
    NonUniformTemplate,
    eliminate_all,
)
from .derivation import (
    Bounded,
    Derivation,
    Invalid,
    Valid,
    ValidUpTo,
    check,
    is_cut_free,
    parse_derivation,
    to_text,
)
from .kleene import (
    LabelNotContractible,
    LabelNotWC,
    LanguageViolation,
    encode_unit_cancellers,
    encode_weakening,
    ka_entails_oracle,
)
from .ordinal import eta_sequent, nu
from .search import (
    Derivable,
    NotDerivable,
    SearchBudget,
    Unknown,
    UniverseTooLarge,
    fixpoint_oracle,
    prove,
)
from .syntax import (
    EMPTY_SIGNATURE,
    FormulaSyntaxError,
    MalformedFile,
    SubexpSignature,
    parse_formula,
    parse_sequent,
    parse_signature,
    print_formula,
    print_sequent,
)

EX_OK, EX_UNDERIVABLE, EX_UNKNOWN = 0, 1, 2
EX_USAGE, EX_NOINPUT, EX_SOFTWARE = 64, 66, 70


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_signature(args) -> SubexpSignature:
    path = getattr(args, "sig", None) or os.environ.get("ACTOMEGA_SIG")
    if not path:
        return EMPTY_SIGNATURE
    try:
        return parse_signature(Path(path).read_text())
    except OSError as e:
        raise _CliError(EX_NOINPUT, f"cannot read signature file: {e}")
    except MalformedFile as e:
        raise _CliError(EX_NOINPUT, f"bad signature file: {e}")


def _budget(args) -> SearchBudget:
    return SearchBudget(
        omega_bound=args.omega_bound,
        depth=args.depth,
        perm_window=args.perm_window,
    )


def _search_args(sub):
    sub.add_argument("--sig", help="signature file (default: $ACTOMEGA_SIG or empty)")
    sub.add_argument("--omega-bound", type=int, default=5, metavar="N")
    sub.add_argument("--depth", type=int, default=None, metavar="N")
    sub.add_argument("--perm-window", type=int, default=4, metavar="N")


def _common_args(sub):
    sub.add_argument("--machine", action="store_true", help="one key=value record per line")
    sub.add_argument("--jobs", type=int, default=1, metavar="N")
    sub.add_argument("--seed", type=int, default=0, metavar="N")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="actomega")
    subs = p.add_subparsers(dest="command", required=True)

    s = subs.add_parser("prove", help="decide a sequent by proof search")
    _search_args(s)
    _common_args(s)
    s.add_argument("--save-derivations", metavar="DIR",
                   help="write each found derivation to DIR/<index>.deriv")
    s.add_argument("sequents", nargs="+", metavar="SEQUENT")

    s = subs.add_parser("check", help="validate derivation files")
    s.add_argument("--sig")
    s.add_argument("--bound", type=int, default=5, metavar="N", help="omega instantiation bound")
    _common_args(s)
    s.add_argument("files", nargs="+", metavar="FILE")

    s = subs.add_parser("cutelim", help="eliminate cut and mix from derivation files")
    s.add_argument("--sig")
    s.add_argument("--trace", action="store_true", help="one line per elimination step")
    s.add_argument("--fallback-bound", type=int, default=None, metavar="N")
    s.add_argument("--output", metavar="FILE", help="write the result here instead of stdout")
    _common_args(s)
    s.add_argument("files", nargs="+", metavar="FILE")

    s = subs.add_parser("encode", help="encode a Kleene-algebra goal with hypotheses")
    s.add_argument("--sig")
    s.add_argument("--hyps", required=True, metavar="FILE", help="one 'U |- V' per line")
    s.add_argument("--goal", required=True, action="append", metavar="SEQUENT")
    s.add_argument("--variant", choices=("cancellers", "weakening"), default="weakening")
    s.add_argument("--label", required=True, metavar="L")
    _common_args(s)

    s = subs.add_parser("eta", help="print the complexity measure of sequents")
    _common_args(s)
    s.add_argument("sequents", nargs="+", metavar="SEQUENT")

    s = subs.add_parser("oracle", help="fixpoint derivability ranks over a finite universe")
    s.add_argument("--sig")
    s.add_argument("--allow-cut", action="store_true")
    s.add_argument("--axioms", metavar="FILE", help="extra axiom sequents, one per line")
    _common_args(s)
    s.add_argument("universe", nargs="+", metavar="FILE", help="sequent files, one sequent per line")

    s = subs.add_parser("parse-grammar", help="grammaticality of sentences under a lexicon")
    s.add_argument("--lexicon", required=True, metavar="FILE")
    s.add_argument("--goal", metavar="FORMULA", help="override the lexicon goal")
    s.add_argument("--depth", type=int, default=None, metavar="N")
    _common_args(s)
    s.add_argument("sentence", nargs="+", metavar="WORD",
                   help="words; separate multiple sentences with a literal '/'")
    return p


# -- per-input workers (top level so they pickle for --jobs) ---------------


def _work_prove(item):
    text, sig, budget = item
    try:
        s = parse_sequent(text)
    except FormulaSyntaxError as e:
        raise _CliError(EX_USAGE, f"bad sequent {text!r}: {e}")
    result = prove(s, sig, budget)
    if isinstance(result, Derivable):
        return "Derivable", print_sequent(s), to_text(result.derivation), EX_OK
    if isinstance(result, NotDerivable):
        return "NotDerivable", print_sequent(s), "", EX_UNDERIVABLE
    return "Unknown", print_sequent(s), result.reason, EX_UNKNOWN


def _work_check(item):
    path, sig, bound = item
    d = _read_derivation(path)
    report = check(d, sig, Bounded(bound))
    if isinstance(report, Valid):
        return "Valid", path, "", EX_OK
    if isinstance(report, ValidUpTo):
        return "ValidUpTo", path, str(report.bound), EX_OK
    assert isinstance(report, Invalid)
    return "Invalid", path, f"{'.'.join(map(str, report.path))}: {report.reason}", EX_UNDERIVABLE


def _work_cutelim(item):
    path, trace_on, fallback = item
    d = _read_derivation(path)
    trace: list | None = [] if trace_on else None
    try:
        out = eliminate_all(d, trace)
    except NonUniformTemplate as e:
        return ("NonUniformTemplate", path, str(e), EX_UNKNOWN, trace or [], None)
    lines = [f"{case} {goal}" for case, goal in (trace or [])]
    return ("CutFree" if is_cut_free(out) else "Partial", path, "", EX_OK, lines, to_text(out))


def _work_eta(item):
    (text,) = item
    try:
        s = parse_sequent(text)
    except FormulaSyntaxError as e:
        raise _CliError(EX_USAGE, f"bad sequent {text!r}: {e}")
    measure = eta_sequent(s)
    ordinal = nu(measure)
    return "eta", print_sequent(s), f"{tuple(measure.coeffs)} {ordinal}", EX_OK


def _work_parse(item):
    words, lex, budget = item
    try:
        verdict = grammar_mod.parse_sentence(words, lex, budget)
    except grammar_mod.UnknownWord as e:
        raise _CliError(EX_USAGE, str(e))
    if isinstance(verdict, grammar_mod.Grammatical):
        types = ", ".join(print_formula(f) for f in verdict.assignment)
        return "Grammatical", " ".join(words), types, EX_OK
    if isinstance(verdict, grammar_mod.NotGrammatical):
        return "NotGrammatical", " ".join(words), "", EX_UNDERIVABLE
    return "Unknown", " ".join(words), verdict.reason, EX_UNKNOWN


def _read_derivation(path: str) -> Derivation:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise _CliError(EX_NOINPUT, f"cannot read {path}: {e}")
    try:
        return parse_derivation(text)
    except (MalformedFile, FormulaSyntaxError, ValueError) as e:
        raise _CliError(EX_NOINPUT, f"bad derivation file {path}: {e}")


def _read_sequent_lines(path: str) -> list:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise _CliError(EX_NOINPUT, f"cannot read {path}: {e}")
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            try:
                out.append(parse_sequent(line))
            except FormulaSyntaxError as e:
                raise _CliError(EX_NOINPUT, f"bad sequent in {path}: {e}")
    return out


def _run_ordered(worker, items, jobs: int):
    """Apply ``worker`` to the items, preserving input order in the output."""
    if jobs <= 1 or len(items) <= 1:
        return [worker(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, items))


def _emit(args, records) -> int:
    """Print result records and fold their exit codes (worst wins)."""
    code = EX_OK
    order = {EX_OK: 0, EX_UNDERIVABLE: 1, EX_UNKNOWN: 2}
    for verdict, subject, detail, c, *extra in records:
        if args.machine:
            line = f"verdict={verdict} input={subject!r}"
            if detail:
                line += f" detail={detail!r}"
            print(line)
        else:
            print(f"{subject}: {verdict}" + (f" ({detail})" if detail else ""))
        if order.get(c, 0) > order.get(code, 0):
            code = c
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except _CliError as e:
        print(f"actomega: {e}", file=sys.stderr)
        return e.code
    except (InvariantViolation, AssertionError) as e:
        print(f"actomega: internal error: {e}", file=sys.stderr)
        return EX_SOFTWARE


def _dispatch(args) -> int:
    cmd = args.command

    if cmd == "prove":
        sig = _load_signature(args)
        budget = _budget(args)
        items = [(t, sig, budget) for t in args.sequents]
        records = _run_ordered(_work_prove, items, args.jobs)
        out = []
        for i, (verdict, subject, payload, code) in enumerate(records):
            detail = "" if verdict == "Derivable" else payload
            if verdict == "Derivable" and args.save_derivations:
                directory = Path(args.save_derivations)
                directory.mkdir(parents=True, exist_ok=True)
                path = directory / f"{i}.deriv"
                path.write_text(payload + "\n")
                detail = f"derivation-path={path}"
            out.append((verdict, subject, detail, code))
        return _emit(args, out)

    if cmd == "check":
        sig = _load_signature(args)
        items = [(f, sig, args.bound) for f in args.files]
        return _emit(args, _run_ordered(_work_check, items, args.jobs))

    if cmd == "cutelim":
        items = [(f, args.trace, args.fallback_bound) for f in args.files]
        records = _run_ordered(_work_cutelim, items, args.jobs)
        code = EX_OK
        for verdict, path, detail, c, trace_lines, text in records:
            for line in trace_lines:
                print(f"trace: {line}")
            if text is not None:
                if args.output:
                    Path(args.output).write_text(text + "\n")
                else:
                    print(text)
            if args.machine:
                print(f"verdict={verdict} input={path!r}" + (f" detail={detail!r}" if detail else ""))
            if c > code and c in (EX_UNDERIVABLE, EX_UNKNOWN):
                code = c
        return code

    if cmd == "encode":
        sig = _load_signature(args)
        hyps = tuple(_read_sequent_lines(args.hyps))
        out = []
        for g in args.goal:
            try:
                goal = parse_sequent(g)
                if args.variant == "cancellers":
                    enc = encode_unit_cancellers(goal, hyps, args.label, sig)
                else:
                    enc = encode_weakening(goal, hyps, args.label, sig)
            except FormulaSyntaxError as e:
                raise _CliError(EX_USAGE, f"bad goal {g!r}: {e}")
            except (LanguageViolation, LabelNotContractible, LabelNotWC) as e:
                raise _CliError(EX_USAGE, str(e))
            out.append(("Encoded", g, print_sequent(enc), EX_OK))
        if args.machine:
            return _emit(args, out)
        for _, _, enc_text, _ in out:
            print(enc_text)
        return EX_OK

    if cmd == "eta":
        items = [(t,) for t in args.sequents]
        return _emit(args, _run_ordered(_work_eta, items, args.jobs))

    if cmd == "oracle":
        sig = _load_signature(args)
        universe = []
        for f in args.universe:
            universe.extend(_read_sequent_lines(f))
        axioms = frozenset(_read_sequent_lines(args.axioms)) if args.axioms else frozenset()
        try:
            report = fixpoint_oracle(universe, sig, axioms, args.allow_cut)
        except UniverseTooLarge as e:
            raise _CliError(EX_USAGE, str(e))
        records = []
        for s in universe:
            ok, rank = report.results[s]
            records.append(
                ("Derivable" if ok else "NotDerivable",
                 print_sequent(s),
                 f"rank={rank}" if ok else "",
                 EX_OK)
            )
        return _emit(args, records)

    if cmd == "parse-grammar":
        try:
            lex = grammar_mod.load_lexicon(args.lexicon)
        except OSError as e:
            raise _CliError(EX_NOINPUT, f"cannot read lexicon: {e}")
        except MalformedFile as e:
            raise _CliError(EX_NOINPUT, f"bad lexicon: {e}")
        if args.goal:
            try:
                lex = replace(lex, goal=parse_formula(args.goal))
            except FormulaSyntaxError as e:
                raise _CliError(EX_USAGE, f"bad goal: {e}")
        budget = None
        if args.depth is not None:
            budget = SearchBudget(depth=args.depth)
        sentences: list[list[str]] = [[]]
        for w in args.sentence:
            if w == "/":
                sentences.append([])
            else:
                sentences[-1].append(w)
        sentences = [s for s in sentences if s]
        if not sentences:
            raise _CliError(EX_USAGE, "no sentence given")
        items = [(words, lex, budget) for words in sentences]
        return _emit(args, _run_ordered(_work_parse, items, args.jobs))

    raise _CliError(EX_USAGE, f"unknown command {cmd!r}")


if __name__ == "__main__":
    sys.exit(main())
