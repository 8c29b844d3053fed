"""Proof engine for infinitary action logic with subexponential modalities.

The package provides the formula/sequent data model, ordinal-vector
complexity measures, derivation trees with finitely presented omega-rule
nodes, backward proof search, cut/mix elimination, Kleene-algebra
entailment encodings, a small categorial-grammar front end, and a CLI.
"""

__version__ = "0.1.0"
