"""Symbolic workbench for presentations of C*-algebras by normed
generators and relations: exact terms, checkable presentation moves,
a functional-calculus lemma registry, and numerical representation
search."""

__version__ = "0.1.0"
