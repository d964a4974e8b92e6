"""
Theory language: lexer, parser, printer and builtin theories
"""

from app.dsl.builtins import (
    builtin_ids,
    builtin_theory,
    euclidean_theory,
    load_extension,
    resolve_theory,
)
from app.dsl.parser import parse_problem, parse_sequent, parse_theory
from app.dsl.printer import pretty_print
from app.dsl.source import ParseDiagnostic, SourceFile, Span

__all__ = [
    "ParseDiagnostic",
    "SourceFile",
    "Span",
    "builtin_ids",
    "builtin_theory",
    "euclidean_theory",
    "load_extension",
    "parse_problem",
    "parse_sequent",
    "parse_theory",
    "pretty_print",
    "resolve_theory",
]
