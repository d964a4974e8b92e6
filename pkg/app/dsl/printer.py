"""
Pretty printer for the ``.obs`` language

Output is deterministic and is read back by ``app.dsl.parser`` to an
alpha-equivalent value. Axioms are always printed with an explicit context.
"""

from typing import Dict, List, Union

from app.models.logic import (
    Axiom,
    Formula,
    FunctionSymbol,
    Problem,
    RelationSymbol,
    Sequent,
    Signature,
    Sort,
    Theory,
    format_formula,
)

Printable = Union[Theory, Sequent, Problem, Formula]


def _fn_decl(fn: FunctionSymbol) -> str:
    args = ", ".join(s.name for s in fn.arg_sorts)
    lhs = f"{args} -> " if args else "-> "
    return f"fn {fn.name} : {lhs}{fn.result_sort.name}."


def _rel_decl(rel: RelationSymbol) -> str:
    return f"rel {rel.name}({', '.join(s.name for s in rel.arg_sorts)})."


def print_sequent(s: Sequent) -> str:
    return str(s)


def print_axiom(ax: Axiom) -> str:
    s = ax.sequent
    return (
        f"axiom {ax.name} {s.context}: "
        f"{format_formula(s.premise)} |- {format_formula(s.conclusion)}."
    )


def print_signature(sig: Signature, skip: Signature = Signature()) -> List[str]:
    """Declarations of ``sig`` that are not already in ``skip``"""
    lines: List[str] = []
    sorts = [s for s in sig.sorts if s not in skip.sorts]
    if sorts:
        lines.append(f"sort {', '.join(s.name for s in sorts)}.")
    lines.extend(_fn_decl(f) for f in sig.functions if f not in skip.functions)
    lines.extend(_rel_decl(r) for r in sig.relations if r not in skip.relations)
    return lines


def print_theory(theory: Theory) -> str:
    lines = ["obs 1", f"theory {theory.id}."]
    lines.extend(print_signature(theory.signature))
    lines.extend(print_axiom(ax) for ax in theory.axioms)
    return "\n".join(lines) + "\n"


def print_problem(problem: Problem) -> str:
    lines = ["obs 1", f"theory {problem.theory.id}."]
    by_sort: Dict[Sort, List[str]] = {}
    for p in problem.points:
        by_sort.setdefault(p.result_sort, []).append(p.name)
    for sort, names in by_sort.items():
        lines.append(f"points {' '.join(names)} : {sort.name}.")
    if problem.premises:
        lines.append("assume " + ", ".join(format_formula(a) for a in problem.premises) + ".")
    lines.append(f"goal {format_formula(problem.goal)}.")
    return "\n".join(lines) + "\n"


def pretty_print(value: Printable) -> str:
    if isinstance(value, Theory):
        return print_theory(value)
    if isinstance(value, Problem):
        return print_problem(value)
    if isinstance(value, Sequent):
        return print_sequent(value)
    return format_formula(value)
