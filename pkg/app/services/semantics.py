"""
Finite Model Semantics

Tarskian evaluation over finite set models and exhaustive enumeration of
small models, used as the soundness oracle for kernel-accepted proofs.
"""

from __future__ import annotations

import itertools
import math
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from app.core.config import settings
from app.core.exceptions import BudgetExceeded, MissingAssignment
from app.core.logger import get_logger
from app.models.logic import (
    And,
    Bottom,
    Eq,
    Exists,
    Formula,
    FunctionSymbol,
    Or,
    Rel,
    RelationSymbol,
    Sequent,
    Signature,
    Sort,
    Term,
    Theory,
    Top,
    Var,
    Variable,
)
from app.models.semantics import Element, FiniteModel, Row

logger = get_logger(__name__)

Assignment = Mapping[Variable, Element]
SizeBound = Union[int, Mapping[Sort, int]]


def eval_term(m: FiniteModel, assignment: Assignment, t: Term) -> Element:
    if isinstance(t, Var):
        if t.var not in assignment:
            raise MissingAssignment(t.var)
        return assignment[t.var]
    row = tuple(eval_term(m, assignment, a) for a in t.args)
    return m.functions[t.fn][row]


def eval_formula(m: FiniteModel, assignment: Assignment, f: Formula) -> bool:
    match f:
        case Rel(rel, args):
            row = tuple(eval_term(m, assignment, a) for a in args)
            return row in m.relations.get(rel, frozenset())
        case Eq(lhs, rhs):
            return eval_term(m, assignment, lhs) == eval_term(m, assignment, rhs)
        case Top():
            return True
        case Bottom():
            return False
        case And(left, right):
            return eval_formula(m, assignment, left) and eval_formula(m, assignment, right)
        case Or(disjuncts):
            return any(eval_formula(m, assignment, d) for d in disjuncts)
        case Exists(v, body):
            extended = dict(assignment)
            for e in m.carrier(v.sort):
                extended[v] = e
                if eval_formula(m, extended, body):
                    return True
            return False
    raise TypeError(f"Not a formula: {f!r}")


def assignments(m: FiniteModel, variables: Sequence[Variable]) -> Iterator[Dict[Variable, Element]]:
    for values in itertools.product(*(m.carrier(v.sort) for v in variables)):
        yield dict(zip(variables, values))


def counterexample(m: FiniteModel, s: Sequent) -> Optional[Dict[Variable, Element]]:
    """An assignment making the premise true and the conclusion false, if any"""
    for a in assignments(m, s.context.variables):
        if eval_formula(m, a, s.premise) and not eval_formula(m, a, s.conclusion):
            return a
    return None


def satisfies(m: FiniteModel, s: Sequent) -> bool:
    return counterexample(m, s) is None


def is_model(m: FiniteModel, t: Theory) -> bool:
    return all(satisfies(m, ax.sequent) for ax in t.axioms)


# --- enumeration -------------------------------------------------------------


def _bound(bound: SizeBound, sort: Sort) -> int:
    if isinstance(bound, int):
        return bound
    return bound.get(sort, 0)


def _size_assignments(sig: Signature, lower: SizeBound, upper: SizeBound) -> List[Dict[Sort, int]]:
    ranges = [range(_bound(lower, s), _bound(upper, s) + 1) for s in sig.sorts]
    return [dict(zip(sig.sorts, sizes)) for sizes in itertools.product(*ranges)]


def _domain(sizes: Mapping[Sort, int], arg_sorts: Sequence[Sort]) -> List[Row]:
    return list(itertools.product(*(range(sizes[s]) for s in arg_sorts)))


def enumeration_space(sig: Signature, lower: SizeBound, upper: SizeBound) -> int:
    """Number of raw candidate structures before filtering by the theory"""
    total = 0
    for sizes in _size_assignments(sig, lower, upper):
        count = 1
        for fn in sig.functions:
            cells = math.prod(sizes[s] for s in fn.arg_sorts)
            count *= sizes[fn.result_sort] ** cells
        for rel in sig.relations:
            cells = math.prod(sizes[s] for s in rel.arg_sorts)
            count *= 2 ** cells
        total += count
    return total


def _function_tables(sizes: Mapping[Sort, int], fn: FunctionSymbol) -> List[Dict[Row, Element]]:
    rows = _domain(sizes, fn.arg_sorts)
    values = range(sizes[fn.result_sort])
    return [dict(zip(rows, image)) for image in itertools.product(values, repeat=len(rows))]


def _relation_tables(sizes: Mapping[Sort, int], rel: RelationSymbol) -> List[frozenset[Row]]:
    rows = _domain(sizes, rel.arg_sorts)
    tables = []
    for mask in range(2 ** len(rows)):
        tables.append(frozenset(r for i, r in enumerate(rows) if mask >> i & 1))
    return tables


def enumerate_models(
    sig: Signature,
    t: Theory,
    max_size: SizeBound,
    min_size: Optional[SizeBound] = None,
    cap: Optional[int] = None,
) -> Iterator[FiniteModel]:
    """
    Yield every model of ``t`` whose carriers lie within the size bounds

    Args:
        sig: Signature to interpret (may extend the theory's signature)
        t: Theory the models must satisfy
        max_size: Upper carrier bound, for every sort or per sort
        min_size: Lower carrier bound; defaults to ``min(1, max_size)`` per sort
        cap: Largest raw candidate space accepted

    Raises:
        BudgetExceeded: If the raw space is larger than ``cap``
    """
    if min_size is None:
        min_size = {s: min(1, _bound(max_size, s)) for s in sig.sorts}
    cap = settings.MODEL_ENUMERATION_CAP if cap is None else cap
    space = enumeration_space(sig, min_size, max_size)
    if space > cap:
        raise BudgetExceeded(space, cap)
    logger.debug("enumerating_models", theory=t.id, space=space)

    for sizes in _size_assignments(sig, min_size, max_size):
        carriers = {s: tuple(range(sizes[s])) for s in sig.sorts}
        fn_options = [_function_tables(sizes, fn) for fn in sig.functions]
        rel_options = [_relation_tables(sizes, rel) for rel in sig.relations]
        for fn_tables in itertools.product(*fn_options):
            functions = dict(zip(sig.functions, fn_tables))
            for rel_tables in itertools.product(*rel_options):
                m = FiniteModel(carriers, functions, dict(zip(sig.relations, rel_tables)))
                if is_model(m, t):
                    yield m


def first_counter_model(
    sig: Signature, t: Theory, s: Sequent, max_size: SizeBound, min_size: Optional[SizeBound] = None,
    cap: Optional[int] = None,
) -> Optional[Tuple[FiniteModel, Dict[Variable, Element]]]:
    """A model of ``t`` refuting ``s``, searched within the size bounds"""
    for m in enumerate_models(sig, t, max_size, min_size=min_size, cap=cap):
        witness = counterexample(m, s)
        if witness is not None:
            return m, witness
    return None
