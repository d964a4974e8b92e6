"""
Observable Logic Syntax

Signatures, terms, formulas, contexts, sequents and theories. All values are
frozen dataclasses: immutable after construction and hashable, so they can
be shared freely between workers and used as dictionary keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple, Union

from app.core.exceptions import NameCollision


@dataclass(frozen=True, slots=True)
class Sort:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class FunctionSymbol:
    name: str
    arg_sorts: Tuple[Sort, ...]
    result_sort: Sort

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)

    @property
    def is_constant(self) -> bool:
        return not self.arg_sorts


@dataclass(frozen=True, slots=True)
class RelationSymbol:
    name: str
    arg_sorts: Tuple[Sort, ...]

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


@dataclass(frozen=True, slots=True)
class Signature:
    """Sorts, function symbols and relation symbols, in declaration order"""

    sorts: Tuple[Sort, ...] = ()
    functions: Tuple[FunctionSymbol, ...] = ()
    relations: Tuple[RelationSymbol, ...] = ()

    def sort(self, name: str) -> Optional[Sort]:
        for s in self.sorts:
            if s.name == name:
                return s
        return None

    def function(self, name: str) -> Optional[FunctionSymbol]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def relation(self, name: str) -> Optional[RelationSymbol]:
        for r in self.relations:
            if r.name == name:
                return r
        return None

    def constants(self, sort: Optional[Sort] = None) -> Tuple[FunctionSymbol, ...]:
        return tuple(
            f
            for f in self.functions
            if f.is_constant and (sort is None or f.result_sort == sort)
        )

    @property
    def is_empty(self) -> bool:
        return not (self.sorts or self.functions or self.relations)


@dataclass(frozen=True, slots=True)
class Variable:
    name: str
    sort: Sort

    def __str__(self) -> str:
        return self.name


# --- terms -------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Var:
    var: Variable

    def __str__(self) -> str:
        return self.var.name


@dataclass(frozen=True, slots=True)
class App:
    fn: FunctionSymbol
    args: Tuple["Term", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.fn.name
        return f"{self.fn.name}({', '.join(str(a) for a in self.args)})"


Term = Union[Var, App]


# --- formulas ----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Rel:
    rel: RelationSymbol
    args: Tuple[Term, ...]

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Eq:
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Top:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True, slots=True)
class Bottom:
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True, slots=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Or:
    disjuncts: Tuple["Formula", ...] = ()

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Exists:
    var: Variable
    body: "Formula"

    def __str__(self) -> str:
        return format_formula(self)


Formula = Union[Rel, Eq, Top, Bottom, And, Or, Exists]
Atom = Union[Rel, Eq]

TOP = Top()
BOTTOM = Bottom()


def is_atomic(f: Formula) -> bool:
    return isinstance(f, (Rel, Eq))


def conj(formulas: "Tuple[Formula, ...] | list[Formula]") -> Formula:
    """Right-nested conjunction; the empty conjunction is ``true``"""
    items = list(formulas)
    if not items:
        return TOP
    result = items[-1]
    for f in reversed(items[:-1]):
        result = And(f, result)
    return result


def format_formula(f: Formula) -> str:
    """Concrete syntax of a formula, parenthesised so the parser reads it back"""
    match f:
        case Rel(rel, args):
            return f"{rel.name}({', '.join(str(a) for a in args)})"
        case Eq(lhs, rhs):
            return f"{lhs} = {rhs}"
        case Top():
            return "true"
        case Bottom():
            return "false"
        case And(left, right):
            lhs = format_formula(left)
            if isinstance(left, (And, Exists)):
                lhs = f"({lhs})"
            rhs = format_formula(right)
            if isinstance(right, Exists):
                rhs = f"({rhs})"
            return f"{lhs} & {rhs}"
        case Or(disjuncts):
            return "\\/[" + ", ".join(format_formula(d) for d in disjuncts) + "]"
        case Exists(v, body):
            return f"exists {v.name}:{v.sort.name}. {format_formula(body)}"
    raise TypeError(f"Not a formula: {f!r}")


# --- contexts, sequents, theories -------------------------------------------


@dataclass(frozen=True, slots=True)
class Context:
    variables: Tuple[Variable, ...] = ()

    def __post_init__(self) -> None:
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise NameCollision(f"Context declares variable '{dup}' twice", dup)

    def __iter__(self) -> Iterator[Variable]:
        return iter(self.variables)

    def __len__(self) -> int:
        return len(self.variables)

    def __contains__(self, v: object) -> bool:
        return v in self.variables

    def lookup(self, name: str) -> Optional[Variable]:
        for v in self.variables:
            if v.name == name:
                return v
        return None

    @property
    def names(self) -> frozenset[str]:
        return frozenset(v.name for v in self.variables)

    def extend(self, v: Variable) -> "Context":
        return Context(self.variables + (v,))

    def remove(self, v: Variable) -> "Context":
        return Context(tuple(x for x in self.variables if x != v))

    def __str__(self) -> str:
        return "[" + ", ".join(f"{v.name}:{v.sort.name}" for v in self.variables) + "]"


@dataclass(frozen=True, slots=True)
class Sequent:
    context: Context
    premise: Formula
    conclusion: Formula

    def __str__(self) -> str:
        return f"{self.context} {format_formula(self.premise)} |- {format_formula(self.conclusion)}"


@dataclass(frozen=True, slots=True)
class Axiom:
    name: str
    sequent: Sequent


@dataclass(frozen=True, slots=True)
class Theory:
    id: str
    signature: Signature
    axioms: Tuple[Axiom, ...] = field(default=())

    def axiom(self, name: str) -> Optional[Axiom]:
        for a in self.axioms:
            if a.name == name:
                return a
        return None

    @property
    def axiom_names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.axioms)


@dataclass(frozen=True, slots=True)
class Problem:
    """Ground premises over declared points plus a goal, read against a theory"""

    theory: Theory
    premises: Tuple[Atom, ...]
    goal: Formula
    goal_context: Context = field(default_factory=Context)
    points: Tuple[FunctionSymbol, ...] = ()

    @property
    def sequent(self) -> Sequent:
        return Sequent(self.goal_context, conj(list(self.premises)), self.goal)
