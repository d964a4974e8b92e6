"""
Core Logic Operations

Well-formedness checking, free variables, capture-avoiding substitution,
alpha-equivalence and signature extension over the syntax of
``app.models.logic``. Every function here is pure.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from app.core.exceptions import (
    ArityMismatch,
    DuplicateBinder,
    NameCollision,
    SortMismatch,
    UnknownSort,
    UnknownSymbol,
    UnknownVariable,
)
from app.models.logic import (
    And,
    App,
    Atom,
    Axiom,
    Bottom,
    Context,
    Eq,
    Exists,
    Formula,
    FunctionSymbol,
    Or,
    Rel,
    Sequent,
    Signature,
    Sort,
    Term,
    Theory,
    Top,
    Var,
    Variable,
)

Substitution = Mapping[Variable, Term]


# --- signatures --------------------------------------------------------------


def validate_signature(sig: Signature) -> Signature:
    """Reject duplicate names within a namespace and dangling sort references"""
    for kind, names in (
        ("sort", [s.name for s in sig.sorts]),
        ("function", [f.name for f in sig.functions]),
        ("relation", [r.name for r in sig.relations]),
    ):
        seen: set[str] = set()
        for n in names:
            if not n:
                raise NameCollision(f"Empty {kind} name", n)
            if n in seen:
                raise NameCollision(f"Duplicate {kind} '{n}'", n)
            seen.add(n)

    declared = set(sig.sorts)
    for fn in sig.functions:
        for s in (*fn.arg_sorts, fn.result_sort):
            if s not in declared:
                raise UnknownSort(f"Function '{fn.name}' uses undeclared sort '{s}'", fn)
    for rel in sig.relations:
        if not rel.arg_sorts:
            raise ArityMismatch(f"Relation '{rel.name}' must take at least one argument", rel)
        for s in rel.arg_sorts:
            if s not in declared:
                raise UnknownSort(f"Relation '{rel.name}' uses undeclared sort '{s}'", rel)
    return sig


def extend_signature(sig: Signature, delta: Signature) -> Signature:
    """Union of ``sig`` and ``delta``; ``delta`` may refer to the sorts of ``sig``"""
    for mine, theirs, kind in (
        (sig.sorts, delta.sorts, "sort"),
        (sig.functions, delta.functions, "function"),
        (sig.relations, delta.relations, "relation"),
    ):
        existing = {x.name for x in mine}
        for item in theirs:
            if item.name in existing:
                raise NameCollision(f"Extension redeclares {kind} '{item.name}'", item.name)

    return validate_signature(
        Signature(
            sorts=sig.sorts + delta.sorts,
            functions=sig.functions + delta.functions,
            relations=sig.relations + delta.relations,
        )
    )


def extend_theory(theory: Theory, delta: Signature, theory_id: Optional[str] = None) -> Theory:
    return Theory(
        id=theory_id or theory.id,
        signature=extend_signature(theory.signature, delta),
        axioms=theory.axioms,
    )


# --- terms -------------------------------------------------------------------


def term_sort(t: Term) -> Sort:
    if isinstance(t, Var):
        return t.var.sort
    return t.fn.result_sort


def wf_term(sig: Signature, ctx: Context, t: Term) -> Sort:
    """Sort of ``t`` if it is well-formed in ``ctx`` over ``sig``"""
    match t:
        case Var(v):
            bound = ctx.lookup(v.name)
            if bound is None:
                raise UnknownVariable(f"Variable '{v.name}' is not in context {ctx}", t)
            if bound.sort != v.sort:
                raise SortMismatch(
                    f"Variable '{v.name}' used at sort {v.sort} but declared {bound.sort}", t
                )
            return v.sort
        case App(fn, args):
            declared = sig.function(fn.name)
            if declared is None or declared != fn:
                raise UnknownSymbol(f"Unknown function symbol '{fn.name}'", t)
            if len(args) != fn.arity:
                raise ArityMismatch(
                    f"'{fn.name}' expects {fn.arity} arguments, got {len(args)}", t
                )
            for i, (arg, expected) in enumerate(zip(args, fn.arg_sorts), start=1):
                actual = wf_term(sig, ctx, arg)
                if actual != expected:
                    raise SortMismatch(
                        f"Argument {i} of '{fn.name}' has sort {actual}, expected {expected}",
                        arg,
                        position=i,
                    )
            return fn.result_sort
    raise TypeError(f"Not a term: {t!r}")


def term_variables(t: Term) -> frozenset[Variable]:
    if isinstance(t, Var):
        return frozenset((t.var,))
    out: frozenset[Variable] = frozenset()
    for a in t.args:
        out |= term_variables(a)
    return out


def substitute_term(t: Term, subst: Substitution) -> Term:
    match t:
        case Var(v):
            return subst.get(v, t)
        case App(fn, args):
            if not args:
                return t
            return App(fn, tuple(substitute_term(a, subst) for a in args))
    raise TypeError(f"Not a term: {t!r}")


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


def is_ground_term(t: Term) -> bool:
    return not term_variables(t)


# --- formulas ----------------------------------------------------------------


def wf_formula(sig: Signature, ctx: Context, f: Formula) -> None:
    """Raise the first well-formedness error of ``f`` in ``ctx``; return None if ok"""
    match f:
        case Rel(rel, args):
            declared = sig.relation(rel.name)
            if declared is None or declared != rel:
                raise UnknownSymbol(f"Unknown relation symbol '{rel.name}'", f)
            if len(args) != rel.arity:
                raise ArityMismatch(
                    f"'{rel.name}' expects {rel.arity} arguments, got {len(args)}", f
                )
            for i, (arg, expected) in enumerate(zip(args, rel.arg_sorts), start=1):
                actual = wf_term(sig, ctx, arg)
                if actual != expected:
                    raise SortMismatch(
                        f"Argument {i} of '{rel.name}' has sort {actual}, expected {expected}",
                        arg,
                        position=i,
                    )
        case Eq(lhs, rhs):
            left = wf_term(sig, ctx, lhs)
            right = wf_term(sig, ctx, rhs)
            if left != right:
                raise SortMismatch(
                    f"Equation sides have sorts {left} and {right}", f, position=2
                )
        case Top() | Bottom():
            pass
        case And(left, right):
            wf_formula(sig, ctx, left)
            wf_formula(sig, ctx, right)
        case Or(disjuncts):
            for d in disjuncts:
                wf_formula(sig, ctx, d)
        case Exists(v, body):
            if sig.sort(v.sort.name) != v.sort:
                raise UnknownSort(f"Binder '{v.name}' has undeclared sort {v.sort}", f)
            if v.name in ctx.names:
                raise DuplicateBinder(f"Binder '{v.name}' shadows a context variable", f)
            wf_formula(sig, ctx.extend(v), body)
        case _:
            raise TypeError(f"Not a formula: {f!r}")


def wf_context(sig: Signature, ctx: Context) -> None:
    for v in ctx:
        if sig.sort(v.sort.name) != v.sort:
            raise UnknownSort(f"Context variable '{v.name}' has undeclared sort {v.sort}", v)


def wf_sequent(sig: Signature, s: Sequent) -> None:
    wf_context(sig, s.context)
    wf_formula(sig, s.context, s.premise)
    wf_formula(sig, s.context, s.conclusion)


def wf_theory(theory: Theory) -> Theory:
    validate_signature(theory.signature)
    seen: set[str] = set()
    for ax in theory.axioms:
        if ax.name in seen:
            raise NameCollision(f"Duplicate axiom name '{ax.name}'", ax.name)
        seen.add(ax.name)
        wf_sequent(theory.signature, ax.sequent)
    return theory


@lru_cache(maxsize=200_000)
def free_vars(f: Formula) -> frozenset[Variable]:
    match f:
        case Rel(_, args):
            out: frozenset[Variable] = frozenset()
            for a in args:
                out |= term_variables(a)
            return out
        case Eq(lhs, rhs):
            return term_variables(lhs) | term_variables(rhs)
        case Top() | Bottom():
            return frozenset()
        case And(left, right):
            return free_vars(left) | free_vars(right)
        case Or(disjuncts):
            acc: frozenset[Variable] = frozenset()
            for d in disjuncts:
                acc |= free_vars(d)
            return acc
        case Exists(v, body):
            return free_vars(body) - {v}
    raise TypeError(f"Not a formula: {f!r}")


def fresh_name(name: str, taken: Iterable[str]) -> str:
    """``name`` with the fewest primes appended that avoids ``taken``"""
    used = set(taken)
    candidate = name + "'"
    while candidate in used:
        candidate += "'"
    return candidate


def _check_substitution(subst: Substitution) -> None:
    for v, t in subst.items():
        actual = term_sort(t)
        if actual != v.sort:
            raise SortMismatch(
                f"Substitution maps '{v.name}':{v.sort} to a term of sort {actual}", t
            )


def substitute(f: Formula, subst: Substitution) -> Formula:
    """Simultaneous capture-avoiding substitution"""
    _check_substitution(subst)
    return _substitute(f, dict(subst))


def _substitute(f: Formula, subst: Dict[Variable, Term]) -> Formula:
    if not subst:
        return f
    match f:
        case Rel(rel, args):
            return Rel(rel, tuple(substitute_term(a, subst) for a in args))
        case Eq(lhs, rhs):
            return Eq(substitute_term(lhs, subst), substitute_term(rhs, subst))
        case Top() | Bottom():
            return f
        case And(left, right):
            return And(_substitute(left, subst), _substitute(right, subst))
        case Or(disjuncts):
            return Or(tuple(_substitute(d, subst) for d in disjuncts))
        case Exists(v, body):
            body_free = free_vars(body)
            inner = {k: t for k, t in subst.items() if k != v and k in body_free}
            if not inner:
                return f
            incoming = set()
            for t in inner.values():
                incoming |= {x.name for x in term_variables(t)}
            if v.name in incoming:
                taken = incoming | {x.name for x in body_free}
                renamed = Variable(fresh_name(v.name, taken), v.sort)
                inner[v] = Var(renamed)
                return Exists(renamed, _substitute(body, inner))
            return Exists(v, _substitute(body, inner))
    raise TypeError(f"Not a formula: {f!r}")


def substitute_sequent(s: Sequent, subst: Substitution, context: Context) -> Sequent:
    return Sequent(context, substitute(s.premise, subst), substitute(s.conclusion, subst))


def rename_context(s: Sequent, target: Context) -> Optional[Sequent]:
    """``s`` with its context renamed positionally onto ``target``, if sorts line up"""
    if len(s.context) != len(target):
        return None
    mapping: Dict[Variable, Term] = {}
    for old, new in zip(s.context, target):
        if old.sort != new.sort:
            return None
        if old != new:
            mapping[old] = Var(new)
    if not mapping:
        return s
    return substitute_sequent(s, mapping, target)


# --- alpha-equivalence -------------------------------------------------------


def _canon_term(t: Term, env: Mapping[Variable, int]) -> tuple:
    if isinstance(t, Var):
        if t.var in env:
            return ("b", env[t.var])
        return ("v", t.var.name, t.var.sort.name)
    return (
        "f",
        t.fn.name,
        tuple(s.name for s in t.fn.arg_sorts),
        t.fn.result_sort.name,
        tuple(_canon_term(a, env) for a in t.args),
    )


def _canon(f: Formula, env: Mapping[Variable, int], depth: int) -> tuple:
    match f:
        case Rel(rel, args):
            return (
                "R",
                rel.name,
                tuple(s.name for s in rel.arg_sorts),
                tuple(_canon_term(a, env) for a in args),
            )
        case Eq(lhs, rhs):
            return ("=", _canon_term(lhs, env), _canon_term(rhs, env))
        case Top():
            return ("T",)
        case Bottom():
            return ("F",)
        case And(left, right):
            return ("&", _canon(left, env, depth), _canon(right, env, depth))
        case Or(disjuncts):
            return ("|", tuple(_canon(d, env, depth) for d in disjuncts))
        case Exists(v, body):
            return ("E", v.sort.name, _canon(body, {**env, v: depth}, depth + 1))
    raise TypeError(f"Not a formula: {f!r}")


@lru_cache(maxsize=200_000)
def canonical_key(f: Formula) -> tuple:
    """Hashable key identifying ``f`` up to renaming of bound variables"""
    return _canon(f, {}, 0)


def alpha_equal(f: Formula, g: Formula) -> bool:
    return f == g or canonical_key(f) == canonical_key(g)


def sequent_key(s: Sequent) -> tuple:
    return (s.context, canonical_key(s.premise), canonical_key(s.conclusion))


def sequents_alpha_equal(a: Sequent, b: Sequent) -> bool:
    return a == b or sequent_key(a) == sequent_key(b)


# --- structure helpers -------------------------------------------------------


def conjuncts(f: Formula) -> Tuple[Formula, ...]:
    """Leaves of the ``&`` tree of ``f`` in order, with ``true`` dropped"""
    match f:
        case And(left, right):
            return conjuncts(left) + conjuncts(right)
        case Top():
            return ()
    return (f,)


def conjunct_keys(f: Formula) -> frozenset[tuple]:
    return frozenset(canonical_key(c) for c in conjuncts(f))


def formula_depth(f: Formula) -> int:
    match f:
        case And(left, right):
            return 1 + max(formula_depth(left), formula_depth(right))
        case Or(disjuncts):
            return 1 + max((formula_depth(d) for d in disjuncts), default=0)
        case Exists(_, body):
            return 1 + formula_depth(body)
    return 1


def formula_size(f: Formula) -> int:
    match f:
        case And(left, right):
            return 1 + formula_size(left) + formula_size(right)
        case Or(disjuncts):
            return 1 + sum(formula_size(d) for d in disjuncts)
        case Exists(_, body):
            return 1 + formula_size(body)
    return 1


def atom_terms(a: Atom) -> Tuple[Term, ...]:
    if isinstance(a, Rel):
        return a.args
    return (a.lhs, a.rhs)


def is_ground(f: Formula) -> bool:
    return not free_vars(f)


def function_symbols(f: Formula) -> List[FunctionSymbol]:
    """Function symbols occurring in ``f``, first occurrence order"""
    found: Dict[str, FunctionSymbol] = {}

    def visit_term(t: Term) -> None:
        for sub in subterms(t):
            if isinstance(sub, App):
                found.setdefault(sub.fn.name, sub.fn)

    def visit(g: Formula) -> None:
        match g:
            case Rel(_, args):
                for a in args:
                    visit_term(a)
            case Eq(lhs, rhs):
                visit_term(lhs)
                visit_term(rhs)
            case And(left, right):
                visit(left)
                visit(right)
            case Or(disjuncts):
                for d in disjuncts:
                    visit(d)
            case Exists(_, body):
                visit(body)

    visit(f)
    return list(found.values())


def axiom(name: str, context: Iterable[Variable], premise: Formula, conclusion: Formula) -> Axiom:
    return Axiom(name, Sequent(Context(tuple(context)), premise, conclusion))
