"""
Shared fixtures for the toolchain test suite
"""

from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pytest

from app.core.exceptions import PreconditionViolated
from app.dsl import builtin_theory, parse_problem, parse_theory
from app.models.logic import (
    BOTTOM,
    TOP,
    And,
    App,
    Context,
    Eq,
    Exists,
    Formula,
    Or,
    Rel,
    RelationSymbol,
    Sequent,
    Signature,
    Sort,
    Term,
    Theory,
    Var,
    Variable,
)
from app.models.proof import ProofTree
from app.services.kernel import (
    and_elim_l,
    and_elim_r,
    and_intro,
    axiom_instance,
    cut,
    eq_refl,
    eq_subst,
    exists_adj_fwd,
    falsum,
    identity,
    or_elim,
    or_intro,
    subst,
    truth,
)
from app.services.logic import canonical_key, formula_size

FIXTURES = Path(__file__).parent / "fixtures"

TOY_THEORY = """obs 1
theory toy.
sort V.
rel E(V, V).
rel P(V).
axiom sym: E(x, y) |- E(y, x).
axiom spread: E(x, y) & P(x) |- P(y).
"""

CHAIN_PROBLEM = """obs 1
theory graph_sym_trans.
points a b c.
assume E(a, b), E(b, c).
goal E(a, c).
"""

# formulas beyond this size are not grown further
_GROWTH_LIMIT = 24


def random_term(rng: np.random.Generator, sig: Signature, scope: Sequence[Variable], sort: Sort,
                depth: int) -> Term:
    """A term of ``sort`` over ``scope``; function applications nest at most ``depth`` deep"""
    here = [v for v in scope if v.sort == sort]
    makers = [f for f in sig.functions if f.result_sort == sort and (depth > 0 or f.is_constant)]
    if here and (not makers or rng.integers(3) > 0):
        return Var(here[rng.integers(len(here))])
    fn = makers[rng.integers(len(makers))]
    return App(fn, tuple(random_term(rng, sig, scope, s, depth - 1) for s in fn.arg_sorts))


def random_formula(rng: np.random.Generator, sig: Signature, scope: Sequence[Variable], depth: int,
                   shadowing: bool = False) -> Formula:
    """
    A formula of depth at most ``depth`` over ``scope``

    Binders are named ``b<n>`` so they never clash with the scope, unless
    ``shadowing`` reuses the names ``x y z u`` to provoke capture.
    """
    kind = rng.integers(5) if depth > 1 else 0
    if kind == 0 or kind == 4:
        if sig.relations and rng.integers(4) > 0:
            rel = sig.relations[rng.integers(len(sig.relations))]
            return Rel(rel, tuple(random_term(rng, sig, scope, s, 1) for s in rel.arg_sorts))
        sorts = sorted({v.sort for v in scope}, key=lambda s: s.name)
        if not sorts:
            return TOP if rng.integers(2) else BOTTOM
        sort = sorts[rng.integers(len(sorts))]
        return Eq(random_term(rng, sig, scope, sort, 1), random_term(rng, sig, scope, sort, 1))
    if kind == 1:
        return And(random_formula(rng, sig, scope, depth - 1, shadowing),
                   random_formula(rng, sig, scope, depth - 1, shadowing))
    if kind == 2:
        return Or(tuple(random_formula(rng, sig, scope, depth - 1, shadowing) for _ in range(rng.integers(4))))
    sort = sig.sorts[rng.integers(len(sig.sorts))]
    name = "xyzu"[rng.integers(4)] if shadowing else f"b{len(scope)}"
    v = Variable(name, sort)
    inner = [w for w in scope if w.name != name] + [v]
    return Exists(v, random_formula(rng, sig, inner, depth - 1, shadowing))


def random_atom(rng: np.random.Generator, relations: Sequence[RelationSymbol], ctx: Context) -> Formula:
    """A relation atom or equation over the variables of ``ctx``"""
    names = ctx.variables
    if rng.integers(5) == 0:
        return Eq(Var(names[rng.integers(len(names))]), Var(names[rng.integers(len(names))]))
    rel = relations[rng.integers(len(relations))]
    return Rel(rel, tuple(Var(names[rng.integers(len(names))]) for _ in rel.arg_sorts))


def random_proofs(theory: Theory, rng: np.random.Generator, count: int) -> List[ProofTree]:
    """
    Kernel proofs over a single-sorted theory, grown at random

    Starts from axiom instances pulled back into ``[x, y, z]`` and keeps
    applying constructors to earlier proofs: cuts, pairings, weakenings,
    disjunction steps, case splits, existential closures and renamings.
    """
    relations = theory.signature.relations
    sort = theory.signature.sorts[0]
    ctx = Context(tuple(Variable(n, sort) for n in ("x", "y", "z")))
    pool: List[ProofTree] = []
    by_premise: Dict[tuple, List[ProofTree]] = defaultdict(list)
    by_conclusion: Dict[tuple, List[ProofTree]] = defaultdict(list)

    def pick(items):
        return items[rng.integers(len(items))]

    def add(p: ProofTree) -> None:
        s = p.conclusion
        pool.append(p)
        by_premise[(s.context, canonical_key(s.premise))].append(p)
        by_conclusion[(s.context, canonical_key(s.conclusion))].append(p)

    def instance() -> ProofTree:
        name = pick(theory.axiom_names)
        mapping = {v: Var(pick(ctx.variables)) for v in theory.axiom(name).sequent.context}
        return subst(axiom_instance(theory, name), mapping, ctx)

    def leaf() -> ProofTree:
        kind = rng.integers(5)
        if kind == 0:
            return identity(ctx, random_atom(rng, relations, ctx))
        if kind == 1:
            return eq_refl(ctx, pick(ctx.variables))
        if kind == 2:
            return eq_subst(ctx, pick(ctx.variables), pick(ctx.variables), random_atom(rng, relations, ctx))
        if kind == 3:
            return truth(ctx, random_atom(rng, relations, ctx))
        return falsum(ctx, random_atom(rng, relations, ctx))

    def grow(kind: int) -> Optional[ProofTree]:
        p = pick(pool)
        s = p.conclusion
        here = s.context
        if formula_size(s.premise) + formula_size(s.conclusion) > _GROWTH_LIMIT:
            return None
        if kind == 0:
            following = by_premise.get((here, canonical_key(s.conclusion)))
            return cut(p, pick(following)) if following else None
        if kind == 1:
            return and_intro(p, pick(by_premise[(here, canonical_key(s.premise))]))
        if kind == 2:
            extra = random_atom(rng, relations, here)
            if rng.integers(2):
                return cut(and_elim_l(here, s.premise, extra), p)
            return cut(and_elim_r(here, extra, s.premise), p)
        if kind == 3:
            extra = random_atom(rng, relations, here)
            i = int(rng.integers(2))
            disjuncts = (s.conclusion, extra) if i == 0 else (extra, s.conclusion)
            return cut(p, or_intro(here, disjuncts, i))
        if kind == 4:
            return or_elim([p, pick(by_conclusion[(here, canonical_key(s.conclusion))])])
        if kind == 5:
            if len(here.variables) < 2:
                return None
            return exists_adj_fwd(p, pick(here.variables))
        mapping = {v: Var(pick(here.variables)) for v in here.variables}
        return subst(p, mapping, here)

    while len(pool) < count:
        kind = int(rng.integers(9))
        try:
            made = instance() if kind == 7 or not pool else leaf() if kind == 8 else grow(kind)
        except PreconditionViolated:
            made = None
        if made is not None:
            add(made)
    return pool


@pytest.fixture
def graph_sym():
    return builtin_theory("graph_sym")


@pytest.fixture
def graph_sym_trans():
    return builtin_theory("graph_sym_trans")


@pytest.fixture
def euclidean():
    return builtin_theory("euclidean")


@pytest.fixture
def toy_theory():
    return parse_theory(TOY_THEORY)


@pytest.fixture
def chain_problem(graph_sym_trans):
    """E(a,b), E(b,c) under symmetry and transitivity"""
    return parse_problem(CHAIN_PROBLEM, graph_sym_trans)


@pytest.fixture
def vertex():
    return Sort("V")


@pytest.fixture
def xy(vertex):
    return Variable("x", vertex), Variable("y", vertex)


@pytest.fixture
def edge(graph_sym):
    return graph_sym.signature.relation("E")


@pytest.fixture
def sym_sequent(xy, edge):
    """[x, y] E(x, y) |- E(y, x)"""
    x, y = xy
    return Sequent(Context((x, y)), Rel(edge, (Var(x), Var(y))), Rel(edge, (Var(y), Var(x))))


@pytest.fixture
def write_file(tmp_path):
    def write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
