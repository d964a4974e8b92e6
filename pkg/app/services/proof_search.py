"""
Bounded Proof Search

Breadth-first closure of provable statements over a finite universe of
sequents, once in the sixteen-rule calculus and once in the sieve calculus,
plus a Horn oracle that decides the Horn part of the universe by saturation.

Both searches start from the same leaves (axiom instances and one-step
logical entailments) and advance in mirrored rounds, kernel rule on the
left and sieve construction on the right:

    Cut          composition over a pulled-back cover, then widening
    AndIntro     composition alone
    OrElim       composition over the disjunction cover, then widening
    ExistsFwd    projection, with the variable renamed away first
    Subst        pullback along a context endomorphism

Only statements inside the universe are kept, so rounds stay bounded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Generic, Iterator, List, Optional, Sequence, Tuple, TypeVar

from app.core.config import settings
from app.core.exceptions import PreconditionViolated
from app.core.logger import get_logger
from app.models.deduction import FactBase
from app.models.logic import (
    BOTTOM,
    TOP,
    And,
    App,
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
    Var,
    Variable,
    is_atomic,
)
from app.models.proof import ProofTree
from app.models.sieve import CoveringClaim, SieveProof, SiteObject, entail_mono, subst_map
from app.services.deduction import horn_partition, saturate
from app.services.kernel import (
    and_intro,
    axiom_instance,
    cut,
    exists_adj_fwd,
    or_elim,
    prove_immediate,
    subst,
)
from app.services.logic import (
    canonical_key,
    conjuncts,
    free_vars,
    fresh_name,
    sequent_key,
    substitute,
)
from app.services.topo_dual import (
    axiom_cover,
    claim_sequent,
    disjunction_cover,
    dualize_statement,
    is_maximal,
    maximality,
    projection,
    stability,
    transitivity,
    widening,
)

logger = get_logger(__name__)

W = TypeVar("W")


@dataclass(frozen=True)
class SearchUniverse:
    """
    Sequents ``phi |- psi`` in one context with both sides drawn from
    ``formulas``; existentials bind ``bound``, which is not a context name
    """

    context: Context
    formulas: Tuple[Formula, ...]
    bound: str = "z"
    _keys: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_keys", frozenset(canonical_key(f) for f in self.formulas))

    def admits(self, s: Sequent) -> bool:
        return (
            s.context == self.context
            and canonical_key(s.premise) in self._keys
            and canonical_key(s.conclusion) in self._keys
        )

    def sequents(self) -> Iterator[Sequent]:
        for premise, conclusion in itertools.product(self.formulas, repeat=2):
            yield Sequent(self.context, premise, conclusion)

    def __len__(self) -> int:
        return len(self.formulas) ** 2


def _atoms(signature: Signature, variables: Sequence[Variable], sort: Sort) -> List[Formula]:
    atoms: List[Formula] = []
    for rel in signature.relations:
        if any(s != sort for s in rel.arg_sorts):
            raise PreconditionViolated("toy_universe", f"relation {rel.name} leaves sort {sort}")
        for args in itertools.product(variables, repeat=rel.arity):
            atoms.append(Rel(rel, tuple(Var(v) for v in args)))
    return atoms


def _equations(variables: Sequence[Variable]) -> List[Formula]:
    return [Eq(Var(a), Var(b)) for a, b in itertools.product(variables, repeat=2)]


def toy_universe(signature: Signature, names: Sequence[str] = ("x", "y"),
                 sort: Optional[Sort] = None) -> SearchUniverse:
    """
    Formulas of depth at most two over ``names``

    Depth one: relation atoms, equations between variables, ``true`` and
    ``false``. Depth two: ordered conjunctions of two relation atoms, an
    equation conjoined with a relation atom, disjunctions of two distinct
    relation atoms, and an existential over one relation atom or equation
    in a fresh bound variable that mentions at most one other variable.

    Every relation must range over ``sort`` (by default the signature's only
    sort). One binary and one unary relation over two variables give 98
    formulas and 9604 sequents.
    """
    if sort is None:
        if len(signature.sorts) != 1:
            raise PreconditionViolated("toy_universe", "signature must have exactly one sort")
        sort = signature.sorts[0]
    variables = tuple(Variable(n, sort) for n in names)
    bound = Variable("z" if "z" not in names else fresh_name("z", names), sort)

    relational = _atoms(signature, variables, sort)
    equations = _equations(variables)
    conjunctions = [And(a, b) for a, b in itertools.product(relational, repeat=2)]
    conjunctions += [And(e, a) for e, a in itertools.product(equations, relational)]
    disjunctions = [Or((a, b)) for a, b in itertools.combinations(relational, 2)]
    existentials: List[Formula] = []
    for body in _atoms(signature, variables + (bound,), sort) + _equations(variables + (bound,)):
        mentioned = free_vars(body)
        if bound in mentioned and len(mentioned - {bound}) <= 1:
            existentials.append(Exists(bound, body))

    formulas = relational + equations + [TOP, BOTTOM] + conjunctions + disjunctions + existentials
    return SearchUniverse(Context(variables), tuple(formulas), bound.name)


@dataclass
class SearchResult(Generic[W]):
    """Witness per proven statement, keyed by ``sequent_key``"""

    witnesses: Dict[tuple, W]
    statements: Dict[tuple, Sequent]
    rounds: int
    saturated: bool

    @property
    def proven(self) -> frozenset[tuple]:
        return frozenset(self.witnesses)


def _substitutions(source: Context, target: Context) -> Iterator[Dict[Variable, Term]]:
    choices = [[u for u in target if u.sort == v.sort] for v in source]
    for images in itertools.product(*choices):
        yield {v: Var(u) for v, u in zip(source, images)}


def _endomorphisms(ctx: Context) -> List[Dict[Variable, Term]]:
    return [m for m in _substitutions(ctx, ctx) if any(m[v] != Var(v) for v in ctx)]


def _projections(ctx: Context, bound: str) -> List[Tuple[Variable, Variable, Context]]:
    """
    Each context variable with its renaming and the renamed context; the new
    name avoids the context and the universe binder so nothing is shadowed
    """
    name = fresh_name(bound, ctx.names | {bound})
    out = []
    for v in ctx:
        fresh = Variable(name, v.sort)
        out.append((v, fresh, Context(tuple(fresh if u == v else u for u in ctx))))
    return out


def _renaming(ctx: Context, v: Variable, fresh: Variable) -> Dict[Variable, Term]:
    return {u: Var(fresh if u == v else u) for u in ctx}


Table = Dict[tuple, Tuple[Sequent, W]]


def _offerer(universe: SearchUniverse) -> Callable[[Dict, Dict, Sequent, Callable[[], W]], None]:
    def offer(table: Dict, fresh: Dict, s: Sequent, build: Callable[[], W]) -> None:
        if not universe.admits(s):
            return
        k = sequent_key(s)
        if k not in table and k not in fresh:
            fresh[k] = (s, build())

    return offer


def _run(
    calculus: str,
    theory: Theory,
    leaves: Table,
    step: Callable[[Table], Table],
    depth: Optional[int],
) -> SearchResult[W]:
    found = dict(leaves)
    rounds = 0
    saturated = False
    while depth is None or rounds < depth:
        new = step(found)
        if not new:
            saturated = True
            break
        found.update(new)
        rounds += 1
    logger.info("proof_search_complete", calculus=calculus, theory=theory.id,
                proven=len(found), rounds=rounds, saturated=saturated)
    return SearchResult(
        witnesses={k: w for k, (_, w) in found.items()},
        statements={k: s for k, (s, _) in found.items()},
        rounds=rounds,
        saturated=saturated,
    )


def _depth(depth: Optional[int], to_fixpoint: bool) -> Optional[int]:
    if to_fixpoint:
        return None
    return settings.SEARCH_DEPTH if depth is None else depth


def _axiom_mappings(theory: Theory, ctx: Context) -> Iterator[Tuple[str, Dict[Variable, Term]]]:
    for ax in theory.axioms:
        for mapping in _substitutions(ax.sequent.context, ctx):
            yield ax.name, mapping


# --- sixteen-rule calculus ---------------------------------------------------


def kernel_search(theory: Theory, universe: SearchUniverse, depth: Optional[int] = None,
                  to_fixpoint: bool = False) -> SearchResult[ProofTree]:
    """
    Statements of ``universe`` with kernel proofs of at most ``depth``
    combination rounds above the leaves
    """
    ctx = universe.context
    offer = _offerer(universe)
    disjunctions = [f for f in universe.formulas if isinstance(f, Or)]
    endomorphisms = _endomorphisms(ctx)
    projections = _projections(ctx, universe.bound)
    leaves: Dict[tuple, Tuple[Sequent, ProofTree]] = {}

    for s in universe.sequents():
        try:
            leaf = prove_immediate(ctx, s.premise, s.conclusion)
        except PreconditionViolated:
            continue
        offer({}, leaves, s, lambda p=leaf: p)
    for name, mapping in _axiom_mappings(theory, ctx):
        ax = theory.axiom(name).sequent
        s = Sequent(ctx, substitute(ax.premise, mapping), substitute(ax.conclusion, mapping))
        offer({}, leaves, s, lambda m=mapping, n=name: subst(axiom_instance(theory, n), m, ctx))

    def project(p: ProofTree, v: Variable, fresh: Variable, renamed: Context) -> ProofTree:
        opened = subst(p, _renaming(ctx, v, fresh), renamed)
        closed = exists_adj_fwd(opened, fresh)
        return subst(closed, {u: Var(u) for u in closed.conclusion.context}, ctx)

    def step(found: Dict[tuple, Tuple[Sequent, ProofTree]]) -> Dict[tuple, Tuple[Sequent, ProofTree]]:
        fresh: Dict[tuple, Tuple[Sequent, ProofTree]] = {}
        by_premise: Dict[tuple, List[ProofTree]] = {}
        for _, p in found.values():
            by_premise.setdefault(canonical_key(p.conclusion.premise), []).append(p)
        for _, p1 in found.values():
            for p2 in by_premise.get(canonical_key(p1.conclusion.conclusion), ()):
                s = Sequent(ctx, p1.conclusion.premise, p2.conclusion.conclusion)
                offer(found, fresh, s, lambda a=p1, b=p2: cut(a, b))
        for group in by_premise.values():
            atomic = [p for p in group if is_atomic(p.conclusion.conclusion)]
            for p1, p2 in itertools.product(atomic, repeat=2):
                s = Sequent(ctx, p1.conclusion.premise, And(p1.conclusion.conclusion, p2.conclusion.conclusion))
                offer(found, fresh, s, lambda a=p1, b=p2: and_intro(a, b))
        for whole in disjunctions:
            first, *rest = whole.disjuncts
            for p1 in by_premise.get(canonical_key(first), ()):
                goal = p1.conclusion.conclusion
                others = [found.get((ctx, canonical_key(d), canonical_key(goal))) for d in rest]
                if all(o is not None for o in others):
                    cases = [p1, *(o[1] for o in others)]
                    offer(found, fresh, Sequent(ctx, whole, goal), lambda c=cases: or_elim(c))
        for _, p in found.values():
            s = p.conclusion
            for v, bound, renamed in projections:
                if v in free_vars(s.conclusion):
                    continue
                body = substitute(s.premise, _renaming(ctx, v, bound))
                offer(found, fresh, Sequent(ctx, Exists(bound, body), s.conclusion),
                      lambda p=p, v=v, b=bound, r=renamed: project(p, v, b, r))
            for m in endomorphisms:
                offer(found, fresh, Sequent(ctx, substitute(s.premise, m), substitute(s.conclusion, m)),
                      lambda p=p, m=m: subst(p, m, ctx))
        return fresh

    return _run("kernel", theory, leaves, step, _depth(depth, to_fixpoint))


# --- sieve calculus ----------------------------------------------------------


def sieve_search(theory: Theory, universe: SearchUniverse, depth: Optional[int] = None,
                 to_fixpoint: bool = False) -> SearchResult[SieveProof]:
    """
    Statements of ``universe`` whose covering claims have sieve proofs of at
    most ``depth`` composition rounds above the leaves
    """
    ctx = universe.context
    offer = _offerer(universe)
    disjunctions = [f for f in universe.formulas if isinstance(f, Or)]
    endomorphisms = _endomorphisms(ctx)
    projections = _projections(ctx, universe.bound)
    leaves: Dict[tuple, Tuple[Sequent, SieveProof]] = {}

    for s in universe.sequents():
        claim = dualize_statement(theory, s)
        if is_maximal(claim):
            offer({}, leaves, s, lambda c=claim: maximality(c))
    covers = {ax.name: axiom_cover(theory, ax.name) for ax in theory.axioms}
    for name, mapping in _axiom_mappings(theory, ctx):
        cover = covers[name]
        pulled = stability(cover, subst_map(cover.conclusion.base, tuple(mapping.items()), ctx))
        offer({}, leaves, claim_sequent(pulled.conclusion), lambda q=pulled: q)

    def extra(q: SieveProof) -> Formula:
        return q.conclusion.family[0].extra

    def base(q: SieveProof) -> Formula:
        return q.conclusion.base.formula

    def single(on: SiteObject, f: Formula) -> CoveringClaim:
        return CoveringClaim(on, (entail_mono(on, f),))

    def chained(q1: SieveProof, q2: SieveProof) -> SieveProof:
        on = q1.conclusion.base
        shifted = stability(q2, entail_mono(q2.conclusion.base, on.formula))
        return widening(transitivity(q1, [shifted]), single(on, extra(q2)))

    def paired(q1: SieveProof, q2: SieveProof) -> SieveProof:
        return transitivity(q1, [stability(q2, entail_mono(q2.conclusion.base, extra(q1)))])

    def split(whole: Or, cases: List[SieveProof]) -> SieveProof:
        cover = disjunction_cover(SiteObject(ctx, whole))
        tails = [stability(q, entail_mono(q.conclusion.base, whole)) for q in cases]
        return widening(transitivity(cover, tails), single(cover.conclusion.base, extra(cases[0])))

    def project(q: SieveProof, v: Variable, fresh: Variable, renamed: Context) -> SieveProof:
        m = subst_map(q.conclusion.base, tuple(_renaming(ctx, v, fresh).items()), renamed)
        descended = projection(stability(q, m), fresh)
        down = descended.conclusion.base
        return stability(descended, subst_map(down, tuple((u, Var(u)) for u in down.context), ctx))

    def pulled_back(q: SieveProof, m: Dict[Variable, Term]) -> SieveProof:
        return stability(q, subst_map(q.conclusion.base, tuple(m.items()), ctx))

    def step(found: Dict[tuple, Tuple[Sequent, SieveProof]]) -> Dict[tuple, Tuple[Sequent, SieveProof]]:
        fresh: Dict[tuple, Tuple[Sequent, SieveProof]] = {}
        by_base: Dict[tuple, List[SieveProof]] = {}
        for _, q in found.values():
            by_base.setdefault(canonical_key(base(q)), []).append(q)
        for _, q1 in found.values():
            for q2 in by_base.get(canonical_key(extra(q1)), ()):
                s = Sequent(ctx, base(q1), extra(q2))
                offer(found, fresh, s, lambda a=q1, b=q2: chained(a, b))
        for group in by_base.values():
            atomic = [q for q in group if is_atomic(extra(q))]
            for q1, q2 in itertools.product(atomic, repeat=2):
                s = Sequent(ctx, base(q1), And(extra(q1), extra(q2)))
                offer(found, fresh, s, lambda a=q1, b=q2: paired(a, b))
        for whole in disjunctions:
            first, *rest = whole.disjuncts
            for q1 in by_base.get(canonical_key(first), ()):
                goal = extra(q1)
                others = [found.get((ctx, canonical_key(d), canonical_key(goal))) for d in rest]
                if all(o is not None for o in others):
                    cases = [q1, *(o[1] for o in others)]
                    offer(found, fresh, Sequent(ctx, whole, goal), lambda w=whole, c=cases: split(w, c))
        for _, q in found.values():
            s = claim_sequent(q.conclusion)
            for v, bound, renamed in projections:
                if v in free_vars(s.conclusion):
                    continue
                body = substitute(s.premise, _renaming(ctx, v, bound))
                offer(found, fresh, Sequent(ctx, Exists(bound, body), s.conclusion),
                      lambda q=q, v=v, b=bound, r=renamed: project(q, v, b, r))
            for m in endomorphisms:
                offer(found, fresh, Sequent(ctx, substitute(s.premise, m), substitute(s.conclusion, m)),
                      lambda q=q, m=m: pulled_back(q, m))
        return fresh

    return _run("sieve", theory, leaves, step, _depth(depth, to_fixpoint))


# --- oracle ------------------------------------------------------------------


def is_horn_statement(s: Sequent) -> bool:
    """Both sides are conjunctions of relation atoms (``true`` included)"""
    return all(isinstance(c, Rel) for c in conjuncts(s.premise) + conjuncts(s.conclusion))


def horn_oracle(theory: Theory, universe: SearchUniverse) -> frozenset[tuple]:
    """
    Keys of the Horn statements of the universe derivable by saturation

    Context variables are frozen to fresh constants; the conclusion holds if
    each of its conjuncts is in the closure of the premise's conjuncts (or the
    closure is inconsistent).
    """
    rules, _ = horn_partition(theory)
    frozen = {v: App(FunctionSymbol(f"{v.name}#", (), v.sort)) for v in universe.context}
    domain: Dict[Sort, Tuple[Term, ...]] = {}
    for v, c in frozen.items():
        domain[v.sort] = domain.get(v.sort, ()) + (c,)

    closures: Dict[tuple, FactBase] = {}
    proven = set()
    for s in universe.sequents():
        if not is_horn_statement(s):
            continue
        pk = canonical_key(s.premise)
        if pk not in closures:
            premises = [substitute(c, frozen) for c in conjuncts(s.premise)]
            closures[pk] = saturate(rules, premises, domain=domain)  # type: ignore[arg-type]
        fb = closures[pk]
        if fb.inconsistent or all(substitute(c, frozen) in fb for c in conjuncts(s.conclusion)):
            proven.add(sequent_key(s))
    return frozenset(proven)
