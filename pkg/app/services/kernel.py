"""
Proof Kernel

Rule constructors for the sixteen-rule calculus and the checker that
validates a proof tree against an observable theory.

Checking is a pure function of the theory and the tree. Shared subtrees
(the elaborator reuses proofs of intermediate facts) are checked once.
"""

from __future__ import annotations

from collections import Counter
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from app.core.exceptions import (
    IllFormedSequent,
    NameCollision,
    PayloadError,
    PreconditionViolated,
    RuleMismatch,
    UnknownAxiom,
    WellFormednessError,
)
from app.core.logger import get_logger
from app.models.logic import (
    BOTTOM,
    TOP,
    And,
    Axiom,
    Bottom,
    Context,
    Eq,
    Exists,
    Formula,
    Or,
    Sequent,
    Term,
    Theory,
    Top,
    Var,
    Variable,
)
from app.models.proof import EMPTY_PAYLOAD, ProofTree, RulePayload, RuleTag
from app.services.logic import (
    alpha_equal,
    canonical_key,
    conjunct_keys,
    conjuncts,
    free_vars,
    fresh_name,
    rename_context,
    sequents_alpha_equal,
    substitute,
    substitute_sequent,
    term_sort,
    term_variables,
    wf_sequent,
    wf_term,
)

logger = get_logger(__name__)

Path = Tuple[int, ...]


# --- rule constructors -------------------------------------------------------


def _node(rule: RuleTag, premises: Sequence[ProofTree], conclusion: Sequent,
          payload: RulePayload = EMPTY_PAYLOAD) -> ProofTree:
    return ProofTree(rule, tuple(premises), conclusion, payload)


def axiom_instance(theory: Theory, name: str, context: Optional[Context] = None) -> ProofTree:
    """Axiom leaf, optionally with the axiom's context renamed onto ``context``"""
    ax = theory.axiom(name)
    if ax is None:
        raise PreconditionViolated("Axiom", f"theory {theory.id} has no axiom '{name}'")
    conclusion = ax.sequent
    if context is not None:
        renamed = rename_context(ax.sequent, context)
        if renamed is None:
            raise PreconditionViolated("Axiom", f"context {context} is not a renaming of {ax.sequent.context}")
        conclusion = renamed
    return _node(RuleTag.AXIOM, (), conclusion, RulePayload(axiom=name))


def identity(ctx: Context, f: Formula) -> ProofTree:
    return _node(RuleTag.IDENTITY, (), Sequent(ctx, f, f))


def cut(p1: ProofTree, p2: ProofTree) -> ProofTree:
    a, b = p1.conclusion, p2.conclusion
    if a.context != b.context:
        raise PreconditionViolated("Cut", "premises have different contexts")
    if not alpha_equal(a.conclusion, b.premise):
        raise PreconditionViolated("Cut", f"middle formulas differ: {a.conclusion} vs {b.premise}")
    return _node(RuleTag.CUT, (p1, p2), Sequent(a.context, a.premise, b.conclusion))


def subst(p: ProofTree, mapping: Mapping[Variable, Term], ctx: Context) -> ProofTree:
    """Pull ``p`` back along the context morphism ``mapping`` into ``ctx``"""
    source = p.conclusion.context
    missing = [v.name for v in source if v not in mapping]
    if missing:
        raise PreconditionViolated("Subst", f"no image for context variables {missing}")
    for v in source:
        t = mapping[v]
        stray = [x.name for x in term_variables(t) if x not in ctx]
        if stray:
            raise PreconditionViolated("Subst", f"image of '{v.name}' uses {stray} outside {ctx}")
        if term_sort(t) != v.sort:
            raise PreconditionViolated("Subst", f"image of '{v.name}' has sort {term_sort(t)}")
    pairs = tuple((v, mapping[v]) for v in source)
    conclusion = substitute_sequent(p.conclusion, dict(pairs), ctx)
    return _node(RuleTag.SUBST, (p,), conclusion, RulePayload(substitution=pairs))


def truth(ctx: Context, f: Formula) -> ProofTree:
    return _node(RuleTag.TRUTH, (), Sequent(ctx, f, TOP))


def falsum(ctx: Context, f: Formula) -> ProofTree:
    return _node(RuleTag.FALSUM, (), Sequent(ctx, BOTTOM, f))


def and_elim_l(ctx: Context, f: Formula, g: Formula) -> ProofTree:
    return _node(RuleTag.AND_ELIM_L, (), Sequent(ctx, And(f, g), f))


def and_elim_r(ctx: Context, f: Formula, g: Formula) -> ProofTree:
    return _node(RuleTag.AND_ELIM_R, (), Sequent(ctx, And(f, g), g))


def and_intro(p1: ProofTree, p2: ProofTree) -> ProofTree:
    a, b = p1.conclusion, p2.conclusion
    if a.context != b.context:
        raise PreconditionViolated("AndIntro", "premises have different contexts")
    if not alpha_equal(a.premise, b.premise):
        raise PreconditionViolated("AndIntro", "premises have different antecedents")
    return _node(RuleTag.AND_INTRO, (p1, p2), Sequent(a.context, a.premise, And(a.conclusion, b.conclusion)))


def or_intro(ctx: Context, disjuncts: Sequence[Formula], i: int) -> ProofTree:
    if not 0 <= i < len(disjuncts):
        raise PreconditionViolated("OrIntro", f"index {i} outside {len(disjuncts)} disjuncts")
    return _node(
        RuleTag.OR_INTRO, (), Sequent(ctx, disjuncts[i], Or(tuple(disjuncts))), RulePayload(index=i)
    )


def or_elim(proofs: Sequence[ProofTree], ctx: Optional[Context] = None,
            conclusion: Optional[Formula] = None) -> ProofTree:
    """Case analysis; an empty case list needs ``ctx`` and ``conclusion``"""
    if not proofs:
        if ctx is None or conclusion is None:
            raise PreconditionViolated("OrElim", "empty case list needs a context and a conclusion")
        return _node(RuleTag.OR_ELIM, (), Sequent(ctx, Or(()), conclusion))
    first = proofs[0].conclusion
    for p in proofs[1:]:
        c = p.conclusion
        if c.context != first.context:
            raise PreconditionViolated("OrElim", "cases have different contexts")
        if not alpha_equal(c.conclusion, first.conclusion):
            raise PreconditionViolated("OrElim", "cases have different conclusions")
    premise = Or(tuple(p.conclusion.premise for p in proofs))
    return _node(RuleTag.OR_ELIM, tuple(proofs), Sequent(first.context, premise, first.conclusion))


def exists_adj_fwd(p: ProofTree, v: Variable) -> ProofTree:
    """From phi |-_{x,v} psi infer (exists v) phi |-_x psi"""
    c = p.conclusion
    if v not in c.context:
        raise PreconditionViolated("ExistsFwd", f"'{v.name}' is not in the context")
    if v in free_vars(c.conclusion):
        raise PreconditionViolated("ExistsFwd", f"'{v.name}' occurs free in the conclusion")
    return _node(
        RuleTag.EXISTS_FWD,
        (p,),
        Sequent(c.context.remove(v), Exists(v, c.premise), c.conclusion),
        RulePayload(variable=v),
    )


def exists_adj_bwd(p: ProofTree, v: Variable) -> ProofTree:
    """From (exists y) phi |-_x psi infer phi[v/y] |-_{x,v} psi"""
    c = p.conclusion
    if v in free_vars(c.conclusion):
        raise PreconditionViolated("ExistsBwd", f"'{v.name}' occurs free in the conclusion")
    if not isinstance(c.premise, Exists):
        raise PreconditionViolated("ExistsBwd", "premise is not existential")
    if v.name in c.context.names:
        raise PreconditionViolated("ExistsBwd", f"'{v.name}' is already in the context")
    bound = c.premise.var
    if bound.sort != v.sort:
        raise PreconditionViolated("ExistsBwd", f"'{v.name}' has sort {v.sort}, binder has {bound.sort}")
    body = c.premise.body if bound == v else substitute(c.premise.body, {bound: Var(v)})
    return _node(
        RuleTag.EXISTS_BWD, (p,), Sequent(c.context.extend(v), body, c.conclusion), RulePayload(variable=v)
    )


def eq_refl(ctx: Context, v: Variable) -> ProofTree:
    if v not in ctx:
        raise PreconditionViolated("EqRefl", f"'{v.name}' is not in the context")
    return _node(RuleTag.EQ_REFL, (), Sequent(ctx, TOP, Eq(Var(v), Var(v))))


def eq_subst(ctx: Context, v: Variable, w: Variable, f: Formula) -> ProofTree:
    """(v = w) & f |- f[w/v]"""
    for x in (v, w):
        if x not in ctx:
            raise PreconditionViolated("EqSubst", f"'{x.name}' is not in the context")
    if v.sort != w.sort:
        raise PreconditionViolated("EqSubst", "equated variables have different sorts")
    return _node(
        RuleTag.EQ_SUBST,
        (),
        Sequent(ctx, And(Eq(Var(v), Var(w)), f), substitute(f, {v: Var(w)})),
    )


def frobenius(ctx: Context, f: Formula, v: Variable, g: Formula) -> ProofTree:
    if v in free_vars(f):
        raise PreconditionViolated("Frobenius", f"'{v.name}' occurs free in the left conjunct")
    return _node(RuleTag.FROBENIUS, (), Sequent(ctx, And(f, Exists(v, g)), Exists(v, And(f, g))))


def distributivity(ctx: Context, f: Formula, disjuncts: Sequence[Formula]) -> ProofTree:
    return _node(
        RuleTag.DISTRIBUTIVITY,
        (),
        Sequent(ctx, And(f, Or(tuple(disjuncts))), Or(tuple(And(f, g) for g in disjuncts))),
    )


# --- derived constructions ---------------------------------------------------


def entails_conjunctively(a: Formula, b: Formula) -> bool:
    """Syntactic entailment: every conjunct of ``b`` is a conjunct of ``a``, or ``a`` has ``false``"""
    keys = conjunct_keys(a)
    return conjunct_keys(b) <= keys or canonical_key(BOTTOM) in keys


def _project(ctx: Context, a: Formula, target: Formula) -> Optional[ProofTree]:
    if alpha_equal(a, target):
        return identity(ctx, a)
    if isinstance(a, And):
        key = canonical_key(target)
        for side, elim in ((a.left, and_elim_l), (a.right, and_elim_r)):
            if key in conjunct_keys(side) or alpha_equal(side, target):
                inner = _project(ctx, side, target)
                if inner is not None:
                    return cut(elim(ctx, a.left, a.right), inner)
    return None


def prove_conjunctive(ctx: Context, a: Formula, b: Formula) -> ProofTree:
    """Proof of ``a |- b`` from projections, pairing and ``true``/``false`` rules"""
    if alpha_equal(a, b):
        return identity(ctx, a)
    if isinstance(b, Top):
        return truth(ctx, a)
    if isinstance(b, And):
        return and_intro(prove_conjunctive(ctx, a, b.left), prove_conjunctive(ctx, a, b.right))
    projected = _project(ctx, a, b)
    if projected is not None:
        return projected
    absurd = _project(ctx, a, BOTTOM)
    if absurd is not None:
        return cut(absurd, falsum(ctx, b))
    raise PreconditionViolated("Conjunctive", f"{a} does not syntactically entail {b}")


def exists_intro(ctx: Context, target: Exists, w: Variable) -> ProofTree:
    """``body[w/y] |- (exists y) body``: open an identity on ``target`` at a fresh variable, then send it to ``w``"""
    if w not in ctx or w.sort != target.var.sort:
        raise PreconditionViolated("ExistsIntro", f"'{w.name}' is not a context variable of sort {target.var.sort}")
    fv = free_vars(target)
    if not fv <= set(ctx.variables):
        raise PreconditionViolated("ExistsIntro", f"{target} has free variables outside {ctx}")
    outer = Context(tuple(u for u in ctx if u in fv))
    v = Variable(fresh_name(target.var.name, ctx.names | {target.var.name}), target.var.sort)
    opened = exists_adj_bwd(identity(outer, target), v)
    mapping: Dict[Variable, Term] = {u: Var(u) for u in outer}
    mapping[v] = Var(w)
    return subst(opened, mapping, ctx)


def _premise_candidates(a: Formula) -> List[Formula]:
    parts = conjuncts(a)
    pairs = [And(c1, c2) for i, c1 in enumerate(parts) for j, c2 in enumerate(parts) if i != j]
    return [a, *parts, *pairs]


def _logical_leaf(ctx: Context, c: Formula, b: Formula) -> Optional[ProofTree]:
    if isinstance(b, Or):
        for i, d in enumerate(b.disjuncts):
            if alpha_equal(d, c):
                return or_intro(ctx, b.disjuncts, i)
    if isinstance(b, Exists):
        for w in ctx:
            if w.sort == b.var.sort and alpha_equal(substitute(b.body, {b.var: Var(w)}), c):
                return exists_intro(ctx, b, w)
    if not isinstance(c, And):
        return None
    left, right = c.left, c.right
    if (isinstance(left, Eq) and isinstance(left.lhs, Var) and isinstance(left.rhs, Var)
            and left.lhs.var in ctx and left.rhs.var in ctx and left.lhs.var.sort == left.rhs.var.sort
            and alpha_equal(substitute(right, {left.lhs.var: left.rhs}), b)):
        return eq_subst(ctx, left.lhs.var, left.rhs.var, right)
    if (isinstance(right, Exists) and right.var not in free_vars(left)
            and alpha_equal(Exists(right.var, And(left, right.body)), b)):
        return frobenius(ctx, left, right.var, right.body)
    if isinstance(right, Or) and alpha_equal(Or(tuple(And(left, g) for g in right.disjuncts)), b):
        return distributivity(ctx, left, right.disjuncts)
    return None


def prove_immediate(ctx: Context, a: Formula, b: Formula) -> ProofTree:
    """
    Proof of ``a |- b`` when it holds by pure logic in one step: a
    conjunctive entailment, or one axiom-free leaf rule applied to ``a``, a
    conjunct of ``a`` or a pair of its conjuncts

    Raises:
        PreconditionViolated: If no such step exists
    """
    if entails_conjunctively(a, b):
        return prove_conjunctive(ctx, a, b)
    if isinstance(b, Eq) and isinstance(b.lhs, Var) and b.lhs == b.rhs and b.lhs.var in ctx:
        return cut(truth(ctx, a), eq_refl(ctx, b.lhs.var))
    for c in _premise_candidates(a):
        leaf = _logical_leaf(ctx, c, b)
        if leaf is not None:
            return leaf if alpha_equal(c, a) else cut(prove_conjunctive(ctx, a, c), leaf)
    raise PreconditionViolated("Immediate", f"{a} does not entail {b} in one logical step")


def immediately_entails(ctx: Context, a: Formula, b: Formula) -> bool:
    try:
        prove_immediate(ctx, a, b)
    except PreconditionViolated:
        return False
    return True


def promote_lemma(theory: Theory, name: str, proof: ProofTree) -> Theory:
    """Add the conclusion of a checked proof to ``theory`` as a named axiom"""
    if theory.axiom(name) is not None:
        raise NameCollision(f"Theory {theory.id} already has an axiom '{name}'", name)
    sequent = check_proof(theory, proof)
    logger.info("lemma_promoted", theory=theory.id, lemma=name, proof_size=proof_size(proof))
    return Theory(theory.id, theory.signature, theory.axioms + (Axiom(name, sequent),))


# --- checker -----------------------------------------------------------------


def _expect(cond: bool, path: Path, message: str) -> None:
    if not cond:
        raise RuleMismatch(path, message)


def _arity(node: ProofTree, n: int, path: Path) -> None:
    _expect(len(node.premises) == n, path, f"{node.rule.value} expects {n} premises, got {len(node.premises)}")


def _same_context(node: ProofTree, path: Path) -> None:
    for child in node.premises:
        _expect(child.conclusion.context == node.conclusion.context, path,
                f"{node.rule.value} premise context differs from conclusion context")


def _check_axiom(theory: Theory, node: ProofTree, path: Path) -> None:
    _arity(node, 0, path)
    name = node.payload.axiom
    if name is None:
        raise PayloadError(path, "Axiom node without an axiom name")
    ax = theory.axiom(name)
    if ax is None:
        raise UnknownAxiom(name, path)
    renamed = rename_context(ax.sequent, node.conclusion.context)
    _expect(renamed is not None and sequents_alpha_equal(renamed, node.conclusion), path,
            f"conclusion is not an instance of axiom '{name}'")


def _check_subst(theory: Theory, node: ProofTree, path: Path) -> None:
    _arity(node, 1, path)
    child = node.premises[0].conclusion
    mapping = node.payload.substitution_map()
    if set(mapping) != set(child.context.variables):
        raise PayloadError(path, "substitution domain differs from the premise context")
    for v, t in mapping.items():
        try:
            sort = wf_term(theory.signature, node.conclusion.context, t)
        except WellFormednessError as exc:
            raise PayloadError(path, f"image of '{v.name}' is ill-formed: {exc.message}")
        if sort != v.sort:
            raise PayloadError(path, f"image of '{v.name}' has sort {sort}, expected {v.sort}")
    expected = substitute_sequent(child, mapping, node.conclusion.context)
    _expect(sequents_alpha_equal(expected, node.conclusion), path,
            "conclusion is not the substituted premise")


def _check_leaf(node: ProofTree, path: Path) -> None:
    s = node.conclusion
    ctx = s.context
    rule = node.rule
    _arity(node, 0, path)
    if rule is RuleTag.IDENTITY:
        _expect(alpha_equal(s.premise, s.conclusion), path, "identity sides differ")
    elif rule is RuleTag.TRUTH:
        _expect(isinstance(s.conclusion, Top), path, "truth must conclude 'true'")
    elif rule is RuleTag.FALSUM:
        _expect(isinstance(s.premise, Bottom), path, "falsum must assume 'false'")
    elif rule in (RuleTag.AND_ELIM_L, RuleTag.AND_ELIM_R):
        _expect(isinstance(s.premise, And), path, "and-elimination needs a conjunction")
        assert isinstance(s.premise, And)
        side = s.premise.left if rule is RuleTag.AND_ELIM_L else s.premise.right
        _expect(alpha_equal(side, s.conclusion), path, "conclusion is not the selected conjunct")
    elif rule is RuleTag.OR_INTRO:
        i = node.payload.index
        if i is None:
            raise PayloadError(path, "or-introduction without a disjunct index")
        _expect(isinstance(s.conclusion, Or), path, "or-introduction must conclude a disjunction")
        assert isinstance(s.conclusion, Or)
        if not 0 <= i < len(s.conclusion.disjuncts):
            raise PayloadError(path, f"disjunct index {i} out of range")
        _expect(alpha_equal(s.premise, s.conclusion.disjuncts[i]), path, "premise is not the indexed disjunct")
    elif rule is RuleTag.EQ_REFL:
        _expect(isinstance(s.premise, Top), path, "reflexivity assumes 'true'")
        c = s.conclusion
        _expect(isinstance(c, Eq) and c.lhs == c.rhs and isinstance(c.lhs, Var) and c.lhs.var in ctx,
                path, "reflexivity must conclude x = x for a context variable")
    elif rule is RuleTag.EQ_SUBST:
        p = s.premise
        ok = (isinstance(p, And) and isinstance(p.left, Eq)
              and isinstance(p.left.lhs, Var) and isinstance(p.left.rhs, Var)
              and p.left.lhs.var in ctx and p.left.rhs.var in ctx)
        _expect(ok, path, "equality substitution needs (v = w) & phi over context variables")
        assert isinstance(p, And) and isinstance(p.left, Eq)
        assert isinstance(p.left.lhs, Var) and isinstance(p.left.rhs, Var)
        expected = substitute(p.right, {p.left.lhs.var: Var(p.left.rhs.var)})
        _expect(alpha_equal(expected, s.conclusion), path, "conclusion is not phi[w/v]")
    elif rule is RuleTag.FROBENIUS:
        p = s.premise
        _expect(isinstance(p, And) and isinstance(p.right, Exists), path,
                "Frobenius needs phi & (exists y) psi")
        assert isinstance(p, And) and isinstance(p.right, Exists)
        _expect(p.right.var not in free_vars(p.left), path, "binder occurs free in phi")
        expected = Exists(p.right.var, And(p.left, p.right.body))
        _expect(alpha_equal(expected, s.conclusion), path, "conclusion is not (exists y)(phi & psi)")
    elif rule is RuleTag.DISTRIBUTIVITY:
        p = s.premise
        _expect(isinstance(p, And) and isinstance(p.right, Or), path,
                "distributivity needs phi & \\/[psi_i]")
        assert isinstance(p, And) and isinstance(p.right, Or)
        expected = Or(tuple(And(p.left, g) for g in p.right.disjuncts))
        _expect(alpha_equal(expected, s.conclusion), path, "conclusion is not \\/[phi & psi_i]")
    else:
        raise RuleMismatch(path, f"{rule.value} is not an axiom-free leaf rule")


def _check_inner(node: ProofTree, path: Path) -> None:
    s = node.conclusion
    kids = [c.conclusion for c in node.premises]
    rule = node.rule
    if rule is RuleTag.CUT:
        _arity(node, 2, path)
        _same_context(node, path)
        a, b = kids
        _expect(alpha_equal(a.conclusion, b.premise), path, "cut formulas differ")
        _expect(alpha_equal(s.premise, a.premise) and alpha_equal(s.conclusion, b.conclusion),
                path, "conclusion does not compose the premises")
    elif rule is RuleTag.AND_INTRO:
        _arity(node, 2, path)
        _same_context(node, path)
        a, b = kids
        _expect(alpha_equal(a.premise, s.premise) and alpha_equal(b.premise, s.premise),
                path, "premise antecedents differ from the conclusion antecedent")
        _expect(alpha_equal(s.conclusion, And(a.conclusion, b.conclusion)), path,
                "conclusion is not the conjunction of the premise conclusions")
    elif rule is RuleTag.OR_ELIM:
        _same_context(node, path)
        _expect(isinstance(s.premise, Or), path, "or-elimination must assume a disjunction")
        assert isinstance(s.premise, Or)
        _expect(len(s.premise.disjuncts) == len(kids), path, "one case per disjunct required")
        for d, k in zip(s.premise.disjuncts, kids):
            _expect(alpha_equal(d, k.premise), path, "case antecedent differs from its disjunct")
            _expect(alpha_equal(k.conclusion, s.conclusion), path, "case conclusion differs")
    elif rule is RuleTag.EXISTS_FWD:
        _arity(node, 1, path)
        v = node.payload.variable
        if v is None:
            raise PayloadError(path, "exists-adjunction without a variable")
        (k,) = kids
        _expect(v in k.context and s.context == k.context.remove(v), path,
                "conclusion context must drop the bound variable")
        _expect(v not in free_vars(k.conclusion), path, "bound variable occurs free in the conclusion")
        _expect(alpha_equal(s.premise, Exists(v, k.premise)) and alpha_equal(s.conclusion, k.conclusion),
                path, "conclusion is not (exists y) phi |- psi")
    elif rule is RuleTag.EXISTS_BWD:
        _arity(node, 1, path)
        v = node.payload.variable
        if v is None:
            raise PayloadError(path, "exists-adjunction without a variable")
        (k,) = kids
        _expect(k.context.lookup(v.name) is None, path, "variable is already in the premise context")
        _expect(s.context == k.context.extend(v), path, "conclusion context must add the variable")
        _expect(isinstance(k.premise, Exists), path, "premise must be existential")
        _expect(alpha_equal(Exists(v, s.premise), k.premise) and alpha_equal(s.conclusion, k.conclusion),
                path, "conclusion does not open the existential")
    else:
        raise RuleMismatch(path, f"unexpected rule {rule.value}")


def check_proof(theory: Theory, p: ProofTree) -> Sequent:
    """Return ``p.conclusion`` if every node is a correct rule instance"""
    checked: Dict[int, Sequent] = {}

    def visit(node: ProofTree, path: Path) -> Sequent:
        done = checked.get(id(node))
        if done is not None:
            return done
        try:
            wf_sequent(theory.signature, node.conclusion)
        except WellFormednessError as exc:
            raise IllFormedSequent(path, exc.message)
        for i, child in enumerate(node.premises):
            visit(child, path + (i,))
        if node.rule is RuleTag.AXIOM:
            _check_axiom(theory, node, path)
        elif node.rule is RuleTag.SUBST:
            _check_subst(theory, node, path)
        elif node.rule in _INNER_RULES:
            _check_inner(node, path)
        else:
            _check_leaf(node, path)
        checked[id(node)] = node.conclusion
        return node.conclusion

    return visit(p, ())


_INNER_RULES = frozenset(
    {RuleTag.CUT, RuleTag.AND_INTRO, RuleTag.OR_ELIM, RuleTag.EXISTS_FWD, RuleTag.EXISTS_BWD}
)


# --- metrics -----------------------------------------------------------------


def _fold(p: ProofTree, combine: Callable[[ProofTree, List[int]], int]) -> int:
    memo: Dict[int, int] = {}

    def go(node: ProofTree) -> int:
        got = memo.get(id(node))
        if got is None:
            got = combine(node, [go(c) for c in node.premises])
            memo[id(node)] = got
        return got

    return go(p)


def proof_size(p: ProofTree) -> int:
    """Number of nodes of the tree (shared subtrees counted at every use)"""
    return _fold(p, lambda _n, kids: 1 + sum(kids))


def proof_depth(p: ProofTree) -> int:
    return _fold(p, lambda _n, kids: 1 + max(kids, default=0))


def rule_counts(p: ProofTree) -> Counter[str]:
    counts: Counter[str] = Counter()
    memo: Dict[int, Counter[str]] = {}

    def go(node: ProofTree) -> Counter[str]:
        got = memo.get(id(node))
        if got is None:
            got = Counter({node.rule.value: 1})
            for c in node.premises:
                got.update(go(c))
            memo[id(node)] = got
        return got

    counts.update(go(p))
    return counts
