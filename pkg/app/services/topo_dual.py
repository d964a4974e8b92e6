"""
Logic/Topology Duality

Maps sequents to covering claims on the syntactic site of a theory, checks
sieve proofs, and translates proofs between the sixteen-rule calculus and
the sieve calculus.

A sequent ``phi |-_x psi`` is dual to the claim that the mono
``[x | phi & psi] -> [x | phi]`` generates a covering sieve of
``[x | phi]``. Pullbacks are computed syntactically: conjunction for
entailment monos, substitution for context morphisms.
"""

from __future__ import annotations

from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple

from app.core.exceptions import (
    CompileFailed,
    IllFormedSequent,
    NotADualStatement,
    PayloadError,
    PreconditionViolated,
    PullbackError,
    RuleMismatch,
    UnknownAxiom,
    UnsupportedRule,
    WellFormednessError,
)
from app.core.logger import get_logger
from app.models.deduction import EngineLimits
from app.models.logic import And, Exists, Or, Problem, Sequent, Theory, Variable
from app.models.proof import ProofTree, RuleTag
from app.models.sieve import (
    CoveringClaim,
    DualSolution,
    MorphismKind,
    SieveProof,
    SieveRule,
    SiteMorphism,
    SiteObject,
    entail_mono,
    subst_map,
)
from app.services.deduction import prove_problem
from app.services.kernel import (
    and_elim_l,
    and_intro,
    axiom_instance,
    check_proof,
    cut,
    entails_conjunctively,
    exists_adj_fwd,
    identity,
    immediately_entails,
    or_elim,
    or_intro,
    prove_conjunctive,
    prove_immediate,
    subst,
)
from app.services.logic import (
    alpha_equal,
    conjunct_keys,
    free_vars,
    rename_context,
    sequents_alpha_equal,
    substitute,
    wf_formula,
    wf_sequent,
    wf_term,
)

logger = get_logger(__name__)

Path = Tuple[int, ...]

# kernel rules with a sieve counterpart
DUAL_FRAGMENT = frozenset(
    {
        RuleTag.AXIOM,
        RuleTag.IDENTITY,
        RuleTag.CUT,
        RuleTag.SUBST,
        RuleTag.AND_INTRO,
        RuleTag.AND_ELIM_L,
        RuleTag.AND_ELIM_R,
        RuleTag.TRUTH,
    }
)

_MAXIMAL_LEAVES = frozenset({RuleTag.IDENTITY, RuleTag.TRUTH, RuleTag.AND_ELIM_L, RuleTag.AND_ELIM_R})


# --- site objects and morphisms ----------------------------------------------


def morphism_source(m: SiteMorphism) -> SiteObject:
    if m.kind is MorphismKind.ENTAIL_MONO:
        return SiteObject(m.target.context, And(m.target.formula, m.extra))
    return SiteObject(m.source_context, substitute(m.target.formula, m.substitution_map()))


def objects_equal(a: SiteObject, b: SiteObject) -> bool:
    return a.context == b.context and alpha_equal(a.formula, b.formula)


def objects_match(a: SiteObject, b: SiteObject) -> bool:
    """Equal up to reordering and regrouping of conjuncts"""
    return a.context == b.context and conjunct_keys(a.formula) == conjunct_keys(b.formula)


def morphisms_equal(m: SiteMorphism, n: SiteMorphism) -> bool:
    if m.kind is not n.kind or not objects_equal(m.target, n.target):
        return False
    if m.kind is MorphismKind.ENTAIL_MONO:
        return alpha_equal(m.extra, n.extra)
    return m.source_context == n.source_context and m.substitution_map() == n.substitution_map()


def claims_equal(a: CoveringClaim, b: CoveringClaim) -> bool:
    return (
        objects_equal(a.base, b.base)
        and len(a.family) == len(b.family)
        and all(morphisms_equal(m, n) for m, n in zip(a.family, b.family))
    )


# --- statements --------------------------------------------------------------


def dualize_statement(t: Theory, s: Sequent) -> CoveringClaim:
    """
    The covering claim of ``s``: its premise object is covered by the mono
    adding its conclusion

    Raises:
        IllFormedSequent: If ``s`` is not well formed over ``t``
    """
    try:
        wf_sequent(t.signature, s)
    except WellFormednessError as exc:
        raise IllFormedSequent((), exc.message)
    base = SiteObject(s.context, s.premise)
    return CoveringClaim(base, (entail_mono(base, s.conclusion),))


def claim_sequent(claim: CoveringClaim) -> Sequent:
    """Inverse of ``dualize_statement``"""
    if not claim.is_dual_statement:
        raise NotADualStatement(f"{claim} is not generated by a single entailment mono")
    base = claim.base
    return Sequent(base.context, base.formula, claim.family[0].extra)


# --- pullback and composition ------------------------------------------------


def pullback(claim: CoveringClaim, m: SiteMorphism, path: Path = ()) -> CoveringClaim:
    """Pull every member of ``claim`` back along ``m``"""
    if not objects_equal(m.target, claim.base):
        raise PullbackError(path, f"morphism targets {m.target}, claim is on {claim.base}")
    base = morphism_source(m)
    family: List[SiteMorphism] = []
    for member in claim.family:
        if member.kind is not MorphismKind.ENTAIL_MONO:
            raise PullbackError(path, f"cannot pull back non-mono member {member}")
        if m.kind is MorphismKind.ENTAIL_MONO:
            family.append(entail_mono(base, member.extra))
        else:
            family.append(entail_mono(base, substitute(member.extra, m.substitution_map())))
    return CoveringClaim(base, tuple(family))


def compose_claims(head: CoveringClaim, tails: Sequence[CoveringClaim], path: Path = ()) -> CoveringClaim:
    """
    Local character: ``head`` covers its base and each ``tails[i]`` covers
    the source of member ``i``, so the composites cover the base
    """
    if len(tails) != len(head.family):
        raise RuleMismatch(path, f"Transitivity needs {len(head.family)} member covers, got {len(tails)}")
    family: List[SiteMorphism] = []
    for member, tail in zip(head.family, tails):
        if member.kind is not MorphismKind.ENTAIL_MONO:
            raise RuleMismatch(path, f"cannot compose through non-mono member {member}")
        if not objects_match(tail.base, morphism_source(member)):
            raise RuleMismatch(path, f"cover of {tail.base} does not match member source {morphism_source(member)}")
        for g in tail.family:
            if g.kind is not MorphismKind.ENTAIL_MONO:
                raise RuleMismatch(path, f"cannot compose with non-mono member {g}")
            family.append(entail_mono(head.base, And(member.extra, g.extra)))
    return CoveringClaim(head.base, tuple(family))


def widens(old: CoveringClaim, new: CoveringClaim) -> bool:
    """Every old member factors through some new member"""
    if not objects_equal(old.base, new.base):
        return False
    if any(m.kind is not MorphismKind.ENTAIL_MONO for m in old.family + new.family):
        return False
    return all(
        any(entails_conjunctively(morphism_source(f).formula, morphism_source(g).formula) for g in new.family)
        for f in old.family
    )


def is_maximal(claim: CoveringClaim) -> bool:
    """
    The family contains a mono isomorphic to the identity of the base: its
    extra formula follows from the base in one step of pure logic
    """
    base = claim.base
    return any(
        m.kind is MorphismKind.ENTAIL_MONO and immediately_entails(base.context, base.formula, m.extra)
        for m in claim.family
    )


# --- sieve proof builders ----------------------------------------------------


def axiom_cover(t: Theory, name: str) -> SieveProof:
    ax = t.axiom(name)
    if ax is None:
        raise UnknownAxiom(name)
    return SieveProof(SieveRule.AXIOM_COVER, (), dualize_statement(t, ax.sequent), axiom=name)


def maximality(claim: CoveringClaim) -> SieveProof:
    return SieveProof(SieveRule.MAXIMALITY, (), claim)


def stability(child: SieveProof, m: SiteMorphism) -> SieveProof:
    return SieveProof(SieveRule.STABILITY, (child,), pullback(child.conclusion, m), morphism=m)


def transitivity(head: SieveProof, tails: Sequence[SieveProof]) -> SieveProof:
    claim = compose_claims(head.conclusion, [q.conclusion for q in tails])
    return SieveProof(SieveRule.TRANSITIVITY, (head, *tails), claim)


def widening(child: SieveProof, claim: CoveringClaim) -> SieveProof:
    return SieveProof(SieveRule.WIDENING, (child,), claim)


def disjunction_cover(base: SiteObject) -> SieveProof:
    """The disjuncts of a disjunctive base cover it"""
    if not isinstance(base.formula, Or):
        raise PreconditionViolated("DisjunctionCover", f"{base} is not a disjunction")
    family = tuple(entail_mono(base, d) for d in base.formula.disjuncts)
    return SieveProof(SieveRule.DISJUNCTION_COVER, (), CoveringClaim(base, family))


def projection(child: SieveProof, v: Variable) -> SieveProof:
    """Descend a cover of ``[x, v | phi]`` along the projection onto ``[x | (exists v) phi]``"""
    claim = child.conclusion
    if not claim.is_dual_statement:
        raise PreconditionViolated("Projection", "child must conclude a single-mono claim")
    base = claim.base
    if v not in base.context:
        raise PreconditionViolated("Projection", f"'{v.name}' is not in {base.context}")
    extra = claim.family[0].extra
    if v in free_vars(extra):
        raise PreconditionViolated("Projection", f"'{v.name}' occurs free in the covering formula")
    target = SiteObject(base.context.remove(v), Exists(v, base.formula))
    return SieveProof(SieveRule.PROJECTION, (child,), CoveringClaim(target, (entail_mono(target, extra),)),
                      variable=v)


# --- checker -----------------------------------------------------------------


def _expect(cond: bool, path: Path, message: str) -> None:
    if not cond:
        raise RuleMismatch(path, message)


def _check_objects(t: Theory, claim: CoveringClaim, path: Path) -> None:
    sig = t.signature
    try:
        wf_formula(sig, claim.base.context, claim.base.formula)
        for m in claim.family:
            wf_formula(sig, m.target.context, m.target.formula)
            if m.kind is MorphismKind.ENTAIL_MONO:
                wf_formula(sig, m.target.context, m.extra)
            else:
                _check_substitution(t, m, path)
    except WellFormednessError as exc:
        raise IllFormedSequent(path, exc.message)
    for m in claim.family:
        _expect(objects_equal(m.target, claim.base), path, f"member {m} does not target {claim.base}")


def _check_substitution(t: Theory, m: SiteMorphism, path: Path) -> None:
    mapping = m.substitution_map()
    if m.source_context is None or set(mapping) != set(m.target.context.variables):
        raise PayloadError(path, "substitution domain differs from the target context")
    for v, term in mapping.items():
        sort = wf_term(t.signature, m.source_context, term)
        if sort != v.sort:
            raise PayloadError(path, f"image of '{v.name}' has sort {sort}, expected {v.sort}")


def _check_axiom_cover(t: Theory, node: SieveProof, path: Path) -> None:
    _expect(not node.children, path, "AxiomCover takes no children")
    if node.axiom is None:
        raise PayloadError(path, "AxiomCover node without an axiom name")
    ax = t.axiom(node.axiom)
    if ax is None:
        raise UnknownAxiom(node.axiom, path)
    _expect(node.conclusion.is_dual_statement, path, "AxiomCover must conclude a single-mono claim")
    renamed = rename_context(ax.sequent, node.conclusion.base.context)
    _expect(
        renamed is not None and sequents_alpha_equal(renamed, claim_sequent(node.conclusion)),
        path,
        f"claim is not the cover of axiom '{node.axiom}'",
    )


def _check_disjunction_cover(node: SieveProof, path: Path) -> None:
    _expect(not node.children, path, "DisjunctionCover takes no children")
    claim = node.conclusion
    f = claim.base.formula
    _expect(isinstance(f, Or), path, "DisjunctionCover needs a disjunctive base")
    assert isinstance(f, Or)
    _expect(len(claim.family) == len(f.disjuncts), path, "one member per disjunct required")
    for m, d in zip(claim.family, f.disjuncts):
        _expect(m.kind is MorphismKind.ENTAIL_MONO and alpha_equal(m.extra, d), path,
                f"member {m} is not the injection of disjunct {d}")


def _check_projection(node: SieveProof, kid: CoveringClaim, path: Path) -> None:
    v = node.variable
    if v is None:
        raise PayloadError(path, "Projection node without a variable")
    _expect(kid.is_dual_statement and node.conclusion.is_dual_statement, path,
            "Projection relates single-mono claims")
    _expect(v in kid.base.context, path, f"'{v.name}' is not in the child's context")
    extra = kid.family[0].extra
    _expect(v not in free_vars(extra), path, "projected variable occurs free in the covering formula")
    target = SiteObject(kid.base.context.remove(v), Exists(v, kid.base.formula))
    _expect(objects_equal(node.conclusion.base, target), path, "base is not the projected object")
    _expect(alpha_equal(node.conclusion.family[0].extra, extra), path, "projection changes the covering formula")


def check_sieve_proof(t: Theory, q: SieveProof) -> CoveringClaim:
    """
    Return ``q.conclusion`` if every node is a correct sieve rule instance

    Raises:
        RuleMismatch: With the path of the first faulty node
        UnknownAxiom: If an AxiomCover names an axiom missing from ``t``
        PullbackError: If a Stability morphism does not land on its child's base
    """
    checked: Dict[int, CoveringClaim] = {}

    def visit(node: SieveProof, path: Path) -> CoveringClaim:
        done = checked.get(id(node))
        if done is not None:
            return done
        _check_objects(t, node.conclusion, path)
        kids = [visit(c, path + (i,)) for i, c in enumerate(node.children)]
        rule = node.rule
        if rule is SieveRule.AXIOM_COVER:
            _check_axiom_cover(t, node, path)
        elif rule is SieveRule.MAXIMALITY:
            _expect(not kids, path, "Maximality takes no children")
            _expect(is_maximal(node.conclusion), path, "family has no identity-shaped member")
        elif rule is SieveRule.STABILITY:
            _expect(len(kids) == 1, path, "Stability takes one child")
            if node.morphism is None:
                raise PayloadError(path, "Stability node without a morphism")
            if node.morphism.kind is MorphismKind.SUBST_MAP:
                try:
                    _check_substitution(t, node.morphism, path)
                except WellFormednessError as exc:
                    raise IllFormedSequent(path, exc.message)
            expected = pullback(kids[0], node.morphism, path)
            _expect(claims_equal(expected, node.conclusion), path, "conclusion is not the pulled-back claim")
        elif rule is SieveRule.TRANSITIVITY:
            _expect(bool(kids), path, "Transitivity needs a base cover")
            expected = compose_claims(kids[0], kids[1:], path)
            _expect(claims_equal(expected, node.conclusion), path, "conclusion is not the composite cover")
        elif rule is SieveRule.WIDENING:
            _expect(len(kids) == 1, path, "Widening takes one child")
            _expect(widens(kids[0], node.conclusion), path, "old family does not factor through the new one")
        elif rule is SieveRule.DISJUNCTION_COVER:
            _check_disjunction_cover(node, path)
        elif rule is SieveRule.PROJECTION:
            _expect(len(kids) == 1, path, "Projection takes one child")
            _check_projection(node, kids[0], path)
        else:
            raise RuleMismatch(path, f"unexpected rule {rule}")
        checked[id(node)] = node.conclusion
        return node.conclusion

    return visit(q, ())


# --- logic -> topology -------------------------------------------------------


def dualize_proof(t: Theory, p: ProofTree) -> SieveProof:
    """
    Sieve proof of the dual of ``p.conclusion``

    Axioms become covers, structural leaves become maximal covers, Cut and
    AndIntro become composition over a pulled-back cover, Subst becomes
    pullback along the context morphism.

    Raises:
        UnsupportedRule: For a node outside the supported fragment
    """
    done: Dict[int, SieveProof] = {}

    def go(node: ProofTree) -> SieveProof:
        got = done.get(id(node))
        if got is None:
            got = _dualize_node(t, node, [go(c) for c in node.premises] if node.rule in DUAL_FRAGMENT else [])
            done[id(node)] = got
        return got

    return go(p)


def _dualize_node(t: Theory, node: ProofTree, kids: List[SieveProof]) -> SieveProof:
    rule = node.rule
    if rule not in DUAL_FRAGMENT:
        raise UnsupportedRule(rule.value)
    claim = dualize_statement(t, node.conclusion)
    if rule is RuleTag.AXIOM:
        return SieveProof(SieveRule.AXIOM_COVER, (), claim, axiom=node.payload.axiom)
    if rule in _MAXIMAL_LEAVES:
        return maximality(claim)
    if rule is RuleTag.SUBST:
        (child,) = kids
        m = subst_map(child.conclusion.base, node.payload.substitution, node.conclusion.context)
        return stability(child, m)
    first, second = kids
    # pull the second cover back to the first cover's member source
    left = node.premises[0].conclusion
    shifted_by = left.premise if rule is RuleTag.CUT else left.conclusion
    shifted = stability(second, entail_mono(second.conclusion.base, shifted_by))
    composite = transitivity(first, [shifted])
    if rule is RuleTag.AND_INTRO:
        return composite
    return widening(composite, claim)


def sieve_size(q: SieveProof) -> int:
    return 1 + sum(sieve_size(c) for c in q.children)


def sieve_depth(q: SieveProof) -> int:
    return 1 + max((sieve_depth(c) for c in q.children), default=0)


def sieve_rule_counts(q: SieveProof) -> Counter[str]:
    counts: Counter[str] = Counter()
    for _, node in q.walk():
        counts[node.rule.value] += 1
    return counts


# --- topology -> logic -------------------------------------------------------


def compile_proof(t: Theory, q: SieveProof) -> ProofTree:
    """
    Kernel proof of the sequent whose dual ``q`` concludes

    Raises:
        NotADualStatement: If the root claim is not a single-mono cover
        CompileFailed: If an inner claim has no sequent reading or a kernel
            step cannot be built
    """
    claim_sequent(q.conclusion)
    done: Dict[int, ProofTree] = {}

    def go(node: SieveProof, path: Path) -> ProofTree:
        got = done.get(id(node))
        if got is None:
            if not node.conclusion.is_dual_statement:
                raise CompileFailed(path, f"{node.rule.value} concludes a claim that is not a dual statement")
            if _is_case_split(node):
                # Widening(Transitivity(DisjunctionCover, cases)) reads as one or-elimination
                split = node.children[0]
                kids = [go(c, path + (0, i)) for i, c in enumerate(split.children) if i > 0]
                compile_step = _compile_case_split
            else:
                kids = [go(c, path + (i,)) for i, c in enumerate(node.children)]
                compile_step = _compile_node
            try:
                got = compile_step(t, node, kids)
            except (PreconditionViolated, NotADualStatement) as exc:
                raise CompileFailed(path, exc.message) from exc
            done[id(node)] = got
        return got

    return go(q, ())


def _is_case_split(node: SieveProof) -> bool:
    if node.rule is not SieveRule.WIDENING or len(node.children) != 1:
        return False
    split = node.children[0]
    return (split.rule is SieveRule.TRANSITIVITY and bool(split.children)
            and split.children[0].rule is SieveRule.DISJUNCTION_COVER)


def _compile_case_split(t: Theory, node: SieveProof, cases: List[ProofTree]) -> ProofTree:
    s = claim_sequent(node.conclusion)
    ctx = s.context
    whole = node.children[0].children[0].conclusion.base.formula
    if not isinstance(whole, Or) or len(whole.disjuncts) != len(cases):
        raise PreconditionViolated("DisjunctionCover", "expected one case per disjunct")
    branches: List[ProofTree] = []
    for i, (d, case) in enumerate(zip(whole.disjuncts, cases)):
        local = case.conclusion
        seeded = and_intro(identity(ctx, d), or_intro(ctx, whole.disjuncts, i))
        into = cut(seeded, prove_conjunctive(ctx, And(d, whole), local.premise))
        gathered = and_intro(into, cut(into, case))
        branches.append(cut(gathered, prove_conjunctive(ctx, And(local.premise, local.conclusion), s.conclusion)))
    return or_elim(branches, ctx, s.conclusion)


def _compile_node(t: Theory, node: SieveProof, kids: List[ProofTree]) -> ProofTree:
    s = claim_sequent(node.conclusion)
    ctx = s.context
    rule = node.rule
    if rule is SieveRule.AXIOM_COVER:
        return axiom_instance(t, node.axiom, context=ctx)
    if rule is SieveRule.MAXIMALITY:
        return prove_immediate(ctx, s.premise, s.conclusion)
    if rule is SieveRule.PROJECTION:
        (child,) = kids
        return exists_adj_fwd(child, node.variable)
    if rule is SieveRule.DISJUNCTION_COVER:
        assert isinstance(s.premise, Or)
        return or_elim([identity(ctx, d) for d in s.premise.disjuncts], ctx, s.conclusion)
    if rule is SieveRule.STABILITY:
        (child,) = kids
        m = node.morphism
        if m.kind is MorphismKind.SUBST_MAP:
            return subst(child, m.substitution_map(), m.source_context)
        base = m.target.formula
        return cut(and_elim_l(ctx, base, m.extra), child)
    if rule is SieveRule.TRANSITIVITY:
        if len(kids) != 2:
            raise PreconditionViolated("Transitivity", "expected a base cover and one member cover")
        head, tail = kids
        first = head.conclusion
        widened = And(first.premise, first.conclusion)
        bridge = cut(and_intro(identity(ctx, first.premise), head),
                     prove_conjunctive(ctx, widened, tail.conclusion.premise))
        return and_intro(head, cut(bridge, tail))
    if rule is SieveRule.WIDENING:
        (child,) = kids
        old = child.conclusion
        widened = And(old.premise, old.conclusion)
        return cut(and_intro(identity(ctx, old.premise), child), prove_conjunctive(ctx, widened, s.conclusion))
    raise PreconditionViolated(rule.value, "unknown sieve rule")


# --- map / predict / compile -------------------------------------------------


def solve_via_dual(theory: Theory, problem: Problem,
                   limits: Optional[EngineLimits] = None) -> Optional[DualSolution]:
    """
    Prove a problem on the topological side and lower the result

    The goal is mapped to its covering claim, a sieve proof is produced by
    dualizing the engine's proof (the engine stands in for a learned
    predictor), checked, and compiled back to a kernel-checked proof.
    Returns None when the engine cannot derive the goal.
    """
    t = Theory(theory.id, problem.theory.signature, theory.axioms)
    bound = Problem(t, problem.premises, problem.goal, problem.goal_context, problem.points)
    claim = dualize_statement(t, bound.sequent)
    found = prove_problem(bound, limits)
    if found is None:
        logger.info("dual_solve_open", theory=t.id, goal=str(problem.goal))
        return None
    q = dualize_proof(t, found)
    check_sieve_proof(t, q)
    if not claims_equal(q.conclusion, claim):
        raise CompileFailed((), "sieve proof concludes a different claim than the goal")
    compiled = compile_proof(t, q)
    check_proof(t, compiled)
    logger.info("dual_solve_complete", theory=t.id, goal=str(problem.goal), sieve_size=sieve_size(q))
    return DualSolution(claim, q, compiled)
