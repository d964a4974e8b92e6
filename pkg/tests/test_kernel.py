"""
Tests for the sequent-calculus proof kernel
"""

from dataclasses import replace

import numpy as np
import pytest

from app.core.exceptions import (
    IllFormedSequent,
    NameCollision,
    PayloadError,
    PreconditionViolated,
    ProofCheckError,
    RuleMismatch,
    UnknownAxiom,
)
from app.models.logic import (
    TOP,
    And,
    Context,
    Eq,
    Exists,
    Or,
    Rel,
    RelationSymbol,
    Sequent,
    Var,
    Variable,
)
from app.models.proof import ProofTree, RulePayload, RuleTag
from app.services.kernel import (
    and_elim_l,
    and_elim_r,
    and_intro,
    axiom_instance,
    check_proof,
    cut,
    distributivity,
    eq_refl,
    eq_subst,
    exists_adj_bwd,
    exists_adj_fwd,
    exists_intro,
    frobenius,
    identity,
    immediately_entails,
    or_elim,
    or_intro,
    promote_lemma,
    proof_depth,
    proof_size,
    prove_conjunctive,
    prove_immediate,
    rule_counts,
    subst,
    truth,
)
from tests.conftest import random_atom, random_proofs


@pytest.fixture
def sym_ctx(graph_sym):
    return graph_sym.axiom("sym").sequent.context


@pytest.fixture
def atoms(sym_ctx, edge):
    x, y = sym_ctx.variables
    return Rel(edge, (Var(x), Var(y))), Rel(edge, (Var(y), Var(x)))


@pytest.fixture
def double_sym(graph_sym, sym_ctx):
    """E(x,y) |- E(x,y) through symmetry twice"""
    x, y = sym_ctx.variables
    swapped = subst(axiom_instance(graph_sym, "sym"), {x: Var(y), y: Var(x)}, sym_ctx)
    return cut(axiom_instance(graph_sym, "sym"), swapped)


class TestRuleConstructors:
    """Test rule constructors compute the right conclusions"""

    def test_identity_accepted(self, graph_sym, sym_ctx, atoms):
        """Test identity node is a valid proof"""
        p = identity(sym_ctx, atoms[0])
        assert check_proof(graph_sym, p) == Sequent(sym_ctx, atoms[0], atoms[0])

    def test_and_elim_left(self, sym_ctx, atoms):
        """Test left projection of a conjunction"""
        exy, eyx = atoms
        p = and_elim_l(sym_ctx, exy, eyx)
        assert p.conclusion == Sequent(sym_ctx, And(exy, eyx), exy)

    def test_eq_refl(self, graph_sym, sym_ctx):
        """Test reflexivity concludes x = x from true"""
        x = sym_ctx.variables[0]
        p = eq_refl(sym_ctx, x)
        assert p.conclusion == Sequent(sym_ctx, TOP, Eq(Var(x), Var(x)))
        check_proof(graph_sym, p)

    def test_eq_refl_outside_context(self, sym_ctx, vertex):
        """Test reflexivity needs a context variable"""
        with pytest.raises(PreconditionViolated):
            eq_refl(sym_ctx, Variable("z", vertex))

    def test_eq_subst(self, graph_sym, sym_ctx, atoms):
        """Test equality substitution replaces v by w"""
        x, y = sym_ctx.variables
        p = eq_subst(sym_ctx, x, y, atoms[0])
        assert check_proof(graph_sym, p).conclusion == Rel(atoms[0].rel, (Var(y), Var(y)))

    def test_exists_bwd_rejects_free_variable(self, sym_ctx, atoms):
        """Test the opened variable must not occur in the conclusion"""
        x, y = sym_ctx.variables
        loop = Rel(atoms[0].rel, (Var(y), Var(y)))
        p = ProofTree(RuleTag.IDENTITY, (), Sequent(Context((x,)), Exists(y, loop), loop))
        with pytest.raises(PreconditionViolated):
            exists_adj_bwd(p, y)

    def test_exists_round_trip(self, graph_sym, sym_ctx, vertex):
        """Test opening then closing an existential premise"""
        x = sym_ctx.variables[0]
        z = Variable("z", vertex)
        ctx_x = Context((x,))
        edge = graph_sym.signature.relation("E")
        closed = truth(ctx_x, Exists(z, Rel(edge, (Var(x), Var(z)))))
        opened = exists_adj_bwd(closed, z)
        again = exists_adj_fwd(opened, z)
        check_proof(graph_sym, again)
        assert again.conclusion.context == ctx_x

    def test_exists_bwd_variable_already_bound(self, graph_sym, sym_ctx, vertex):
        """Test an ExistsBwd payload naming a variable the premise context already has"""
        x = sym_ctx.variables[0]
        z = Variable("z", vertex)
        edge = graph_sym.signature.relation("E")
        closed = truth(Context((x,)), Exists(z, Rel(edge, (Var(x), Var(z)))))
        again = exists_adj_fwd(exists_adj_bwd(closed, z), z)
        tampered = replace(again.premises[0], payload=RulePayload(variable=x))
        with pytest.raises(RuleMismatch) as exc:
            check_proof(graph_sym, replace(again, premises=(tampered,)))
        assert exc.value.path == (0,)

    def test_cut_requires_matching_middle(self, sym_ctx, atoms):
        """Test cut refuses mismatched formulas"""
        exy, eyx = atoms
        with pytest.raises(PreconditionViolated):
            cut(identity(sym_ctx, exy), identity(sym_ctx, eyx))

    def test_or_rules(self, graph_sym, sym_ctx, atoms):
        """Test or-introduction and case analysis"""
        exy, eyx = atoms
        cases = [or_intro(sym_ctx, [exy, eyx], 0), cut(identity(sym_ctx, eyx), or_intro(sym_ctx, [exy, eyx], 1))]
        p = or_elim(cases)
        assert check_proof(graph_sym, p) == Sequent(sym_ctx, Or((exy, eyx)), Or((exy, eyx)))

    def test_or_intro_index_range(self, sym_ctx, atoms):
        """Test the disjunct index is bounded"""
        with pytest.raises(PreconditionViolated):
            or_intro(sym_ctx, list(atoms), 2)

    def test_frobenius_and_distributivity(self, graph_sym, sym_ctx, atoms, vertex):
        """Test the two distributive laws are accepted as leaves"""
        exy, eyx = atoms
        z = Variable("z", vertex)
        x = sym_ctx.variables[0]
        body = Rel(exy.rel, (Var(x), Var(z)))
        check_proof(graph_sym, frobenius(sym_ctx, exy, z, body))
        check_proof(graph_sym, distributivity(sym_ctx, exy, [exy, eyx]))

    def test_frobenius_binder_free_on_left(self, sym_ctx, atoms):
        """Test the binder may not occur in the left conjunct"""
        x = sym_ctx.variables[0]
        with pytest.raises(PreconditionViolated):
            frobenius(sym_ctx, atoms[0], x, atoms[1])


class TestCheckProof:
    """Test the proof checker"""

    def test_symmetry_twice(self, graph_sym, sym_ctx, atoms, double_sym):
        """Test cut of an axiom and its swapped instance"""
        assert check_proof(graph_sym, double_sym) == Sequent(sym_ctx, atoms[0], atoms[0])

    def test_wrong_axiom_conclusion(self, graph_sym, vertex, atoms):
        """Test an axiom node with a conclusion that is not an instance"""
        x, y, z = (Variable(n, vertex) for n in "xyz")
        edge = atoms[0].rel
        bogus = Sequent(Context((x, y, z)), Rel(edge, (Var(x), Var(y))), Rel(edge, (Var(x), Var(z))))
        node = ProofTree(RuleTag.AXIOM, (), bogus, RulePayload(axiom="sym"))
        with pytest.raises(RuleMismatch):
            check_proof(graph_sym, node)

    def test_unknown_axiom(self, graph_sym, sym_ctx, atoms):
        """Test an axiom leaf naming a missing axiom"""
        node = ProofTree(RuleTag.AXIOM, (), Sequent(sym_ctx, atoms[0], atoms[1]), RulePayload(axiom="trans"))
        with pytest.raises(UnknownAxiom) as exc:
            check_proof(graph_sym, node)
        assert exc.value.name == "trans"

    def test_axiom_up_to_renaming(self, graph_sym, vertex):
        """Test axiom leaves may rename the axiom context"""
        ctx = Context((Variable("u", vertex), Variable("w", vertex)))
        p = axiom_instance(graph_sym, "sym", context=ctx)
        assert check_proof(graph_sym, p).context == ctx

    def test_corrupted_inner_node_reports_path(self, graph_sym, sym_ctx, atoms, double_sym):
        """Test a tampered subproof is located by its path"""
        swapped = double_sym.premises[1]
        tampered = replace(swapped, conclusion=Sequent(sym_ctx, atoms[0], atoms[0]))
        broken = ProofTree(RuleTag.CUT, (double_sym.premises[0], tampered), double_sym.conclusion)
        with pytest.raises(RuleMismatch) as exc:
            check_proof(graph_sym, broken)
        assert exc.value.path == (1,)

    def test_ill_formed_sequent(self, graph_sym, sym_ctx):
        """Test a node mentioning an undeclared relation"""
        x = sym_ctx.variables[0]
        f = Rel(RelationSymbol("Q", (x.sort,)), (Var(x),))
        with pytest.raises(IllFormedSequent):
            check_proof(graph_sym, identity(sym_ctx, f))

    def test_subst_payload_domain(self, graph_sym, sym_ctx, double_sym):
        """Test a substitution missing a context variable"""
        node = double_sym.premises[1]
        x = sym_ctx.variables[0]
        bad = replace(node, payload=RulePayload(substitution=((x, Var(x)),)))
        with pytest.raises(PayloadError):
            check_proof(graph_sym, bad)

    def test_structural_rule_mismatch(self, graph_sym, sym_ctx, atoms):
        """Test an and-intro whose conclusion is not the pairing"""
        exy, eyx = atoms
        good = and_intro(identity(sym_ctx, exy), cut(identity(sym_ctx, exy), axiom_instance(graph_sym, "sym")))
        check_proof(graph_sym, good)
        bad = replace(good, conclusion=Sequent(sym_ctx, exy, And(eyx, exy)))
        with pytest.raises(RuleMismatch):
            check_proof(graph_sym, bad)


class TestDerivedConstructions:
    """Test conjunctive entailment proofs and lemma promotion"""

    def test_prove_conjunctive_reorders(self, graph_sym, sym_ctx, atoms):
        """Test reordering the conjuncts of a premise"""
        exy, eyx = atoms
        p = prove_conjunctive(sym_ctx, And(exy, eyx), And(eyx, And(exy, TOP)))
        check_proof(graph_sym, p)

    def test_prove_conjunctive_refuses(self, sym_ctx, atoms):
        """Test a conclusion that is not among the conjuncts"""
        with pytest.raises(PreconditionViolated):
            prove_conjunctive(sym_ctx, atoms[0], atoms[1])

    def test_prove_immediate_or_intro(self, graph_sym, sym_ctx, atoms):
        """Test a disjunct of the goal reached from a conjunct of the premise"""
        exy, eyx = atoms
        p = prove_immediate(sym_ctx, And(exy, eyx), Or((eyx, exy)))
        assert check_proof(graph_sym, p) == Sequent(sym_ctx, And(exy, eyx), Or((eyx, exy)))
        assert rule_counts(p)["OrIntro"] == 1

    def test_prove_immediate_equality(self, graph_sym, sym_ctx, atoms):
        """Test reflexivity and substitution of equals as single steps"""
        x, y = sym_ctx.variables
        exy, _ = atoms
        edge = exy.rel
        refl = prove_immediate(sym_ctx, exy, Eq(Var(x), Var(x)))
        assert check_proof(graph_sym, refl).conclusion == Eq(Var(x), Var(x))
        assert rule_counts(refl)["EqRefl"] == 1
        rewritten = prove_immediate(sym_ctx, And(Eq(Var(x), Var(y)), exy), Rel(edge, (Var(y), Var(y))))
        assert check_proof(graph_sym, rewritten).conclusion == Rel(edge, (Var(y), Var(y)))
        assert rule_counts(rewritten)["EqSubst"] == 1

    def test_exists_intro(self, graph_sym, sym_ctx, atoms, vertex):
        """Test a witness from the context introduces an existential"""
        x, y = sym_ctx.variables
        exy, _ = atoms
        z = Variable("z", vertex)
        target = Exists(z, Rel(exy.rel, (Var(x), Var(z))))
        p = exists_intro(sym_ctx, target, y)
        assert check_proof(graph_sym, p) == Sequent(sym_ctx, exy, target)
        assert rule_counts(p)["ExistsBwd"] == 1

    def test_exists_intro_repeated_witness(self, graph_sym, sym_ctx, vertex):
        """Test a witness that already occurs free in the existential"""
        x, _ = sym_ctx.variables
        edge = graph_sym.signature.relation("E")
        z = Variable("z", vertex)
        target = Exists(z, Rel(edge, (Var(z), Var(x))))
        p = exists_intro(sym_ctx, target, x)
        assert check_proof(graph_sym, p).premise == Rel(edge, (Var(x), Var(x)))

    def test_prove_immediate_refuses(self, sym_ctx, atoms):
        """Test symmetry is not a logical step"""
        exy, eyx = atoms
        assert not immediately_entails(sym_ctx, exy, eyx)
        with pytest.raises(PreconditionViolated):
            prove_immediate(sym_ctx, exy, eyx)

    def test_promote_lemma(self, graph_sym, double_sym):
        """Test a checked proof becomes a named axiom"""
        extended = promote_lemma(graph_sym, "sym2", double_sym)
        assert extended.axiom_names == ("sym", "sym2")
        check_proof(extended, axiom_instance(extended, "sym2"))

    def test_promote_lemma_collision(self, graph_sym, double_sym):
        """Test promoting under an existing axiom name"""
        with pytest.raises(NameCollision):
            promote_lemma(graph_sym, "sym", double_sym)


class TestMetrics:
    """Test size, depth and rule counts"""

    def test_single_node(self, sym_ctx, atoms):
        """Test identity has size and depth one"""
        p = identity(sym_ctx, atoms[0])
        assert proof_size(p) == 1
        assert proof_depth(p) == 1

    def test_cut_of_axioms(self, graph_sym):
        """Test cut of two axiom leaves has three nodes"""
        sym = axiom_instance(graph_sym, "sym")
        p = ProofTree(RuleTag.CUT, (sym, sym), sym.conclusion)
        assert proof_size(p) == 3
        assert proof_depth(p) == 2

    def test_balanced_tree_depth(self, sym_ctx, atoms):
        """Test seven-node balanced tree"""
        exy, eyx = atoms
        leaf = identity(sym_ctx, exy)
        pair = and_intro(leaf, leaf)
        p = and_intro(pair, and_intro(leaf, leaf))
        assert proof_size(p) == 7
        assert proof_depth(p) == 3

    def test_rule_counts(self, double_sym):
        """Test rule usage counts"""
        counts = rule_counts(double_sym)
        assert counts["Axiom"] == 2
        assert counts["Cut"] == 1
        assert counts["Subst"] == 1

    def test_and_elim_right(self, graph_sym, sym_ctx, atoms):
        """Test right projection checks"""
        exy, eyx = atoms
        assert check_proof(graph_sym, and_elim_r(sym_ctx, exy, eyx)).conclusion == eyx


def _paths(p: ProofTree, limit: int = 200):
    """Paths of ``p`` in preorder, at most ``limit`` of them"""
    found = []
    stack = [((), p)]
    while stack and len(found) < limit:
        path, node = stack.pop()
        found.append((path, node))
        stack.extend((path + (i,), c) for i, c in reversed(list(enumerate(node.premises))))
    return found


def _replace_at(p: ProofTree, path, node: ProofTree) -> ProofTree:
    if not path:
        return node
    premises = list(p.premises)
    premises[path[0]] = _replace_at(premises[path[0]], path[1:], node)
    return replace(p, premises=tuple(premises))


@pytest.mark.slow
class TestMutationLocality:
    """Test a damaged node is reported where the damage is"""

    def test_corrupted_conclusion_reported_locally(self, graph_sym_trans):
        """Test weakening one node's conclusion fails at that node or, for falsum, at its parent"""
        rng = np.random.default_rng(97)
        proofs = random_proofs(graph_sym_trans, rng, 600)
        edge = graph_sym_trans.signature.relation("E")
        mutated = 0
        for p in proofs:
            check_proof(graph_sym_trans, p)
            paths = _paths(p)
            path, node = paths[rng.integers(len(paths))]
            s = node.conclusion
            extra = random_atom(rng, (edge,), s.context) if s.context.variables else TOP
            damaged = replace(node, conclusion=replace(s, conclusion=And(s.conclusion, extra)))
            if node.rule is RuleTag.FALSUM and not path:
                check_proof(graph_sym_trans, damaged)
                continue
            with pytest.raises(ProofCheckError) as exc:
                check_proof(graph_sym_trans, _replace_at(p, path, damaged))
            expected = path[:-1] if node.rule is RuleTag.FALSUM else path
            assert exc.value.path == expected, f"{node.rule.value} at {path}"
            mutated += 1
        assert mutated >= 500
