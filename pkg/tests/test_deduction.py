"""
Tests for the forward-chaining deduction engine
"""

from typing import Tuple

import numpy as np
import pytest

from app.core.exceptions import LimitExceeded, PreconditionViolated, TargetAbsent
from app.dsl import parse_problem, parse_theory
from app.models.deduction import PREMISE, EngineLimits
from app.models.logic import BOTTOM, App, Context, Eq, Rel, Sequent
from app.services.deduction import (
    derivable,
    elaborate,
    horn_partition,
    is_inconsistent,
    naive_saturate,
    prove_problem,
    saturate,
    saturate_problem,
    traceback,
)
from app.services.kernel import check_proof

COLOURS = """theory colours.
sort V.
rel E(V, V).
rel Red(V).
rel Blue(V).
axiom sym: E(x, y) |- E(y, x).
axiom prop: E(x, y) & Red(x) |- Blue(y).
axiom clash: Red(x) & Blue(x) |- false.
"""

CLASH_PROBLEM = """theory colours.
points a b.
assume E(a, b), Red(a), Red(b).
goal E(a, a) & Red(a).
"""

NOT_HORN = r"""theory wild.
sort V.
fn f : V -> V.
rel E(V, V).
axiom sym: E(x, y) |- E(y, x).
axiom either [x:V, y:V]: E(x, y) |- \/[E(x, x), E(y, y)].
axiom serial [x:V]: true |- exists y:V. E(x, y).
axiom grow: E(x, y) |- E(x, f(y)).
"""

EQUALITY = """theory eqs.
sort V.
rel P(V).
"""


def const(problem, name):
    return App(problem.theory.signature.function(name))


def edge_fact(problem, left, right):
    rel = problem.theory.signature.relation("E")
    return Rel(rel, (const(problem, left), const(problem, right)))


@pytest.fixture
def chain_closure(chain_problem):
    return saturate_problem(chain_problem)


@pytest.fixture
def clash_problem():
    return parse_problem(CLASH_PROBLEM, parse_theory(COLOURS))


class TestHornPartition:
    """Test splitting axioms into rules and rejections"""

    def test_all_horn(self, euclidean):
        """Test every Euclidean starter axiom is Horn"""
        rules, rejected = horn_partition(euclidean)
        assert len(rules) == len(euclidean.axioms)
        assert rejected == []
        assert [r.name for r in rules if r.is_constraint] == ["apart_irrefl", "nB_compat"]

    def test_rejections_with_reasons(self):
        """Test disjunction, existentials and invented terms are refused"""
        rules, rejected = horn_partition(parse_theory(NOT_HORN))
        assert [r.name for r in rules] == ["sym"]
        reasons = {r.name: r.reason for r in rejected}
        assert set(reasons) == {"either", "serial", "grow"}
        assert "invents" in reasons["grow"]


class TestSaturation:
    """Test deductive closure"""

    def test_chain_closure(self, chain_problem, chain_closure):
        """Test symmetric transitive closure of a path of three points"""
        assert len(chain_closure) == 9
        assert len(chain_closure.derived()) == 7
        assert edge_fact(chain_problem, "a", "c") in chain_closure
        assert edge_fact(chain_problem, "c", "c") in chain_closure
        assert not chain_closure.inconsistent

    def test_provenance(self, chain_problem, chain_closure):
        """Test premises and derived facts record how they entered"""
        ab = edge_fact(chain_problem, "a", "b")
        ac = edge_fact(chain_problem, "a", "c")
        assert chain_closure.why(ab).rule == PREMISE
        prov = chain_closure.why(ac)
        assert prov.rule == "trans"
        assert prov.parents == (ab, edge_fact(chain_problem, "b", "c"))
        assert prov.round == 1

    def test_naive_agrees(self, chain_problem):
        """Test semi-naive and naive closures coincide"""
        rules, _ = horn_partition(chain_problem.theory)
        sig = chain_problem.theory.signature
        fast = saturate(rules, chain_problem.premises, signature=sig)
        slow = naive_saturate(rules, chain_problem.premises, signature=sig)
        assert fast.facts() == slow.facts()
        assert fast.evaluations <= slow.evaluations

    def test_no_premises(self, chain_problem):
        """Test an empty premise set has an empty closure"""
        rules, _ = horn_partition(chain_problem.theory)
        assert len(saturate(rules, [], signature=chain_problem.theory.signature)) == 0

    def test_fact_limit(self, chain_problem):
        """Test the fact budget carries the partial closure"""
        with pytest.raises(LimitExceeded) as exc:
            saturate_problem(chain_problem, EngineLimits(max_facts=3))
        assert exc.value.kind == "facts"
        assert len(exc.value.partial) > 3

    def test_round_limit(self, chain_problem):
        """Test the round budget"""
        with pytest.raises(LimitExceeded) as exc:
            saturate_problem(chain_problem, EngineLimits(max_rounds=1))
        assert exc.value.kind == "rounds"

    def test_non_ground_premise(self, chain_problem, sym_sequent):
        """Test saturation refuses open premises"""
        rules, _ = horn_partition(chain_problem.theory)
        with pytest.raises(PreconditionViolated):
            saturate(rules, [sym_sequent.premise])

    def test_inconsistency(self, clash_problem):
        """Test a constraint firing adds false"""
        fb = saturate_problem(clash_problem)
        assert is_inconsistent(fb)
        assert fb.why(BOTTOM).rule == "clash"

    def test_equality_rewriting(self):
        """Test equations rewrite atoms and are symmetric"""
        p = parse_problem("points a b.\nassume a = b, P(a).\ngoal P(b) & b = a.\n", parse_theory(EQUALITY))
        fb = saturate_problem(p)
        a, b = const(p, "a"), const(p, "b")
        assert Eq(b, a) in fb
        assert Rel(p.theory.signature.relation("P"), (b,)) in fb


class TestTraceback:
    """Test dependency subgraphs"""

    def test_leaves_are_minimal(self, chain_problem, chain_closure):
        """Test a loop needs only one edge"""
        aa = edge_fact(chain_problem, "a", "a")
        g = traceback(chain_closure, aa)
        assert g.leaves == (edge_fact(chain_problem, "a", "b"),)
        assert g.nodes[-1] == aa
        assert set(g.rule_names()) <= {"sym", "trans"}

    def test_both_premises_needed(self, chain_problem, chain_closure):
        """Test the end-to-end edge needs the whole path"""
        g = traceback(chain_closure, edge_fact(chain_problem, "a", "c"))
        assert g.leaves == chain_problem.premises
        for leaf in g.leaves:
            rest = [p for p in g.leaves if p != leaf]
            assert not derivable(chain_closure, rest, g.target)

    def test_absent_target(self, graph_sym):
        """Test tracing a fact outside the closure"""
        p = parse_problem("points a b.\nassume E(a, b).\ngoal E(a, a).\n", graph_sym)
        fb = saturate_problem(p)
        with pytest.raises(TargetAbsent):
            traceback(fb, edge_fact(p, "a", "a"))

    def test_elaborated_proof_checks(self, chain_problem, chain_closure):
        """Test elaboration yields a kernel proof of leaves |- target"""
        target = edge_fact(chain_problem, "c", "a")
        g = traceback(chain_closure, target)
        proof = elaborate(chain_problem.theory, g)
        assert check_proof(chain_problem.theory, proof) == Sequent(Context(), g.premise, target)


class TestProveProblem:
    """Test end-to-end proving of problems"""

    def test_chain(self, chain_problem):
        """Test the transitive goal is proved and checks"""
        proof = prove_problem(chain_problem)
        assert proof is not None
        assert check_proof(chain_problem.theory, proof) == chain_problem.sequent

    def test_unprovable(self, graph_sym):
        """Test symmetry alone cannot join the path"""
        src = "points a b c.\nassume E(a, b), E(b, c).\ngoal E(a, c).\n"
        assert prove_problem(parse_problem(src, graph_sym)) is None

    def test_inconsistent_premises_prove_anything(self, clash_problem):
        """Test goals outside the closure are proved through false"""
        proof = prove_problem(clash_problem)
        assert proof is not None
        assert check_proof(clash_problem.theory, proof) == clash_problem.sequent
        assert "Falsum" in {node.rule.value for _, node in proof.walk()}

    def test_equality_goal(self):
        """Test rewriting and symmetry steps elaborate to kernel proofs"""
        p = parse_problem("points a b.\nassume a = b, P(a).\ngoal P(b) & b = a.\n", parse_theory(EQUALITY))
        proof = prove_problem(p)
        assert proof is not None
        assert check_proof(p.theory, proof) == p.sequent

    def test_open_goal_refused(self, graph_sym):
        """Test goals with free variables"""
        p = parse_problem("points a.\nassume E(a, a).\ngoal E(a, x).\n", graph_sym)
        with pytest.raises(PreconditionViolated):
            prove_problem(p)


HORN_RELATIONS = (("P", 1), ("Q", 1), ("E", 2), ("F", 2))


def random_horn_instance(rng: np.random.Generator) -> Tuple[str, str]:
    """
    Theory and problem text for a random Horn instance

    Up to four constants, two to six rules with bodies of at most three
    atoms. The first two rules generalise a premise so the closure usually
    grows.
    """
    constants = [f"c{i}" for i in range(rng.integers(2, 5))]

    def atom(names) -> str:
        rel, arity = HORN_RELATIONS[rng.integers(len(HORN_RELATIONS))]
        return f"{rel}({', '.join(names[rng.integers(len(names))] for _ in range(arity))})"

    premises = list(dict.fromkeys(atom(constants) for _ in range(rng.integers(4, 9))))
    rules = []
    for k in range(rng.integers(2, 7)):
        if k < 2:
            seed = premises[rng.integers(len(premises))]
            rel, args = seed[:-1].split("(")
            renaming = {}
            for c in args.split(", "):
                renaming.setdefault(c, "xyz"[len(renaming)])
            body = [f"{rel}({', '.join(renaming[c] for c in args.split(', '))})"]
            names = list(renaming.values())
        else:
            body = [atom(list("xyz")) for _ in range(rng.integers(1, 4))]
            names = sorted({v for b in body for v in "xyz" if v in b[1:]})
        rules.append(f"axiom r{k}: {' & '.join(body)} |- {atom(names)}.")
    theory = "\n".join(
        ["theory horn.", "sort V.", *(f"rel {r}({', '.join(['V'] * n)})." for r, n in HORN_RELATIONS), *rules]
    )
    problem = "\n".join([
        "theory horn.",
        f"points {' '.join(constants)}.",
        f"assume {', '.join(premises)}.",
        f"goal {premises[0]}.",
    ])
    return theory + "\n", problem + "\n"


@pytest.fixture(scope="module")
def horn_runs():
    runs = []
    for seed in range(120):
        theory_text, problem_text = random_horn_instance(np.random.default_rng(seed))
        problem = parse_problem(problem_text, parse_theory(theory_text))
        rules, rejected = horn_partition(problem.theory)
        assert rejected == []
        sig = problem.theory.signature
        runs.append((
            saturate(rules, problem.premises, signature=sig),
            naive_saturate(rules, problem.premises, signature=sig),
        ))
    return runs


@pytest.mark.slow
class TestRandomHornInstances:
    """Test semi-naive saturation against the naive reference on random rule sets"""

    def test_closures_equal(self, horn_runs):
        """Test both strategies reach the same fact set"""
        assert len(horn_runs) >= 100
        for fast, slow in horn_runs:
            assert fast.facts() == slow.facts()
            assert fast.rounds == slow.rounds

    def test_fewer_evaluations(self, horn_runs):
        """Test semi-naive never evaluates more and is strictly cheaper on most instances"""
        assert all(fast.evaluations <= slow.evaluations for fast, slow in horn_runs)
        cheaper = sum(fast.evaluations < slow.evaluations for fast, slow in horn_runs)
        assert cheaper >= 0.9 * len(horn_runs)

    def test_instance_shape(self):
        """Test generated instances stay within the advertised bounds"""
        for seed in range(20):
            theory_text, problem_text = random_horn_instance(np.random.default_rng(seed))
            theory = parse_theory(theory_text)
            problem = parse_problem(problem_text, theory)
            assert 2 <= len(theory.axioms) <= 6
            assert len(problem.points) <= 4
            rules, _ = horn_partition(theory)
            assert all(len(r.body) <= 3 for r in rules)
