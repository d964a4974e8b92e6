"""
Deduction Engine

Forward chaining over the Horn fragment of an observable theory: deductive
closure with provenance, inconsistency detection, minimal dependency
subgraphs and their elaboration into kernel proofs.

Saturation is semi-naive: each round only joins rule bodies against at
least one fact derived in the previous round. ``naive_saturate`` recomputes
every instance each round and serves as the reference implementation.
Equality is closed by symmetry, single-position rewriting inside the term
universe of the problem, and congruence of function applications.
"""

from __future__ import annotations

import itertools
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from app.core.exceptions import (
    ElaborationFailed,
    LimitExceeded,
    PreconditionViolated,
    TargetAbsent,
)
from app.core.logger import get_logger
from app.models.deduction import (
    EQ_CONG,
    EQ_SUBST,
    EQ_SYMM,
    PREMISE_PROVENANCE,
    DependencySubgraph,
    EngineLimits,
    Fact,
    FactBase,
    HornRule,
    Position,
    Provenance,
    Rejection,
)
from app.models.logic import (
    BOTTOM,
    And,
    App,
    Atom,
    Bottom,
    Context,
    Eq,
    Formula,
    Problem,
    Rel,
    Signature,
    Sort,
    Term,
    Theory,
    Top,
    Var,
    Variable,
    conj,
    is_atomic,
)
from app.models.proof import ProofTree
from app.services.kernel import (
    and_intro,
    axiom_instance,
    cut,
    eq_refl,
    eq_subst,
    falsum,
    prove_conjunctive,
    subst,
    truth,
)
from app.services.logic import (
    alpha_equal,
    atom_terms,
    conjuncts,
    is_ground,
    substitute_term,
    subterms,
    term_sort,
)
from app.utils.union_find import CongruenceClosure

logger = get_logger(__name__)

Subst = Dict[Variable, Term]
Domain = Mapping[Sort, Tuple[Term, ...]]


# --- Horn fragment -----------------------------------------------------------


def _horn_reason(rule_body: Sequence[Formula], head: Formula) -> Optional[str]:
    if not all(is_atomic(b) for b in rule_body):
        return "premise is not a conjunction of atoms"
    if not (is_atomic(head) or isinstance(head, Bottom)):
        return "conclusion is not a single atom or false"
    if isinstance(head, Bottom):
        return None
    body_terms: Set[Term] = set()
    for b in rule_body:
        for t in atom_terms(b):  # type: ignore[arg-type]
            body_terms.update(subterms(t))
    for t in atom_terms(head):  # type: ignore[arg-type]
        for sub in subterms(t):
            if isinstance(sub, App) and sub.args and sub not in body_terms:
                return f"conclusion invents the term {sub}"
    return None


def horn_partition(t: Theory) -> Tuple[List[HornRule], List[Rejection]]:
    """Split the axioms of ``t`` into Horn rules and rejected sequents, in order"""
    rules: List[HornRule] = []
    rejected: List[Rejection] = []
    for ax in t.axioms:
        s = ax.sequent
        body = conjuncts(s.premise)
        reason = _horn_reason(body, s.conclusion)
        if reason is None:
            rules.append(HornRule(ax.name, s.context, tuple(body), s.conclusion))  # type: ignore[arg-type]
        else:
            rejected.append(Rejection(ax.name, s, reason))
    if rejected:
        logger.debug("horn_partition_rejected", theory=t.id, rejected=[r.name for r in rejected])
    return rules, rejected


# --- ground atoms, positions and the term universe ---------------------------


_args = atom_terms


def _with_args(a: Atom, args: Sequence[Term]) -> Atom:
    if isinstance(a, Rel):
        return Rel(a.rel, tuple(args))
    return Eq(args[0], args[1])


def _term_positions(t: Term, pos: Position) -> Iterator[Tuple[Position, Term]]:
    yield pos, t
    if isinstance(t, App):
        for j, a in enumerate(t.args):
            yield from _term_positions(a, pos + (j,))


def positions(a: Atom) -> Iterator[Tuple[Position, Term]]:
    for i, t in enumerate(_args(a)):
        yield from _term_positions(t, (i,))


def _replace_term(t: Term, path: Position, new: Term) -> Term:
    if not path:
        return new
    assert isinstance(t, App)
    i, rest = path[0], path[1:]
    args = list(t.args)
    args[i] = _replace_term(args[i], rest, new)
    return App(t.fn, tuple(args))


def replace_at(a: Atom, pos: Position, new: Term) -> Atom:
    args = list(_args(a))
    args[pos[0]] = _replace_term(args[pos[0]], pos[1:], new)
    return _with_args(a, args)


def problem_domain(premises: Iterable[Atom], signature: Optional[Signature] = None) -> Dict[Sort, Tuple[Term, ...]]:
    """Declared constants plus ground subterms of the premises, per sort, sorted by name"""
    found: Set[Term] = set()
    if signature is not None:
        found.update(App(c) for c in signature.constants())
    for a in premises:
        for t in _args(a):
            found.update(subterms(t))
    domain: Dict[Sort, List[Term]] = {}
    if signature is not None:
        for s in signature.sorts:
            domain[s] = []
    for t in found:
        domain.setdefault(term_sort(t), []).append(t)
    return {s: tuple(sorted(ts, key=str)) for s, ts in domain.items()}


# --- matching ----------------------------------------------------------------


def _match_term(p: Term, g: Term, s: Subst) -> Optional[Subst]:
    if isinstance(p, Var):
        bound = s.get(p.var)
        if bound is None:
            if term_sort(g) != p.var.sort:
                return None
            out = dict(s)
            out[p.var] = g
            return out
        return s if bound == g else None
    if not isinstance(g, App) or g.fn != p.fn:
        return None
    for pa, ga in zip(p.args, g.args):
        matched = _match_term(pa, ga, s)
        if matched is None:
            return None
        s = matched
    return s


def _match_atom(p: Atom, fact: Fact, s: Subst) -> Optional[Subst]:
    if isinstance(p, Rel):
        if not isinstance(fact, Rel) or fact.rel != p.rel:
            return None
    elif not isinstance(fact, Eq):
        return None
    for pa, fa in zip(_args(p), _args(fact)):  # type: ignore[arg-type]
        matched = _match_term(pa, fa, s)
        if matched is None:
            return None
        s = matched
    return s


def _ground(a: Fact, s: Subst) -> Fact:
    if isinstance(a, Bottom):
        return a
    return _with_args(a, [substitute_term(t, s) for t in _args(a)])


def _key(a: Fact) -> tuple:
    if isinstance(a, Rel):
        return ("rel", a.rel.name)
    if isinstance(a, Eq):
        return ("eq", term_sort(a.lhs).name)
    return ("false",)


class _Index:
    def __init__(self, facts: Iterable[Fact] = ()):
        self._by_key: Dict[tuple, List[Fact]] = {}
        for f in facts:
            self.add(f)

    def add(self, fact: Fact) -> None:
        self._by_key.setdefault(_key(fact), []).append(fact)

    def get(self, pattern: Atom) -> List[Fact]:
        return self._by_key.get(_key(pattern), [])

    def equations(self) -> List[Eq]:
        return [f for k, fs in self._by_key.items() if k[0] == "eq" for f in fs]  # type: ignore[misc]

    def atoms(self) -> List[Fact]:
        return [f for k, fs in self._by_key.items() if k[0] != "false" for f in fs]


def _join(body: Sequence[Atom], source: Callable[[int], List[Fact]]) -> Iterator[Subst]:
    def go(i: int, s: Subst) -> Iterator[Subst]:
        if i == len(body):
            yield s
            return
        for fact in source(i):
            matched = _match_atom(body[i], fact, s)
            if matched is not None:
                yield from go(i + 1, matched)

    yield from go(0, {})


# --- saturation --------------------------------------------------------------


class _Saturation:
    """One closure computation; ``naive`` switches the join strategy"""

    def __init__(self, rules: Sequence[HornRule], premises: Sequence[Atom], domain: Domain,
                 limits: EngineLimits, naive: bool):
        self.rules = tuple(rules)
        self.domain = {s: tuple(ts) for s, ts in domain.items()}
        self.limits = limits
        self.naive = naive
        self.fb = FactBase(premises=tuple(dict.fromkeys(premises)), domain=self.domain, rules=self.rules)
        for p in self.fb.premises:
            if not is_ground(p):
                raise PreconditionViolated("saturate", f"premise {p} is not ground")
            self.fb.provenance[p] = PREMISE_PROVENANCE
        self.universe: Set[Term] = {t for ts in self.domain.values() for t in ts}
        for p in self.fb.premises:
            for t in _args(p):
                self.universe.update(subterms(t))
        self.equality = any(isinstance(p, Eq) for p in self.fb.premises) or any(
            isinstance(a, Eq) for r in self.rules for a in (*r.body, r.head)
        )
        self.old = _Index()
        self.delta = _Index(self.fb.premises)

    # candidates

    def _free_extensions(self, rule: HornRule, s: Subst) -> Iterator[Subst]:
        free = [v for v in rule.context if v not in s]
        if not free:
            yield s
            return
        pools = [self.domain.get(v.sort, ()) for v in free]
        for values in itertools.product(*pools):
            out = dict(s)
            out.update(zip(free, values))
            yield out

    def _rule_instances(self, rule: HornRule, first_round: bool) -> List[Subst]:
        found: List[Subst] = []
        body = rule.body
        if not body:
            if self.naive or first_round:
                found.extend(self._free_extensions(rule, {}))
            return found
        if self.naive:
            full = _Index(self.fb.provenance)
            matches: Iterable[Subst] = _join(body, lambda j: full.get(body[j]))
            for m in matches:
                found.extend(self._free_extensions(rule, m))
            return found
        for i in range(len(body)):
            def source(j: int, i: int = i) -> List[Fact]:
                if j < i:
                    return self.old.get(body[j])
                if j == i:
                    return self.delta.get(body[j])
                return self.old.get(body[j]) + self.delta.get(body[j])

            for m in _join(body, source):
                found.extend(self._free_extensions(rule, m))
        return found

    def _in_universe(self, a: Atom) -> bool:
        return all(t in self.universe for _, t in positions(a))

    def _equality_steps(self, propose: Callable[[Fact, Provenance], None], round_no: int) -> None:
        if self.naive:
            all_facts = _Index(self.fb.provenance)
            eq_new, eq_old = all_facts.equations(), []
            atoms_new, atoms_all = all_facts.atoms(), all_facts.atoms()
        else:
            eq_new, eq_old = self.delta.equations(), self.old.equations()
            atoms_new = self.delta.atoms()
            atoms_all = self.old.atoms() + atoms_new

        for e in eq_new:
            self.fb.evaluations += 1
            propose(Eq(e.rhs, e.lhs), Provenance(EQ_SYMM, (e,), round=round_no))

        pairs = [(e, a) for e in eq_new for a in atoms_all]
        pairs += [(e, a) for e in eq_old for a in atoms_new]
        for e, a in pairs:
            if e.lhs == e.rhs:
                continue
            for pos, t in positions(a):  # type: ignore[arg-type]
                if t != e.lhs:
                    continue
                self.fb.evaluations += 1
                rewritten = replace_at(a, pos, e.rhs)  # type: ignore[arg-type]
                if self._in_universe(rewritten):
                    propose(rewritten, Provenance(EQ_SUBST, (e, a), position=pos, round=round_no))

        self._congruence(propose, round_no)

    def _congruence(self, propose: Callable[[Fact, Provenance], None], round_no: int) -> None:
        cc = CongruenceClosure(sorted(self.universe, key=str))
        for f in self.fb.provenance:
            if isinstance(f, Eq):
                cc.merge(f.lhs, f.rhs)
        for a, b in sorted(cc.congruent_applications(), key=lambda p: (str(p[0]), str(p[1]))):
            self.fb.evaluations += 1
            goal = Eq(a, b)
            if goal in self.fb.provenance:
                continue
            parents = tuple(Eq(x, y) for x, y in zip(a.args, b.args) if x != y)
            if all(p in self.fb.provenance for p in parents):
                propose(goal, Provenance(EQ_CONG, parents, round=round_no))

    # rounds

    def run(self) -> FactBase:
        round_no = 0
        while True:
            round_no += 1
            if round_no > self.limits.max_rounds:
                self.fb.rounds = round_no - 1
                raise LimitExceeded("rounds", self.limits.max_rounds, self.fb)
            new: Dict[Fact, Provenance] = {}

            def propose(fact: Fact, prov: Provenance) -> None:
                if fact not in self.fb.provenance and fact not in new:
                    new[fact] = prov

            for rule in self.rules:
                instances = self._rule_instances(rule, round_no == 1)
                instances.sort(key=lambda s, r=rule: tuple(str(s[v]) for v in r.context))
                for s in instances:
                    self.fb.evaluations += 1
                    head = _ground(rule.head, s)
                    propose(head, Provenance(
                        rule.name,
                        tuple(_ground(b, s) for b in rule.body),
                        tuple((v, s[v]) for v in rule.context),
                        round=round_no,
                    ))
            if self.equality:
                self._equality_steps(propose, round_no)

            for f in self.delta.atoms():
                self.old.add(f)
            self.delta = _Index()
            for fact, prov in new.items():
                self.fb.provenance[fact] = prov
                self.delta.add(fact)
            if len(self.fb) > self.limits.max_facts:
                self.fb.rounds = round_no
                raise LimitExceeded("facts", self.limits.max_facts, self.fb)
            if not new:
                self.fb.rounds = round_no
                return self.fb


def _prepare(premises: Sequence[Atom], domain: Optional[Domain], signature: Optional[Signature],
             limits: Optional[EngineLimits]) -> Tuple[Domain, EngineLimits]:
    if domain is None:
        domain = problem_domain(premises, signature)
    return domain, limits or EngineLimits()


def saturate(
    rules: Sequence[HornRule],
    premises: Sequence[Atom],
    limits: Optional[EngineLimits] = None,
    domain: Optional[Domain] = None,
    signature: Optional[Signature] = None,
) -> FactBase:
    """
    Semi-naive deductive closure of ``premises`` under ``rules``

    Args:
        rules: Horn rules applied in order each round
        premises: Ground atoms
        limits: Fact and round budgets, defaults from settings
        domain: Terms over which context variables absent from a rule body
            range; computed from ``premises`` and ``signature`` when omitted
        signature: Source of declared constants for the default domain

    Raises:
        LimitExceeded: Carrying the partial fact base
    """
    domain, limits = _prepare(premises, domain, signature, limits)
    fb = _Saturation(rules, premises, domain, limits, naive=False).run()
    logger.debug(
        "saturation_complete",
        facts=len(fb),
        rounds=fb.rounds,
        evaluations=fb.evaluations,
        inconsistent=fb.inconsistent,
    )
    return fb


def naive_saturate(
    rules: Sequence[HornRule],
    premises: Sequence[Atom],
    limits: Optional[EngineLimits] = None,
    domain: Optional[Domain] = None,
    signature: Optional[Signature] = None,
) -> FactBase:
    """Reference closure that re-evaluates every rule instance each round"""
    domain, limits = _prepare(premises, domain, signature, limits)
    return _Saturation(rules, premises, domain, limits, naive=True).run()


def saturate_problem(problem: Problem, limits: Optional[EngineLimits] = None) -> FactBase:
    rules, _ = horn_partition(problem.theory)
    return saturate(rules, problem.premises, limits, signature=problem.theory.signature)


def is_inconsistent(fb: FactBase) -> bool:
    return fb.inconsistent


# --- traceback ---------------------------------------------------------------


def _ancestors(fb: FactBase, target: Fact) -> List[Fact]:
    """``target`` and everything its provenance depends on, parents first"""
    order: List[Fact] = []
    seen: Set[Fact] = set()
    stack: List[Tuple[Fact, bool]] = [(target, False)]
    while stack:
        fact, expanded = stack.pop()
        if expanded:
            order.append(fact)
            continue
        if fact in seen:
            continue
        seen.add(fact)
        stack.append((fact, True))
        prov = fb.provenance[fact]
        for parent in reversed(prov.parents):
            if parent not in seen:
                stack.append((parent, False))
    return order


def derivable(fb: FactBase, leaves: Sequence[Atom], target: Fact) -> bool:
    """Whether ``target`` follows from ``leaves`` with the rules and domain of ``fb``"""
    if target in leaves:
        return True
    closure = saturate(fb.rules, leaves, domain=fb.domain)
    return target in closure


def traceback(fb: FactBase, target: Fact) -> DependencySubgraph:
    """
    Subgraph of ``fb`` sufficient to re-derive ``target``

    Premise leaves are subset-minimal: dropping any one of them makes the
    target underivable from the rest.

    Raises:
        TargetAbsent: If ``target`` is not in ``fb``
    """
    if target not in fb:
        raise TargetAbsent(target)
    used = [f for f in _ancestors(fb, target) if fb.provenance[f].is_premise]
    leaves = [p for p in fb.premises if p in used]
    for leaf in list(leaves):
        rest = [p for p in leaves if p != leaf]
        if derivable(fb, rest, target):
            leaves = rest

    source = fb
    if len(leaves) != len(used):
        source = saturate(fb.rules, leaves, domain=fb.domain)
    nodes = _ancestors(source, target)
    edges = {n: source.provenance[n] for n in nodes if not source.provenance[n].is_premise}
    node_set = set(nodes)
    return DependencySubgraph(
        target=target,
        nodes=tuple(nodes),
        edges=edges,
        leaves=tuple(p for p in source.premises if p in node_set),
    )


# --- elaboration -------------------------------------------------------------


_EMPTY = Context()


def _reflexivity(gamma: Formula, t: Term) -> ProofTree:
    """gamma |- t = t"""
    x = Variable("x", term_sort(t))
    refl = subst(eq_refl(Context((x,)), x), {x: t}, _EMPTY)
    return cut(truth(_EMPTY, gamma), refl)


def _rewrite(eq: Eq, eq_proof: ProofTree, atom: Atom, atom_proof: ProofTree, pos: Position) -> ProofTree:
    """From gamma |- s = t and gamma |- A infer gamma |- A with the subterm at ``pos`` replaced by t"""
    sort = term_sort(eq.lhs)
    v, w = Variable("v", sort), Variable("w", sort)
    pattern = replace_at(atom, pos, Var(v))
    step = eq_subst(Context((v, w)), v, w, pattern)
    instance = subst(step, {v: eq.lhs, w: eq.rhs}, _EMPTY)
    return cut(and_intro(eq_proof, atom_proof), instance)


def _assemble(gamma: Formula, f: Formula, proofs: Mapping[Fact, ProofTree], where: tuple) -> ProofTree:
    if isinstance(f, Top):
        return truth(_EMPTY, gamma)
    if isinstance(f, And):
        return and_intro(_assemble(gamma, f.left, proofs, where), _assemble(gamma, f.right, proofs, where))
    proof = proofs.get(f)  # type: ignore[call-overload]
    if proof is None:
        raise ElaborationFailed(where, f"body atom {f} has no proof")
    return proof


def _elaborate_node(t: Theory, rules: Mapping[str, HornRule], gamma: Formula, node: Fact,
                    prov: Provenance, proofs: Mapping[Fact, ProofTree], where: tuple) -> ProofTree:
    if prov.rule == EQ_SYMM:
        (e,) = prov.parents
        assert isinstance(e, Eq)
        return _rewrite(e, proofs[e], Eq(e.lhs, e.lhs), _reflexivity(gamma, e.lhs), (0,))
    if prov.rule == EQ_SUBST:
        e, a = prov.parents
        assert isinstance(e, Eq) and not isinstance(a, Bottom)
        return _rewrite(e, proofs[e], a, proofs[a], prov.position)
    if prov.rule == EQ_CONG:
        assert isinstance(node, Eq) and isinstance(node.lhs, App) and isinstance(node.rhs, App)
        current: Atom = Eq(node.lhs, node.lhs)
        proof = _reflexivity(gamma, node.lhs)
        for i, (x, y) in enumerate(zip(node.lhs.args, node.rhs.args)):
            if x == y:
                continue
            e = Eq(x, y)
            proof = _rewrite(e, proofs[e], current, proof, (1, i))
            current = replace_at(current, (1, i), y)
        return proof

    rule = rules.get(prov.rule)
    if rule is None:
        raise ElaborationFailed(where, f"provenance names '{prov.rule}', which is not a Horn axiom of {t.id}")
    instance = subst(axiom_instance(t, rule.name), dict(prov.substitution), _EMPTY)
    body = _assemble(gamma, instance.conclusion.premise, proofs, where)
    proof = cut(body, instance)
    if not alpha_equal(proof.conclusion.conclusion, node):
        raise ElaborationFailed(where, f"rule '{rule.name}' concludes {proof.conclusion.conclusion}, not {node}")
    return proof


def elaborate(t: Theory, g: DependencySubgraph) -> ProofTree:
    """
    Kernel proof of ``conj(leaves) |- target`` in the empty context

    Raises:
        ElaborationFailed: If the subgraph cites a rule absent from ``t`` or a
            step does not instantiate the cited rule
    """
    rules = {r.name: r for r in horn_partition(t)[0]}
    gamma = g.premise
    proofs: Dict[Fact, ProofTree] = {}
    for i, node in enumerate(g.nodes):
        where = (i, str(node))
        prov = g.edges.get(node)
        try:
            if prov is None:
                proofs[node] = prove_conjunctive(_EMPTY, gamma, node)
            else:
                proofs[node] = _elaborate_node(t, rules, gamma, node, prov, proofs, where)
        except (PreconditionViolated, KeyError) as exc:
            raise ElaborationFailed(where, str(exc)) from exc
    return proofs[g.target]



def _lift(gamma: Formula, g: DependencySubgraph, proof: ProofTree) -> ProofTree:
    """Weaken an elaborated proof of ``leaves |- target`` to ``gamma |- target``"""
    if alpha_equal(gamma, g.premise):
        return proof
    return cut(prove_conjunctive(_EMPTY, gamma, g.premise), proof)


def prove_problem(problem: Problem, limits: Optional[EngineLimits] = None) -> Optional[ProofTree]:
    """
    Kernel proof of ``problem.sequent`` found by saturation, or None

    The goal must be a conjunction of ground atoms. An inconsistent closure
    proves every goal through ``false``.

    Raises:
        PreconditionViolated: If the goal is open or not conjunctive
        LimitExceeded: If saturation hits ``limits``
    """
    if len(problem.goal_context) or not is_ground(problem.goal):
        raise PreconditionViolated("prove", "goal must be ground")
    goal_atoms = conjuncts(problem.goal)
    if not all(is_atomic(a) or isinstance(a, Bottom) for a in goal_atoms):
        raise PreconditionViolated("prove", f"goal {problem.goal} is not a conjunction of atoms")

    t = problem.theory
    fb = saturate_problem(problem, limits)
    gamma = conj(list(problem.premises))

    def fact_proof(fact: Fact) -> Optional[ProofTree]:
        if fact in fb:
            g = traceback(fb, fact)
            return _lift(gamma, g, elaborate(t, g))
        if fb.inconsistent:
            g = traceback(fb, BOTTOM)
            return cut(_lift(gamma, g, elaborate(t, g)), falsum(_EMPTY, fact))
        return None

    def build(f: Formula) -> Optional[ProofTree]:
        if isinstance(f, Top):
            return truth(_EMPTY, gamma)
        if isinstance(f, And):
            left, right = build(f.left), build(f.right)
            if left is None or right is None:
                return None
            return and_intro(left, right)
        return fact_proof(f)  # type: ignore[arg-type]

    proof = build(problem.goal)
    logger.info("problem_proved" if proof else "problem_open", theory=t.id, goal=str(problem.goal),
                facts=len(fb), rounds=fb.rounds)
    return proof
