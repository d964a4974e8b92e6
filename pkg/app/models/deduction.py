"""
Deduction Engine Data Models

Horn rules, fact bases with provenance, and dependency subgraphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from app.core.config import settings
from app.models.logic import (
    BOTTOM,
    Atom,
    Bottom,
    Context,
    Formula,
    Sequent,
    Sort,
    Term,
    Variable,
    conj,
)

Fact = Union[Atom, Bottom]
Position = Tuple[int, ...]

PREMISE = "premise"
EQ_SYMM = "=symm"
EQ_SUBST = "=subst"
EQ_CONG = "=cong"
BUILTIN_RULES = (EQ_SYMM, EQ_SUBST, EQ_CONG)


class EngineLimits(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_facts: int = Field(default_factory=lambda: settings.MAX_FACTS, gt=0)
    max_rounds: int = Field(default_factory=lambda: settings.MAX_ROUNDS, gt=0)


@dataclass(frozen=True, slots=True)
class HornRule:
    """Conjunction of atoms implies one atom, or ``false`` for a constraint"""

    name: str
    context: Context
    body: Tuple[Atom, ...]
    head: Fact

    @property
    def sequent(self) -> Sequent:
        return Sequent(self.context, conj(list(self.body)), self.head)

    @property
    def is_constraint(self) -> bool:
        return isinstance(self.head, Bottom)


@dataclass(frozen=True, slots=True)
class Rejection:
    """An axiom outside the Horn fragment, with the reason it was refused"""

    name: str
    sequent: Sequent
    reason: str


@dataclass(frozen=True, slots=True)
class Provenance:
    """
    How a fact entered the base

    ``rule`` is an axiom name, one of the builtin equality rules or
    ``PREMISE``. For axioms ``substitution`` instantiates the rule context and
    ``parents`` are the instantiated body atoms in body order. For ``=subst``
    the parents are the equation and the rewritten atom, and ``position``
    locates the rewritten subterm.
    """

    rule: str
    parents: Tuple[Fact, ...] = ()
    substitution: Tuple[Tuple[Variable, Term], ...] = ()
    position: Position = ()
    round: int = 0

    @property
    def is_premise(self) -> bool:
        return self.rule == PREMISE


PREMISE_PROVENANCE = Provenance(PREMISE)


@dataclass
class FactBase:
    """Ground facts in derivation order, each with its first provenance"""

    provenance: Dict[Fact, Provenance] = field(default_factory=dict)
    premises: Tuple[Atom, ...] = ()
    domain: Dict[Sort, Tuple[Term, ...]] = field(default_factory=dict)
    rules: Tuple[HornRule, ...] = ()
    rounds: int = 0
    evaluations: int = 0

    def __contains__(self, fact: object) -> bool:
        return fact in self.provenance

    def __len__(self) -> int:
        return len(self.provenance)

    def __iter__(self) -> Iterator[Fact]:
        return iter(self.provenance)

    def facts(self) -> frozenset[Fact]:
        return frozenset(self.provenance)

    def derived(self) -> List[Fact]:
        """Non-premise facts in the order they were derived"""
        return [f for f, p in self.provenance.items() if not p.is_premise]

    def why(self, fact: Fact) -> Optional[Provenance]:
        return self.provenance.get(fact)

    @property
    def inconsistent(self) -> bool:
        return BOTTOM in self.provenance


@dataclass(frozen=True)
class DependencySubgraph:
    """
    Facts needed to re-derive ``target``

    ``nodes`` are ordered so every fact follows its parents; ``leaves`` are
    the premises among them.
    """

    target: Fact
    nodes: Tuple[Fact, ...]
    edges: Dict[Fact, Provenance]
    leaves: Tuple[Atom, ...]

    @property
    def premise(self) -> Formula:
        return conj(list(self.leaves))

    def rule_names(self) -> List[str]:
        return [self.edges[n].rule for n in self.nodes if n in self.edges]
