"""
Proof Trees

Finite derivations in the sixteen-rule sequent calculus of observable
logic, plus theory axiom leaves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, Optional, Tuple

from app.models.logic import Sequent, Term, Variable


class RuleTag(str, Enum):
    """The sixteen structural and logical rules, plus theory axioms"""

    AXIOM = "Axiom"
    IDENTITY = "Identity"
    CUT = "Cut"
    SUBST = "Subst"
    TRUTH = "Truth"
    FALSUM = "Falsum"
    AND_ELIM_L = "AndElimL"
    AND_ELIM_R = "AndElimR"
    AND_INTRO = "AndIntro"
    OR_INTRO = "OrIntro"
    OR_ELIM = "OrElim"
    EXISTS_FWD = "ExistsFwd"
    EXISTS_BWD = "ExistsBwd"
    EQ_REFL = "EqRefl"
    EQ_SUBST = "EqSubst"
    FROBENIUS = "Frobenius"
    DISTRIBUTIVITY = "Distributivity"


CALCULUS_RULES: Tuple[RuleTag, ...] = tuple(r for r in RuleTag if r is not RuleTag.AXIOM)


@dataclass(frozen=True, slots=True)
class RulePayload:
    """Rule-specific data; fields unused by a rule stay at their defaults"""

    axiom: Optional[str] = None
    substitution: Tuple[Tuple[Variable, Term], ...] = ()
    index: Optional[int] = None
    variable: Optional[Variable] = None

    def substitution_map(self) -> Dict[Variable, Term]:
        return dict(self.substitution)


EMPTY_PAYLOAD = RulePayload()


@dataclass(frozen=True, slots=True)
class ProofTree:
    rule: RuleTag
    premises: Tuple["ProofTree", ...]
    conclusion: Sequent
    payload: RulePayload = field(default=EMPTY_PAYLOAD)

    def walk(self, path: Tuple[int, ...] = ()) -> Iterator[Tuple[Tuple[int, ...], "ProofTree"]]:
        """Pre-order traversal yielding ``(path, node)`` pairs"""
        yield path, self
        for i, child in enumerate(self.premises):
            yield from child.walk(path + (i,))

    def node_at(self, path: Tuple[int, ...]) -> "ProofTree":
        node = self
        for i in path:
            node = node.premises[i]
        return node
