"""
Sieve Proofs

Objects and morphisms of the syntactic site of a theory, covering claims,
and derivations in the covering calculus (Grothendieck topology axioms, the
supersieve step, and the covers the site inherits from disjunction and
existential projection).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, Optional, Tuple

from app.models.logic import Context, Formula, Term, Variable, format_formula
from app.models.proof import ProofTree


@dataclass(frozen=True, slots=True)
class SiteObject:
    """A formula in context ``[x | phi]``"""

    context: Context
    formula: Formula

    def __str__(self) -> str:
        return f"{{{self.context} | {format_formula(self.formula)}}}"


class MorphismKind(str, Enum):
    ENTAIL_MONO = "mono"
    SUBST_MAP = "subst"


@dataclass(frozen=True, slots=True)
class SiteMorphism:
    """
    A morphism into ``target``

    An entailment mono ``[x | phi & psi] -> [x | phi]`` stores ``psi`` as
    ``extra``. A substitution map stores the images of the target context
    variables and the source context; its source formula is the substituted
    target formula.
    """

    kind: MorphismKind
    target: SiteObject
    extra: Optional[Formula] = None
    substitution: Tuple[Tuple[Variable, Term], ...] = ()
    source_context: Optional[Context] = None

    def substitution_map(self) -> Dict[Variable, Term]:
        return dict(self.substitution)

    def __str__(self) -> str:
        if self.kind is MorphismKind.ENTAIL_MONO:
            return f"mono({format_formula(self.extra)}) -> {self.target}"
        images = ", ".join(f"{v.name}:={t}" for v, t in self.substitution)
        return f"subst({images}) -> {self.target}"


def entail_mono(target: SiteObject, extra: Formula) -> SiteMorphism:
    return SiteMorphism(MorphismKind.ENTAIL_MONO, target, extra=extra)


def subst_map(target: SiteObject, substitution: Tuple[Tuple[Variable, Term], ...],
              source_context: Context) -> SiteMorphism:
    return SiteMorphism(
        MorphismKind.SUBST_MAP, target, substitution=tuple(substitution), source_context=source_context
    )


@dataclass(frozen=True, slots=True)
class CoveringClaim:
    """The sieve generated by ``family`` covers ``base``"""

    base: SiteObject
    family: Tuple[SiteMorphism, ...]

    @property
    def is_dual_statement(self) -> bool:
        return len(self.family) == 1 and self.family[0].kind is MorphismKind.ENTAIL_MONO

    def __str__(self) -> str:
        members = "; ".join(str(m) for m in self.family)
        return f"{self.base} covered by <{members}>"


class SieveRule(str, Enum):
    AXIOM_COVER = "AxiomCover"
    MAXIMALITY = "Maximality"
    STABILITY = "Stability"
    TRANSITIVITY = "Transitivity"
    WIDENING = "Widening"
    DISJUNCTION_COVER = "DisjunctionCover"
    PROJECTION = "Projection"


@dataclass(frozen=True, slots=True)
class SieveProof:
    rule: SieveRule
    children: Tuple["SieveProof", ...]
    conclusion: CoveringClaim
    axiom: Optional[str] = None
    morphism: Optional[SiteMorphism] = field(default=None)
    variable: Optional[Variable] = None

    def walk(self, path: Tuple[int, ...] = ()) -> Iterator[Tuple[Tuple[int, ...], "SieveProof"]]:
        yield path, self
        for i, child in enumerate(self.children):
            yield from child.walk(path + (i,))


@dataclass(frozen=True)
class DualSolution:
    """A goal's covering claim with the sieve proof found for it and its compiled kernel proof"""

    claim: CoveringClaim
    sieve_proof: SieveProof
    proof: ProofTree
