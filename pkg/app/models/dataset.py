"""
Dataset Pipeline Data Models

Generation configuration, corpus records and corpus statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core.config import settings
from app.models.deduction import EngineLimits
from app.models.logic import Sequent
from app.models.proof import ProofTree
from app.models.sieve import CoveringClaim, SieveProof

SEED_BOUND = 2**64


class GenConfig(BaseModel):
    """Everything that determines a generated corpus"""

    model_config = ConfigDict(frozen=True)

    theory_id: str
    constant_count: int = Field(default=3, ge=0)
    premise_count: int = Field(default=2, ge=0)
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0, lt=SEED_BOUND)
    limits: EngineLimits = Field(default_factory=EngineLimits)
    max_records: int = Field(default=100, ge=0)
    max_samples: int = Field(default_factory=lambda: settings.MAX_SAMPLES, gt=0)
    retries: int = Field(default_factory=lambda: settings.CONSISTENCY_RETRIES, gt=0)


class RecordMeta(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    sample: int = Field(ge=0)
    proof_size: int = Field(ge=0)
    proof_depth: int = Field(ge=0)
    premise_count: int = Field(ge=0)
    dual_size: int = Field(default=0, ge=0)


@dataclass(frozen=True)
class DatasetRecord:
    """
    A proven sequent and its proof, optionally with their topological duals

    ``dual_claim`` and ``dual_proof`` are None until the record is dualized.
    """

    theory_id: str
    sequent: Sequent
    proof: ProofTree
    meta: RecordMeta
    dual_claim: Optional[CoveringClaim] = None
    dual_proof: Optional[SieveProof] = None

    @property
    def is_dualized(self) -> bool:
        return self.dual_claim is not None and self.dual_proof is not None

    def without_duals(self) -> "DatasetRecord":
        return replace(self, dual_claim=None, dual_proof=None, meta=self.meta.model_copy(update={"dual_size": 0}))


class CorpusStats(BaseModel):
    record_count: int = 0
    per_theory: Dict[str, int] = Field(default_factory=dict)
    proof_size_histogram: Dict[int, int] = Field(default_factory=dict)
    proof_depth_histogram: Dict[int, int] = Field(default_factory=dict)
    dual_size_histogram: Dict[int, int] = Field(default_factory=dict)
    size_ratio: Dict[str, float] = Field(default_factory=dict)
    rule_usage: Dict[str, int] = Field(default_factory=dict)
    sieve_rule_usage: Dict[str, int] = Field(default_factory=dict)
