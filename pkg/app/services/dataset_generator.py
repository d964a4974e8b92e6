"""
Synthetic Dataset Generator

Samples consistent ground premises, saturates them, and turns every derived
fact into a record: the minimal sequent that proves it, its elaborated
kernel proof, and (once dualized) the covering claim and sieve proof.

Sample ``i`` of a run draws from ``Generator(PCG64(SeedSequence([seed, i])))``,
so a sample's records depend only on the seed and its index. Parallel runs
split sample indices across worker processes and merge in index order, which
makes the output identical for any worker count.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.config import settings
from app.core.exceptions import (
    ConfigurationException,
    ConsistencyRetriesExhausted,
    InvalidRecord,
    LimitExceeded,
    ObservableLogicException,
    PreconditionViolated,
    UnsupportedRule,
)
from app.core.logger import PipelineAuditLogger, get_logger
from app.models.dataset import DatasetRecord, GenConfig, RecordMeta
from app.models.deduction import Fact, FactBase, HornRule
from app.models.logic import App, Atom, Bottom, Formula, FunctionSymbol, Rel, Signature, Sort, Term, Theory, Var
from app.models.proof import ProofTree
from app.models.sieve import SieveProof
from app.services.deduction import elaborate, horn_partition, saturate, traceback
from app.services.kernel import check_proof, proof_depth, proof_size
from app.services.logic import (
    conjuncts,
    extend_theory,
    fresh_name,
    function_symbols,
    sequents_alpha_equal,
    subterms,
)
from app.services.topo_dual import (
    check_sieve_proof,
    claims_equal,
    compile_proof,
    dualize_proof,
    dualize_statement,
    sieve_size,
)

logger = get_logger(__name__)


def candidate_lines(n: int) -> int:
    """Lines through pairs of ``n`` points: n(n-1)/2"""
    if n < 0:
        raise PreconditionViolated("candidate_lines", f"point count {n} is negative")
    return math.comb(n, 2)


# --- premise sampling --------------------------------------------------------


def sample_rng(seed: int, sample: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, sample])))


def _constant_names() -> Iterator[str]:
    letters = [chr(c) for c in range(ord("a"), ord("z") + 1)]
    yield from letters
    for n in itertools.count(1):
        for letter in letters:
            yield f"{letter}{n}"


def fresh_constants(signature: Signature, count: int) -> Tuple[FunctionSymbol, ...]:
    """
    ``count`` new constants named a, b, c, ...

    Constants are dealt round-robin over the sorts relations range over, in
    declaration order.
    """
    sorts: List[Sort] = []
    for rel in signature.relations:
        for s in rel.arg_sorts:
            if s not in sorts:
                sorts.append(s)
    sorts = sorts or list(signature.sorts)
    if count and not sorts:
        raise PreconditionViolated("sample", "signature has no sorts for constants")
    taken = {s.name for s in signature.sorts} | {f.name for f in signature.functions} | {
        r.name for r in signature.relations
    }
    consts: List[FunctionSymbol] = []
    for i, name in zip(range(count), _constant_names()):
        if name in taken:
            name = fresh_name(name, taken)
        taken.add(name)
        consts.append(FunctionSymbol(name, (), sorts[i % len(sorts)]))
    return tuple(consts)


def herbrand_atoms(signature: Signature, constants: Sequence[FunctionSymbol]) -> List[Atom]:
    """Relation atoms over ``constants``, relations in declaration order, arguments lexicographic"""
    by_sort = {}
    for c in constants:
        by_sort.setdefault(c.result_sort, []).append(App(c))
    atoms: List[Atom] = []
    for rel in signature.relations:
        pools = [by_sort.get(s, []) for s in rel.arg_sorts]
        atoms.extend(Rel(rel, tuple(args)) for args in itertools.product(*pools))
    return atoms


def generation_theory(t: Theory, cfg: GenConfig) -> Tuple[Theory, Tuple[FunctionSymbol, ...]]:
    """``t`` with the sampling constants declared, and those constants"""
    consts = fresh_constants(t.signature, cfg.constant_count)
    return extend_theory(t, Signature(functions=consts)), consts


def _sample(t: Theory, rules: Sequence[HornRule], constants: Sequence[FunctionSymbol], cfg: GenConfig,
            rng: np.random.Generator) -> Tuple[Tuple[Atom, ...], FactBase]:
    space = herbrand_atoms(t.signature, constants)
    k = min(cfg.premise_count, len(space))
    for _ in range(cfg.retries):
        picked = sorted(rng.choice(len(space), size=k, replace=False).tolist()) if k else []
        premises = tuple(space[i] for i in picked)
        fb = saturate(rules, premises, cfg.limits, signature=t.signature)
        if not fb.inconsistent:
            return premises, fb
    raise ConsistencyRetriesExhausted(t.id, cfg.retries)


def sample_premises(t: Theory, cfg: GenConfig, rng: np.random.Generator) -> Tuple[Atom, ...]:
    """
    Uniformly chosen distinct ground atoms over fresh constants whose closure
    is consistent

    Raises:
        PreconditionViolated: If ``t`` has no Horn rules
        ConsistencyRetriesExhausted: If every draw within ``cfg.retries`` is inconsistent
    """
    rules, _ = horn_partition(t)
    if not rules:
        raise PreconditionViolated("sample", f"theory {t.id} has no Horn axioms")
    bound, consts = generation_theory(t, cfg)
    return _sample(bound, rules, consts, cfg, rng)[0]


# --- records -----------------------------------------------------------------


def _mentioned(proof: Union[ProofTree, SieveProof]) -> Iterator[Union[Formula, Term]]:
    if isinstance(proof, ProofTree):
        for _, node in proof.walk():
            yield node.conclusion.premise
            yield node.conclusion.conclusion
            yield from (t for _, t in node.payload.substitution)
        return
    for _, node in proof.walk():
        claim = node.conclusion
        yield claim.base.formula
        for m in claim.family:
            yield m.target.formula
            if m.extra is not None:
                yield m.extra
            yield from (t for _, t in m.substitution)


def proof_theory(base: Theory, *proofs: Union[ProofTree, SieveProof, None]) -> Theory:
    """``base`` extended with every constant the proofs mention but it does not declare"""
    known = {f.name for f in base.signature.functions}
    new: List[FunctionSymbol] = []
    for proof in proofs:
        if proof is None:
            continue
        for item in _mentioned(proof):
            if isinstance(item, (Var, App)):
                found = [s.fn for s in subterms(item) if isinstance(s, App)]
            else:
                found = function_symbols(item)
            for fn in found:
                if fn.is_constant and fn.name not in known:
                    known.add(fn.name)
                    new.append(fn)
    if not new:
        return base
    return extend_theory(base, Signature(functions=tuple(new)))


def record_theory(base: Theory, record: DatasetRecord) -> Theory:
    """``base`` extended with the constants a record mentions"""
    return proof_theory(base, record.proof, record.dual_proof)


def _check_meta(record: DatasetRecord, index: Optional[int]) -> None:
    """Sizes and counts in the metadata must match the proofs they describe"""
    expected = {
        "proof_size": proof_size(record.proof),
        "proof_depth": proof_depth(record.proof),
        "premise_count": len(conjuncts(record.sequent.premise)),
        "dual_size": 0 if record.dual_proof is None else sieve_size(record.dual_proof),
    }
    for name, value in expected.items():
        found = getattr(record.meta, name)
        if found != value:
            raise InvalidRecord(f"meta {name} is {found}, the proofs give {value}", index)


def validate_record(t: Theory, record: DatasetRecord, index: Optional[int] = None) -> None:
    """
    Re-check a record from scratch

    Raises:
        InvalidRecord: Naming the first failing check
    """
    try:
        concluded = check_proof(t, record.proof)
        if not sequents_alpha_equal(concluded, record.sequent):
            raise InvalidRecord("proof does not conclude the record's sequent", index)
        _check_meta(record, index)
        if record.dual_claim is None and record.dual_proof is None:
            return
        if record.dual_claim is None or record.dual_proof is None:
            raise InvalidRecord("record carries only half of its dual", index)
        if not claims_equal(record.dual_claim, dualize_statement(t, record.sequent)):
            raise InvalidRecord("dual claim is not the dual of the sequent", index)
        if not claims_equal(check_sieve_proof(t, record.dual_proof), record.dual_claim):
            raise InvalidRecord("sieve proof concludes a different claim", index)
        compiled = compile_proof(t, record.dual_proof)
        if not sequents_alpha_equal(check_proof(t, compiled), record.sequent):
            raise InvalidRecord("compiled proof concludes a different sequent", index)
    except InvalidRecord:
        raise
    except ObservableLogicException as exc:
        raise InvalidRecord(exc.message, index) from exc


def build_record(t: Theory, fb: FactBase, fact: Fact, seed: int, sample: int) -> DatasetRecord:
    """Traceback, elaborate and dualize one derived fact, validating the result"""
    g = traceback(fb, fact)
    proof = elaborate(t, g)
    q = dualize_proof(t, proof)
    record = DatasetRecord(
        theory_id=t.id,
        sequent=proof.conclusion,
        proof=proof,
        meta=RecordMeta(
            seed=seed,
            sample=sample,
            proof_size=proof_size(proof),
            proof_depth=proof_depth(proof),
            premise_count=len(g.leaves),
            dual_size=sieve_size(q),
        ),
        dual_claim=dualize_statement(t, proof.conclusion),
        dual_proof=q,
    )
    validate_record(t, record)
    return record


@dataclass
class SampleOutcome:
    sample: int
    records: List[DatasetRecord] = field(default_factory=list)
    skipped: List[Tuple[str, str]] = field(default_factory=list)
    exhausted: bool = False


def generate_sample(t: Theory, constants: Sequence[FunctionSymbol], cfg: GenConfig, sample: int) -> SampleOutcome:
    """All records of one premise sample; ``t`` must declare ``constants``"""
    outcome = SampleOutcome(sample)
    rules, _ = horn_partition(t)
    try:
        _, fb = _sample(t, rules, constants, cfg, sample_rng(cfg.seed, sample))
    except ConsistencyRetriesExhausted:
        outcome.exhausted = True
        return outcome
    except LimitExceeded as exc:
        outcome.skipped.append((f"sample {sample}", exc.message))
        return outcome
    for fact in fb.derived():
        if isinstance(fact, Bottom):
            continue
        try:
            outcome.records.append(build_record(t, fb, fact, cfg.seed, sample))
        except ObservableLogicException as exc:
            outcome.skipped.append((str(fact), exc.message))
    return outcome


def _outcomes(t: Theory, constants: Tuple[FunctionSymbol, ...], cfg: GenConfig,
              workers: int) -> Iterator[SampleOutcome]:
    if workers <= 1:
        for sample in range(cfg.max_samples):
            yield generate_sample(t, constants, cfg, sample)
        return
    window = workers * 4
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for start in range(0, cfg.max_samples, window):
            samples = range(start, min(start + window, cfg.max_samples))
            yield from pool.map(
                generate_sample, itertools.repeat(t), itertools.repeat(constants), itertools.repeat(cfg), samples
            )


def generate_records(t: Theory, cfg: GenConfig, workers: Optional[int] = None,
                     audit: Optional[PipelineAuditLogger] = None) -> Iterator[DatasetRecord]:
    """
    Records for ``t`` in (sample, derivation) order, at most ``cfg.max_records``

    Records that fail elaboration, dualization or validation are skipped and
    counted, never emitted.

    Raises:
        PreconditionViolated: If ``t`` has no Horn axioms
    """
    if not horn_partition(t)[0]:
        raise PreconditionViolated("generate", f"theory {t.id} has no Horn axioms")
    audit = audit or PipelineAuditLogger()
    workers = workers or settings.GEN_WORKERS
    bound, consts = generation_theory(t, cfg)
    audit.log_generation_start(t.id, cfg.seed, cfg.max_records)
    emitted = skipped = samples = 0
    if cfg.max_records:
        for outcome in _outcomes(bound, consts, cfg, workers):
            samples += 1
            for target, reason in outcome.skipped:
                skipped += 1
                audit.log_record_skipped(t.id, target, reason)
            for record in outcome.records:
                if emitted == cfg.max_records:
                    break
                emitted += 1
                yield record
            if emitted == cfg.max_records:
                break
    audit.log_generation_complete(t.id, emitted, skipped, samples)


def generate_corpus(theories: Sequence[Theory], cfg: GenConfig,
                    workers: Optional[int] = None) -> List[DatasetRecord]:
    """Records of every theory in turn, grouped by theory in input order"""
    audit = PipelineAuditLogger()
    records: List[DatasetRecord] = []
    for t in theories:
        per_theory = cfg.model_copy(update={"theory_id": t.id})
        records.extend(generate_records(t, per_theory, workers, audit))
    logger.info("corpus_generated", theories=[t.id for t in theories], records=len(records))
    return records


def dualize_dataset(records: Sequence[DatasetRecord], theories: Mapping[str, Theory]) -> List[DatasetRecord]:
    """
    Attach the covering claim and sieve proof to every record, in order

    Raises:
        ConfigurationException: If a record names a theory missing from ``theories``
        UnsupportedRule: With the index of the first record whose proof has no dual
    """
    out: List[DatasetRecord] = []
    for i, r in enumerate(records):
        base = theories.get(r.theory_id)
        if base is None:
            raise ConfigurationException("theory", f"record {i} names unknown theory '{r.theory_id}'")
        t = record_theory(base, r)
        try:
            q = dualize_proof(t, r.proof)
        except UnsupportedRule as exc:
            raise UnsupportedRule(exc.rule, record_index=i) from exc
        out.append(
            replace(
                r,
                dual_claim=dualize_statement(t, r.sequent),
                dual_proof=q,
                meta=r.meta.model_copy(update={"dual_size": sieve_size(q)}),
            )
        )
    return out
