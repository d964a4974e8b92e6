"""
Tests for synthetic dataset generation
"""

from dataclasses import replace

import pytest

from app.core.exceptions import (
    ConfigurationException,
    ConsistencyRetriesExhausted,
    InvalidRecord,
    PreconditionViolated,
    UnsupportedRule,
)
from app.dsl import builtin_theory, parse_theory
from app.models.dataset import DatasetRecord, GenConfig, RecordMeta
from app.models.logic import Context, Variable
from app.services.corpus_io import record_line
from app.services.dataset_generator import (
    build_record,
    candidate_lines,
    dualize_dataset,
    fresh_constants,
    generate_corpus,
    generate_records,
    generate_sample,
    generation_theory,
    herbrand_atoms,
    sample_premises,
    sample_rng,
    validate_record,
)
from app.services.deduction import horn_partition, saturate, saturate_problem
from app.services.kernel import check_proof, eq_refl
from app.services.logic import conjuncts, is_ground, sequents_alpha_equal
from app.services.topo_dual import (
    check_sieve_proof,
    claim_sequent,
    claims_equal,
    compile_proof,
    dualize_proof,
    dualize_statement,
)

NO_HORN = r"""theory wild.
sort V.
rel E(V, V).
axiom either [x:V, y:V]: E(x, y) |- \/[E(x, x), E(y, y)].
"""

HOSTILE = """theory hostile.
sort V.
rel P(V).
axiom no: P(x) |- false.
"""


@pytest.fixture
def chain_records(chain_problem):
    fb = saturate_problem(chain_problem)
    return [build_record(chain_problem.theory, fb, fact, 0, 0) for fact in fb.derived()]


@pytest.fixture
def small_config():
    return GenConfig(theory_id="graph_sym_trans", constant_count=3, premise_count=2, seed=7,
                     max_records=12, max_samples=8)


class TestCandidateLines:
    """Test line counts through point pairs"""

    @pytest.mark.parametrize("points,lines", [(0, 0), (1, 0), (5, 10), (12, 66), (37, 666)])
    def test_pairs(self, points, lines):
        """Test n(n-1)/2"""
        assert candidate_lines(points) == lines

    def test_negative(self):
        """Test a negative point count"""
        with pytest.raises(PreconditionViolated):
            candidate_lines(-1)


class TestSampling:
    """Test seeded premise sampling"""

    def test_rng_streams(self):
        """Test a stream depends only on the seed and the sample index"""
        first = sample_rng(42, 3).integers(0, 1000, size=8).tolist()
        assert sample_rng(42, 3).integers(0, 1000, size=8).tolist() == first
        assert sample_rng(42, 4).integers(0, 1000, size=8).tolist() != first

    def test_fresh_constants(self, graph_sym, vertex):
        """Test constants are named a, b, c over the relation sort"""
        consts = fresh_constants(graph_sym.signature, 3)
        assert [c.name for c in consts] == ["a", "b", "c"]
        assert all(c.is_constant and c.result_sort == vertex for c in consts)

    def test_fresh_constants_avoid_declared(self, chain_problem):
        """Test names already in the signature are primed"""
        consts = fresh_constants(chain_problem.theory.signature, 4)
        names = [c.name for c in consts]
        assert names[3] == "d"
        assert not {"a", "b", "c"} & set(names)

    def test_herbrand_atoms(self, graph_sym):
        """Test every edge over three constants"""
        consts = fresh_constants(graph_sym.signature, 3)
        assert len(herbrand_atoms(graph_sym.signature, consts)) == 9

    def test_sample_premises(self, graph_sym_trans, small_config):
        """Test distinct ground premises with a consistent closure"""
        premises = sample_premises(graph_sym_trans, small_config, sample_rng(7, 0))
        assert len(premises) == 2
        assert len(set(premises)) == 2
        assert all(is_ground(p) for p in premises)
        assert premises == sample_premises(graph_sym_trans, small_config, sample_rng(7, 0))

    def test_retries_exhausted(self):
        """Test a theory refuting every atom"""
        t = parse_theory(HOSTILE)
        cfg = GenConfig(theory_id="hostile", premise_count=1, retries=3)
        with pytest.raises(ConsistencyRetriesExhausted):
            sample_premises(t, cfg, sample_rng(0, 0))
        bound, consts = generation_theory(t, cfg)
        assert generate_sample(bound, consts, cfg, 0).exhausted

    def test_no_horn_axioms(self):
        """Test a theory with nothing to chain"""
        t = parse_theory(NO_HORN)
        with pytest.raises(PreconditionViolated):
            list(generate_records(t, GenConfig(theory_id="wild")))


class TestRecords:
    """Test record construction and validation"""

    def test_one_record_per_derived_fact(self, chain_records):
        """Test the chain closure yields seven valid records"""
        assert len(chain_records) == 7
        assert all(r.is_dualized for r in chain_records)

    def test_minimal_sequents(self, chain_records):
        """Test record premises are the minimal leaves"""
        counts = sorted(r.meta.premise_count for r in chain_records)
        assert counts[0] == 1
        assert counts[-1] == 2
        assert all(r.sequent.context == Context() for r in chain_records)

    def test_sizes_recorded(self, chain_records):
        """Test metadata carries both proof sizes"""
        for r in chain_records:
            assert r.meta.proof_size >= 1
            assert r.meta.dual_size >= 1
            assert r.meta.proof_depth <= r.meta.proof_size

    def test_validate_rejects_wrong_sequent(self, chain_problem, chain_records):
        """Test a record whose proof concludes something else"""
        a, b = chain_records[0], chain_records[1]
        with pytest.raises(InvalidRecord):
            validate_record(chain_problem.theory, replace(a, sequent=b.sequent))

    def test_validate_rejects_half_dual(self, chain_problem, chain_records):
        """Test a record with a claim but no sieve proof"""
        with pytest.raises(InvalidRecord) as exc:
            validate_record(chain_problem.theory, replace(chain_records[0], dual_proof=None), index=4)
        assert exc.value.record_index == 4

    def test_validate_rejects_foreign_dual(self, chain_problem, chain_records):
        """Test a sieve proof borrowed from another record"""
        a, b = chain_records[0], chain_records[1]
        with pytest.raises(InvalidRecord):
            validate_record(chain_problem.theory, replace(a, dual_proof=b.dual_proof))

    @pytest.mark.parametrize("field", ["proof_size", "proof_depth", "premise_count", "dual_size"])
    def test_validate_rejects_wrong_meta(self, chain_problem, chain_records, field):
        """Test metadata that disagrees with the proofs it describes"""
        record = chain_records[0]
        meta = record.meta.model_copy(update={field: getattr(record.meta, field) + 1})
        with pytest.raises(InvalidRecord) as exc:
            validate_record(chain_problem.theory, replace(record, meta=meta), index=2)
        assert field in str(exc.value)
        assert exc.value.record_index == 2


class TestDualizeDataset:
    """Test attaching duals to plain records"""

    def test_matches_built_duals(self, graph_sym_trans, chain_records):
        """Test dualizing stripped records restores their duals"""
        stripped = [r.without_duals() for r in chain_records]
        assert not any(r.is_dualized for r in stripped)
        again = dualize_dataset(stripped, {"graph_sym_trans": graph_sym_trans})
        assert [record_line(r) for r in again] == [record_line(r) for r in chain_records]

    def test_unknown_theory(self, chain_records):
        """Test a record naming a theory that was not supplied"""
        with pytest.raises(ConfigurationException):
            dualize_dataset(chain_records, {})

    def test_unsupported_rule_index(self, graph_sym, graph_sym_trans, chain_records, vertex):
        """Test the failing record is named"""
        x = Variable("x", vertex)
        proof = eq_refl(Context((x,)), x)
        meta = RecordMeta(seed=0, sample=0, proof_size=1, proof_depth=1, premise_count=0)
        bad = DatasetRecord("graph_sym", proof.conclusion, proof, meta)
        records = [r.without_duals() for r in chain_records[:2]] + [bad]
        theories = {"graph_sym": graph_sym, "graph_sym_trans": graph_sym_trans}
        with pytest.raises(UnsupportedRule) as exc:
            dualize_dataset(records, theories)
        assert exc.value.record_index == 2


class TestGeneration:
    """Test whole generation runs"""

    def test_records_valid(self, graph_sym_trans, small_config):
        """Test every emitted record validates against the generation theory"""
        bound, _ = generation_theory(graph_sym_trans, small_config)
        records = list(generate_records(graph_sym_trans, small_config, workers=1))
        assert 0 < len(records) <= small_config.max_records
        for r in records:
            validate_record(bound, r)
            assert r.theory_id == "graph_sym_trans"
            assert r.meta.seed == 7

    def test_deterministic(self, graph_sym_trans, small_config):
        """Test two runs with one seed produce the same records"""
        first = [record_line(r) for r in generate_records(graph_sym_trans, small_config, workers=1)]
        second = [record_line(r) for r in generate_records(graph_sym_trans, small_config, workers=1)]
        assert first == second

    def test_zero_records(self, graph_sym_trans, small_config):
        """Test a run capped at nothing"""
        cfg = small_config.model_copy(update={"max_records": 0})
        assert list(generate_records(graph_sym_trans, cfg)) == []

    @pytest.mark.slow
    def test_worker_count_invariant(self, graph_sym_trans, small_config):
        """Test parallel generation merges in sample order"""
        serial = [record_line(r) for r in generate_records(graph_sym_trans, small_config, workers=1)]
        parallel = [record_line(r) for r in generate_records(graph_sym_trans, small_config, workers=3)]
        assert parallel == serial

    def test_corpus_grouped_by_theory(self, graph_sym, graph_sym_trans, small_config):
        """Test theories contribute records in input order"""
        cfg = small_config.model_copy(update={"max_records": 3})
        records = generate_corpus([graph_sym, graph_sym_trans], cfg, workers=1)
        ids = [r.theory_id for r in records]
        assert ids == sorted(ids, key=["graph_sym", "graph_sym_trans"].index)
        assert set(ids) == {"graph_sym", "graph_sym_trans"}


@pytest.fixture(scope="module")
def large_corpus():
    """A thousand records, half over each graph theory"""
    theories = [builtin_theory("graph_sym"), builtin_theory("graph_sym_trans")]
    cfg = GenConfig(theory_id="graph_sym", constant_count=4, premise_count=3, seed=2024,
                    max_records=500, max_samples=2000)
    records = generate_corpus(theories, cfg, workers=1)
    bound = {t.id: generation_theory(t, cfg)[0] for t in theories}
    return records, bound


@pytest.mark.slow
class TestLargeCorpus:
    """Test properties every record of a thousand-record corpus must have"""

    def test_size(self, large_corpus):
        """Test the corpus reaches its record budget"""
        records, _ = large_corpus
        assert len(records) == 1000

    def test_traceback_leaves_minimal(self, large_corpus):
        """Test every record needs all of its premises and no fewer"""
        records, bound = large_corpus
        for r in records:
            t = bound[r.theory_id]
            rules, _ = horn_partition(t)
            leaves = list(conjuncts(r.sequent.premise))
            target = r.sequent.conclusion
            assert target in leaves or target in saturate(rules, leaves, signature=t.signature)
            for leaf in leaves:
                rest = [p for p in leaves if p != leaf]
                assert target not in saturate(rules, rest, signature=t.signature), record_line(r)

    def test_statement_round_trip(self, large_corpus):
        """Test dualizing a record's sequent and reading the claim back gives the sequent"""
        records, bound = large_corpus
        for r in records:
            t = bound[r.theory_id]
            claim = dualize_statement(t, r.sequent)
            assert claims_equal(claim, r.dual_claim)
            assert sequents_alpha_equal(claim_sequent(claim), r.sequent)

    def test_proof_round_trip(self, large_corpus):
        """Test dualizing a proof then compiling it back checks and concludes the sequent"""
        records, bound = large_corpus
        for r in records:
            t = bound[r.theory_id]
            q = dualize_proof(t, r.proof)
            assert claims_equal(check_sieve_proof(t, q), r.dual_claim)
            compiled = compile_proof(t, q)
            assert sequents_alpha_equal(check_proof(t, compiled), r.sequent)
            again = dualize_proof(t, compiled)
            assert claims_equal(check_sieve_proof(t, again), r.dual_claim)
