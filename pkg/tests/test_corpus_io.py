"""
Tests for corpus and proof file I/O
"""

import io

import pytest

from app.core.exceptions import MalformedLine, SchemaVersionMismatch
from app.dsl import parse_sequent
from app.models.proof import ProofTree
from app.services.corpus_io import (
    CORPUS_HEADER,
    PROOF_HEADER,
    decode_sequent,
    deserialize,
    dumps_proof,
    encode_sequent,
    iter_records,
    loads_proof,
    record_line,
    serialize,
    write_corpus,
)
from app.services.corpus_stats import corpus_stats
from app.services.dataset_generator import build_record, record_theory, validate_record
from app.services.deduction import prove_problem, saturate_problem
from app.services.logic import sequents_alpha_equal
from app.services.topo_dual import dualize_proof
from app.utils.sexp import format_sexp, parse_sexp


@pytest.fixture
def chain_records(chain_problem):
    fb = saturate_problem(chain_problem)
    return [build_record(chain_problem.theory, fb, fact, 0, 0) for fact in fb.derived()]


@pytest.fixture
def corpus_text(chain_records):
    sink = io.StringIO()
    serialize(chain_records, sink)
    return sink.getvalue()


class TestSexp:
    """Test the S-expression reader"""

    def test_quoted_atoms(self):
        """Test atoms with spaces and quotes survive"""
        x = ("a b", 'say "hi"', "", ("nested", "x'"))
        assert parse_sexp(format_sexp(x)) == x

    @pytest.mark.parametrize("text", ["(a b", "a)", "(a) (b)", "", '"open'])
    def test_malformed(self, text):
        """Test unbalanced or trailing input"""
        with pytest.raises(ValueError):
            parse_sexp(text)


class TestBinderEncoding:
    """Test bound variables are written with canonical names"""

    def test_alpha_variants_encode_alike(self, graph_sym):
        """Test renaming binders does not change the encoded line"""
        a = parse_sequent("[x:V] exists y:V. E(x, y) |- exists z:V. exists w:V. E(z, w)", graph_sym)
        b = parse_sequent("[x:V] exists u:V. E(x, u) |- exists y:V. exists z:V. E(y, z)", graph_sym)
        assert format_sexp(encode_sequent(a)) == format_sexp(encode_sequent(b))

    def test_binder_avoids_context_names(self, graph_sym):
        """Test a context variable named like a canonical binder"""
        s = parse_sequent("[_0:V] exists y:V. E(_0, y) |- true", graph_sym)
        premise = encode_sequent(s)[2]
        assert premise[0] == "exists"
        assert premise[1] == "_0'"

    def test_decoded_sequent_alpha_equal(self, graph_sym):
        """Test decoding a canonical encoding gives back the sequent up to renaming"""
        s = parse_sequent("[x:V, y:V] exists z:V. E(x, z) & E(z, y) |- \\/[E(x, y), exists z:V. E(z, z)]",
                          graph_sym)
        back = decode_sequent(parse_sexp(format_sexp(encode_sequent(s))))
        assert sequents_alpha_equal(back, s)


class TestCorpusFiles:
    """Test reading and writing corpora"""

    def test_header_and_lines(self, corpus_text, chain_records):
        """Test one header line and one line per record"""
        lines = corpus_text.splitlines()
        assert lines[0] == CORPUS_HEADER
        assert len(lines) == len(chain_records) + 1

    def test_read_back(self, graph_sym_trans, corpus_text, chain_records):
        """Test decoded records re-encode identically and validate"""
        records = deserialize(corpus_text)
        assert [record_line(r) for r in records] == [record_line(r) for r in chain_records]
        for r in records:
            validate_record(record_theory(graph_sym_trans, r), r)

    def test_empty_corpus(self):
        """Test a header with no records"""
        assert deserialize(CORPUS_HEADER + "\n") == []

    def test_missing_header(self, corpus_text):
        """Test a corpus without its header line"""
        with pytest.raises(SchemaVersionMismatch) as exc:
            deserialize("\n".join(corpus_text.splitlines()[1:]))
        assert exc.value.expected == CORPUS_HEADER

    def test_wrong_version(self, corpus_text):
        """Test a newer format version"""
        with pytest.raises(SchemaVersionMismatch) as exc:
            deserialize(corpus_text.replace(CORPUS_HEADER, "obsdual 2", 1))
        assert exc.value.found == "obsdual 2"

    def test_corrupted_line_number(self, corpus_text):
        """Test the first bad line is reported by its file line number"""
        lines = corpus_text.splitlines()
        lines[3] = lines[3][:-5]
        broken = "\n".join(lines) + "\n"
        with pytest.raises(MalformedLine) as exc:
            deserialize(broken)
        assert exc.value.line_number == 4

    def test_iter_records_continues(self, corpus_text, chain_records):
        """Test a bad line does not stop iteration"""
        lines = corpus_text.splitlines()
        lines[2] = "(record)"
        items = list(iter_records("\n".join(lines)))
        assert len(items) == len(chain_records)
        bad = [(n, item) for n, item in items if isinstance(item, MalformedLine)]
        assert [n for n, _ in bad] == [3]

    def test_blank_lines_skipped(self, corpus_text, chain_records):
        """Test blank lines between records"""
        assert len(deserialize(corpus_text.replace("\n", "\n\n"))) == len(chain_records)

    def test_write_and_read_path(self, tmp_path, chain_records):
        """Test a corpus file on disk"""
        path = tmp_path / "corpus.obsdual"
        assert write_corpus(path, chain_records) == len(chain_records)
        assert len(deserialize(path)) == len(chain_records)
        with path.open(encoding="utf-8") as handle:
            assert len(deserialize(handle)) == len(chain_records)


class TestProofFiles:
    """Test single-proof files"""

    def test_logic_proof(self, chain_problem):
        """Test a kernel proof file"""
        proof = prove_problem(chain_problem)
        text = dumps_proof("graph_sym_trans", proof)
        assert text.startswith(PROOF_HEADER + "\n")
        loaded = loads_proof(text)
        assert loaded.kind == "logic"
        assert loaded.theory_id == "graph_sym_trans"
        assert isinstance(loaded.proof, ProofTree)
        assert loaded.proof.conclusion == proof.conclusion

    def test_sieve_proof(self, chain_problem):
        """Test a sieve proof file"""
        q = dualize_proof(chain_problem.theory, prove_problem(chain_problem))
        loaded = loads_proof(dumps_proof("graph_sym_trans", q))
        assert loaded.kind == "sieve"
        assert dumps_proof("graph_sym_trans", loaded.proof) == dumps_proof("graph_sym_trans", q)

    def test_empty_file(self):
        """Test an empty proof file"""
        with pytest.raises(MalformedLine) as exc:
            loads_proof("")
        assert exc.value.line_number == 1

    def test_two_proofs(self, chain_problem):
        """Test a file holding more than one proof line"""
        text = dumps_proof("graph_sym_trans", prove_problem(chain_problem))
        with pytest.raises(MalformedLine) as exc:
            loads_proof(text + text.splitlines()[1] + "\n")
        assert exc.value.line_number == 3

    def test_unknown_kind(self):
        """Test a body that is neither logic nor sieve"""
        with pytest.raises(MalformedLine):
            loads_proof(f"{PROOF_HEADER}\n(topos t (x))\n")


class TestCorpusStats:
    """Test corpus statistics"""

    def test_counts(self, chain_records):
        """Test record counts and histograms sum to the corpus size"""
        stats = corpus_stats(chain_records)
        assert stats.record_count == 7
        assert stats.per_theory == {"graph_sym_trans": 7}
        assert sum(stats.proof_size_histogram.values()) == 7
        assert sum(stats.dual_size_histogram.values()) == 7
        assert stats.rule_usage["Axiom"] >= 7
        assert stats.sieve_rule_usage["AxiomCover"] >= 7

    def test_empty(self):
        """Test statistics of an empty corpus"""
        stats = corpus_stats([])
        assert stats.record_count == 0
        assert stats.per_theory == {}
