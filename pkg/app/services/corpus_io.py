"""
Corpus and Proof File I/O

Records and proofs are written as single-line S-expressions. Every symbol
carries its sorts, so a file can be read back without the theory it was
generated from.

Encodings::

    term     (v x S) | (f name (S ...) S term ...)
    formula  true | false | (R name (S ...) term ...) | (= term term)
             | (and f f) | (or f ...) | (exists _d S f)
    sequent  (seq (ctx (x S) ...) formula formula)
    proof    (Rule sequent (payload ...) proof ...)
    claim    (claim object morphism ...)  object (obj ctx formula)
    morphism (mono object formula) | (smap object ctx (subst ((v x S) term) ...))
    sieve    (Rule claim (payload ...) sieve ...)

A corpus file starts with the header ``obsdual 1`` and holds one
``(record ...)`` per line; a proof file starts with ``obsproof 1`` and holds
one ``(logic id proof)`` or ``(sieve id sieve)`` line.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import IO, Dict, Iterable, Iterator, List, Optional, Set, Tuple, Union

from app.core.exceptions import MalformedLine, ObservableLogicException, SchemaVersionMismatch
from app.core.logger import get_logger
from app.models.dataset import DatasetRecord, RecordMeta
from app.models.logic import (
    BOTTOM,
    TOP,
    And,
    App,
    Bottom,
    Context,
    Eq,
    Exists,
    Formula,
    FunctionSymbol,
    Or,
    Rel,
    RelationSymbol,
    Sequent,
    Sort,
    Term,
    Top,
    Var,
    Variable,
)
from app.models.proof import ProofTree, RulePayload, RuleTag
from app.models.sieve import (
    CoveringClaim,
    MorphismKind,
    SieveProof,
    SieveRule,
    SiteMorphism,
    SiteObject,
    entail_mono,
    subst_map,
)
from app.services.logic import free_vars
from app.utils.sexp import Sexp, expect_atom, expect_list, format_sexp, parse_sexp

logger = get_logger(__name__)

CORPUS_HEADER = "obsdual 1"
PROOF_HEADER = "obsproof 1"

# a str is file content, not a path
Source = Union[str, Path, IO[str]]


# --- encoders ----------------------------------------------------------------


def _sorts(sorts: Iterable[Sort]) -> Sexp:
    return tuple(s.name for s in sorts)


def _variable(v: Variable) -> Sexp:
    return ("v", v.name, v.sort.name)


def encode_term(t: Term, bound: Optional[Dict[Variable, Variable]] = None) -> Sexp:
    if isinstance(t, Var):
        return _variable(bound.get(t.var, t.var) if bound else t.var)
    fn = t.fn
    return ("f", fn.name, _sorts(fn.arg_sorts), fn.result_sort.name, *(encode_term(a, bound) for a in t.args))


def encode_formula(f: Formula, scope: Iterable[str] = ()) -> Sexp:
    """
    Bound variables are renamed by nesting depth to ``_0``, ``_1``, ..., primed
    away from the free variables and the names in ``scope``, so alpha-variants
    encode identically
    """
    taken = set(scope) | {v.name for v in free_vars(f)}
    return _formula(f, {}, taken, 0)


def _formula(f: Formula, bound: Dict[Variable, Variable], taken: Set[str], depth: int) -> Sexp:
    match f:
        case Top():
            return "true"
        case Bottom():
            return "false"
        case Rel(rel, args):
            return ("R", rel.name, _sorts(rel.arg_sorts), *(encode_term(a, bound) for a in args))
        case Eq(lhs, rhs):
            return ("=", encode_term(lhs, bound), encode_term(rhs, bound))
        case And(left, right):
            return ("and", _formula(left, bound, taken, depth), _formula(right, bound, taken, depth))
        case Or(disjuncts):
            return ("or", *(_formula(d, bound, taken, depth) for d in disjuncts))
        case Exists(v, body):
            name = f"_{depth}"
            while name in taken:
                name += "'"
            inner = {**bound, v: Variable(name, v.sort)}
            return ("exists", name, v.sort.name, _formula(body, inner, taken, depth + 1))
    raise TypeError(f"Not a formula: {f!r}")


def _context(ctx: Context) -> Sexp:
    return ("ctx", *((v.name, v.sort.name) for v in ctx))


def encode_sequent(s: Sequent) -> Sexp:
    names = [v.name for v in s.context]
    return ("seq", _context(s.context), encode_formula(s.premise, names), encode_formula(s.conclusion, names))


def _substitution(pairs: Iterable[Tuple[Variable, Term]]) -> Sexp:
    return ("subst", *((_variable(v), encode_term(t)) for v, t in pairs))


def _payload(p: RulePayload) -> Sexp:
    items: List[Sexp] = []
    if p.axiom is not None:
        items.append(("axiom", p.axiom))
    if p.substitution:
        items.append(_substitution(p.substitution))
    if p.index is not None:
        items.append(("index", str(p.index)))
    if p.variable is not None:
        items.append(("bind", _variable(p.variable)))
    return ("payload", *items)


def encode_proof(p: ProofTree) -> Sexp:
    return (p.rule.value, encode_sequent(p.conclusion), _payload(p.payload), *(encode_proof(c) for c in p.premises))


def _object(o: SiteObject) -> Sexp:
    return ("obj", _context(o.context), encode_formula(o.formula, [v.name for v in o.context]))


def encode_morphism(m: SiteMorphism) -> Sexp:
    if m.kind is MorphismKind.ENTAIL_MONO:
        return ("mono", _object(m.target), encode_formula(m.extra, [v.name for v in m.target.context]))
    return ("smap", _object(m.target), _context(m.source_context), _substitution(m.substitution))


def encode_claim(c: CoveringClaim) -> Sexp:
    return ("claim", _object(c.base), *(encode_morphism(m) for m in c.family))


def encode_sieve_proof(q: SieveProof) -> Sexp:
    items: List[Sexp] = []
    if q.axiom is not None:
        items.append(("axiom", q.axiom))
    if q.morphism is not None:
        items.append(("along", encode_morphism(q.morphism)))
    if q.variable is not None:
        items.append(("bind", _variable(q.variable)))
    return (q.rule.value, encode_claim(q.conclusion), ("payload", *items),
            *(encode_sieve_proof(c) for c in q.children))


def encode_record(r: DatasetRecord) -> Sexp:
    m = r.meta
    meta = (
        "meta",
        ("seed", str(m.seed)),
        ("sample", str(m.sample)),
        ("proof_size", str(m.proof_size)),
        ("proof_depth", str(m.proof_depth)),
        ("premise_count", str(m.premise_count)),
        ("dual_size", str(m.dual_size)),
    )
    claim = encode_claim(r.dual_claim) if r.dual_claim is not None else "none"
    dual = encode_sieve_proof(r.dual_proof) if r.dual_proof is not None else "none"
    return ("record", r.theory_id, encode_sequent(r.sequent), encode_proof(r.proof), claim, dual, meta)


# --- decoders ----------------------------------------------------------------


def _int(x: Sexp) -> int:
    text = expect_atom(x)
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}")


def _decode_sorts(x: Sexp) -> Tuple[Sort, ...]:
    if isinstance(x, str):
        raise ValueError(f"expected a sort list, got {x!r}")
    return tuple(Sort(expect_atom(s)) for s in x)


def _decode_variable(x: Sexp) -> Variable:
    _, name, sort = expect_list(x, "v", 3)
    return Variable(expect_atom(name), Sort(expect_atom(sort)))


def decode_term(x: Sexp) -> Term:
    if isinstance(x, tuple) and x and x[0] == "v":
        return Var(_decode_variable(x))
    items = expect_list(x, "f", 4)
    fn = FunctionSymbol(expect_atom(items[1]), _decode_sorts(items[2]), Sort(expect_atom(items[3])))
    return App(fn, tuple(decode_term(a) for a in items[4:]))


def decode_formula(x: Sexp) -> Formula:
    if x == "true":
        return TOP
    if x == "false":
        return BOTTOM
    if isinstance(x, str) or not x:
        raise ValueError(f"expected a formula, got {format_sexp(x)[:60]}")
    head = x[0]
    if head == "R" and len(x) >= 3:
        rel = RelationSymbol(expect_atom(x[1]), _decode_sorts(x[2]))
        return Rel(rel, tuple(decode_term(a) for a in x[3:]))
    if head == "=" and len(x) == 3:
        return Eq(decode_term(x[1]), decode_term(x[2]))
    if head == "and" and len(x) == 3:
        return And(decode_formula(x[1]), decode_formula(x[2]))
    if head == "or":
        return Or(tuple(decode_formula(d) for d in x[1:]))
    if head == "exists" and len(x) == 4:
        return Exists(Variable(expect_atom(x[1]), Sort(expect_atom(x[2]))), decode_formula(x[3]))
    raise ValueError(f"unknown formula head {head!r}")


def _decode_context(x: Sexp) -> Context:
    items = expect_list(x, "ctx")
    variables = []
    for item in items[1:]:
        if isinstance(item, str) or len(item) != 2:
            raise ValueError(f"expected (name Sort), got {format_sexp(item)}")
        variables.append(Variable(expect_atom(item[0]), Sort(expect_atom(item[1]))))
    return Context(tuple(variables))


def decode_sequent(x: Sexp) -> Sequent:
    _, ctx, premise, conclusion = expect_list(x, "seq", 4)
    return Sequent(_decode_context(ctx), decode_formula(premise), decode_formula(conclusion))


def _decode_substitution(x: Sexp) -> Tuple[Tuple[Variable, Term], ...]:
    pairs = []
    for item in expect_list(x, "subst")[1:]:
        if isinstance(item, str) or len(item) != 2:
            raise ValueError(f"expected (variable term), got {format_sexp(item)}")
        pairs.append((_decode_variable(item[0]), decode_term(item[1])))
    return tuple(pairs)


def _payload_items(x: Sexp) -> Iterator[Tuple[str, Tuple[Sexp, ...]]]:
    for item in expect_list(x, "payload")[1:]:
        if isinstance(item, str) or not item:
            raise ValueError(f"malformed payload item {format_sexp(item)}")
        yield expect_atom(item[0]), item


def decode_proof(x: Sexp) -> ProofTree:
    if isinstance(x, str) or len(x) < 3:
        raise ValueError(f"expected a proof node, got {format_sexp(x)[:60]}")
    try:
        rule = RuleTag(x[0])
    except ValueError:
        raise ValueError(f"unknown rule {x[0]!r}")
    axiom: Optional[str] = None
    substitution: Tuple[Tuple[Variable, Term], ...] = ()
    index: Optional[int] = None
    variable: Optional[Variable] = None
    for key, item in _payload_items(x[2]):
        if key == "axiom":
            axiom = expect_atom(item[1])
        elif key == "subst":
            substitution = _decode_substitution(item)
        elif key == "index":
            index = _int(item[1])
        elif key == "bind":
            variable = _decode_variable(item[1])
        else:
            raise ValueError(f"unknown payload item {key!r}")
    return ProofTree(
        rule,
        tuple(decode_proof(c) for c in x[3:]),
        decode_sequent(x[1]),
        RulePayload(axiom=axiom, substitution=substitution, index=index, variable=variable),
    )


def _decode_object(x: Sexp) -> SiteObject:
    _, ctx, formula = expect_list(x, "obj", 3)
    return SiteObject(_decode_context(ctx), decode_formula(formula))


def decode_morphism(x: Sexp) -> SiteMorphism:
    if isinstance(x, tuple) and x and x[0] == "mono":
        _, target, extra = expect_list(x, "mono", 3)
        return entail_mono(_decode_object(target), decode_formula(extra))
    _, target, ctx, pairs = expect_list(x, "smap", 4)
    return subst_map(_decode_object(target), _decode_substitution(pairs), _decode_context(ctx))


def decode_claim(x: Sexp) -> CoveringClaim:
    items = expect_list(x, "claim", 2)
    return CoveringClaim(_decode_object(items[1]), tuple(decode_morphism(m) for m in items[2:]))


def decode_sieve_proof(x: Sexp) -> SieveProof:
    if isinstance(x, str) or len(x) < 3:
        raise ValueError(f"expected a sieve proof node, got {format_sexp(x)[:60]}")
    try:
        rule = SieveRule(x[0])
    except ValueError:
        raise ValueError(f"unknown sieve rule {x[0]!r}")
    axiom: Optional[str] = None
    morphism: Optional[SiteMorphism] = None
    variable: Optional[Variable] = None
    for key, item in _payload_items(x[2]):
        if key == "axiom":
            axiom = expect_atom(item[1])
        elif key == "along":
            morphism = decode_morphism(item[1])
        elif key == "bind":
            variable = _decode_variable(item[1])
        else:
            raise ValueError(f"unknown payload item {key!r}")
    children = tuple(decode_sieve_proof(c) for c in x[3:])
    return SieveProof(rule, children, decode_claim(x[1]), axiom, morphism, variable)


def decode_record(x: Sexp) -> DatasetRecord:
    _, theory_id, sequent, proof, claim, dual, meta = expect_list(x, "record", 7)
    fields = {}
    for item in expect_list(meta, "meta")[1:]:
        if isinstance(item, str) or len(item) != 2:
            raise ValueError(f"malformed meta item {format_sexp(item)}")
        fields[expect_atom(item[0])] = _int(item[1])
    return DatasetRecord(
        theory_id=expect_atom(theory_id),
        sequent=decode_sequent(sequent),
        proof=decode_proof(proof),
        meta=RecordMeta(**fields),
        dual_claim=None if claim == "none" else decode_claim(claim),
        dual_proof=None if dual == "none" else decode_sieve_proof(dual),
    )


# --- corpus files ------------------------------------------------------------


def record_line(r: DatasetRecord) -> str:
    return format_sexp(encode_record(r))


def serialize(records: Iterable[DatasetRecord], sink: IO[str]) -> int:
    """Write the header and one line per record; returns the record count"""
    sink.write(CORPUS_HEADER + "\n")
    n = 0
    for r in records:
        sink.write(record_line(r) + "\n")
        n += 1
    return n


def _lines(source: Source) -> List[str]:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8").splitlines()
    if isinstance(source, str):
        return source.splitlines()
    return source.read().splitlines()


def _check_header(lines: List[str], expected: str) -> None:
    found = lines[0].strip() if lines else ""
    if found != expected:
        raise SchemaVersionMismatch(found, expected)


def iter_records(source: Source) -> Iterator[Tuple[int, Union[DatasetRecord, MalformedLine]]]:
    """
    ``(line number, record)`` pairs, with a ``MalformedLine`` in place of
    each line that does not decode

    Raises:
        SchemaVersionMismatch: If the header line is missing or different
    """
    lines = _lines(source)
    _check_header(lines, CORPUS_HEADER)
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            yield number, decode_record(parse_sexp(line))
        except (ValueError, TypeError, IndexError) as exc:
            yield number, MalformedLine(number, str(exc))
        except ObservableLogicException as exc:
            yield number, MalformedLine(number, exc.message)


def deserialize(source: Source) -> List[DatasetRecord]:
    """
    Records of a corpus, in file order

    Raises:
        SchemaVersionMismatch: If the header line is missing or different
        MalformedLine: With the 1-based line number of the first bad line
    """
    records = []
    for _, item in iter_records(source):
        if isinstance(item, MalformedLine):
            raise item
        records.append(item)
    return records


def write_corpus(path: Path, records: Iterable[DatasetRecord]) -> int:
    with path.open("w", encoding="utf-8", newline="\n") as sink:
        n = serialize(records, sink)
    logger.info("corpus_written", path=str(path), records=n)
    return n


# --- proof files -------------------------------------------------------------


@dataclass(frozen=True)
class ProofFile:
    theory_id: str
    proof: Union[ProofTree, SieveProof]

    @property
    def kind(self) -> str:
        return "logic" if isinstance(self.proof, ProofTree) else "sieve"


def dumps_proof(theory_id: str, proof: Union[ProofTree, SieveProof]) -> str:
    if isinstance(proof, ProofTree):
        body = ("logic", theory_id, encode_proof(proof))
    else:
        body = ("sieve", theory_id, encode_sieve_proof(proof))
    return f"{PROOF_HEADER}\n{format_sexp(body)}\n"


def loads_proof(source: Source) -> ProofFile:
    """
    Raises:
        SchemaVersionMismatch: If the header line is missing or different
        MalformedLine: If the body is absent or does not decode
    """
    lines = _lines(source)
    if not any(line.strip() for line in lines):
        raise MalformedLine(1, "empty proof file")
    _check_header(lines, PROOF_HEADER)
    body = [(n, line) for n, line in enumerate(lines[1:], start=2) if line.strip()]
    if len(body) != 1:
        raise MalformedLine(len(lines) + 1 if not body else body[1][0], "expected exactly one proof line")
    number, line = body[0]
    try:
        x = parse_sexp(line)
        if isinstance(x, str) or len(x) != 3 or x[0] not in ("logic", "sieve"):
            raise ValueError("expected (logic id proof) or (sieve id proof)")
        theory_id = expect_atom(x[1])
        proof = decode_proof(x[2]) if x[0] == "logic" else decode_sieve_proof(x[2])
    except (ValueError, TypeError, IndexError) as exc:
        raise MalformedLine(number, str(exc)) from exc
    except ObservableLogicException as exc:
        raise MalformedLine(number, exc.message) from exc
    return ProofFile(theory_id, proof)
