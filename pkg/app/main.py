"""
Command-Line Entry Point

``obsdual`` ties the toolchain together for batch use: checking theories,
closing and proving problems, checking and converting proofs between the
sequent and sieve calculi, and generating, verifying and summarizing dual
corpora.

Standard output carries data, standard error carries diagnostics. Exit
codes: 0 ok, 1 semantic negative (unproved, inconsistent, rejected),
2 usage or parse error, 3 I/O error, 4 resource limit, 5 unsupported rule.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import (
    BudgetExceeded,
    CompileFailed,
    ConfigurationException,
    InvalidRecord,
    LimitExceeded,
    MalformedLine,
    NotADualStatement,
    ObservableLogicException,
    PreconditionViolated,
    ProofCheckError,
    SchemaVersionMismatch,
    TheoryParseError,
    UnsupportedRule,
    WellFormednessError,
)
from app.core.logger import get_logger, set_log_level
from app.dsl import builtin_ids, resolve_theory
from app.dsl.parser import parse_problem_file
from app.models.dataset import GenConfig
from app.models.deduction import EngineLimits, Fact, FactBase
from app.models.logic import Problem, Theory, format_formula
from app.models.proof import ProofTree
from app.services.corpus_io import deserialize, dumps_proof, iter_records, loads_proof, serialize, write_corpus
from app.services.corpus_stats import corpus_stats
from app.services.dataset_generator import generate_corpus, proof_theory, record_theory, validate_record
from app.services.deduction import prove_problem, saturate_problem
from app.services.kernel import check_proof
from app.services.topo_dual import check_sieve_proof, compile_proof, dualize_proof

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_LIMIT = 4
EXIT_UNSUPPORTED = 5


class _Style:
    """ANSI highlighting for one stream, governed by OBS_COLOR"""

    _CODES = {"red": "31", "green": "32", "yellow": "33", "bold": "1"}

    def __init__(self, stream: TextIO, mode: Optional[str] = None):
        mode = mode or settings.OBS_COLOR
        if mode == "auto":
            self.enabled = hasattr(stream, "isatty") and stream.isatty()
        else:
            self.enabled = mode == "always"

    def __call__(self, text: str, color: str) -> str:
        if not self.enabled:
            return text
        return f"\033[{self._CODES[color]}m{text}\033[0m"


class _Console:
    def __init__(self, out: TextIO, err: TextIO):
        self.out = out
        self.err = err
        self.out_style = _Style(out)
        self.err_style = _Style(err)

    def data(self, text: str) -> None:
        self.out.write(text if text.endswith("\n") else text + "\n")

    def verdict(self, text: str, color: str) -> None:
        self.data(self.out_style(text, color))

    def error(self, message: str) -> None:
        self.err.write(f"{self.err_style('error', 'red')}: {message}\n")

    def note(self, message: str) -> None:
        self.err.write(f"{message}\n")


def exit_code_for(exc: BaseException) -> int:
    """Map an exception family onto the exit-code contract"""
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, (LimitExceeded, BudgetExceeded)):
        return EXIT_LIMIT
    if isinstance(exc, (UnsupportedRule, NotADualStatement)):
        return EXIT_UNSUPPORTED
    if isinstance(exc, (ProofCheckError, CompileFailed, InvalidRecord, MalformedLine)):
        return EXIT_NEGATIVE
    if isinstance(
        exc,
        (
            TheoryParseError,
            WellFormednessError,
            SchemaVersionMismatch,
            ConfigurationException,
            PreconditionViolated,
            ValidationError,
        ),
    ):
        return EXIT_USAGE
    return EXIT_NEGATIVE


def _limits(args: argparse.Namespace) -> EngineLimits:
    given = {"max_facts": args.max_facts, "max_rounds": args.max_rounds}
    return EngineLimits(**{k: v for k, v in given.items() if v is not None})


def _write(console: _Console, text: str, output: Optional[Path]) -> None:
    if output is None:
        console.out.write(text)
    else:
        output.write_text(text, encoding="utf-8", newline="\n")


def _load_problem(args: argparse.Namespace) -> Tuple[Theory, Problem]:
    theory = resolve_theory(args.theory)
    return theory, parse_problem_file(args.problem, theory)


def _format_provenance(fb: FactBase, fact: Fact) -> str:
    why = fb.why(fact)
    if why is None or why.is_premise:
        return "premise"
    parents = ", ".join(format_formula(p) for p in why.parents)
    return f"{why.rule} [{parents}]"


# --- subcommands -------------------------------------------------------------


def cmd_check(args: argparse.Namespace, console: _Console) -> int:
    theory = resolve_theory(args.theory)
    sig = theory.signature
    console.data(
        f"ok {theory.id}: {len(sig.sorts)} sorts, {len(sig.functions)} functions, "
        f"{len(sig.relations)} relations, {len(theory.axioms)} axioms"
    )
    if args.problem is not None:
        problem = parse_problem_file(args.problem, theory)
        console.data(f"ok problem: {len(problem.premises)} premises, goal {format_formula(problem.goal)}")
    return EXIT_OK


def cmd_close(args: argparse.Namespace, console: _Console) -> int:
    _, problem = _load_problem(args)
    try:
        fb = saturate_problem(problem, _limits(args))
    except LimitExceeded as exc:
        if isinstance(exc.partial, FactBase):
            console.note(f"partial closure has {len(exc.partial)} facts after {exc.partial.rounds} rounds")
        raise
    for fact in fb:
        console.data(f"{format_formula(fact)}\t<- {_format_provenance(fb, fact)}")
    if fb.inconsistent:
        console.verdict("INCONSISTENT", "yellow")
        return EXIT_NEGATIVE
    console.note(f"{len(fb)} facts, {fb.rounds} rounds")
    return EXIT_OK


def cmd_prove(args: argparse.Namespace, console: _Console) -> int:
    theory, problem = _load_problem(args)
    proof = prove_problem(problem, _limits(args))
    if proof is None:
        console.verdict("UNPROVED", "yellow")
        return EXIT_NEGATIVE
    t = problem.theory
    artifacts: List[Tuple[str, str]] = []
    if args.emit in ("logic", "both"):
        artifacts.append((".obsproof", dumps_proof(theory.id, proof)))
    if args.emit in ("dual", "both"):
        q = dualize_proof(t, proof)
        check_sieve_proof(t, q)
        artifacts.append((".sieve.obsproof", dumps_proof(theory.id, q)))
    for suffix, text in artifacts:
        target = None if args.output is None else args.output.with_name(args.output.name + suffix)
        _write(console, text, target)
    console.note(f"proved {format_formula(problem.goal)}")
    return EXIT_OK


def _load_proof(args: argparse.Namespace, theory: Theory, kind: str, console: _Console):
    loaded = loads_proof(Path(args.proof))
    if loaded.kind != kind:
        console.error(f"{args.proof} holds a {loaded.kind} proof, expected {kind}")
        return None
    if loaded.theory_id != theory.id:
        console.note(f"warning: proof was written for theory '{loaded.theory_id}', checking against '{theory.id}'")
    return loaded


def cmd_checkproof(args: argparse.Namespace, console: _Console) -> int:
    theory = resolve_theory(args.theory)
    loaded = _load_proof(args, theory, args.kind, console)
    if loaded is None:
        return EXIT_USAGE
    t = proof_theory(theory, loaded.proof)
    try:
        if isinstance(loaded.proof, ProofTree):
            concluded = str(check_proof(t, loaded.proof))
        else:
            concluded = str(check_sieve_proof(t, loaded.proof))
    except ProofCheckError as exc:
        console.verdict(f"REJECTED {exc.message}", "red")
        return EXIT_NEGATIVE
    console.verdict(f"ACCEPTED {concluded}", "green")
    return EXIT_OK


def cmd_dualize(args: argparse.Namespace, console: _Console) -> int:
    theory = resolve_theory(args.theory)
    loaded = _load_proof(args, theory, "logic", console)
    if loaded is None:
        return EXIT_USAGE
    t = proof_theory(theory, loaded.proof)
    q = dualize_proof(t, loaded.proof)
    check_sieve_proof(t, q)
    _write(console, dumps_proof(loaded.theory_id, q), args.output)
    return EXIT_OK


def cmd_compile(args: argparse.Namespace, console: _Console) -> int:
    theory = resolve_theory(args.theory)
    loaded = _load_proof(args, theory, "sieve", console)
    if loaded is None:
        return EXIT_USAGE
    t = proof_theory(theory, loaded.proof)
    check_sieve_proof(t, loaded.proof)
    p = compile_proof(t, loaded.proof)
    check_proof(t, p)
    _write(console, dumps_proof(loaded.theory_id, p), args.output)
    return EXIT_OK


def cmd_gen(args: argparse.Namespace, console: _Console) -> int:
    theories = [resolve_theory(ref) for ref in args.theories]
    fields = {
        "theory_id": theories[0].id,
        "constant_count": args.constants,
        "premise_count": args.premises,
        "max_records": args.records,
        "limits": _limits(args),
    }
    if args.seed is not None:
        fields["seed"] = args.seed
    if args.max_samples is not None:
        fields["max_samples"] = args.max_samples
    cfg = GenConfig(**fields)
    records = generate_corpus(theories, cfg, workers=args.workers)
    if args.output is None:
        n = serialize(records, console.out)
    else:
        n = write_corpus(args.output, records)
    console.note(f"{n} records")
    return EXIT_OK


def _theory_table(refs: Sequence[str]) -> Dict[str, Theory]:
    table: Dict[str, Theory] = {}
    for ref in [*builtin_ids(), *refs]:
        t = resolve_theory(ref)
        table[t.id] = t
    return table


def cmd_verify(args: argparse.Namespace, console: _Console) -> int:
    theories = _theory_table(args.theory or [])
    checked = failed = 0
    for index, (line, item) in enumerate(iter_records(Path(args.corpus))):
        checked += 1
        if isinstance(item, MalformedLine):
            failed += 1
            console.error(f"line {line}: {item.message}")
            continue
        base = theories.get(item.theory_id)
        if base is None:
            failed += 1
            console.error(f"line {line}: unknown theory '{item.theory_id}'")
            continue
        try:
            validate_record(record_theory(base, item), item, index)
        except InvalidRecord as exc:
            failed += 1
            console.error(f"line {line}: {exc.message}")
    if failed:
        console.verdict(f"FAILED {failed} of {checked} records", "red")
        return EXIT_NEGATIVE
    console.verdict(f"OK {checked} records", "green")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace, console: _Console) -> int:
    stats = corpus_stats(deserialize(Path(args.corpus)))
    console.data(stats.model_dump_json(indent=2))
    return EXIT_OK


# --- argument parsing --------------------------------------------------------


def _add_limits(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-facts", type=int, default=None, help=f"fact budget (default: {settings.MAX_FACTS})")
    p.add_argument("--max-rounds", type=int, default=None, help=f"round budget (default: {settings.MAX_ROUNDS})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obsdual", description="Observable logic prover and topological dual toolchain"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    theory_help = "theory .obs file or builtin id"

    p = sub.add_parser("check", help="parse and check a theory (and optionally a problem)")
    p.add_argument("theory", help=theory_help)
    p.add_argument("--problem", type=Path, default=None, help="problem file to check against the theory")
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("close", help="print the deductive closure of a problem with provenance")
    p.add_argument("theory", help=theory_help)
    p.add_argument("problem", type=Path)
    _add_limits(p)
    p.set_defaults(handler=cmd_close)

    p = sub.add_parser("prove", help="prove a problem's goal and emit the proof")
    p.add_argument("theory", help=theory_help)
    p.add_argument("problem", type=Path)
    p.add_argument("--emit", choices=("logic", "dual", "both"), default="logic")
    p.add_argument("-o", "--output", type=Path, default=None,
                   help="output stem; writes STEM.obsproof and/or STEM.sieve.obsproof")
    _add_limits(p)
    p.set_defaults(handler=cmd_prove)

    p = sub.add_parser("checkproof", help="check a proof file")
    p.add_argument("theory", help=theory_help)
    p.add_argument("proof", type=Path)
    p.add_argument("--kind", choices=("logic", "sieve"), default="logic")
    p.set_defaults(handler=cmd_checkproof)

    p = sub.add_parser("dualize", help="turn a sequent-calculus proof into a sieve proof")
    p.add_argument("theory", help=theory_help)
    p.add_argument("proof", type=Path)
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(handler=cmd_dualize)

    p = sub.add_parser("compile", help="turn a sieve proof into a sequent-calculus proof")
    p.add_argument("theory", help=theory_help)
    p.add_argument("proof", type=Path)
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(handler=cmd_compile)

    p = sub.add_parser("gen", help="generate a dual corpus")
    p.add_argument("theories", nargs="+", help="theory .obs files or builtin ids")
    p.add_argument("--seed", type=int, default=None, help=f"sampling seed (default: {settings.DEFAULT_SEED})")
    p.add_argument("--constants", type=int, default=3)
    p.add_argument("--premises", type=int, default=2)
    p.add_argument("--records", type=int, default=100, help="records per theory")
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--workers", type=int, default=None, help=f"worker processes (default: {settings.GEN_WORKERS})")
    p.add_argument("-o", "--output", type=Path, default=None, help=".obsdual corpus file")
    _add_limits(p)
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser("verify", help="re-check every record of a corpus")
    p.add_argument("corpus", type=Path)
    p.add_argument("--theory", action="append", help="extra theory file for record theory ids (repeatable)")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("stats", help="summarize a corpus as JSON")
    p.add_argument("corpus", type=Path)
    p.set_defaults(handler=cmd_stats)

    return parser


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    console = _Console(out or sys.stdout, err or sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.verbose:
        set_log_level("INFO")

    try:
        return args.handler(args, console)
    except TheoryParseError as exc:
        for diagnostic in exc.diagnostics:
            console.error(str(diagnostic))
        return EXIT_USAGE
    except ObservableLogicException as exc:
        logger.info("command_failed", command=args.command, error=type(exc).__name__)
        console.error(exc.message)
        return exit_code_for(exc)
    except ValidationError as exc:
        console.error(str(exc))
        return EXIT_USAGE
    except UnicodeDecodeError as exc:
        console.error(f"input is not valid UTF-8: {exc.reason}")
        return EXIT_USAGE
    except OSError as exc:
        console.error(f"{exc.filename or ''}: {exc.strerror or exc}")
        return EXIT_IO


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
