"""
Theory Language Parser

Recursive descent over the tokens of ``app.dsl.lexer``. Variables are written
without sorts; their sorts are inferred from the argument positions they
occupy, then the typed sequent is re-checked with ``wf_sequent``. Errors are
collected per declaration and raised together as a ``TheoryParseError`` so a
caller never sees a partial theory.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from app.core.exceptions import NonGroundPremise, TheoryParseError, WellFormednessError
from app.core.logger import get_logger
from app.dsl.lexer import Token, tokenize
from app.dsl.source import ParseDiagnostic, SourceFile
from app.models.logic import (
    BOTTOM,
    TOP,
    And,
    App,
    Atom,
    Axiom,
    Context,
    Eq,
    Exists,
    Formula,
    FunctionSymbol,
    Or,
    Problem,
    Rel,
    RelationSymbol,
    Sequent,
    Signature,
    Sort,
    Term,
    Theory,
    Top,
    Bottom,
    Var,
    Variable,
)
from app.services.logic import extend_theory, wf_formula, wf_sequent

logger = get_logger(__name__)

FORMAT_VERSION = "1"

_THEORY_DECLS = ("theory", "sort", "fn", "rel", "axiom")
_PROBLEM_DECLS = ("theory", "points", "assume", "goal")
_DECL_KEYWORDS = frozenset(_THEORY_DECLS + _PROBLEM_DECLS)

Source = Union[SourceFile, str]


class _Abort(Exception):
    def __init__(self, message: str, start: int, end: int, non_ground: bool = False):
        super().__init__(message)
        self.message = message
        self.start = start
        self.end = end
        self.non_ground = non_ground


# --- raw syntax (variables not yet sorted) -----------------------------------


@dataclass(frozen=True)
class _RawVar:
    name: str
    start: int
    end: int


@dataclass(frozen=True)
class _RawApp:
    fn: FunctionSymbol
    args: Tuple["_RawTerm", ...]
    start: int
    end: int


_RawTerm = Union[_RawVar, _RawApp]


@dataclass(frozen=True)
class _RawRel:
    rel: RelationSymbol
    args: Tuple[_RawTerm, ...]
    start: int
    end: int


@dataclass(frozen=True)
class _RawEq:
    lhs: _RawTerm
    rhs: _RawTerm
    start: int
    end: int


@dataclass(frozen=True)
class _RawAnd:
    left: "_Raw"
    right: "_Raw"


@dataclass(frozen=True)
class _RawOr:
    disjuncts: Tuple["_Raw", ...]


@dataclass(frozen=True)
class _RawExists:
    var: Variable
    body: "_Raw"


_Raw = Union[_RawRel, _RawEq, _RawAnd, _RawOr, _RawExists, Top, Bottom]


def _raw_free_names(f: _Raw) -> List[_RawVar]:
    """Free variable occurrences in order of first appearance, one per name"""
    seen: Dict[str, _RawVar] = {}

    def term(t: _RawTerm, bound: frozenset[str]) -> None:
        if isinstance(t, _RawApp):
            for a in t.args:
                term(a, bound)
        elif t.name not in bound and t.name not in seen:
            seen[t.name] = t

    def visit(g: _Raw, bound: frozenset[str]) -> None:
        if isinstance(g, _RawRel):
            for a in g.args:
                term(a, bound)
        elif isinstance(g, _RawEq):
            term(g.lhs, bound)
            term(g.rhs, bound)
        elif isinstance(g, _RawAnd):
            visit(g.left, bound)
            visit(g.right, bound)
        elif isinstance(g, _RawOr):
            for d in g.disjuncts:
                visit(d, bound)
        elif isinstance(g, _RawExists):
            visit(g.body, bound | {g.var.name})

    visit(f, frozenset())
    return list(seen.values())


class _SortInference:
    """Propagates sorts from argument positions to untyped variables"""

    def __init__(self, known: Dict[str, Sort]):
        self.env: Dict[str, Sort] = dict(known)
        self.changed = False

    def term(self, t: _RawTerm, expected: Optional[Sort], scope: Dict[str, Sort]) -> Optional[Sort]:
        if isinstance(t, _RawApp):
            for a, s in zip(t.args, t.fn.arg_sorts):
                self.term(a, s, scope)
            actual: Optional[Sort] = t.fn.result_sort
        elif t.name in scope:
            actual = scope[t.name]
        else:
            actual = self.env.get(t.name)
            if actual is None and expected is not None:
                self.env[t.name] = expected
                self.changed = True
                return expected
        if expected is not None and actual is not None and actual != expected:
            raise _Abort(f"'{_show(t)}' has sort {actual}, expected {expected}", t.start, t.end)
        return actual

    def formula(self, f: _Raw, scope: Dict[str, Sort]) -> None:
        if isinstance(f, _RawRel):
            for a, s in zip(f.args, f.rel.arg_sorts):
                self.term(a, s, scope)
        elif isinstance(f, _RawEq):
            left = self.term(f.lhs, None, scope)
            right = self.term(f.rhs, left, scope)
            if left is None and right is not None:
                self.term(f.lhs, right, scope)
        elif isinstance(f, _RawAnd):
            self.formula(f.left, scope)
            self.formula(f.right, scope)
        elif isinstance(f, _RawOr):
            for d in f.disjuncts:
                self.formula(d, scope)
        elif isinstance(f, _RawExists):
            self.formula(f.body, {**scope, f.var.name: f.var.sort})

    def run(self, formulas: Sequence[_Raw]) -> Dict[str, Sort]:
        self.changed = True
        while self.changed:
            self.changed = False
            for f in formulas:
                self.formula(f, {})
        return self.env


def _show(t: _RawTerm) -> str:
    if isinstance(t, _RawVar):
        return t.name
    if not t.args:
        return t.fn.name
    return f"{t.fn.name}({', '.join(_show(a) for a in t.args)})"


def _build_term(t: _RawTerm, scope: Dict[str, Variable]) -> Term:
    if isinstance(t, _RawApp):
        return App(t.fn, tuple(_build_term(a, scope) for a in t.args))
    v = scope.get(t.name)
    if v is None:
        raise _Abort(f"free variable '{t.name}' not in context", t.start, t.end)
    return Var(v)


def _build(f: _Raw, scope: Dict[str, Variable]) -> Formula:
    if isinstance(f, _RawRel):
        return Rel(f.rel, tuple(_build_term(a, scope) for a in f.args))
    if isinstance(f, _RawEq):
        return Eq(_build_term(f.lhs, scope), _build_term(f.rhs, scope))
    if isinstance(f, _RawAnd):
        return And(_build(f.left, scope), _build(f.right, scope))
    if isinstance(f, _RawOr):
        return Or(tuple(_build(d, scope) for d in f.disjuncts))
    if isinstance(f, _RawExists):
        return Exists(f.var, _build(f.body, {**scope, f.var.name: f.var}))
    return f


# --- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, source: SourceFile, base: Optional[Signature] = None):
        self.source = source
        self.tokens: List[Token] = tokenize(source)
        self.i = 0
        self.diagnostics: List[ParseDiagnostic] = []
        self.non_ground = False
        base = base or Signature()
        self.sorts: Dict[str, Sort] = {s.name: s for s in base.sorts}
        self.functions: Dict[str, FunctionSymbol] = {f.name: f for f in base.functions}
        self.relations: Dict[str, RelationSymbol] = {r.name: r for r in base.relations}
        self.theory_id: Optional[str] = None
        self.axioms: List[Axiom] = []
        self._bound: List[str] = []
        self._context_names: frozenset[str] = frozenset()

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.i += 1
        return tok

    def _at(self, kind: str, value: Optional[str] = None) -> bool:
        return self.tok.is_(kind, value)

    def _accept(self, kind: str, value: Optional[str] = None) -> Optional[Token]:
        if self._at(kind, value):
            return self._advance()
        return None

    def _expect(self, kind: str, value: Optional[str] = None, what: Optional[str] = None) -> Token:
        if self._at(kind, value):
            return self._advance()
        wanted = what or (f"'{value}'" if value else kind)
        raise _Abort(f"expected {wanted}, found {self.tok.describe()}", self.tok.start, self.tok.end)

    def _name(self, what: str) -> Token:
        return self._expect("ident", what=what)

    def _theory_ref(self) -> Token:
        """A theory id; extended theories are named ``base+extension``"""
        first = self._name("theory name")
        parts, end = [first.value], first.end
        while self._accept("punct", "+"):
            part = self._name("extension name")
            parts.append(part.value)
            end = part.end
        return Token("ident", "+".join(parts), first.start, end)

    def _report(self, err: _Abort) -> None:
        self.diagnostics.append(self.source.diagnostic(err.message, err.start, err.end))
        self.non_ground = self.non_ground or err.non_ground

    def _synchronize(self) -> None:
        """Skip to the start of the next declaration"""
        self._advance()
        while not self._at("eof"):
            prev = self.tokens[self.i - 1]
            if prev.is_("punct", ".") and self.tok.kind == "keyword" and self.tok.value in _DECL_KEYWORDS:
                return
            self._advance()

    def signature(self) -> Signature:
        return Signature(
            sorts=tuple(self.sorts.values()),
            functions=tuple(self.functions.values()),
            relations=tuple(self.relations.values()),
        )

    # declarations

    def header(self) -> None:
        if not self._at("keyword", "obs"):
            return
        try:
            self._advance()
            version = self._expect("int", what="format version")
            if version.value != FORMAT_VERSION:
                raise _Abort(
                    f"unsupported format version {version.value} (expected {FORMAT_VERSION})",
                    version.start,
                    version.end,
                )
            self._accept("punct", ".")
        except _Abort as err:
            self._report(err)
            self._synchronize()

    def declarations(self, allowed: Sequence[str], handler) -> None:
        while not self._at("eof"):
            tok = self.tok
            try:
                if tok.kind != "keyword" or tok.value not in allowed:
                    if tok.kind == "keyword" and tok.value in _DECL_KEYWORDS:
                        raise _Abort(f"'{tok.value}' is not allowed in this file", tok.start, tok.end)
                    raise _Abort(f"expected a declaration, found {tok.describe()}", tok.start, tok.end)
                handler(self._advance())
            except _Abort as err:
                self._report(err)
                self._synchronize()

    def theory_declaration(self, kw: Token) -> None:
        handlers = {
            "theory": self._theory_name,
            "sort": self._sort_decl,
            "fn": self._fn_decl,
            "rel": self._rel_decl,
            "axiom": self._axiom_decl,
        }
        handlers[kw.value](kw)

    def _theory_name(self, kw: Token) -> None:
        name = self._theory_ref()
        self._expect("punct", ".")
        if self.theory_id is not None:
            raise _Abort("theory name declared twice", kw.start, name.end)
        self.theory_id = name.value

    def _sort_ref(self) -> Sort:
        tok = self._name("sort name")
        sort = self.sorts.get(tok.value)
        if sort is None:
            raise _Abort(f"unknown sort '{tok.value}'", tok.start, tok.end)
        return sort

    def _fresh_symbol(self, tok: Token) -> None:
        if tok.value in self.functions or tok.value in self.relations:
            raise _Abort(f"symbol '{tok.value}' is already declared", tok.start, tok.end)

    def _sort_decl(self, kw: Token) -> None:
        names = [self._name("sort name")]
        while self._accept("punct", ","):
            names.append(self._name("sort name"))
        self._expect("punct", ".")
        for tok in names:
            if tok.value in self.sorts:
                raise _Abort(f"sort '{tok.value}' is already declared", tok.start, tok.end)
            self.sorts[tok.value] = Sort(tok.value)

    def _fn_decl(self, kw: Token) -> None:
        name = self._name("function name")
        self._fresh_symbol(name)
        self._expect("punct", ":")
        args: List[Sort] = []
        if self._accept("arrow"):
            result = self._sort_ref()
        else:
            args.append(self._sort_ref())
            while self._accept("punct", ","):
                args.append(self._sort_ref())
            if self._accept("arrow"):
                result = self._sort_ref()
            elif len(args) == 1:
                result = args.pop()
            else:
                raise _Abort(f"expected '->', found {self.tok.describe()}", self.tok.start, self.tok.end)
        self._expect("punct", ".")
        self.functions[name.value] = FunctionSymbol(name.value, tuple(args), result)

    def _rel_decl(self, kw: Token) -> None:
        name = self._name("relation name")
        self._fresh_symbol(name)
        self._expect("punct", "(")
        args = [self._sort_ref()]
        while self._accept("punct", ","):
            args.append(self._sort_ref())
        self._expect("punct", ")")
        self._expect("punct", ".")
        self.relations[name.value] = RelationSymbol(name.value, tuple(args))

    def _context(self) -> Optional[List[Variable]]:
        if not self._accept("punct", "["):
            return None
        variables: List[Variable] = []
        if self._accept("punct", "]"):
            return variables
        while True:
            name = self._name("variable name")
            self._expect("punct", ":")
            sort = self._sort_ref()
            if any(v.name == name.value for v in variables):
                raise _Abort(f"variable '{name.value}' declared twice in context", name.start, name.end)
            variables.append(Variable(name.value, sort))
            if self._accept("punct", "]"):
                return variables
            self._expect("punct", ",", what="',' or ']'")

    def sequent(self, start: int) -> Sequent:
        """``[ctx]? premise |- conclusion`` with the context inferred when omitted"""
        declared = self._context()
        self._context_names = frozenset(v.name for v in declared or ())
        try:
            if declared is not None:
                self._accept("punct", ":")
            premise = self.formula()
            self._expect("turnstile", what="'|-'")
            conclusion = self.formula()
        finally:
            self._context_names = frozenset()
        end = self.tokens[self.i - 1].end

        if declared is None:
            free = _raw_free_names(premise)
            env = _SortInference({}).run([premise, conclusion])
            variables = []
            for occ in free:
                sort = env.get(occ.name) or self._default_sort(occ)
                variables.append(Variable(occ.name, sort))
        else:
            _SortInference({v.name: v.sort for v in declared}).run([premise, conclusion])
            variables = declared
        scope = {v.name: v for v in variables}
        s = Sequent(Context(tuple(variables)), _build(premise, scope), _build(conclusion, scope))
        try:
            wf_sequent(self.signature(), s)
        except WellFormednessError as exc:
            raise _Abort(exc.message, start, end) from exc
        return s

    def _default_sort(self, occ: _RawVar) -> Sort:
        if len(self.sorts) == 1:
            return next(iter(self.sorts.values()))
        raise _Abort(f"cannot infer the sort of variable '{occ.name}'", occ.start, occ.end)

    def _axiom_decl(self, kw: Token) -> None:
        name = self._name("axiom name")
        if self._at("punct", ":"):
            self._advance()
        s = self.sequent(kw.start)
        self._expect("punct", ".")
        if any(a.name == name.value for a in self.axioms):
            raise _Abort(f"axiom '{name.value}' is already declared", name.start, name.end)
        self.axioms.append(Axiom(name.value, s))

    # formulas

    def formula(self) -> _Raw:
        left = self._unary()
        if self._accept("punct", "&"):
            return _RawAnd(left, self.formula())
        return left

    def _unary(self) -> _Raw:
        tok = self.tok
        if self._accept("keyword", "true"):
            return TOP
        if self._accept("keyword", "false"):
            return BOTTOM
        if self._accept("punct", "("):
            inner = self.formula()
            self._expect("punct", ")")
            return inner
        if self._accept("vee"):
            self._expect("punct", "[")
            disjuncts: List[_Raw] = []
            if not self._accept("punct", "]"):
                disjuncts.append(self.formula())
                while self._accept("punct", ","):
                    disjuncts.append(self.formula())
                self._expect("punct", "]", what="',' or ']'")
            return _RawOr(tuple(disjuncts))
        if self._accept("keyword", "exists"):
            name = self._name("bound variable")
            self._expect("punct", ":")
            sort = self._sort_ref()
            self._expect("punct", ".")
            self._bound.append(name.value)
            try:
                body = self.formula()
            finally:
                self._bound.pop()
            return _RawExists(Variable(name.value, sort), body)
        if tok.kind == "ident" and tok.value in self.relations:
            return self._relation()
        lhs = self._term()
        self._expect("punct", "=", what="a formula")
        rhs = self._term()
        return _RawEq(lhs, rhs, tok.start, self.tokens[self.i - 1].end)

    def _relation(self) -> _RawRel:
        name = self._advance()
        rel = self.relations[name.value]
        self._expect("punct", "(")
        args = [self._term()]
        while self._accept("punct", ","):
            args.append(self._term())
        close = self._expect("punct", ")", what="',' or ')'")
        if len(args) != rel.arity:
            raise _Abort(
                f"'{rel.name}' expects {rel.arity} arguments, got {len(args)}", name.start, close.end
            )
        return _RawRel(rel, tuple(args), name.start, close.end)

    def _term(self) -> _RawTerm:
        name = self._name("a term")
        if self._at("punct", "("):
            fn = self.functions.get(name.value)
            if fn is None:
                raise _Abort(f"unknown function symbol '{name.value}'", name.start, name.end)
            self._advance()
            args = [self._term()]
            while self._accept("punct", ","):
                args.append(self._term())
            close = self._expect("punct", ")", what="',' or ')'")
            if len(args) != fn.arity:
                raise _Abort(
                    f"'{fn.name}' expects {fn.arity} arguments, got {len(args)}", name.start, close.end
                )
            return _RawApp(fn, tuple(args), name.start, close.end)
        if name.value in self._bound or name.value in self._context_names:
            return _RawVar(name.value, name.start, name.end)
        if name.value in self.relations:
            raise _Abort(f"relation '{name.value}' used as a term", name.start, name.end)
        fn = self.functions.get(name.value)
        if fn is not None:
            if not fn.is_constant:
                raise _Abort(
                    f"'{fn.name}' expects {fn.arity} arguments, got 0", name.start, name.end
                )
            return _RawApp(fn, (), name.start, name.end)
        return _RawVar(name.value, name.start, name.end)

    def finish(self) -> None:
        if self.diagnostics:
            error = NonGroundPremise if self.non_ground else TheoryParseError
            raise error(self.diagnostics)


def _as_source(src: Source) -> SourceFile:
    return src if isinstance(src, SourceFile) else SourceFile(src)


def parse_theory(src: Source, base: Optional[Signature] = None, default_id: str = "theory") -> Theory:
    """
    Parse a theory file

    Args:
        src: Source text or a ``SourceFile``
        base: Signature the file extends; its symbols may be used but not redeclared
        default_id: Theory id used when the file has no ``theory`` declaration

    Raises:
        TheoryParseError: With every diagnostic found
    """
    source = _as_source(src)
    parser = _Parser(source, base)
    parser.header()
    parser.declarations(_THEORY_DECLS, parser.theory_declaration)
    parser.finish()
    theory = Theory(parser.theory_id or default_id, parser.signature(), tuple(parser.axioms))
    logger.debug(
        "theory_parsed", theory=theory.id, path=source.path, axioms=len(theory.axioms)
    )
    return theory


def parse_theory_file(path: Union[str, Path], base: Optional[Signature] = None) -> Theory:
    return parse_theory(SourceFile.from_path(path), base=base, default_id=Path(path).stem)


def parse_sequent(src: Source, theory: Theory) -> Sequent:
    """Parse a single ``[ctx]? premise |- conclusion`` over ``theory``'s signature"""
    source = _as_source(src)
    parser = _Parser(source, theory.signature)
    s: Optional[Sequent] = None
    try:
        s = parser.sequent(parser.tok.start)
        parser._accept("punct", ".")
        if not parser._at("eof"):
            tok = parser.tok
            raise _Abort(f"unexpected {tok.describe()} after sequent", tok.start, tok.end)
    except _Abort as err:
        parser._report(err)
    parser.finish()
    assert s is not None
    return s


class _ProblemParser(_Parser):
    def __init__(self, source: SourceFile, theory: Theory):
        super().__init__(source, theory.signature)
        self.theory = theory
        self.points: List[FunctionSymbol] = []
        self.premises: List[Atom] = []
        self.goal: Optional[Tuple[Formula, Context]] = None

    def problem_declaration(self, kw: Token) -> None:
        if kw.value == "theory":
            name = self._theory_ref()
            self._expect("punct", ".")
            if name.value != self.theory.id:
                raise _Abort(
                    f"problem refers to theory '{name.value}' but '{self.theory.id}' was given",
                    name.start,
                    name.end,
                )
        elif kw.value == "points":
            self._points()
        elif kw.value == "assume":
            self._assume()
        else:
            self._goal(kw)

    def _points(self) -> None:
        names = [self._name("point name")]
        while self._at("ident") or self._at("punct", ","):
            self._accept("punct", ",")
            names.append(self._name("point name"))
        if self._accept("punct", ":"):
            sort = self._sort_ref()
        elif len(self.sorts) == 1:
            sort = next(iter(self.sorts.values()))
        else:
            raise _Abort("points need a ': Sort' annotation", names[0].start, names[-1].end)
        self._expect("punct", ".")
        for tok in names:
            self._fresh_symbol(tok)
            fn = FunctionSymbol(tok.value, (), sort)
            self.functions[tok.value] = fn
            self.points.append(fn)

    def _assume(self) -> None:
        raws: List[Tuple[_Raw, Token]] = []
        if not self._at("punct", "."):
            raws.append((self.formula(), self.tokens[self.i - 1]))
            while self._accept("punct", ","):
                raws.append((self.formula(), self.tokens[self.i - 1]))
        self._expect("punct", ".")
        for raw, last in raws:
            if not isinstance(raw, (_RawRel, _RawEq)):
                raise _Abort("premises must be atoms", last.start, last.end)
            free = _raw_free_names(raw)
            if free:
                occ = free[0]
                raise _Abort(
                    f"premise mentions variable '{occ.name}'; premises must be ground",
                    occ.start,
                    occ.end,
                    non_ground=True,
                )
            atom = _build(raw, {})
            try:
                wf_formula(self.signature(), Context(), atom)
            except WellFormednessError as exc:
                raise _Abort(exc.message, raw.start, raw.end) from exc
            self.premises.append(atom)  # type: ignore[arg-type]

    def _goal(self, kw: Token) -> None:
        raw = self.formula()
        end = self.tokens[self.i - 1].end
        self._expect("punct", ".")
        if self.goal is not None:
            raise _Abort("problem declares more than one goal", kw.start, end)
        env = _SortInference({}).run([raw])
        variables = [
            Variable(occ.name, env.get(occ.name) or self._default_sort(occ))
            for occ in _raw_free_names(raw)
        ]
        ctx = Context(tuple(variables))
        goal = _build(raw, {v.name: v for v in variables})
        try:
            wf_formula(self.signature(), ctx, goal)
        except WellFormednessError as exc:
            raise _Abort(exc.message, kw.start, end) from exc
        self.goal = (goal, ctx)


def parse_problem(src: Source, theory: Theory) -> Problem:
    """
    Parse a problem file against an already parsed theory

    Points become constants of the returned problem's theory; premises must be
    ground atoms over them. The goal may contain free variables, which form
    the goal context.

    Raises:
        NonGroundPremise: If a premise mentions a variable
        TheoryParseError: For every other diagnostic
    """
    source = _as_source(src)
    parser = _ProblemParser(source, theory)
    parser.header()
    parser.declarations(_PROBLEM_DECLS, parser.problem_declaration)
    if parser.goal is None and not parser.diagnostics:
        end = len(source.text)
        parser.diagnostics.append(source.diagnostic("problem has no goal", end, end))
    parser.finish()
    assert parser.goal is not None
    goal, ctx = parser.goal
    extended = extend_theory(theory, Signature(functions=tuple(parser.points)))
    return Problem(extended, tuple(parser.premises), goal, ctx, tuple(parser.points))


def parse_problem_file(path: Union[str, Path], theory: Theory) -> Problem:
    return parse_problem(SourceFile.from_path(path), theory)
