"""
Custom Exception Classes

This module defines the exception hierarchy of the observable logic
toolchain. Every error carries the location of the fault (subterm, proof
path, source line, record index) so batch and CLI layers can report it.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple


ProofPath = Tuple[int, ...]


def format_path(path: Sequence[int]) -> str:
    """Render a proof path as ``root/0/1``"""
    return "/".join(["root", *(str(i) for i in path)])


class ObservableLogicException(Exception):
    """Base exception for the toolchain"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


# --- well-formedness ---------------------------------------------------------


class WellFormednessError(ObservableLogicException):
    """A term, formula or signature violates the grammar or sort discipline"""

    def __init__(self, message: str, subterm: Any = None):
        self.subterm = subterm
        super().__init__(message, {"subterm": subterm})


class UnknownVariable(WellFormednessError):
    pass


class UnknownSymbol(WellFormednessError):
    pass


class UnknownSort(WellFormednessError):
    pass


class ArityMismatch(WellFormednessError):
    pass


class SortMismatch(WellFormednessError):
    def __init__(self, message: str, subterm: Any = None, position: Optional[int] = None):
        self.position = position
        super().__init__(message, subterm)


class DuplicateBinder(WellFormednessError):
    pass


class NameCollision(WellFormednessError):
    pass


# --- proof kernel ------------------------------------------------------------


class ProofCheckError(ObservableLogicException):
    """A proof node is not a correct rule instance"""

    def __init__(self, path: Sequence[int], message: str):
        self.path: ProofPath = tuple(path)
        super().__init__(f"{message} at {format_path(self.path)}", {"path": self.path})


class RuleMismatch(ProofCheckError):
    pass


class IllFormedSequent(ProofCheckError):
    pass


class PayloadError(ProofCheckError):
    pass


class UnknownAxiom(ProofCheckError):
    def __init__(self, name: str, path: Sequence[int] = ()):
        self.name = name
        super().__init__(path, f"Unknown axiom '{name}'")


class PreconditionViolated(ObservableLogicException):
    """A rule constructor was called outside its side conditions"""

    def __init__(self, rule: str, condition: str):
        self.rule = rule
        self.condition = condition
        super().__init__(f"{rule}: precondition violated: {condition}")


# --- semantics ---------------------------------------------------------------


class MissingAssignment(ObservableLogicException):
    def __init__(self, variable: Any):
        self.variable = variable
        super().__init__(f"No value assigned to free variable {variable}")


class BudgetExceeded(ObservableLogicException):
    def __init__(self, space: int, cap: int):
        self.space = space
        self.cap = cap
        super().__init__(
            f"Model enumeration space {space} exceeds the configured cap {cap}"
        )


# --- theory language ---------------------------------------------------------


class TheoryParseError(ObservableLogicException):
    """Raised with every diagnostic collected while reading a source file"""

    def __init__(self, diagnostics: List[Any]):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else "unknown parse failure"
        super().__init__(str(first), {"count": len(self.diagnostics)})


class NonGroundPremise(TheoryParseError):
    pass


# --- deduction engine --------------------------------------------------------


class LimitExceeded(ObservableLogicException):
    def __init__(self, kind: str, limit: int, partial: Any = None):
        self.kind = kind
        self.limit = limit
        self.partial = partial
        super().__init__(f"Saturation exceeded max_{kind}={limit}")


class TargetAbsent(ObservableLogicException):
    def __init__(self, target: Any):
        self.target = target
        super().__init__(f"Target {target} is not in the fact base")


class ElaborationFailed(ObservableLogicException):
    def __init__(self, path: Sequence[Any], message: str):
        self.path = tuple(path)
        super().__init__(f"Elaboration failed at {self.path}: {message}")


# --- logic/topology duality --------------------------------------------------


class UnsupportedRule(ObservableLogicException):
    def __init__(self, rule: str, record_index: Optional[int] = None):
        self.rule = rule
        self.record_index = record_index
        where = f" in record {record_index}" if record_index is not None else ""
        super().__init__(f"Rule {rule} has no dual{where}")


class NotADualStatement(ObservableLogicException):
    pass


class CompileFailed(ObservableLogicException):
    def __init__(self, path: Sequence[int], message: str):
        self.path: ProofPath = tuple(path)
        super().__init__(f"Compilation failed at {format_path(self.path)}: {message}")


class PullbackError(ProofCheckError):
    pass


# --- dataset pipeline --------------------------------------------------------


class ConsistencyRetriesExhausted(ObservableLogicException):
    def __init__(self, theory_id: str, retries: int):
        self.theory_id = theory_id
        self.retries = retries
        super().__init__(
            f"No consistent premise set for theory {theory_id} after {retries} retries"
        )


class SchemaVersionMismatch(ObservableLogicException):
    def __init__(self, found: str, expected: str):
        self.found = found
        self.expected = expected
        super().__init__(f"Unsupported header '{found}', expected '{expected}'")


class MalformedLine(ObservableLogicException):
    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"Malformed line {line_number}: {message}")


class InvalidRecord(ObservableLogicException):
    """A corpus record fails one of its self-validation checks"""

    def __init__(self, message: str, record_index: Optional[int] = None):
        self.record_index = record_index
        where = f"Record {record_index}" if record_index is not None else "Record"
        super().__init__(f"{where} is invalid: {message}")


class ConfigurationException(ObservableLogicException):
    """Exception raised when configuration is invalid"""

    def __init__(self, setting: str, message: str):
        self.setting = setting
        super().__init__(f"Configuration error for {setting}: {message}")
