"""
Source Files and Diagnostics

Text of a ``.obs`` file with a line index for span reporting.
"""

from __future__ import annotations

import bisect
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict

from app.core.exceptions import TheoryParseError


class Span(BaseModel):
    model_config = ConfigDict(frozen=True)

    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.start_line}:{self.start_col}-{self.end_line}:{self.end_col}"


class ParseDiagnostic(BaseModel):
    model_config = ConfigDict(frozen=True)

    severity: Literal["error", "warning"] = "error"
    message: str
    span: Span
    path: Optional[str] = None

    def __str__(self) -> str:
        where = f"{self.path}:" if self.path else ""
        return f"{where}{self.span}: {self.severity}: {self.message}"


class SourceFile:
    """UTF-8 text plus the offsets at which its lines start"""

    def __init__(self, text: str, path: Optional[str] = None):
        self.path = path
        self.text = text
        self._line_starts: List[int] = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self._line_starts.append(i + 1)

    @classmethod
    def from_path(cls, path: Union[str, Path]) -> "SourceFile":
        raw = Path(path).read_bytes()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            source = cls("", str(path))
            raise TheoryParseError(
                [source.diagnostic(f"file is not valid UTF-8: {exc.reason}", 0, 0)]
            )
        return cls(text, str(path))

    @property
    def line_count(self) -> int:
        return len(self._line_starts)

    def position(self, offset: int) -> Tuple[int, int]:
        """1-based (line, column) of a character offset, clamped to the text"""
        offset = max(0, min(offset, len(self.text)))
        line = bisect.bisect_right(self._line_starts, offset) - 1
        return line + 1, offset - self._line_starts[line] + 1

    def span(self, start: int, end: int) -> Span:
        sl, sc = self.position(start)
        el, ec = self.position(max(start, end))
        return Span(start_line=sl, start_col=sc, end_line=el, end_col=ec)

    def line_length(self, line: int) -> int:
        start = self._line_starts[line - 1]
        end = self._line_starts[line] - 1 if line < self.line_count else len(self.text)
        return end - start

    def contains(self, span: Span) -> bool:
        for line, col in ((span.start_line, span.start_col), (span.end_line, span.end_col)):
            if not 1 <= line <= self.line_count:
                return False
            if not 1 <= col <= self.line_length(line) + 1:
                return False
        return True

    def diagnostic(self, message: str, start: int, end: int) -> ParseDiagnostic:
        return ParseDiagnostic(message=message, span=self.span(start, end), path=self.path)
