"""
Lexer for the ``.obs`` theory language
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List

from app.core.exceptions import TheoryParseError
from app.dsl.source import SourceFile

KEYWORDS = frozenset(
    {"obs", "theory", "sort", "fn", "rel", "axiom", "exists", "true", "false",
     "points", "assume", "goal"}
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<turnstile>\|-)
  | (?P<arrow>->)
  | (?P<vee>\\/)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[.,:()\[\]&=+])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, int, punct, turnstile, arrow, vee, eof
    value: str
    start: int
    end: int

    def is_(self, kind: str, value: str | None = None) -> bool:
        return self.kind == kind and (value is None or self.value == value)

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of file"
        return f"'{self.value}'"


def tokenize(source: SourceFile) -> List[Token]:
    """Split ``source`` into tokens; an unknown character is reported with its span"""
    tokens: List[Token] = []
    text = source.text
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TheoryParseError(
                [source.diagnostic(f"unexpected character {text[pos]!r}", pos, pos + 1)]
            )
        kind = m.lastgroup or ""
        value = m.group()
        if kind == "ident" and value in KEYWORDS:
            kind = "keyword"
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, m.start(), m.end()))
        pos = m.end()
    end = len(text)
    tokens.append(Token("eof", "", end, end))
    return tokens
