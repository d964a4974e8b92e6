"""
S-expression reader and writer

Atoms are strings, lists are tuples. Atoms that contain whitespace,
parentheses, quotes or backslashes (or are empty) are written quoted with
backslash escapes; everything else is written bare. ``format_sexp`` output is
single-line and canonical, so ``parse_sexp(format_sexp(x)) == x``.
"""

import re
from typing import List, Tuple, Union

Sexp = Union[str, Tuple["Sexp", ...]]

_BARE = re.compile(r'[^\s()"\\]+')
_TOKEN = re.compile(r'\s*(?:(\()|(\))|"((?:[^"\\]|\\.)*)"|([^\s()"\\]+))', re.DOTALL)
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def _quote(atom: str) -> str:
    body = atom.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{body}"'


def _unquote(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), body, flags=re.DOTALL)


def format_sexp(x: Sexp) -> str:
    if isinstance(x, str):
        return x if _BARE.fullmatch(x) else _quote(x)
    return "(" + " ".join(format_sexp(item) for item in x) + ")"


def parse_sexp(text: str) -> Sexp:
    """
    Read exactly one S-expression

    Raises:
        ValueError: On unbalanced parentheses, an unterminated string, stray
            characters or trailing input
    """
    stack: List[List[Sexp]] = [[]]
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ValueError(f"unexpected character at offset {pos}: {text[pos:pos + 10]!r}")
        pos = m.end()
        opening, closing, quoted, bare = m.groups()
        if opening:
            stack.append([])
        elif closing:
            if len(stack) == 1:
                raise ValueError(f"unbalanced ')' at offset {m.start(2)}")
            done = tuple(stack.pop())
            stack[-1].append(done)
        elif quoted is not None:
            stack[-1].append(_unquote(quoted))
        else:
            stack[-1].append(bare)
        if len(stack) == 1 and len(stack[0]) > 1:
            raise ValueError("more than one expression")
    if len(stack) != 1:
        raise ValueError("unbalanced '('")
    if not stack[0]:
        raise ValueError("empty input")
    return stack[0][0]


def expect_list(x: Sexp, head: str, min_len: int = 1) -> Tuple[Sexp, ...]:
    """``x`` as a list starting with the symbol ``head``"""
    if isinstance(x, str) or not x or x[0] != head or len(x) < min_len:
        raise ValueError(f"expected ({head} ...), got {format_sexp(x)[:60]}")
    return x


def expect_atom(x: Sexp) -> str:
    if not isinstance(x, str):
        raise ValueError(f"expected an atom, got {format_sexp(x)[:60]}")
    return x
