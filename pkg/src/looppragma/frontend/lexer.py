from __future__ import annotations

import re
from dataclasses import dataclass

from ..diagnostics import Location, ParseError

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<float>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\.\.\.|\+\+|\+=|-=|\*=|<=|>=|==|!=|&&|[-+*/%<>=(){}\[\];,:])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | float | op | pragma | eof
    value: str
    line: int
    col: int


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    """Split LoopLang source into tokens; ``#pragma`` lines become one token each."""
    tokens: list[Token] = []
    lines = text.split("\n")
    in_comment = False
    k = 0
    while k < len(lines):
        raw = lines[k]
        lineno = k + 1
        k += 1
        if not in_comment and raw.lstrip().startswith("#"):
            body = raw.strip()
            while body.endswith("\\") and k < len(lines):
                body = body[:-1] + " " + lines[k].strip()
                k += 1
            if body.endswith("\\"):
                body = body[:-1]
            m = re.match(r"#\s*pragma\b(.*)$", body)
            if not m:
                raise ParseError("preprocessor directives other than #pragma are not supported",
                                 Location(file, lineno, raw.index("#") + 1))
            text_ = _strip_line_comment(m.group(1)).strip()
            tokens.append(Token("pragma", text_, lineno, raw.index("#") + 1))
            continue
        pos = 0
        while pos < len(raw):
            if in_comment:
                end = raw.find("*/", pos)
                if end < 0:
                    pos = len(raw)
                    continue
                pos = end + 2
                in_comment = False
                continue
            if raw.startswith("//", pos):
                break
            if raw.startswith("/*", pos):
                in_comment = True
                pos += 2
                continue
            m = _TOKEN.match(raw, pos)
            if not m:
                raise ParseError(f"unexpected character {raw[pos]!r}", Location(file, lineno, pos + 1))
            kind = m.lastgroup
            if kind != "ws":
                tokens.append(Token(kind, m.group(), lineno, pos + 1))
            pos = m.end()
    if in_comment:
        raise ParseError("unterminated comment", Location(file, len(lines)))
    tokens.append(Token("eof", "", len(lines), 1))
    return tokens


def _strip_line_comment(s: str) -> str:
    i = s.find("//")
    return s if i < 0 else s[:i]


def tokenize_fragment(text: str, line: int, file: str = "<input>") -> list[Token]:
    """Tokenize a single pragma body, reporting positions on ``line``."""
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r} in pragma", Location(file, line, pos + 1))
        if m.lastgroup != "ws":
            out.append(Token(m.lastgroup, m.group(), line, pos + 1))
        pos = m.end()
    out.append(Token("eof", "", line, len(text) + 1))
    return out
