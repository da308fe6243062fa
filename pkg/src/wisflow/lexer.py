"""Shared lexer for all four model languages and the embedded script blocks.

Produces a flat token list with line/column positions. ``//`` comments run to
end of line. Keywords are not distinguished here; the parsers match token
values contextually but refuse to *declare* names from RESERVED.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import Diagnostic, Loc, error

# Keywords are reserved per language: a class member may be called "role"
# even though "role" is a keyword of the activity language. Type names are
# reserved everywhere.
_TYPE_NAMES = frozenset({"String", "Text", "Email", "Date", "Int", "Decimal", "Bool", "Set"})
CLASS_RESERVED = _TYPE_NAMES | {"classdiagram", "class", "user", "one", "many"}
ACTIVITY_RESERVED = _TYPE_NAMES | {
    "activity", "role", "action", "in", "out", "var", "cmd", "view",
    "java", "initial", "final", "new", "true", "false",
}
PAGE_RESERVED = _TYPE_NAMES | {
    "page", "heading1", "heading2", "heading3", "text", "output",
    "input", "table", "selectable",
}
APP_RESERVED = _TYPE_NAMES | {
    "application", "roles", "menu", "rights", "allow",
    "page", "activity", "list", "create",
}

# union, for generators that want names safe in every language
RESERVED = CLASS_RESERVED | ACTIVITY_RESERVED | PAGE_RESERVED | APP_RESERVED

_PUNCT2 = ("->", "==", "!=", "<<", ">>")
_PUNCT1 = "{}()<>:;,.|[]=+-*/%!&"


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "string" | "number" | "punct" | "eof"
    value: str
    loc: Loc


class LexError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_rest(c: str) -> bool:
    return c.isalnum() or c == "_"


_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    """Lex ``source`` into tokens; raises LexError on the first bad input."""
    tokens: list[Token] = []
    pos, line, col = 0, 1, 1
    n = len(source)

    def loc() -> Loc:
        return Loc(filename, line, col)

    def advance(k: int = 1) -> None:
        nonlocal pos, line, col
        for _ in range(k):
            if pos < n and source[pos] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            pos += 1

    while pos < n:
        c = source[pos]
        if c.isspace():
            advance()
            continue
        if source.startswith("//", pos):
            while pos < n and source[pos] != "\n":
                advance()
            continue
        start = loc()
        if _is_ident_start(c):
            j = pos
            while j < n and _is_ident_rest(source[j]):
                j += 1
            word = source[pos:j]
            advance(j - pos)
            tokens.append(Token("ident", word, start))
            continue
        if c.isdigit():
            j = pos
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            word = source[pos:j]
            advance(j - pos)
            tokens.append(Token("number", word, start))
            continue
        if c == '"':
            advance()
            chars: list[str] = []
            while True:
                if pos >= n or source[pos] == "\n":
                    raise LexError(error(start, "lex", "unterminated string literal"))
                ch = source[pos]
                if ch == '"':
                    advance()
                    break
                if ch == "\\":
                    advance()
                    if pos >= n or source[pos] not in _ESCAPES:
                        raise LexError(error(loc(), "lex", "bad string escape"))
                    chars.append(_ESCAPES[source[pos]])
                    advance()
                else:
                    chars.append(ch)
                    advance()
            tokens.append(Token("string", "".join(chars), start))
            continue
        two = source[pos : pos + 2]
        if two in _PUNCT2:
            advance(2)
            tokens.append(Token("punct", two, start))
            continue
        if c in _PUNCT1:
            advance()
            tokens.append(Token("punct", c, start))
            continue
        raise LexError(error(start, "lex", f"unexpected character {c!r}"))

    tokens.append(Token("eof", "", loc()))
    return tokens


def escape_string(value: str) -> str:
    """Quote a string for the concrete syntax (inverse of the lexer rules)."""
    out = ['"']
    for ch in value:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)
