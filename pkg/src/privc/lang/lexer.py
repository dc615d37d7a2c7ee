"""Hand-rolled lexer for the .sc dialect (C-like, // and /* */ comments)."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError

KEYWORDS = {
    "private", "public", "int", "float", "void", "const",
    "if", "else", "while", "malloc", "pmalloc", "free", "pfree",
    "sizeof", "smcinput", "smcoutput", "mcinput", "mcoutput",
    "NULL", "skip", "declassify",
    # rejected-with-a-message subset markers
    "struct", "for", "return",
}

TWO_CHAR = {"==", "!=", "++"}
ONE_CHAR = set("+-*/<=&(){}[],;")


@dataclass(frozen=True)
class Token:
    kind: str  # "id", "num", "fnum", or the literal lexeme
    text: str
    line: int
    col: int


def tokenize(source: str):
    toks = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            i = n if j < 0 else j
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise ParseError("unterminated comment", line, col)
            skipped = source[i:j + 2]
            line += skipped.count("\n")
            col = (len(skipped) - skipped.rfind("\n")) if "\n" in skipped else col + len(skipped)
            i = j + 2
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
                toks.append(Token("fnum", source[i:j], line, col))
            else:
                toks.append(Token("num", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = text if text in KEYWORDS else "id"
            toks.append(Token(kind, text, line, col))
            col += j - i
            i = j
            continue
        if source[i:i + 2] in TWO_CHAR:
            toks.append(Token(source[i:i + 2], source[i:i + 2], line, col))
            i += 2
            col += 2
            continue
        if c in ONE_CHAR:
            toks.append(Token(c, c, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks
