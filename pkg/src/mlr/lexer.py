"""Tokenizer for .mlr source text.

Produces a flat token list.  Keywords and punctuation use the token
text itself as the token kind ('fby', '(', '->', ...), while valued
tokens use 'ident', 'int', 'float', 'bool'.  Comments are `(* ... *)`
and may nest.
"""

from dataclasses import dataclass, field

from .ast import Pos

KEYWORDS = frozenset([
    "node", "when", "merge", "fby", "post", "back",
    "if", "then", "else", "not", "and", "or",
])

# longest first so maximal munch works with a simple scan
SYMBOLS = ["->", "<=", ">=", "==", "!=", "<", ">", "=",
           "(", ")", "[", "]", ",", ";", ":", "+", "-", "*", "/"]


class LexError(Exception):
    def __init__(self, pos: Pos, message: str):
        super().__init__("%s: %s" % (pos, message))
        self.pos = pos
        self.message = message


@dataclass
class Token:
    kind: str            # 'ident' | 'int' | 'float' | 'bool' | keyword | symbol | 'eof'
    value: object = None
    pos: Pos = field(default_factory=Pos)

    def __repr__(self):
        if self.kind in ("ident", "int", "float", "bool"):
            return "%s(%r)" % (self.kind, self.value)
        return repr(self.kind)


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(source: str):
    """Tokenize source text, returning a list ending with an 'eof' token."""
    toks = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def pos():
        return Pos(line, col)

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if source.startswith("(*", i):
            start = pos()
            depth = 1
            advance(2)
            while i < n and depth > 0:
                if source.startswith("(*", i):
                    depth += 1
                    advance(2)
                elif source.startswith("*)", i):
                    depth -= 1
                    advance(2)
                else:
                    advance(1)
            if depth > 0:
                raise LexError(start, "unterminated comment")
            continue
        if c.isdigit():
            p = pos()
            j = i
            while j < n and source[j].isdigit():
                j += 1
            is_float = False
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                is_float = True
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    is_float = True
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            advance(j - i)
            if is_float:
                toks.append(Token("float", float(text), p))
            else:
                toks.append(Token("int", int(text), p))
            continue
        if _is_ident_start(c):
            p = pos()
            j = i
            while j < n and _is_ident_char(source[j]):
                j += 1
            text = source[i:j]
            advance(j - i)
            if text == "true":
                toks.append(Token("bool", True, p))
            elif text == "false":
                toks.append(Token("bool", False, p))
            elif text in KEYWORDS:
                toks.append(Token(text, None, p))
            else:
                toks.append(Token("ident", text, p))
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                p = pos()
                advance(len(sym))
                toks.append(Token(sym, None, p))
                break
        else:
            raise LexError(pos(), "unexpected character %r" % c)
    toks.append(Token("eof", None, pos()))
    return toks
