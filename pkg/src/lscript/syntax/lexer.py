"""Lexer for the script language.

Produces a flat token stream; newlines are kept as tokens because the
parser uses them as soft statement separators. Unknown characters yield a
diagnostic instead of raising.
"""

from __future__ import annotations

from ..diagnostics import Diagnostic, SourceSpan, syntax_error
from .tokens import KEYWORDS, InterpPart, Token, TokenKind

HOLE_MARKER = "<<HOLE>>"

_SIMPLE_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\", "$": "$"}

_TWO_CHAR = {
    "==": TokenKind.EQ,
    "!=": TokenKind.NEQ,
    "<=": TokenKind.LE,
    ">=": TokenKind.GE,
    "&&": TokenKind.AND,
    "||": TokenKind.OR,
    "->": TokenKind.ARROW,
    "=>": TokenKind.FAT_ARROW,
    "+=": TokenKind.PLUS_ASSIGN,
    "-=": TokenKind.MINUS_ASSIGN,
}

_ONE_CHAR = {
    "+": TokenKind.PLUS,
    "-": TokenKind.MINUS,
    "*": TokenKind.STAR,
    "/": TokenKind.SLASH,
    "%": TokenKind.PERCENT,
    "=": TokenKind.ASSIGN,
    "<": TokenKind.LT,
    ">": TokenKind.GT,
    "!": TokenKind.NOT,
    ".": TokenKind.DOT,
    ",": TokenKind.COMMA,
    ":": TokenKind.COLON,
    ";": TokenKind.SEMI,
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
    "{": TokenKind.LBRACE,
    "}": TokenKind.RBRACE,
    "[": TokenKind.LBRACKET,
    "]": TokenKind.RBRACKET,
}


class Lexer:
    def __init__(self, source: str, source_id: str = "<input>") -> None:
        self.src = source
        self.sid = source_id
        self.pos = 0
        self.tokens: list[Token] = []
        self.diags: list[Diagnostic] = []

    def span(self, start: int, end: int | None = None) -> SourceSpan:
        return SourceSpan(self.sid, start, self.pos if end is None else end)

    def emit(self, kind: TokenKind, start: int, value: object = None,
             parts: tuple[InterpPart, ...] = ()) -> None:
        self.tokens.append(
            Token(kind, self.src[start:self.pos], self.span(start), value, parts)
        )

    def run(self) -> tuple[list[Token], list[Diagnostic]]:
        src = self.src
        n = len(src)
        while self.pos < n:
            start = self.pos
            c = src[self.pos]
            if c in " \t\r":
                self.pos += 1
            elif c == "\n":
                self.pos += 1
                self.emit(TokenKind.NEWLINE, start)
            elif src.startswith("//", self.pos):
                nl = src.find("\n", self.pos)
                self.pos = n if nl < 0 else nl
            elif src.startswith(HOLE_MARKER, self.pos):
                self.pos += len(HOLE_MARKER)
                self.emit(TokenKind.HOLE, start)
            elif c.isdigit():
                self.lex_number(start)
            elif c.isalpha() or c == "_":
                self.lex_word(start)
            elif c == '"':
                self.lex_string(start)
            elif src[self.pos:self.pos + 2] in _TWO_CHAR:
                self.pos += 2
                self.emit(_TWO_CHAR[src[start:self.pos]], start)
            elif c in _ONE_CHAR:
                self.pos += 1
                self.emit(_ONE_CHAR[c], start)
            else:
                self.pos += 1
                self.diags.append(
                    syntax_error(f"unknown character {c!r}", self.span(start))
                )
        self.tokens.append(Token(TokenKind.EOF, "", self.span(n, n)))
        return self.tokens, self.diags

    def lex_number(self, start: int) -> None:
        src = self.src
        while self.pos < len(src) and src[self.pos].isdigit():
            self.pos += 1
        if (self.pos + 1 < len(src) and src[self.pos] == "."
                and src[self.pos + 1].isdigit()):
            self.pos += 1
            while self.pos < len(src) and src[self.pos].isdigit():
                self.pos += 1
            self.emit(TokenKind.DOUBLE, start, float(src[start:self.pos]))
        else:
            self.emit(TokenKind.INT, start, int(src[start:self.pos]))

    def lex_word(self, start: int) -> None:
        src = self.src
        while self.pos < len(src) and (src[self.pos].isalnum() or src[self.pos] == "_"):
            self.pos += 1
        word = src[start:self.pos]
        if word == "s" and self.pos < len(src) and src[self.pos] == '"':
            self.lex_interp(start)
        elif word == "_":
            self.emit(TokenKind.UNDERSCORE, start)
        elif word in KEYWORDS:
            self.emit(KEYWORDS[word], start)
        else:
            self.emit(TokenKind.IDENT, start, word)

    def scan_quoted(self, opening: int) -> tuple[str | None, list[tuple[str, int]]]:
        """Scan from the quote at `opening` to the closing quote.

        Returns (raw_inner, pieces) where pieces are (char, source_offset)
        with escapes resolved; None raw on an unterminated literal.
        """
        src = self.src
        i = opening + 1
        pieces: list[tuple[str, int]] = []
        while i < len(src):
            c = src[i]
            if c == '"':
                raw = src[opening + 1:i]
                self.pos = i + 1
                return raw, pieces
            if c == "\\" and i + 1 < len(src):
                esc = src[i + 1]
                pieces.append((_SIMPLE_ESCAPES.get(esc, esc), i))
                i += 2
                continue
            if c == "\n":
                break
            pieces.append((c, i))
            i += 1
        self.pos = i
        self.diags.append(syntax_error("unterminated string literal", self.span(opening)))
        return None, pieces

    def lex_string(self, start: int) -> None:
        raw, pieces = self.scan_quoted(start)
        if raw is None:
            return
        self.emit(TokenKind.STRING, start, "".join(ch for ch, _ in pieces))

    def lex_interp(self, start: int) -> None:
        """Lex s"..." into text/expr parts; `$name`, `${expr}`, `$$` forms.

        ${...} bodies may contain nested string literals (quotes inside do
        not close the interpolated string) and nested braces."""
        src = self.src
        i = self.pos + 1  # past the opening quote
        parts: list[InterpPart] = []
        text: list[str] = []
        text_off = i
        while i < len(src):
            c = src[i]
            if c == '"':
                self.pos = i + 1
                if text:
                    parts.append(InterpPart("text", "".join(text), text_off))
                self.emit(TokenKind.INTERP, start, None, tuple(parts))
                return
            if c == "\n":
                break
            if c == "\\" and i + 1 < len(src):
                text.append(_SIMPLE_ESCAPES.get(src[i + 1], src[i + 1]))
                i += 2
                continue
            if c == "$":
                nxt = src[i + 1] if i + 1 < len(src) else ""
                if nxt == "$":
                    text.append("$")
                    i += 2
                    continue
                if text:
                    parts.append(InterpPart("text", "".join(text), text_off))
                    text = []
                if nxt == "{":
                    end = self._scan_interp_expr(i + 1)
                    if end < 0:
                        self.diags.append(syntax_error(
                            "unterminated ${...} interpolation", self.span(i, i + 2)))
                        self.pos = len(src)
                        return
                    parts.append(InterpPart("expr", src[i + 2:end], i + 2))
                    i = end + 1
                elif nxt.isalpha() or nxt == "_":
                    j = i + 1
                    while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                        j += 1
                    parts.append(InterpPart("expr", src[i + 1:j], i + 1))
                    i = j
                else:
                    self.diags.append(syntax_error(
                        "expected a name or {...} after $ in interpolation",
                        self.span(i, i + 1)))
                    self.pos = i + 1
                    return
                text_off = i
                continue
            text.append(c)
            i += 1
        self.pos = i
        self.diags.append(syntax_error("unterminated string literal",
                                       self.span(start)))

    def _scan_interp_expr(self, open_brace: int) -> int:
        """From the '{' of a ${...}, return the offset of its matching '}';
        skips nested braces and nested string literals."""
        src = self.src
        depth = 0
        i = open_brace
        while i < len(src):
            c = src[i]
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    return i
            elif c == '"':
                i += 1
                while i < len(src) and src[i] != '"':
                    if src[i] == "\\":
                        i += 1
                    i += 1
                if i >= len(src):
                    return -1
            i += 1
        return -1


def tokenize(source: str, source_id: str = "<input>") -> tuple[list[Token], list[Diagnostic]]:
    """Lex `source`; tokens always cover the input, errors become diagnostics."""
    return Lexer(source, source_id).run()
