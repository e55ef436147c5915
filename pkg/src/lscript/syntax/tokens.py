"""Token kinds and the token record produced by the lexer."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, auto

from ..diagnostics import SourceSpan


class TokenKind(Enum):
    INT = auto()
    DOUBLE = auto()
    STRING = auto()        # plain "..." literal, value is the resolved text
    INTERP = auto()        # s"..." literal, parts carry segments
    IDENT = auto()

    # keywords
    VAL = auto()
    VAR = auto()
    DEF = auto()
    RECORD = auto()
    ENUM = auto()
    IF = auto()
    ELSE = auto()
    WHILE = auto()
    MATCH = auto()
    CASE = auto()
    TRY = auto()
    CATCH = auto()
    THROW = auto()
    TRUE = auto()
    FALSE = auto()

    # operators and punctuation
    PLUS = auto()
    MINUS = auto()
    STAR = auto()
    SLASH = auto()
    PERCENT = auto()
    ASSIGN = auto()        # =
    PLUS_ASSIGN = auto()   # +=
    MINUS_ASSIGN = auto()  # -=
    EQ = auto()            # ==
    NEQ = auto()           # !=
    LT = auto()
    LE = auto()
    GT = auto()
    GE = auto()
    AND = auto()           # &&
    OR = auto()            # ||
    NOT = auto()           # !
    ARROW = auto()         # ->
    FAT_ARROW = auto()     # =>
    DOT = auto()
    COMMA = auto()
    COLON = auto()
    SEMI = auto()
    LPAREN = auto()
    RPAREN = auto()
    LBRACE = auto()
    RBRACE = auto()
    LBRACKET = auto()
    RBRACKET = auto()
    UNDERSCORE = auto()

    HOLE = auto()          # the literal <<HOLE>> marker
    NEWLINE = auto()
    EOF = auto()


KEYWORDS: dict[str, TokenKind] = {
    "val": TokenKind.VAL,
    "var": TokenKind.VAR,
    "def": TokenKind.DEF,
    "record": TokenKind.RECORD,
    "enum": TokenKind.ENUM,
    "if": TokenKind.IF,
    "else": TokenKind.ELSE,
    "while": TokenKind.WHILE,
    "match": TokenKind.MATCH,
    "case": TokenKind.CASE,
    "try": TokenKind.TRY,
    "catch": TokenKind.CATCH,
    "throw": TokenKind.THROW,
    "true": TokenKind.TRUE,
    "false": TokenKind.FALSE,
}


@dataclass(frozen=True)
class InterpPart:
    """One segment of an interpolated string.

    kind is "text" (value already unescaped) or "expr" (value is raw source
    to be parsed; offset locates it inside the enclosing source text).
    """

    kind: str
    value: str
    offset: int


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: SourceSpan
    value: object = None
    parts: tuple[InterpPart, ...] = field(default=())
