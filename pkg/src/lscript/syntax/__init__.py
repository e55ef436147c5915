"""Lexing, parsing, spans, splicing, and source rendering."""

from .lexer import HOLE_MARKER, tokenize
from .parser import parse_program, parse_type_text
from .render import render_node, render_type, structurally_equal
from .splice import SpliceError, splice, splice_at, wrap_snippet

__all__ = [
    "HOLE_MARKER",
    "tokenize",
    "parse_program",
    "parse_type_text",
    "render_node",
    "render_type",
    "structurally_equal",
    "splice",
    "splice_at",
    "wrap_snippet",
    "SpliceError",
]
