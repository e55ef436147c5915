"""Textual splice of a generated snippet into enclosing source.

The marker is replaced by the snippet wrapped in a block, so the spliced
text parses to the enclosing AST with the snippet's block at the marker
position. Splicing is pure text surgery; all validation of the result
happens downstream in the parse/check pipeline.
"""

from __future__ import annotations

from .lexer import HOLE_MARKER


class SpliceError(Exception):
    def __init__(self, kind: str, message: str) -> None:
        super().__init__(message)
        self.kind = kind  # "marker-missing" | "marker-duplicated" | "empty-snippet"


def wrap_snippet(snippet: str) -> str:
    body = snippet.strip("\n")
    if "\n" in body:
        return "{\n" + body + "\n}"
    return "{ " + body + " }"


def splice_at(enclosing: str, snippet: str) -> tuple[str, int]:
    """Splice and also report the offset of the inserted block's '{'."""
    if not snippet.strip():
        raise SpliceError("empty-snippet", "snippet is empty")
    count = enclosing.count(HOLE_MARKER)
    if count == 0:
        raise SpliceError("marker-missing",
                          f"enclosing source contains no {HOLE_MARKER} marker")
    if count > 1:
        raise SpliceError("marker-duplicated",
                          f"enclosing source contains {count} {HOLE_MARKER} markers")
    offset = enclosing.index(HOLE_MARKER)
    wrapped = wrap_snippet(snippet)
    return enclosing[:offset] + wrapped + enclosing[offset + len(HOLE_MARKER):], offset


def splice(enclosing: str, snippet: str) -> str:
    """Replace the single hole marker in `enclosing` with `snippet` in a block."""
    return splice_at(enclosing, snippet)[0]
