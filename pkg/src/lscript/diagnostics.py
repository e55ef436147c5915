"""Source spans and compiler diagnostics.

Diagnostics carry the exact message formats the rest of the system (REPL,
traces, retry prompts, harness expectations) relies on, so the canonical
constructors live here and nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


@dataclass(frozen=True)
class SourceSpan:
    """Half-open character range [start, end) within one source text."""

    source_id: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"span start {self.start} > end {self.end}")

    def shift(self, offset: int) -> "SourceSpan":
        return SourceSpan(self.source_id, self.start + offset, self.end + offset)


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    message: str
    span: SourceSpan
    found: str | None = None
    required: str | None = None

    def render(self) -> str:
        """Full message text, including the Found/Required pair if present."""
        parts = [self.message] if self.message else []
        if self.found is not None:
            parts.append(f"Found:    {self.found}")
        if self.required is not None:
            parts.append(f"Required: {self.required}")
        return "\n".join(parts)


def not_found(name: str, span: SourceSpan) -> Diagnostic:
    return Diagnostic(Severity.ERROR, f"Not found: value {name}", span)


def mismatch(found: str, required: str, span: SourceSpan) -> Diagnostic:
    return Diagnostic(Severity.ERROR, "", span, found=found, required=required)


def non_exhaustive(enum_name: str, case_name: str, span: SourceSpan) -> Diagnostic:
    return Diagnostic(
        Severity.ERROR,
        "match may not be exhaustive.\n"
        f"It would fail on pattern case: {enum_name}.{case_name}",
        span,
    )


CAPABILITY_LEAK_PREFIX = "outlives its scope: it leaks into outer capture set"


def capability_leak(
    cap_name: str, span: SourceSpan, found: str | None = None, required: str | None = None
) -> Diagnostic:
    return Diagnostic(
        Severity.ERROR,
        f"Capability {cap_name} {CAPABILITY_LEAK_PREFIX}",
        span,
        found=found,
        required=required,
    )


def syntax_error(message: str, span: SourceSpan) -> Diagnostic:
    return Diagnostic(Severity.ERROR, message, span)


def sort_key(diag: Diagnostic) -> tuple[int, str]:
    return (diag.span.start, diag.severity.value)


def format_diagnostics(diags: list[Diagnostic]) -> str:
    return "\n".join(d.render() for d in diags)


def render_with_source(diag: Diagnostic, source: str) -> str:
    """Message preceded by the offending source line with a caret underline."""
    start = max(0, min(diag.span.start, len(source)))
    line_start = source.rfind("\n", 0, start) + 1
    line_end = source.find("\n", start)
    if line_end < 0:
        line_end = len(source)
    line = source[line_start:line_end]
    col = start - line_start
    width = max(1, min(diag.span.end, line_end) - start)
    caret = " " * col + "^" * width
    return f"{line}\n{caret}\n{diag.render()}"
