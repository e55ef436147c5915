"""The eval primitive: all-or-nothing snippet evaluation at a hole.

Pipeline: splice -> parse -> check -> captureCheck -> evaluate. Every
stage before evaluation is pure with respect to the session, so a
rejected snippet leaves the session bit-identical. The snippet is first
parsed standalone (so brace trickery cannot smuggle statements past the
hole), then the whole spliced statement is re-checked in the live scope:
context rules (binding annotations, capability boundaries) apply to the
generated code exactly as they would to hand-written code at that spot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diagnostics import Diagnostic, Severity, SourceSpan, format_diagnostics
from ..syntax import ast
from ..syntax.lexer import HOLE_MARKER
from ..syntax.parser import parse_program, parse_type_text
from ..syntax.render import render_type
from ..syntax.splice import SpliceError, splice_at
from ..capabilities import capture_check
from ..types import core as ty
from ..types.check import Checker, check, walk
from ..types.env import TypeEnv
from .session import Binding, Scope, Session
from .values import Value, preview
from .evaluator import eval_expr


@dataclass
class EvalResult:
    """Success carrying a value of the expected type, or Failure carrying
    the final diagnostics; never both."""

    ok: bool
    value: Value | None = None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @classmethod
    def success(cls, value: Value) -> "EvalResult":
        return cls(True, value=value)

    @classmethod
    def failure(cls, diags: list[Diagnostic]) -> "EvalResult":
        return cls(False, diagnostics=list(diags))

    @property
    def is_success(self) -> bool:
        return self.ok

    def diagnostics_text(self) -> str:
        return format_diagnostics(self.diagnostics)


def _diag(message: str) -> Diagnostic:
    return Diagnostic(Severity.ERROR, message, SourceSpan("<hole>", 0, 0))


def resolve_expected(expected: object, env: TypeEnv, checker_decls) -> tuple[ty.TypeExpr | None, list[Diagnostic]]:
    """Accepts either a TypeExpr or expected-type source text."""
    if expected is None:
        return None, []
    if isinstance(expected, ty.TypeExpr):
        return expected, []
    t_ast, diags = parse_type_text(str(expected))
    if t_ast is None:
        return None, diags
    checker = Checker(env, checker_decls)
    t = checker.resolve_type(t_ast, env)
    if checker.diags:
        return None, checker.diags
    return t, []


def snapshot_context(session: Session, callsite: SourceSpan | None = None,
                     expected: ty.TypeExpr | str | None = None,
                     at_scope: Scope | None = None
                     ) -> tuple[list[Binding], str, str, bool]:
    """Context for a hole: bindings innermost-first with shadowed names
    omitted, the expected type as text, the current top-level statement
    with the marker at the callsite, and whether the hole sits in a pure
    scope."""
    bindings: list[Binding] = []
    seen: set[str] = set()
    pure = False
    for scope in (at_scope or session.current_scope).chain():
        if scope.pure_boundary:
            pure = True
        for name, binding in reversed(scope.bindings.items()):
            if name in seen or binding.origin == "builtin":
                continue
            seen.add(name)
            bindings.append(binding)
    expected_text = expected if isinstance(expected, (str, type(None))) else render_type(expected)
    enclosing = enclosing_source(session, callsite, expected_text)
    return bindings, expected_text or "", enclosing, pure


def enclosing_source(session: Session, callsite: SourceSpan | None,
                     expected_text: str | None) -> str:
    current = session.current_statement
    if current is not None and callsite is not None:
        text, base = current
        start, end = callsite.start - base, callsite.end - base
        if 0 <= start <= end <= len(text):
            return text[:start] + HOLE_MARKER + text[end:]
    if expected_text:
        return f"val it: {expected_text} = {HOLE_MARKER}"
    return HOLE_MARKER


def eval_hole(code: str, session: Session, expected: ty.TypeExpr | str | None,
              enclosing: str | None = None,
              extra_bindings: list[Binding] | None = None,
              at_scope: Scope | None = None) -> EvalResult:
    """Check `code` against the expected type in the live scope and run it
    atomically. Static rejections return Failure and leave the session
    untouched; runtime errors in accepted code propagate as script errors."""
    names = [b.name for b in (extra_bindings or [])]
    if len(set(names)) != len(names):
        return EvalResult.failure([_diag("extra binding names must be distinct")])

    eval_scope = at_scope if at_scope is not None else session.current_scope
    if extra_bindings:
        eval_scope = eval_scope.child()
        for binding in extra_bindings:
            eval_scope.declare(binding)

    env = session.type_env(eval_scope)
    expected_t, diags = resolve_expected(expected, env, session.decls)
    if diags:
        return EvalResult.failure(diags)

    snippet_ast, diags = parse_program(code, "<snippet>")
    if snippet_ast is None:
        return EvalResult.failure(diags)
    if not snippet_ast.stmts:
        return EvalResult.failure([_diag("model returned no code")])

    if enclosing is None:
        enclosing = HOLE_MARKER
    try:
        spliced_text, offset = splice_at(enclosing, code)
    except SpliceError as err:
        return EvalResult.failure([_diag(str(err))])

    spliced_ast, diags = parse_program(spliced_text, "<spliced>")
    if spliced_ast is None:
        return EvalResult.failure(diags)

    override = (offset, expected_t) if expected_t is not None else None
    _, diags, checker = check(spliced_ast, env, None, session.decls, override)
    if diags:
        return EvalResult.failure(diags)
    cap_diags = capture_check(spliced_ast, checker)
    if cap_diags:
        return EvalResult.failure(cap_diags)

    block = _hole_block(spliced_ast, offset)
    if block is None:
        return EvalResult.failure([_diag("spliced snippet block not found")])

    with session.statement(spliced_text, 0):
        value = eval_expr(block, session, eval_scope)
    return EvalResult.success(value)


def _hole_block(program: ast.Program, offset: int) -> ast.Block | None:
    for node in walk(program):
        if isinstance(node, ast.Block) and node.span.start == offset:
            return node
    return None


def bindings_listing(bindings: list[Binding]) -> str:
    """The prompt's in-scope section: `name: Type = preview`, one per line."""
    lines = []
    for binding in bindings:
        lines.append(f"{binding.name}: {render_type(binding.typ)} = "
                     f"{preview(binding.value)}")
    return "\n".join(lines)
