"""Statement-at-a-time execution: the REPL turn pipeline.

Each top-level statement goes through check -> captureCheck -> evaluate
against the live session, then yields a REPL-style echo line. Static
rejection leaves the session untouched; runtime errors propagate to the
caller (the REPL prints them, scripts exit nonzero).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..capabilities import capture_check
from ..diagnostics import Diagnostic
from ..syntax import ast
from ..syntax.parser import parse_program
from ..syntax.render import render_type
from ..types.check import check
from .evaluator import eval_statement
from .session import Binding, Session
from .values import UNIT, Value, preview


@dataclass
class TurnOutcome:
    ok: bool
    echo: str | None = None
    diagnostics: list[Diagnostic] = field(default_factory=list)
    value: Value = UNIT


def run_statement(session: Session, stmt: ast.Node, text: str, base: int) -> TurnOutcome:
    """Check and evaluate one top-level statement in the session."""
    program = ast.Program(stmt.span, [stmt])
    env = session.type_env(session.current_scope)
    _, diags, checker = check(program, env, None, session.decls)
    if diags:
        return TurnOutcome(False, None, diags)
    cap_diags = capture_check(program, checker)
    if cap_diags:
        return TurnOutcome(False, None, cap_diags)
    with session.statement(text, base):
        value = eval_statement(stmt, session, session.current_scope)
    return TurnOutcome(True, _echo(session, stmt, value), [], value)


def _echo(session: Session, stmt: ast.Node, value: Value) -> str | None:
    scope = session.current_scope
    if isinstance(stmt, ast.ValDecl):
        binding = scope.lookup(stmt.name)
        kw = "var" if stmt.mutable else "val"
        return f"{kw} {stmt.name}: {render_type(binding.typ)} = {preview(binding.value)}"
    if isinstance(stmt, ast.DefDecl):
        return f"def {stmt.name}: {render_type(stmt.typ)}"
    if isinstance(stmt, ast.RecordDecl):
        return f"record {stmt.name}"
    if isinstance(stmt, ast.EnumDecl):
        return f"enum {stmt.name}"
    if isinstance(stmt, ast.Assign):
        return None
    if isinstance(stmt, ast.Expr):
        if value is UNIT:
            return None
        name = session.fresh_result_name()
        session.current_scope.declare(
            Binding(name, stmt.typ, value, origin="val", precise=stmt.typ))
        return f"val {name}: {render_type(stmt.typ)} = {preview(value)}"
    return None


def run_source(session: Session, source: str, source_id: str = "<input>"
               ) -> tuple[list[TurnOutcome], list[Diagnostic]]:
    """Parse a whole source text and run its statements in order, stopping
    at the first static rejection (scripts must not run past a failure)."""
    program, diags = parse_program(source, source_id)
    if program is None:
        return [], diags
    outcomes: list[TurnOutcome] = []
    for stmt in program.stmts:
        text = source[stmt.span.start:stmt.span.end]
        outcome = run_statement(session, stmt, text, stmt.span.start)
        outcomes.append(outcome)
        if not outcome.ok:
            break
    return outcomes, []
