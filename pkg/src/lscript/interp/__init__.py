"""Tree-walking evaluation, sessions, and the eval-hole pipeline."""

from .evaluator import ScriptError, eval_program, eval_statement
from .hole import EvalResult, eval_hole, snapshot_context
from .pipeline import TurnOutcome, run_source, run_statement
from .session import Binding, Scope, Session, SessionConfig

__all__ = [
    "ScriptError", "eval_program", "eval_statement",
    "EvalResult", "eval_hole", "snapshot_context",
    "TurnOutcome", "run_source", "run_statement",
    "Binding", "Scope", "Session", "SessionConfig",
]
