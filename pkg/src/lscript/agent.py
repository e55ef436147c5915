"""The agent primitives: prompt assembly and the diagnostics-driven retry
loop over the eval pipeline.

agent_safe returns the outcome as an EvalResult; agent_call unwraps it,
turning a final Failure into a catchable compile-failure script error.
Depth is dynamic-extent: it increments while an accepted snippet
evaluates, so nested holes see depth+1 and trip the cap as a catchable
error. eval (the model-free primitive) shares the same depth guard so a
self-recursing eval chain cannot run away either.

Config resolution order: per-call override > instance config > session
defaults.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import asdict, dataclass, field
from importlib import resources

from .diagnostics import SourceSpan
from .interp.evaluator import ScriptError, eval_expr
from .interp.hole import EvalResult, bindings_listing, enclosing_source, eval_hole, snapshot_context
from .interp.session import Session
from .model import (
    ExtractionError,
    ModelError,
    ModelHandle,
    ModelRequest,
    ModelResponse,
    complete,
    extract_code,
)
from .syntax import ast
from .syntax.render import render_type
from .types import core as ty

from .model import DIAGNOSTICS_HEADER

_DIAG_WINDOW = 3  # prompts carry at most the last 3 attempts' diagnostics


@dataclass(frozen=True)
class AgentConfig:
    model_id: str = "default"
    max_attempts: int = 3
    depth_cap: int = 128
    template_id: str = "agent_system_v1"
    system_override: str | None = None

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.depth_cap < 1:
            raise ValueError("depth_cap must be >= 1")


@dataclass
class InstanceRuntime:
    """What a bound model-instance capability carries at runtime."""

    handle: ModelHandle
    config: AgentConfig


@dataclass(frozen=True)
class PromptBundle:
    system: str
    expected_type: str
    enclosing: str
    bindings: str
    task: str
    prior_diagnostics: tuple[str, ...] = ()

    def user_message(self) -> str:
        parts = [
            f"Expected type: {self.expected_type}",
            f"Enclosing source:\n{self.enclosing}",
            f"In scope:\n{self.bindings}",
            f"Task: {self.task}",
        ]
        if self.prior_diagnostics:
            parts.append(DIAGNOSTICS_HEADER + "\n"
                         + "\n\n".join(self.prior_diagnostics))
        return "\n\n".join(parts)

    def to_request(self) -> ModelRequest:
        return ModelRequest((("system", self.system),
                             ("user", self.user_message())))

    def content_hash(self) -> str:
        return hashlib.sha256(
            self.to_request().serialize().encode()).hexdigest()[:16]


@dataclass
class AttemptRecord:
    index: int
    bundle_hash: str
    code: str
    diagnostics: list[str]
    outcome: str  # accepted | rejected | runtime-error
    wall_time: float

    def __post_init__(self) -> None:
        if self.outcome == "rejected":
            assert self.diagnostics, "rejected attempts carry diagnostics"
        if self.outcome == "accepted":
            assert not self.diagnostics, "accepted attempts carry none"


_template_cache: dict[str, str] = {}


def load_template(template_id: str) -> str:
    if template_id not in _template_cache:
        if "/" in template_id or template_id.endswith(".txt"):
            with open(template_id, encoding="utf-8") as fh:
                _template_cache[template_id] = fh.read()
        else:
            _template_cache[template_id] = (
                resources.files("lscript.templates")
                .joinpath(f"{template_id}.txt").read_text(encoding="utf-8"))
    return _template_cache[template_id]


def build_prompt(task: str, bindings: str, expected_type: str, enclosing: str,
                 template_text: str,
                 prior_diagnostics: list[str] | None = None) -> PromptBundle:
    """Deterministic given equal inputs; prior diagnostics go under the
    fixed header."""
    return PromptBundle(
        system=template_text,
        expected_type=expected_type,
        enclosing=enclosing,
        bindings=bindings,
        task=task,
        prior_diagnostics=tuple(prior_diagnostics or []),
    )


def _resolve_instance(session: Session, instance) -> InstanceRuntime:
    from .capabilities import CapabilityValue

    if isinstance(instance, InstanceRuntime):
        return instance
    if isinstance(instance, CapabilityValue) and instance.handle is not None:
        return instance.handle
    default = session.config.default_agent
    if default is not None and default in session.instances:
        return session.instances[default].handle
    raise ScriptError("transport", "no model instance configured for this session")


def agent_safe(task: str, session: Session, instance=None,
               expected: ty.TypeExpr | str | None = None,
               callsite: SourceSpan | None = None,
               system_override: str | None = None,
               at_scope=None) -> EvalResult:
    """The retry loop: buildPrompt -> complete -> eval_hole, up to the
    configured attempt budget. Returns the first Success or the last
    Failure; exactly one AttemptRecord is traced per iteration."""
    runtime = _resolve_instance(session, instance)
    config = runtime.config
    if session.depth >= config.depth_cap:
        raise ScriptError("depth-limit",
                          f"agent nesting depth cap {config.depth_cap} exceeded",
                          callsite)
    bindings, expected_text, enclosing, _pure = snapshot_context(
        session, callsite, expected, at_scope)
    system = (system_override or config.system_override
              or load_template(config.template_id))
    listing = bindings_listing(bindings)

    errors: list[str] = []
    result: EvalResult | None = None
    for attempt in range(1, config.max_attempts + 1):
        bundle = build_prompt(task, listing, expected_text, enclosing, system,
                              errors[-_DIAG_WINDOW:])
        started = time.monotonic()
        try:
            response = complete(runtime.handle, bundle.to_request(),
                                forbidden=session.classified_registry)
        except ModelError as err:
            raise ScriptError("transport", f"model transport failure: {err}",
                              callsite)
        try:
            code = extract_code(response.text)
        except ExtractionError:
            result = EvalResult.failure([_no_code_diag(callsite)])
            _trace_attempt(session, attempt, bundle, "", result, started)
            errors.append(result.diagnostics_text())
            continue
        try:
            with session.deeper():
                result = eval_hole(code, session, expected or expected_text,
                                   enclosing, at_scope=at_scope)
        except ScriptError:
            record = AttemptRecord(attempt, bundle.content_hash(), code, [],
                                   "runtime-error",
                                   time.monotonic() - started)
            session.trace("attempt", asdict(record))
            raise
        _trace_attempt(session, attempt, bundle, code, result, started)
        if result.is_success:
            return result
        errors.append(result.diagnostics_text())
    assert result is not None
    return result


def _no_code_diag(callsite: SourceSpan | None):
    from .diagnostics import Diagnostic, Severity

    return Diagnostic(Severity.ERROR, "model returned no code",
                      callsite or SourceSpan("<agent>", 0, 0))


def _trace_attempt(session: Session, index: int, bundle: PromptBundle,
                   code: str, result: EvalResult, started: float) -> None:
    record = AttemptRecord(
        index, bundle.content_hash(), code,
        [d.render() for d in result.diagnostics],
        "accepted" if result.is_success else "rejected",
        time.monotonic() - started)
    session.trace("attempt", asdict(record))


def agent_call(task: str, session: Session, instance=None,
               expected: ty.TypeExpr | str | None = None,
               callsite: SourceSpan | None = None, at_scope=None):
    """agent_safe, with Failure surfaced as a catchable compile-failure
    error whose payload is the final diagnostics."""
    result = agent_safe(task, session, instance, expected, callsite,
                        at_scope=at_scope)
    if result.is_success:
        return result.value
    raise ScriptError("compile-failure",
                      "agent failed to compile:\n" + result.diagnostics_text(),
                      callsite)


# ---- script-level entry points (called from the evaluator) ----

def run_agent_node(node: ast.Apply, session: Session, scope) -> object:
    instance = None
    if isinstance(node.callee, ast.FieldAccess):
        instance = eval_expr(node.callee.base, session, scope)
    task = eval_expr(node.args[0], session, scope)
    return agent_call(task, session, instance, node.expected, node.span,
                      at_scope=scope)


def run_eval_node(node: ast.Apply, session: Session, scope) -> object:
    code = eval_expr(node.args[0], session, scope)
    config = _session_eval_config(session)
    if session.depth >= config.depth_cap:
        raise ScriptError("depth-limit",
                          f"agent nesting depth cap {config.depth_cap} exceeded",
                          node.span)
    enclosing = enclosing_source(
        session, node.span,
        render_type(node.expected) if node.expected is not None else None)

    with session.deeper():
        result = eval_hole(code, session, node.expected, enclosing,
                           at_scope=scope)
    if result.is_success:
        return result.value
    raise ScriptError("compile-failure",
                      "eval failed to compile:\n" + result.diagnostics_text(),
                      node.span)


def _session_eval_config(session: Session) -> AgentConfig:
    default = session.config.default_agent
    if default is not None and default in session.instances:
        return session.instances[default].handle.config
    return AgentConfig(max_attempts=session.config.max_attempts,
                       depth_cap=session.config.depth_cap)
