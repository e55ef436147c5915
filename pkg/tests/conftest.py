from __future__ import annotations

import pytest

from lscript.agent import AgentConfig, InstanceRuntime
from lscript.interp.hole import eval_hole
from lscript.interp.pipeline import run_source
from lscript.interp.session import Session, SessionConfig
from lscript.model import ScriptedModel
from lscript.stdlib import install_builtins
from lscript.trace import MemorySink


def fresh_session(grants=(), instances=None, default=None, sink=None,
                  max_attempts=3, depth_cap=128) -> Session:
    session = Session(SessionConfig(depth_cap=depth_cap,
                                    max_attempts=max_attempts),
                      sink or MemorySink())
    install_builtins(session, tuple(grants), instances, default)
    return session


def scripted_session(queue=None, rules=None, grants=(), max_attempts=3,
                     depth_cap=128, sink=None):
    """A session with one scripted default instance named `main`."""
    model = ScriptedModel(handle_id="main", queue=queue, rules=rules)
    config = AgentConfig(model_id="main", max_attempts=max_attempts,
                         depth_cap=depth_cap)
    session = fresh_session(grants, {"main": InstanceRuntime(model, config)},
                            "main", sink, max_attempts, depth_cap)
    return session, model


def run_ok(session: Session, source: str):
    """run_source, asserting every statement was accepted."""
    outcomes, diags = run_source(session, source)
    assert not diags, [d.render() for d in diags]
    for outcome in outcomes:
        assert outcome.ok, outcome.diagnostics[0].render()
    return outcomes


def reject(session: Session, snippet: str, expected_type: str):
    result = eval_hole(snippet, session, expected_type, None)
    assert not result.is_success, f"accepted: {result.value!r}"
    return result.diagnostics_text()


def accept(session: Session, snippet: str, expected_type: str):
    result = eval_hole(snippet, session, expected_type, None)
    assert result.is_success, result.diagnostics_text()
    return result.value


@pytest.fixture
def session():
    return fresh_session()
