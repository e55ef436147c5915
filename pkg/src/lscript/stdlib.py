"""Builtins and tools-as-functions.

A tool is just a binding in scope: the checker verifies every call against
its signature, so composition is checked end to end with no schema layer.
Effectful builtins are backed by in-memory fakes (a file map, a canned
HTTP table, an outbox, a console buffer) so the whole suite is hermetic;
the real-IO flag swaps in real file reads and HTTP GETs. There is no real
email transport in either mode.

Capability-gated builtins are bound only when the session grants their
kind, and their arrow types name the grant in the capture set, so a
snippet generated without the grant cannot even name them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .agent import AgentConfig, InstanceRuntime, agent_call
from .capabilities import CapabilityValue
from .diagnostics import SourceSpan
from .interp.evaluator import ScriptError, call_function
from .interp.session import Binding, Session
from .interp.values import NONE, UNIT, BuiltinV, ListV, SomeV, TupleV, render_value
from .model import ModelHandle
from .syntax import ast
from .trace import BufferSink
from .types import core as ty
from .types.core import CaptureSet, EMPTY_CAPS, TFunc

GRANTABLE_KINDS = ("io", "net", "console")


def _caps(*names: str) -> CaptureSet:
    return CaptureSet(frozenset(names))


def require_live(cap, kind: str, span: SourceSpan | None) -> None:
    if not isinstance(cap, CapabilityValue) or cap.kind != kind:
        raise ScriptError("runtime", f"expected a {kind} capability", span)
    if cap.revoked:
        raise ScriptError("revoked-capability",
                          f"capability {kind} was revoked when its scope exited", span)


def normalize(text: str) -> str:
    out = "".join(ch.lower() if ch.isalnum() else " " for ch in text)
    return " ".join(out.split())


def search_memory_pairs(memory: dict[str, str], query: str) -> list[tuple[str, str]]:
    """All (key, value) pairs whose key or value contains the query, in key
    order; matching also applies to normalized forms so "team sync" finds a
    "team-sync" key."""
    norm_q = normalize(query)
    out = []
    for key in sorted(memory):
        value = memory[key]
        if (query in key or query in value
                or norm_q in normalize(key) or norm_q in normalize(value)):
            out.append((key, value))
    return out


def install_builtins(session: Session, grants: tuple[str, ...] = (),
                     instances: dict[str, InstanceRuntime] | None = None,
                     default_instance: str | None = None,
                     real_io: bool = False) -> None:
    """Bind the stdlib into a fresh session: pure helpers and memory tools
    always; println/httpGet/sendEmail only under their grants; readFile and
    the corpus tools take the io capability explicitly as an argument."""
    root = session.root_scope

    def bind(name: str, fn_type: TFunc, impl, origin: str = "builtin") -> None:
        root.declare(Binding(name, fn_type, BuiltinV(name, fn_type, impl),
                             origin=origin))

    # memory tool: a mutable map with a few functions (session-scoped)
    def set_memory(s: Session, args, span):
        s.memory[args[0]] = args[1]
        return UNIT

    def get_memory(s: Session, args, span):
        return SomeV(s.memory[args[0]]) if args[0] in s.memory else NONE

    def search_memory(s: Session, args, span):
        return ListV(tuple(TupleV((k, v))
                           for k, v in search_memory_pairs(s.memory, args[0])))

    def delete_memory(s: Session, args, span):
        s.memory.pop(args[0], None)
        return UNIT

    bind("setMemory", TFunc((ty.STRING, ty.STRING), ty.UNIT), set_memory)
    bind("getMemory", TFunc((ty.STRING,), ty.TOption(ty.STRING)), get_memory)
    bind("searchMemory",
         TFunc((ty.STRING,), ty.TList(ty.TTuple((ty.STRING, ty.STRING)))),
         search_memory)
    bind("deleteMemory", TFunc((ty.STRING,), ty.UNIT), delete_memory)

    # capability-passing tools: callable only with a live capability value
    def read_file(s: Session, args, span):
        require_live(args[0], "io", span)
        with s.effects.lock:
            s.effects.reads += 1
        path = args[1]
        if real_io:
            try:
                with open(path, encoding="utf-8") as fh:
                    return fh.read()
            except OSError as err:
                raise ScriptError("runtime", f"cannot read {path}: {err}", span)
        if path not in s.effects.files:
            raise ScriptError("runtime", f"file not found: {path}", span)
        return s.effects.files[path]

    bind("readFile", TFunc((ty.TCap("io"), ty.STRING), ty.STRING), read_file)

    def search_corpus(s: Session, args, span):
        require_live(args[0], "io", span)
        with s.effects.lock:
            s.effects.searches += 1
        query = args[1].lower()
        hits = []
        for doc_id in sorted(s.effects.corpus):
            text = s.effects.corpus[doc_id]
            if query in text.lower() or query in doc_id.lower():
                snippet = text[:120]
                hits.append(TupleV((doc_id, snippet)))
        return ListV(tuple(hits))

    def get_document(s: Session, args, span):
        require_live(args[0], "io", span)
        with s.effects.lock:
            s.effects.reads += 1
        if args[1] not in s.effects.corpus:
            raise ScriptError("runtime", f"no document {args[1]}", span)
        return s.effects.corpus[args[1]]

    bind("search",
         TFunc((ty.TCap("io"), ty.STRING), ty.TList(ty.TTuple((ty.STRING, ty.STRING)))),
         search_corpus)
    bind("getDocument", TFunc((ty.TCap("io"), ty.STRING), ty.STRING), get_document)

    # grants and the ambient-capture builtins gated on them
    for kind in grants:
        if kind not in GRANTABLE_KINDS:
            raise ValueError(f"unknown capability kind {kind}")
        cap = CapabilityValue(kind=kind, scope_id=f"{session.id}/session")
        session.open_cap_scopes.add(cap.scope_id)
        root.declare(Binding(kind, ty.TCap(kind), cap, origin="grant"))

    if "console" in grants:
        def println(s: Session, args, span):
            with s.effects.lock:
                s.effects.console.append(render_value(args[0], quote=False))
            return UNIT

        bind("println", TFunc((ty.STRING,), ty.UNIT, _caps("console")), println)

    if "net" in grants:
        def http_get(s: Session, args, span):
            with s.effects.lock:
                s.effects.http_gets += 1
                s.effects.http_urls.append(args[0])
            if real_io:
                import requests
                try:
                    return requests.get(args[0], timeout=30).text
                except requests.RequestException as err:
                    raise ScriptError("runtime", f"httpGet failed: {err}", span)
            if args[0] not in s.effects.http:
                raise ScriptError("runtime", f"no canned response for {args[0]}", span)
            return s.effects.http[args[0]]

        def send_email(s: Session, args, span):
            with s.effects.lock:
                s.effects.emails_sent += 1
                s.effects.outbox.append((args[0], args[1], args[2]))
            return UNIT

        bind("httpGet", TFunc((ty.STRING,), ty.STRING, _caps("net")), http_get)
        bind("sendEmail", TFunc((ty.STRING, ty.STRING, ty.STRING), ty.UNIT,
                                _caps("net")), send_email)

    # model instances: capability values carrying their runtime config
    for name, runtime in (instances or {}).items():
        cap = CapabilityValue(kind="model", scope_id=f"{session.id}/session",
                              pure_channel=runtime.handle.pure_channel,
                              handle=runtime)
        session.open_cap_scopes.add(cap.scope_id)
        session.instances[name] = cap
        root.declare(Binding(name, ty.TCap("model"), cap, origin="instance",
                             pure_channel=runtime.handle.pure_channel))
    if default_instance is not None:
        session.config.default_agent = default_instance


def make_session(grants: tuple[str, ...] = ("io", "net", "console"),
                 instances: dict[str, InstanceRuntime] | None = None,
                 default_instance: str | None = None,
                 config=None, trace_sink=None, real_io: bool = False) -> Session:
    session = Session(config, trace_sink)
    install_builtins(session, grants, instances, default_instance, real_io)
    return session


def instance_of(handle: ModelHandle, config: AgentConfig | None = None) -> InstanceRuntime:
    return InstanceRuntime(handle, config or AgentConfig(model_id=handle.id))


# ---- sub-agents and parallel map ----

def run_sub_agent(session: Session, prompt: str, node: ast.Apply):
    """An agent call in a child session whose scope holds only `prompt`
    plus top-level declarations; caller locals and capabilities stay out."""
    child = session.child(isolated=True)
    child.root_scope.declare(Binding("prompt", ty.STRING, prompt, origin="val"))
    try:
        return agent_call(prompt, child, None, node.expected, None)
    finally:
        session.absorb_child_depth(child)


def run_par_map(session: Session, items: ListV, fn, node: ast.Apply) -> ListV:
    """Semantically a plain map; each element runs in an isolated child
    session, possibly concurrently. Child trace events flush to the shared
    sink in input order after the join."""
    if not items.items:
        return ListV(())
    children: list[Session] = []
    buffers: list[BufferSink] = []
    parent_sink = session.trace_sink
    for _ in items.items:
        child = session.child(isolated=False)
        buffer = BufferSink()
        child.trace_sink = buffer
        children.append(child)
        buffers.append(buffer)

    def run_one(idx: int):
        return call_function(fn, [items.items[idx]], children[idx], node.span)

    results: list = [None] * len(items.items)
    errors: list[tuple[int, Exception]] = []
    with ThreadPoolExecutor(max_workers=min(8, len(items.items))) as pool:
        futures = {pool.submit(run_one, i): i for i in range(len(items.items))}
        for future, idx in futures.items():
            try:
                results[idx] = future.result()
            except ScriptError as err:
                errors.append((idx, err))
    if parent_sink is not None:
        for buffer in buffers:
            buffer.flush_to(parent_sink)
    for child in children:
        session.absorb_child_depth(child)
    if errors:
        errors.sort(key=lambda pair: pair[0])
        raise errors[0][1]
    return ListV(tuple(results))
