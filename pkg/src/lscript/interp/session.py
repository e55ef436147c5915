"""Sessions: persistent scopes, declarations, depth tracking, and the
hermetic effect fakes the capability-gated builtins write to.

The root scope is shared by reference with every closure created in the
session, so a re-declaration replaces the old binding and later lookups
(including from generated snippets) resolve the new one. Inner scopes are
per-invocation and never mutated after their frame exits.
"""

from __future__ import annotations

import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field

from ..capabilities import CapabilityValue, ClassifiedBox
from ..types import core as ty
from ..types.env import BindingInfo, DeclLayer, TypeEnv
from .values import ListV, RecordV, SomeV, TupleV, Value, observe_value

_session_counter = itertools.count()
_counter_lock = threading.Lock()


def reset_session_ids() -> None:
    """Restart the deterministic session-id counter (one run = one stream)."""
    global _session_counter
    _session_counter = itertools.count()


@dataclass
class Binding:
    name: str
    typ: ty.TypeExpr
    value: Value
    mutable: bool = False
    origin: str = "val"
    pure_channel: bool = False
    precise: ty.TypeExpr | None = None


class Scope:
    def __init__(self, parent: "Scope | None" = None,
                 pure_boundary: bool = False) -> None:
        self.parent = parent
        self.bindings: dict[str, Binding] = {}
        self.pure_boundary = pure_boundary

    def child(self, pure_boundary: bool = False) -> "Scope":
        return Scope(self, pure_boundary)

    def declare(self, binding: Binding) -> None:
        self.bindings[binding.name] = binding

    def lookup(self, name: str) -> Binding | None:
        scope: Scope | None = self
        while scope is not None:
            if name in scope.bindings:
                return scope.bindings[name]
            scope = scope.parent
        return None

    def chain(self) -> list["Scope"]:
        out: list[Scope] = []
        scope: Scope | None = self
        while scope is not None:
            out.append(scope)
            scope = scope.parent
        return out

    def snapshot(self) -> "Scope":
        """A frozen copy of this scope chain (for child sessions)."""
        parent = self.parent.snapshot() if self.parent is not None else None
        copy = Scope(parent, self.pure_boundary)
        copy.bindings = dict(self.bindings)
        return copy


@dataclass
class EffectLog:
    """Hermetic test doubles for the effectful builtins, with counters."""

    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    files: dict[str, str] = field(default_factory=dict)
    http: dict[str, str] = field(default_factory=dict)
    corpus: dict[str, str] = field(default_factory=dict)
    outbox: list[tuple[str, str, str]] = field(default_factory=list)
    console: list[str] = field(default_factory=list)
    reads: int = 0
    http_gets: int = 0
    http_urls: list[str] = field(default_factory=list)
    emails_sent: int = 0
    searches: int = 0

    def observe(self) -> tuple:
        return (tuple(sorted(self.files.items())),
                tuple(self.outbox), tuple(self.console),
                self.reads, self.http_gets, tuple(self.http_urls),
                self.emails_sent, self.searches)


@dataclass
class SessionConfig:
    depth_cap: int = 128
    max_attempts: int = 3
    default_agent: str | None = None
    hermetic: bool = True
    template_id: str = "agent_system_v1"
    echo: bool = False


class Session:
    def __init__(self, config: SessionConfig | None = None,
                 trace_sink=None, session_id: str | None = None,
                 parent: "Session | None" = None) -> None:
        if session_id is None:
            with _counter_lock:
                session_id = f"s{next(_session_counter)}"
        self.id = session_id
        self.config = config or SessionConfig()
        self.parent = parent
        self.decls = DeclLayer()
        self.root_scope = Scope()
        self.current_scope: Scope = self.root_scope
        self.depth = 0
        self.max_depth_seen = 0
        self.memory: dict[str, str] = {}
        self.effects = EffectLog()
        self.trace_sink = trace_sink
        self.classified_registry: set[str] = set()
        self.instances: dict[str, CapabilityValue] = {}
        self.agent_configs: dict[str, object] = {}
        self.res_counter = 0
        # (statement text, base offset) stack; top is the enclosing source for holes
        self.statement_stack: list[tuple[str, int]] = []
        self.scope_counter = itertools.count()
        self.open_cap_scopes: set[str] = set()
        self.checks_disabled = False  # harness-only bypass of static checking

    # ---- naming ----

    def fresh_result_name(self) -> str:
        name = f"res{self.res_counter}"
        self.res_counter += 1
        return name

    def fresh_scope_id(self) -> str:
        return f"{self.id}/cap{next(self.scope_counter)}"

    # ---- depth ----

    @contextmanager
    def deeper(self):
        self.depth += 1
        self.max_depth_seen = max(self.max_depth_seen, self.depth)
        try:
            yield
        finally:
            self.depth -= 1

    # ---- statement context ----

    @contextmanager
    def statement(self, text: str, base: int):
        self.statement_stack.append((text, base))
        try:
            yield
        finally:
            self.statement_stack.pop()

    @property
    def current_statement(self) -> tuple[str, int] | None:
        return self.statement_stack[-1] if self.statement_stack else None

    @contextmanager
    def scope(self, scope: Scope):
        prev = self.current_scope
        self.current_scope = scope
        try:
            yield scope
        finally:
            self.current_scope = prev

    # ---- tracing ----

    def trace(self, kind: str, payload: dict) -> None:
        if self.trace_sink is not None:
            self.trace_sink.emit(self.id, kind, payload, redact=self.classified_registry)

    # ---- classified bookkeeping ----

    def register_classified(self, box: ClassifiedBox) -> None:
        from .values import render_value
        content = box.content
        if isinstance(content, str):
            self.classified_registry.add(content)
        else:
            self.classified_registry.add(render_value(content, quote=False))
        if self.parent is not None:
            self.parent.register_classified(box)

    # ---- child sessions ----

    def child(self, isolated: bool, session_id: str | None = None) -> "Session":
        """isolated=True: sub-agent style, only declarations carry over.
        isolated=False: parMap style, a frozen snapshot of the whole scope."""
        child = Session(self.config, self.trace_sink, session_id, parent=self)
        child.decls = self.decls
        child.instances = self.instances
        child.agent_configs = self.agent_configs
        child.depth = self.depth
        child.max_depth_seen = self.depth
        child.checks_disabled = self.checks_disabled
        if isolated:
            for binding in self.root_scope.bindings.values():
                if binding.origin in ("def", "builtin", "instance"):
                    child.root_scope.declare(binding)
        else:
            child.root_scope = self.current_scope.snapshot()
            child.current_scope = child.root_scope
            child.memory = dict(self.memory)
            child.effects = self.effects  # shared doubles: effects are global
        child.classified_registry = self.classified_registry
        return child

    def absorb_child_depth(self, child: "Session") -> None:
        self.max_depth_seen = max(self.max_depth_seen, child.max_depth_seen)

    # ---- typing view ----

    def type_env(self, at_scope: Scope | None = None) -> TypeEnv:
        """A TypeEnv mirroring the runtime scope chain (innermost last)."""
        scope_chain = list(reversed((at_scope or self.current_scope).chain()))
        env: TypeEnv | None = None
        for scope in scope_chain:
            if env is None:
                env = TypeEnv(self.decls, None, "session")
                env.default_agent = self.config.default_agent
            else:
                if scope.pure_boundary:
                    env = env.child("pure")
                env = env.child("block")
            for binding in scope.bindings.values():
                env.declare(BindingInfo(
                    binding.name, binding.typ, None,
                    mutable=binding.mutable,
                    pure_channel=binding.pure_channel,
                    origin=binding.origin,
                    precise=binding.precise))
        assert env is not None
        return env

    # ---- observation ----

    def observe(self) -> tuple:
        """Everything a snippet could have changed: bindings, declarations,
        memory, and the effect doubles. Used by atomicity checks."""
        scopes = []
        for scope in self.current_scope.chain():
            scopes.append(tuple(sorted(
                (name, observe_value(b.value), b.mutable)
                for name, b in scope.bindings.items())))
        records = tuple(sorted(
            (name, tuple((f, repr(t)) for f, t in info.fields))
            for name, info in _all_records(self.decls).items()))
        enums = tuple(sorted(
            (name, tuple(info.cases)) for name, info in _all_enums(self.decls).items()))
        return (tuple(scopes), records, enums,
                tuple(sorted(self.memory.items())), self.effects.observe())

    def live_capability_scope_ids(self) -> set[str]:
        return set(self.open_cap_scopes)

    def escaped_capabilities(self) -> list[CapabilityValue]:
        """Capability values reachable from live bindings whose introducing
        extent has already exited (confinement check)."""
        out: list[CapabilityValue] = []
        seen: set[int] = set()
        for scope in self.current_scope.chain():
            for binding in scope.bindings.values():
                _find_caps(binding.value, self.id, self.open_cap_scopes, out, seen)
        return out


def _find_caps(value: Value, session_id: str, open_scopes: set[str],
               out: list[CapabilityValue], seen: set[int]) -> None:
    if id(value) in seen:
        return
    seen.add(id(value))
    if isinstance(value, CapabilityValue):
        scoped = value.scope_id.startswith(f"{session_id}/")
        if scoped and value.scope_id not in open_scopes:
            out.append(value)
        return
    if isinstance(value, (ListV, TupleV)):
        for item in value.items:
            _find_caps(item, session_id, open_scopes, out, seen)
    elif isinstance(value, RecordV):
        for _, item in value.fields:
            _find_caps(item, session_id, open_scopes, out, seen)
    elif isinstance(value, SomeV):
        _find_caps(value.value, session_id, open_scopes, out, seen)
    elif isinstance(value, ClassifiedBox):
        _find_caps(value.content, session_id, open_scopes, out, seen)
    else:
        from .values import ClosureV
        if isinstance(value, ClosureV):
            for scope in value.scope.chain():
                for binding in scope.bindings.values():
                    _find_caps(binding.value, session_id, open_scopes, out, seen)


def _all_records(decls: DeclLayer) -> dict:
    out: dict = {}
    layer: DeclLayer | None = decls
    layers = []
    while layer is not None:
        layers.append(layer)
        layer = layer.parent
    for layer in reversed(layers):
        out.update(layer.records)
    return out


def _all_enums(decls: DeclLayer) -> dict:
    out: dict = {}
    layer: DeclLayer | None = decls
    layers = []
    while layer is not None:
        layers.append(layer)
        layer = layer.parent
    for layer in reversed(layers):
        out.update(layer.enums)
    return out
