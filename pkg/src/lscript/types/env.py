"""Typing environments and declaration tables.

Scopes form a parent-linked chain with innermost-first lookup; an inner
declaration shadows an outer one of the same name. Declaration layers let
the checker register records/enums from a snippet without touching the
session's own table (checking must stay pure).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diagnostics import SourceSpan
from .core import TypeExpr


@dataclass
class BindingInfo:
    name: str
    typ: TypeExpr
    span: SourceSpan | None = None
    mutable: bool = False
    pure_channel: bool = False   # model handles declared safe for pure scopes
    origin: str = "val"          # val | var | def | builtin | grant | instance | param
    precise: TypeExpr | None = None  # inferred initializer type, for leak analysis

    @property
    def precise_type(self) -> TypeExpr:
        return self.precise if self.precise is not None else self.typ


@dataclass
class RecordInfo:
    name: str
    fields: list[tuple[str, TypeExpr]]

    def field_type(self, fname: str) -> TypeExpr | None:
        for n, t in self.fields:
            if n == fname:
                return t
        return None


@dataclass
class EnumInfo:
    name: str
    cases: list[str]


class DeclLayer:
    """Record/enum declarations, layered so scratch layers shadow the base."""

    def __init__(self, parent: "DeclLayer | None" = None) -> None:
        self.parent = parent
        self.records: dict[str, RecordInfo] = {}
        self.enums: dict[str, EnumInfo] = {}

    def child(self) -> "DeclLayer":
        return DeclLayer(self)

    def record(self, name: str) -> RecordInfo | None:
        layer: DeclLayer | None = self
        while layer is not None:
            if name in layer.records:
                return layer.records[name]
            layer = layer.parent
        return None

    def enum(self, name: str) -> EnumInfo | None:
        layer: DeclLayer | None = self
        while layer is not None:
            if name in layer.enums:
                return layer.enums[name]
            layer = layer.parent
        return None

    def is_type_name(self, name: str) -> bool:
        return self.record(name) is not None or self.enum(name) is not None


@dataclass
class TypeEnv:
    """One scope in the chain. kind is "session", "block", "lambda", or
    "pure" (a purity boundary: capability uses may not cross it)."""

    decls: DeclLayer
    parent: "TypeEnv | None" = None
    kind: str = "block"
    bindings: dict[str, BindingInfo] = field(default_factory=dict)
    default_agent: str | None = None

    def __post_init__(self) -> None:
        self.depth = 0 if self.parent is None else self.parent.depth + 1

    def child(self, kind: str = "block", decls: DeclLayer | None = None) -> "TypeEnv":
        return TypeEnv(decls or self.decls, self, kind)

    def declare(self, info: BindingInfo) -> None:
        self.bindings[info.name] = info

    def lookup(self, name: str) -> tuple[BindingInfo, "TypeEnv"] | None:
        env: TypeEnv | None = self
        while env is not None:
            if name in env.bindings:
                return env.bindings[name], env
            env = env.parent
        return None

    def root(self) -> "TypeEnv":
        env = self
        while env.parent is not None:
            env = env.parent
        return env

    def resolve_default_agent(self) -> str | None:
        env: TypeEnv | None = self
        while env is not None:
            if env.default_agent is not None:
                return env.default_agent
            env = env.parent
        return None

    def chain(self) -> list["TypeEnv"]:
        out: list[TypeEnv] = []
        env: TypeEnv | None = self
        while env is not None:
            out.append(env)
            env = env.parent
        return out
