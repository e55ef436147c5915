"""AST node definitions.

Nodes are plain (non-frozen) dataclasses: the checker annotates them in
place with resolved types (`typ`), inferred capture sets on lambdas, and
the resolved expected type on agent/eval calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..diagnostics import SourceSpan


@dataclass
class Node:
    span: SourceSpan

    def __post_init__(self) -> None:
        self.typ = None  # TypeExpr, set by the checker


# ---- types as written in source ----

@dataclass
class TypeAst(Node):
    pass


@dataclass
class TName(TypeAst):
    name: str
    args: list[TypeAst] = field(default_factory=list)


@dataclass
class TTuple(TypeAst):
    items: list[TypeAst] = field(default_factory=list)


@dataclass
class TFunc(TypeAst):
    params: list[TypeAst] = field(default_factory=list)
    result: Optional[TypeAst] = None
    # capture annotation: "pure" (->), "top" (=>), or a list of names (->{a,b})
    captures: object = "pure"


# ---- patterns ----

@dataclass
class Pattern(Node):
    pass


@dataclass
class PatWildcard(Pattern):
    pass


@dataclass
class PatBinder(Pattern):
    name: str = ""


@dataclass
class PatCase(Pattern):
    enum_name: str = ""
    case_name: str = ""


# ---- expressions ----

@dataclass
class Expr(Node):
    pass


@dataclass
class IntLit(Expr):
    value: int = 0


@dataclass
class DoubleLit(Expr):
    value: float = 0.0


@dataclass
class BoolLit(Expr):
    value: bool = False


@dataclass
class StringLit(Expr):
    value: str = ""


@dataclass
class UnitLit(Expr):
    pass


@dataclass
class InterpString(Expr):
    # parts: str segments and Expr segments, in order
    parts: list[object] = field(default_factory=list)


@dataclass
class Name(Expr):
    name: str = ""


@dataclass
class Hole(Expr):
    pass


@dataclass
class TupleLit(Expr):
    items: list[Expr] = field(default_factory=list)


@dataclass
class Lambda(Expr):
    params: list[tuple[str, Optional[TypeAst]]] = field(default_factory=list)
    body: Optional[Expr] = None

    def __post_init__(self) -> None:
        super().__post_init__()
        self.capture_names: frozenset[str] = frozenset()  # inferred by checker
        self.mutated_outer: frozenset[str] = frozenset()


@dataclass
class Apply(Expr):
    callee: Optional[Expr] = None
    args: list[Expr] = field(default_factory=list)
    named_args: list[tuple[str, Expr]] = field(default_factory=list)
    type_args: list[TypeAst] = field(default_factory=list)

    def __post_init__(self) -> None:
        super().__post_init__()
        self.expected = None      # resolved expected TypeExpr on agent/eval calls
        self.special = None       # special-form tag set by the checker


@dataclass
class FieldAccess(Expr):
    base: Optional[Expr] = None
    name: str = ""


@dataclass
class BinOp(Expr):
    op: str = ""
    left: Optional[Expr] = None
    right: Optional[Expr] = None


@dataclass
class UnOp(Expr):
    op: str = ""
    operand: Optional[Expr] = None


@dataclass
class If(Expr):
    cond: Optional[Expr] = None
    then: Optional[Expr] = None
    orelse: Optional[Expr] = None


@dataclass
class While(Expr):
    cond: Optional[Expr] = None
    body: Optional[Expr] = None


@dataclass
class MatchArm(Node):
    pattern: Optional[Pattern] = None
    body: Optional[Expr] = None


@dataclass
class Match(Expr):
    subject: Optional[Expr] = None
    arms: list[MatchArm] = field(default_factory=list)


@dataclass
class Try(Expr):
    body: Optional[Expr] = None
    binder: str = ""
    handler: Optional[Expr] = None


@dataclass
class Throw(Expr):
    message: Optional[Expr] = None


@dataclass
class Block(Expr):
    stmts: list[Node] = field(default_factory=list)


# ---- statements and declarations ----

@dataclass
class ValDecl(Node):
    name: str = ""
    type_ast: Optional[TypeAst] = None
    init: Optional[Expr] = None
    mutable: bool = False


@dataclass
class Assign(Node):
    name: str = ""
    value: Optional[Expr] = None


@dataclass
class DefDecl(Node):
    name: str = ""
    params: list[tuple[str, TypeAst]] = field(default_factory=list)
    result_type: Optional[TypeAst] = None
    body: Optional[Expr] = None


@dataclass
class RecordDecl(Node):
    name: str = ""
    fields: list[tuple[str, TypeAst]] = field(default_factory=list)


@dataclass
class EnumDecl(Node):
    name: str = ""
    cases: list[str] = field(default_factory=list)


@dataclass
class Program(Node):
    stmts: list[Node] = field(default_factory=list)
