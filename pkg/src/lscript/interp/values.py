"""Runtime values and their rendering.

Ints, doubles, bools, and strings are native Python values; everything
else gets a small wrapper. Structural kinds compare by value, closures
and capabilities by identity. Classified boxes always render as the
fixed redacted text, in previews and in interpolation alike.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..capabilities import REDACTED_TEXT, CapabilityValue, ClassifiedBox
from ..types import core as ty


class UnitValue:
    _instance: "UnitValue | None" = None

    def __new__(cls) -> "UnitValue":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "()"


UNIT = UnitValue()


class NoneValue:
    _instance: "NoneValue | None" = None

    def __new__(cls) -> "NoneValue":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "None"


NONE = NoneValue()


@dataclass(frozen=True)
class SomeV:
    value: object


@dataclass(frozen=True)
class ListV:
    items: tuple = ()


@dataclass(frozen=True)
class TupleV:
    items: tuple = ()


@dataclass(frozen=True)
class RecordV:
    name: str
    fields: tuple  # ordered (field name, value) pairs


@dataclass(frozen=True)
class EnumV:
    enum_name: str
    case_name: str


@dataclass(eq=False)
class ClosureV:
    params: list[tuple[str, ty.TypeExpr]]
    body: object                     # ast.Expr
    scope: object                    # defining Scope
    fn_type: ty.TFunc
    source: tuple[str, int] = ("", 0)  # (statement text, base offset) for holes
    name: str | None = None


@dataclass(eq=False)
class BuiltinV:
    name: str
    fn_type: ty.TFunc
    impl: object = None              # callable(ctx, args, span) -> value
    variadic: bool = False


Value = object


def record_field(value: RecordV, name: str) -> object:
    for fname, fval in value.fields:
        if fname == name:
            return fval
    raise KeyError(name)


def render_value(value: Value, quote: bool = True) -> str:
    """Source-flavored rendering. quote=False is the interpolation style
    (strings unquoted, Scala toString flavor)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return f'"{_escape(value)}"' if quote else value
    if value is UNIT:
        return "()"
    if value is NONE:
        return "None"
    if isinstance(value, SomeV):
        return f"Some({render_value(value.value, quote)})"
    if isinstance(value, ListV):
        return "List(" + ", ".join(render_value(i, quote) for i in value.items) + ")"
    if isinstance(value, TupleV):
        return "(" + ", ".join(render_value(i, quote) for i in value.items) + ")"
    if isinstance(value, RecordV):
        inner = ", ".join(f"{n} = {render_value(v, quote)}" for n, v in value.fields)
        return f"{value.name}({inner})"
    if isinstance(value, EnumV):
        return f"{value.enum_name}.{value.case_name}"
    if isinstance(value, ClassifiedBox):
        return REDACTED_TEXT
    if isinstance(value, CapabilityValue):
        if value.kind == "model":
            return "<model>"
        return f"<capability {value.kind}>"
    if isinstance(value, (ClosureV, BuiltinV)):
        return "<function>"
    return repr(value)


def _escape(text: str) -> str:
    return (text.replace("\\", "\\\\").replace('"', '\\"')
            .replace("\n", "\\n").replace("\t", "\\t"))


def preview(value: Value, limit: int = 200) -> str:
    """Binding preview for prompts and echoes, truncated at `limit`."""
    text = render_value(value, quote=True)
    if len(text) > limit:
        return text[:limit] + "…"
    return text


def observe_value(value: Value) -> object:
    """A stable, comparable observation of a value (for atomicity checks)."""
    if isinstance(value, (bool, int, float, str)):
        return value
    if value is UNIT:
        return "()"
    if value is NONE:
        return ("none",)
    if isinstance(value, SomeV):
        return ("some", observe_value(value.value))
    if isinstance(value, ListV):
        return ("list", tuple(observe_value(i) for i in value.items))
    if isinstance(value, TupleV):
        return ("tuple", tuple(observe_value(i) for i in value.items))
    if isinstance(value, RecordV):
        return ("record", value.name,
                tuple((n, observe_value(v)) for n, v in value.fields))
    if isinstance(value, EnumV):
        return ("enum", value.enum_name, value.case_name)
    if isinstance(value, ClassifiedBox):
        return ("classified", observe_value(value.content))
    if isinstance(value, CapabilityValue):
        return ("capability", value.uid, value.revoked)
    if isinstance(value, ClosureV):
        return ("closure", id(value))
    if isinstance(value, BuiltinV):
        return ("builtin", value.name)
    return ("opaque", repr(value))
