"""Type expressions, capture sets, and conformance.

The only subtyping is capture-set subsumption on function arrows, plus an
internal bottom type (for `throw`, `None`, and empty lists) that conforms
to everything. Containers are covariant so Option[Nothing] fits any
Option[T]; records and enums are nominal.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CaptureSet:
    """Either a finite set of capability binding names or the top set."""

    names: frozenset[str] = frozenset()
    is_top: bool = False

    def subsumes(self, other: "CaptureSet") -> bool:
        if self.is_top:
            return True
        if other.is_top:
            return False
        return other.names <= self.names

    def union(self, other: "CaptureSet") -> "CaptureSet":
        if self.is_top or other.is_top:
            return TOP_CAPS
        return CaptureSet(self.names | other.names)

    @property
    def is_empty(self) -> bool:
        return not self.is_top and not self.names

    def without(self, name: str) -> "CaptureSet":
        if self.is_top:
            return self
        return CaptureSet(self.names - {name})


EMPTY_CAPS = CaptureSet()
TOP_CAPS = CaptureSet(is_top=True)


def caps_of(names: object) -> CaptureSet:
    """Build a capture set from a parsed annotation: 'pure', 'top', or names."""
    if names == "pure":
        return EMPTY_CAPS
    if names == "top":
        return TOP_CAPS
    return CaptureSet(frozenset(names))


@dataclass(frozen=True)
class TypeExpr:
    pass


@dataclass(frozen=True)
class TInt(TypeExpr):
    pass


@dataclass(frozen=True)
class TDouble(TypeExpr):
    pass


@dataclass(frozen=True)
class TBool(TypeExpr):
    pass


@dataclass(frozen=True)
class TString(TypeExpr):
    pass


@dataclass(frozen=True)
class TUnit(TypeExpr):
    pass


@dataclass(frozen=True)
class TBottom(TypeExpr):
    """Internal bottom ("Nothing"): the type of throw and of empty literals."""


@dataclass(frozen=True)
class TList(TypeExpr):
    elem: TypeExpr


@dataclass(frozen=True)
class TOption(TypeExpr):
    elem: TypeExpr


@dataclass(frozen=True)
class TClassified(TypeExpr):
    elem: TypeExpr


@dataclass(frozen=True)
class TTuple(TypeExpr):
    items: tuple[TypeExpr, ...]


@dataclass(frozen=True)
class TRecord(TypeExpr):
    name: str


@dataclass(frozen=True)
class TEnum(TypeExpr):
    name: str


@dataclass(frozen=True)
class TFunc(TypeExpr):
    params: tuple[TypeExpr, ...]
    result: TypeExpr
    captures: CaptureSet = field(default=EMPTY_CAPS)


@dataclass(frozen=True)
class TCap(TypeExpr):
    """A capability type; kind is one of io, net, console, model."""

    kind: str


INT = TInt()
DOUBLE = TDouble()
BOOL = TBool()
STRING = TString()
UNIT = TUnit()
BOTTOM = TBottom()

CAP_KINDS = ("io", "net", "console", "model")
CAP_TYPE_NAMES = {"IO": "io", "Net": "net", "Console": "console", "Model": "model"}
CAP_KIND_TO_NAME = {v: k for k, v in CAP_TYPE_NAMES.items()}


def conforms(found: TypeExpr, required: TypeExpr) -> bool:
    """found ⊑ required under bottom, container covariance, and capture
    subsumption with contravariant function parameters."""
    if isinstance(found, TBottom):
        return True
    if type(found) is type(required):
        if isinstance(found, (TList, TOption, TClassified)):
            return conforms(found.elem, required.elem)
        if isinstance(found, TTuple):
            return (len(found.items) == len(required.items)
                    and all(conforms(f, r) for f, r in zip(found.items, required.items)))
        if isinstance(found, TFunc):
            return (len(found.params) == len(required.params)
                    and all(conforms(rp, fp) for rp, fp in zip(required.params, found.params))
                    and conforms(found.result, required.result)
                    and required.captures.subsumes(found.captures))
        return found == required
    return False


def join(a: TypeExpr, b: TypeExpr) -> TypeExpr | None:
    """Least common type of two branches, or None when they disagree."""
    if isinstance(a, TBottom):
        return b
    if isinstance(b, TBottom):
        return a
    if type(a) is not type(b):
        return None
    if isinstance(a, TList):
        elem = join(a.elem, b.elem)
        return TList(elem) if elem is not None else None
    if isinstance(a, TOption):
        elem = join(a.elem, b.elem)
        return TOption(elem) if elem is not None else None
    if isinstance(a, TClassified):
        elem = join(a.elem, b.elem)
        return TClassified(elem) if elem is not None else None
    if isinstance(a, TTuple):
        if len(a.items) != len(b.items):
            return None
        items = [join(x, y) for x, y in zip(a.items, b.items)]
        if any(i is None for i in items):
            return None
        return TTuple(tuple(items))
    if isinstance(a, TFunc):
        if a == b:
            return a
        if (a.params, a.result) == (b.params, b.result):
            return TFunc(a.params, a.result, a.captures.union(b.captures))
        return None
    return a if a == b else None


def mentions_capture_name(t: TypeExpr, name: str) -> bool:
    if isinstance(t, TFunc):
        if not t.captures.is_top and name in t.captures.names:
            return True
        return (any(mentions_capture_name(p, name) for p in t.params)
                or mentions_capture_name(t.result, name))
    if isinstance(t, (TList, TOption, TClassified)):
        return mentions_capture_name(t.elem, name)
    if isinstance(t, TTuple):
        return any(mentions_capture_name(i, name) for i in t.items)
    return False


def contains_cap_kind(t: TypeExpr, kind: str) -> bool:
    if isinstance(t, TCap):
        return t.kind == kind
    if isinstance(t, TFunc):
        return (any(contains_cap_kind(p, kind) for p in t.params)
                or contains_cap_kind(t.result, kind))
    if isinstance(t, (TList, TOption, TClassified)):
        return contains_cap_kind(t.elem, kind)
    if isinstance(t, TTuple):
        return any(contains_cap_kind(i, kind) for i in t.items)
    return False


def erase_capture_name(t: TypeExpr, name: str) -> TypeExpr:
    """The same type with `name` removed from every capture set (used to
    render the Required side of leak diagnostics)."""
    if isinstance(t, TFunc):
        return TFunc(tuple(erase_capture_name(p, name) for p in t.params),
                     erase_capture_name(t.result, name),
                     t.captures.without(name))
    if isinstance(t, TList):
        return TList(erase_capture_name(t.elem, name))
    if isinstance(t, TOption):
        return TOption(erase_capture_name(t.elem, name))
    if isinstance(t, TClassified):
        return TClassified(erase_capture_name(t.elem, name))
    if isinstance(t, TTuple):
        return TTuple(tuple(erase_capture_name(i, name) for i in t.items))
    return t
