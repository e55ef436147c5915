"""Capture checking and capability values.

The checker (types.check) infers capture sets and annotates the AST; this
pass walks the annotated tree and enforces the scoping rules:

  * nothing whose type mentions a scoped capability may leave the
    `withCapability` extent that introduced it (by result value or by
    assignment to an enclosing var), and
  * no capability may be touched across a purity boundary (a hole inside
    a pure function body).

Runtime capability values are unforgeable Python objects compared by
identity; they are revoked when their introducing extent exits, a dynamic
backstop for harness modes that bypass the static pass.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field as dc_field

from .diagnostics import Diagnostic, Severity, capability_leak, sort_key
from .syntax import ast
from .syntax.render import render_type
from .types import core as ty
from .types.check import Checker, walk

_ids = itertools.count()
_ids_lock = threading.Lock()


def _next_id() -> int:
    with _ids_lock:
        return next(_ids)


@dataclass(eq=False)
class CapabilityValue:
    """An unforgeable value authorizing one effect kind. Equality is
    identity; nothing in the script language constructs one."""

    kind: str
    scope_id: str
    revoked: bool = False
    pure_channel: bool = False
    handle: object = None  # model backend for kind == "model"
    uid: int = dc_field(default_factory=_next_id)

    def revoke(self) -> None:
        self.revoked = True


REDACTED_TEXT = "Classified(<redacted>)"


@dataclass(eq=False)
class ClassifiedBox:
    """A wrapper whose content is reachable only through a pure map.

    Any rendering of the box (REPL echo, binding preview, interpolation,
    traces) is the fixed redacted text.
    """

    content: object
    content_type: ty.TypeExpr


class _ScopeStack:
    def __init__(self) -> None:
        self.scopes: list[tuple[str | None, str, int]] = []


def capture_check(program: ast.Node, checker: Checker) -> list[Diagnostic]:
    """Scope-escape and purity diagnostics over a type-checked tree."""
    diags: list[Diagnostic] = []
    _walk_scopes(program, [], diags)
    for node in walk(program):
        contributes = getattr(node, "contributes", None)
        if (contributes is not None and getattr(node, "crossed_pure", False)
                and not contributes.is_empty):
            name = "any" if contributes.is_top else sorted(contributes.names)[0]
            diags.append(Diagnostic(
                Severity.ERROR,
                f"Capability {name} cannot be used in a pure context",
                node.span))
    _ = checker
    return sorted(diags, key=sort_key)


def _walk_scopes(node: ast.Node,
                 scopes: list[tuple[str | None, str, int]],
                 diags: list[Diagnostic]) -> None:
    if isinstance(node, ast.Apply) and getattr(node, "special", None) == "withCapability":
        kind = node.cap_kind
        pname = node.cap_param
        result_t = node.body_result_precise
        if result_t is not None:
            if pname is not None and ty.mentions_capture_name(result_t, pname):
                diags.append(capability_leak(
                    pname, node.span,
                    found=render_type(result_t),
                    required=render_type(ty.erase_capture_name(result_t, pname))))
            elif ty.contains_cap_kind(result_t, kind):
                diags.append(capability_leak(
                    pname or kind, node.span, found=render_type(result_t)))
        body = node.args[1] if len(node.args) == 2 else None
        if isinstance(body, ast.Lambda) and hasattr(body, "env_depth"):
            inner = scopes + [(pname, kind, body.env_depth)]
            _walk_scopes(body.body, inner, diags)
            for child in _children(node):
                if child is not body:
                    _walk_scopes(child, scopes, diags)
            return
    if isinstance(node, ast.Assign) and hasattr(node, "target_depth"):
        value_t = getattr(node, "value_precise", None)
        if value_t is not None:
            for pname, kind, depth in scopes:
                if node.target_depth >= depth:
                    continue
                if pname is not None and ty.mentions_capture_name(value_t, pname):
                    diags.append(capability_leak(
                        pname, node.span,
                        found=render_type(value_t),
                        required=render_type(ty.erase_capture_name(value_t, pname))))
                elif ty.contains_cap_kind(value_t, kind):
                    diags.append(capability_leak(pname or kind, node.span,
                                                 found=render_type(value_t)))
    for child in _children(node):
        _walk_scopes(child, scopes, diags)


def _children(node: ast.Node):
    for value in vars(node).values():
        if isinstance(value, ast.Node):
            yield value
        elif isinstance(value, (list, tuple)):
            for item in value:
                if isinstance(item, ast.Node):
                    yield item
                elif isinstance(item, tuple):
                    for sub in item:
                        if isinstance(sub, ast.Node):
                            yield sub


def fresh_capability(kind: str, scope_id: str) -> CapabilityValue:
    return CapabilityValue(kind=kind, scope_id=scope_id)
