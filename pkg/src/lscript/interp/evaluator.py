"""Tree-walking evaluation of checked programs.

Only runs after check + captureCheck have accepted the tree, except in the
harness bypass mode used for differential testing of the dynamic
revocation backstop. Runtime errors (division by zero, index out of
range, throw, revoked capability, depth limit, compile failure) are
catchable by the script language's try/catch.
"""

from __future__ import annotations

from ..capabilities import CapabilityValue, ClassifiedBox
from ..diagnostics import SourceSpan
from ..syntax import ast
from ..syntax.lexer import HOLE_MARKER
from ..types import core as ty
from .session import Binding, Scope, Session
from .values import (
    NONE,
    UNIT,
    BuiltinV,
    ClosureV,
    EnumV,
    ListV,
    RecordV,
    SomeV,
    TupleV,
    Value,
    render_value,
)

_INT_MASK = (1 << 64) - 1
_INT_SIGN = 1 << 63


def wrap_int(n: int) -> int:
    r = n & _INT_MASK
    return r - (1 << 64) if r >= _INT_SIGN else r


class ScriptError(Exception):
    """A catchable script-level runtime error."""

    def __init__(self, kind: str, message: str, span: SourceSpan | None = None) -> None:
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.span = span


def eval_program(program: ast.Program, session: Session,
                 scope: Scope | None = None) -> Value:
    """Evaluate statements in order; the value is the final expression's
    (Unit when the program ends with a declaration)."""
    target = scope if scope is not None else session.current_scope
    result: Value = UNIT
    for stmt in program.stmts:
        result = eval_statement(stmt, session, target)
        if not isinstance(stmt, ast.Expr):
            result = UNIT
    return result


def eval_statement(stmt: ast.Node, session: Session, scope: Scope) -> Value:
    if isinstance(stmt, ast.ValDecl):
        value = eval_expr(stmt.init, session, scope)
        scope.declare(Binding(stmt.name, stmt.typ, value,
                              mutable=stmt.mutable,
                              origin="var" if stmt.mutable else "val",
                              precise=stmt.init.typ))
        return UNIT
    if isinstance(stmt, ast.Assign):
        value = eval_expr(stmt.value, session, scope)
        holder = _holder_of(scope, stmt.name)
        if holder is None:
            raise ScriptError("runtime", f"Not found: value {stmt.name}", stmt.span)
        old = holder.bindings[stmt.name]
        holder.bindings[stmt.name] = Binding(
            old.name, old.typ, value, old.mutable, old.origin,
            old.pure_channel, old.precise)
        return UNIT
    if isinstance(stmt, ast.DefDecl):
        fn_type = stmt.typ
        closure = ClosureV(
            params=[(n, t) for (n, _), t in zip(stmt.params, fn_type.params)],
            body=stmt.body, scope=scope, fn_type=fn_type,
            source=session.current_statement or ("", 0), name=stmt.name)
        scope.declare(Binding(stmt.name, fn_type, closure, origin="def"))
        return UNIT
    if isinstance(stmt, ast.RecordDecl):
        from ..types.env import RecordInfo
        session.decls.records[stmt.name] = RecordInfo(stmt.name, stmt.checked_fields)
        return UNIT
    if isinstance(stmt, ast.EnumDecl):
        from ..types.env import EnumInfo
        session.decls.enums[stmt.name] = EnumInfo(stmt.name, list(stmt.cases))
        return UNIT
    if isinstance(stmt, ast.Expr):
        return eval_expr(stmt, session, scope)
    raise TypeError(f"unknown statement {stmt!r}")


def _holder_of(scope: Scope, name: str) -> Scope | None:
    s: Scope | None = scope
    while s is not None:
        if name in s.bindings:
            return s
        s = s.parent
    return None


def eval_expr(node: ast.Expr, session: Session, scope: Scope) -> Value:
    if isinstance(node, ast.IntLit):
        return wrap_int(node.value)
    if isinstance(node, ast.DoubleLit):
        return node.value
    if isinstance(node, ast.BoolLit):
        return node.value
    if isinstance(node, ast.StringLit):
        return node.value
    if isinstance(node, ast.UnitLit):
        return UNIT
    if isinstance(node, ast.InterpString):
        parts = []
        for part in node.parts:
            if isinstance(part, str):
                parts.append(part)
            else:
                parts.append(render_value(eval_expr(part, session, scope), quote=False))
        return "".join(parts)
    if isinstance(node, ast.Name):
        if node.name == "None":
            return NONE
        binding = scope.lookup(node.name)
        if binding is None:
            raise ScriptError("runtime", f"Not found: value {node.name}", node.span)
        return binding.value
    if isinstance(node, ast.Hole):
        raise ScriptError("runtime", "hole marker evaluated", node.span)
    if isinstance(node, ast.TupleLit):
        return TupleV(tuple(eval_expr(i, session, scope) for i in node.items))
    if isinstance(node, ast.Lambda):
        fn_type = node.typ
        return ClosureV(
            params=[(n, t) for (n, _), t in zip(node.params, fn_type.params)],
            body=node.body, scope=scope, fn_type=fn_type,
            source=session.current_statement or ("", 0))
    if isinstance(node, ast.Apply):
        return _eval_apply(node, session, scope)
    if isinstance(node, ast.FieldAccess):
        return _eval_field(node, session, scope)
    if isinstance(node, ast.BinOp):
        return _eval_binop(node, session, scope)
    if isinstance(node, ast.UnOp):
        operand = eval_expr(node.operand, session, scope)
        if node.op == "!":
            return not operand
        if isinstance(operand, int) and not isinstance(operand, bool):
            return wrap_int(-operand)
        return -operand
    if isinstance(node, ast.If):
        if eval_expr(node.cond, session, scope):
            value = eval_expr(node.then, session, scope.child())
            return value if node.orelse is not None else UNIT
        if node.orelse is None:
            return UNIT
        return eval_expr(node.orelse, session, scope.child())
    if isinstance(node, ast.While):
        while eval_expr(node.cond, session, scope):
            eval_expr(node.body, session, scope.child())
        return UNIT
    if isinstance(node, ast.Match):
        return _eval_match(node, session, scope)
    if isinstance(node, ast.Try):
        try:
            return eval_expr(node.body, session, scope.child())
        except ScriptError as err:
            handler_scope = scope.child()
            if node.binder != "_":
                handler_scope.declare(Binding(node.binder, ty.STRING, err.message,
                                              origin="param"))
            return eval_expr(node.handler, session, handler_scope)
    if isinstance(node, ast.Throw):
        message = eval_expr(node.message, session, scope)
        raise ScriptError("throw", str(message), node.span)
    if isinstance(node, ast.Block):
        inner = scope.child()
        result: Value = UNIT
        for stmt in node.stmts:
            result = eval_statement(stmt, session, inner)
            if not isinstance(stmt, ast.Expr):
                result = UNIT
        return result
    raise TypeError(f"unknown expression {node!r}")


def _eval_match(node: ast.Match, session: Session, scope: Scope) -> Value:
    subject = eval_expr(node.subject, session, scope)
    for arm in node.arms:
        pat = arm.pattern
        if isinstance(pat, ast.PatWildcard):
            return eval_expr(arm.body, session, scope.child())
        if isinstance(pat, ast.PatBinder):
            arm_scope = scope.child()
            arm_scope.declare(Binding(pat.name, node.subject.typ, subject,
                                      origin="param"))
            return eval_expr(arm.body, session, arm_scope)
        if isinstance(pat, ast.PatCase) and isinstance(subject, EnumV):
            if subject.case_name == pat.case_name:
                return eval_expr(arm.body, session, scope.child())
    raise ScriptError("match", f"match failed on {render_value(subject)}", node.span)


def _eval_binop(node: ast.BinOp, session: Session, scope: Scope) -> Value:
    op = node.op
    if op == "&&":
        return bool(eval_expr(node.left, session, scope)) and \
            bool(eval_expr(node.right, session, scope))
    if op == "||":
        return bool(eval_expr(node.left, session, scope)) or \
            bool(eval_expr(node.right, session, scope))
    left = eval_expr(node.left, session, scope)
    right = eval_expr(node.right, session, scope)
    if op == "to":
        return ListV(tuple(range(left, right + 1)))
    if op == "==":
        return left == right
    if op == "!=":
        return left != right
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    is_int = isinstance(left, int) and not isinstance(left, bool)
    if op == "+":
        if isinstance(left, str):
            return left + right
        return wrap_int(left + right) if is_int else left + right
    if op == "-":
        return wrap_int(left - right) if is_int else left - right
    if op == "*":
        return wrap_int(left * right) if is_int else left * right
    if op == "/":
        if is_int:
            if right == 0:
                raise ScriptError("division-by-zero", "division by zero", node.span)
            return wrap_int(_trunc_div(left, right))
        return left / right
    if op == "%":
        if is_int:
            if right == 0:
                raise ScriptError("division-by-zero", "division by zero", node.span)
            return wrap_int(left - _trunc_div(left, right) * right)
        import math
        return math.fmod(left, right)
    raise TypeError(f"unknown operator {op}")


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _eval_field(node: ast.FieldAccess, session: Session, scope: Scope) -> Value:
    case = getattr(node, "enum_case", None)
    if case is not None:
        return EnumV(case[0], case[1])
    base = eval_expr(node.base, session, scope)
    return _getter(base, node.name, node.span)


def _getter(base: Value, name: str, span: SourceSpan) -> Value:
    if isinstance(base, RecordV):
        for fname, fval in base.fields:
            if fname == name:
                return fval
    if isinstance(base, TupleV) and name.startswith("_"):
        idx = int(name[1:])
        return base.items[idx - 1]
    if isinstance(base, ListV):
        if name == "size":
            return len(base.items)
        if name == "isEmpty":
            return not base.items
        if name == "nonEmpty":
            return bool(base.items)
        if name == "headOption":
            return SomeV(base.items[0]) if base.items else NONE
        if name == "reverse":
            return ListV(tuple(reversed(base.items)))
    if isinstance(base, str):
        table = {"size": len(base), "isEmpty": base == "", "nonEmpty": base != "",
                 "trim": base.strip(), "toUpperCase": base.upper(),
                 "toLowerCase": base.lower()}
        if name in table:
            return table[name]
    if isinstance(base, (SomeV,)) or base is NONE:
        if name == "isDefined":
            return isinstance(base, SomeV)
        if name == "isEmpty":
            return base is NONE
    raise ScriptError("runtime", f"no member {name}", span)


def call_function(fn: Value, args: list[Value], session: Session,
                  span: SourceSpan) -> Value:
    if isinstance(fn, ClosureV):
        return call_closure(fn, args, session, span)
    if isinstance(fn, BuiltinV):
        return fn.impl(session, args, span)
    raise ScriptError("runtime", f"value {render_value(fn)} is not callable", span)


def call_closure(closure: ClosureV, args: list[Value], session: Session,
                 span: SourceSpan) -> Value:
    # A closure whose visible arrow is pure gets a purity boundary on its
    # frame: holes evaluated inside it may not touch ambient capabilities.
    pure_face = closure.fn_type.captures.is_empty
    frame = closure.scope.child(pure_boundary=pure_face)
    for (pname, ptype), value in zip(closure.params, args):
        frame.declare(Binding(pname, ptype, value, origin="param"))
    text, base = closure.source
    with session.statement(text, base):
        return eval_expr(closure.body, session, frame)


def _eval_apply(node: ast.Apply, session: Session, scope: Scope) -> Value:
    special = getattr(node, "special", None)
    if special == "agent":
        from ..agent import run_agent_node
        return run_agent_node(node, session, scope)
    if special == "eval":
        from ..agent import run_eval_node
        return run_eval_node(node, session, scope)
    if special == "subAgent":
        from ..stdlib import run_sub_agent
        prompt = eval_expr(node.args[0], session, scope)
        return run_sub_agent(session, prompt, node)
    if special == "withCapability":
        return _eval_with_capability(node, session, scope)
    if special == "classifiedMap":
        box = eval_expr(node.callee.base, session, scope)
        fn = eval_expr(node.args[0], session, scope)
        result = call_function(fn, [box.content], session, node.span)
        out = ClassifiedBox(result, node.typ.elem)
        session.register_classified(out)
        return out
    if special == "classify":
        content = eval_expr(node.args[0], session, scope)
        box = ClassifiedBox(content, node.args[0].typ)
        session.register_classified(box)
        return box
    if special == "parMap":
        from ..stdlib import run_par_map
        items = eval_expr(node.args[0], session, scope)
        fn = eval_expr(node.args[1], session, scope)
        return run_par_map(session, items, fn, node)
    if special == "List":
        return ListV(tuple(eval_expr(a, session, scope) for a in node.args))
    if special == "Some":
        return SomeV(eval_expr(node.args[0], session, scope))
    if special == "record":
        return _eval_record_ctor(node, session, scope)
    if special == "index":
        base = eval_expr(node.callee, session, scope)
        idx = eval_expr(node.args[0], session, scope)
        if not 0 <= idx < len(base.items):
            raise ScriptError("index-range",
                              f"index {idx} out of range for list of size "
                              f"{len(base.items)}", node.span)
        return base.items[idx]
    if (isinstance(node.callee, ast.FieldAccess)
            and getattr(node.callee, "enum_case", None) is None):
        base = eval_expr(node.callee.base, session, scope)
        args = [eval_expr(a, session, scope) for a in node.args]
        result = _eval_method(base, node.callee.name, args, session, node.span)
        if result is not _NO_METHOD:
            return result
        member = _getter(base, node.callee.name, node.callee.span)
        return call_function(member, args, session, node.span)
    callee = eval_expr(node.callee, session, scope)
    args = [eval_expr(a, session, scope) for a in node.args]
    return call_function(callee, args, session, node.span)


def _eval_record_ctor(node: ast.Apply, session: Session, scope: Scope) -> Value:
    order: list[str] = getattr(node, "record_field_order", None) or []
    if node.named_args:
        given = {n: eval_expr(e, session, scope) for n, e in node.named_args}
        return RecordV(node.record_name, tuple((n, given[n]) for n in order))
    values = [eval_expr(a, session, scope) for a in node.args]
    return RecordV(node.record_name, tuple(zip(order, values)))


def _eval_with_capability(node: ast.Apply, session: Session, scope: Scope) -> Value:
    from ..capabilities import fresh_capability
    kind = node.cap_kind
    body = eval_expr(node.args[1], session, scope)
    scope_id = session.fresh_scope_id()
    cap = fresh_capability(kind, scope_id)
    session.open_cap_scopes.add(scope_id)
    try:
        return call_function(body, [cap], session, node.span)
    finally:
        session.open_cap_scopes.discard(scope_id)
        cap.revoke()


_NO_METHOD = object()


def _eval_method(base: Value, name: str, args: list[Value], session: Session,
                 span: SourceSpan) -> Value:
    if isinstance(base, ListV):
        items = base.items
        if name == "map":
            return ListV(tuple(call_function(args[0], [i], session, span)
                               for i in items))
        if name == "filter":
            return ListV(tuple(i for i in items
                               if call_function(args[0], [i], session, span)))
        if name == "flatMap":
            out: list[Value] = []
            for i in items:
                out.extend(call_function(args[0], [i], session, span).items)
            return ListV(tuple(out))
        if name == "forall":
            return all(call_function(args[0], [i], session, span) for i in items)
        if name == "exists":
            return any(call_function(args[0], [i], session, span) for i in items)
        if name == "contains":
            return args[0] in items
        if name == "mkString":
            return args[0].join(render_value(i, quote=False) for i in items)
        if name == "take":
            return ListV(items[:max(0, args[0])])
        if name == "drop":
            return ListV(items[max(0, args[0]):])
    if isinstance(base, SomeV) or base is NONE:
        if name == "map":
            if base is NONE:
                return NONE
            return SomeV(call_function(args[0], [base.value], session, span))
        if name == "getOrElse":
            return args[0] if base is NONE else base.value
    if isinstance(base, str):
        if name == "contains":
            return args[0] in base
        if name == "startsWith":
            return base.startswith(args[0])
        if name == "endsWith":
            return base.endswith(args[0])
        if name == "split":
            return ListV(tuple(base.split(args[0])))
    if isinstance(base, RecordV):
        try:
            member = _getter(base, name, span)
        except ScriptError:
            return _NO_METHOD
        if isinstance(member, (ClosureV, BuiltinV)):
            return call_function(member, args, session, span)
    return _NO_METHOD
