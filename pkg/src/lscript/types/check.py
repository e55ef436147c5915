"""Bidirectional type checking.

Checking mode applies when an expected type is known (binding annotation,
parameter position, explicit type argument); synthesis otherwise. All
diagnostics are collected, not first-only: a failed subexpression poisons
to the internal bottom type so checking continues without cascades.

Lambda capture sets are inferred here (each use of a capability-typed or
capture-carrying binding contributes to every lambda whose boundary the
reference crosses) and recorded on the nodes; the capabilities module
consumes those annotations in its own pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diagnostics import (
    Diagnostic,
    Severity,
    SourceSpan,
    mismatch,
    non_exhaustive,
    not_found,
    sort_key,
)
from ..syntax import ast
from ..syntax.render import render_type
from . import core as ty
from .core import CaptureSet, EMPTY_CAPS, TOP_CAPS, TypeExpr
from .env import BindingInfo, DeclLayer, EnumInfo, RecordInfo, TypeEnv

RESERVED_NAMES = frozenset({
    "agent", "agentSafe", "eval", "withCapability", "subAgent", "parMap",
    "classify", "List", "Some", "None",
    "Int", "Double", "Bool", "String", "Unit", "Option", "Classified",
    "IO", "Net", "Console", "Model", "Nothing", "to",
})

_BUILTIN_TYPE_NAMES = {"Int": ty.INT, "Double": ty.DOUBLE, "Bool": ty.BOOL,
                       "String": ty.STRING, "Unit": ty.UNIT}

_STRING_GETTERS = {"size": ty.INT, "isEmpty": ty.BOOL, "nonEmpty": ty.BOOL,
                   "trim": ty.STRING, "toUpperCase": ty.STRING,
                   "toLowerCase": ty.STRING}


@dataclass
class _LambdaCtx:
    node: object
    boundary_depth: int
    captures: CaptureSet = field(default=EMPTY_CAPS)
    mutated: set[str] = field(default_factory=set)


class Checker:
    def __init__(self, env: TypeEnv, decls: DeclLayer | None = None,
                 hole_override: tuple[int, TypeExpr] | None = None) -> None:
        self.base_env = env
        self.decls = (decls or DeclLayer()).child()
        self.hole_override = hole_override
        self.diags: list[Diagnostic] = []
        self.lambda_stack: list[_LambdaCtx] = []

    # ---- helpers ----

    def error(self, diag: Diagnostic) -> TypeExpr:
        self.diags.append(diag)
        return ty.BOTTOM

    def msg(self, text: str, span: SourceSpan) -> TypeExpr:
        return self.error(Diagnostic(Severity.ERROR, text, span))

    def expect_conforms(self, found: TypeExpr, required: TypeExpr | None,
                        span: SourceSpan) -> None:
        if required is None:
            return
        if isinstance(found, ty.TBottom):
            return
        if not ty.conforms(found, required):
            self.error(mismatch(render_type(found), render_type(required), span))

    def resolve_type(self, t: ast.TypeAst, env: TypeEnv) -> TypeExpr:
        if isinstance(t, ast.TName):
            if t.name in _BUILTIN_TYPE_NAMES:
                if t.args:
                    return self.msg(f"type {t.name} takes no arguments", t.span)
                return _BUILTIN_TYPE_NAMES[t.name]
            if t.name in ("List", "Option", "Classified"):
                if len(t.args) != 1:
                    return self.msg(f"type {t.name} takes one argument", t.span)
                elem = self.resolve_type(t.args[0], env)
                ctor = {"List": ty.TList, "Option": ty.TOption,
                        "Classified": ty.TClassified}[t.name]
                return ctor(elem)
            if t.name in ty.CAP_TYPE_NAMES:
                return ty.TCap(ty.CAP_TYPE_NAMES[t.name])
            if self.decls.record(t.name) is not None:
                return ty.TRecord(t.name)
            if self.decls.enum(t.name) is not None:
                return ty.TEnum(t.name)
            return self.msg(f"Not found: type {t.name}", t.span)
        if isinstance(t, ast.TTuple):
            return ty.TTuple(tuple(self.resolve_type(i, env) for i in t.items))
        if isinstance(t, ast.TFunc):
            params = tuple(self.resolve_type(p, env) for p in t.params)
            result = self.resolve_type(t.result, env)
            captures = ty.caps_of(t.captures)
            if not captures.is_top:
                for name in captures.names:
                    hit = env.lookup(name)
                    if hit is None or not isinstance(hit[0].typ, ty.TCap):
                        self.msg(f"capture set names a non-capability: {name}", t.span)
            return ty.TFunc(params, result, captures)
        raise TypeError(f"unknown type syntax {t!r}")

    # ---- capture contribution ----

    def _contribution_of(self, info: BindingInfo) -> CaptureSet:
        if isinstance(info.typ, ty.TCap):
            return EMPTY_CAPS if info.pure_channel else CaptureSet(frozenset({info.name}))
        return _type_captures(info.precise_type)

    def contribute(self, node: ast.Node, caps: CaptureSet, use_env: TypeEnv,
                   holder: TypeEnv | None) -> None:
        """Record that evaluating `node` touches `caps`; spread the names to
        every lambda whose boundary the reference crosses and note pure
        boundaries crossed for the capture-check pass."""
        node.contributes = caps
        node.crossed_pure = False
        if caps.is_empty:
            return
        if caps.is_top:
            names_with_depth: list[tuple[str, int]] = [("*", -1)]
        else:
            names_with_depth = []
            for name in caps.names:
                hit = use_env.lookup(name)
                names_with_depth.append((name, hit[1].depth if hit else -1))
        _ = holder
        for name, depth in names_with_depth:
            for ctx in self.lambda_stack:
                if depth < ctx.boundary_depth:
                    add = TOP_CAPS if name == "*" else CaptureSet(frozenset({name}))
                    ctx.captures = ctx.captures.union(add)
            env: TypeEnv | None = use_env
            while env is not None and env.depth > depth:
                if env.kind == "pure":
                    node.crossed_pure = True
                env = env.parent

    # ---- program / statements ----

    def check_program(self, program: ast.Program, env: TypeEnv,
                      expected: TypeExpr | None = None) -> TypeExpr:
        return self._check_stmt_list(program.stmts, env, expected, program.span)

    def _check_stmt_list(self, stmts: list[ast.Node], env: TypeEnv,
                         expected: TypeExpr | None, span: SourceSpan) -> TypeExpr:
        result: TypeExpr = ty.UNIT
        for i, stmt in enumerate(stmts):
            last = i == len(stmts) - 1
            if isinstance(stmt, ast.Expr):
                result = self.check_expr(stmt, env, expected if last else None)
                if not last:
                    continue
            else:
                self.check_stmt(stmt, env)
                result = ty.UNIT
                if last and expected is not None and not ty.conforms(ty.UNIT, expected):
                    self.error(mismatch("Unit", render_type(expected), stmt.span))
        if not stmts and expected is not None and not ty.conforms(ty.UNIT, expected):
            self.error(mismatch("Unit", render_type(expected), span))
        return result

    def check_stmt(self, stmt: ast.Node, env: TypeEnv) -> None:
        if isinstance(stmt, ast.ValDecl):
            self._check_reserved(stmt.name, stmt.span)
            annot = self.resolve_type(stmt.type_ast, env) if stmt.type_ast else None
            init_t = self.check_expr(stmt.init, env, annot)
            declared = annot if annot is not None else init_t
            env.declare(BindingInfo(stmt.name, declared, stmt.span,
                                    mutable=stmt.mutable,
                                    origin="var" if stmt.mutable else "val",
                                    precise=init_t))
            stmt.typ = declared
        elif isinstance(stmt, ast.Assign):
            hit = env.lookup(stmt.name)
            if hit is None:
                self.error(not_found(stmt.name, stmt.span))
                self.check_expr(stmt.value, env, None)
                return
            info, holder = hit
            if not info.mutable:
                self.msg(f"cannot reassign immutable value {stmt.name}", stmt.span)
            value_t = self.check_expr(stmt.value, env, info.typ)
            stmt.target_info = info
            stmt.target_depth = holder.depth
            stmt.value_precise = value_t
            for ctx in self.lambda_stack:
                if holder.depth < ctx.boundary_depth:
                    ctx.mutated.add(stmt.name)
        elif isinstance(stmt, ast.DefDecl):
            self._check_def(stmt, env)
        elif isinstance(stmt, ast.RecordDecl):
            self._check_reserved(stmt.name, stmt.span)
            fields = [(n, self.resolve_type(t, env)) for n, t in stmt.fields]
            seen: set[str] = set()
            for n, _ in stmt.fields:
                if n in seen:
                    self.msg(f"duplicate field {n} in record {stmt.name}", stmt.span)
                seen.add(n)
            stmt.checked_fields = fields
            self.decls.records[stmt.name] = RecordInfo(stmt.name, fields)
        elif isinstance(stmt, ast.EnumDecl):
            self._check_reserved(stmt.name, stmt.span)
            seen = set()
            for case in stmt.cases:
                if case in seen:
                    self.msg(f"duplicate case {case} in enum {stmt.name}", stmt.span)
                seen.add(case)
            self.decls.enums[stmt.name] = EnumInfo(stmt.name, list(stmt.cases))
        elif isinstance(stmt, ast.Expr):
            self.check_expr(stmt, env, None)
        else:
            raise TypeError(f"unknown statement {stmt!r}")

    def _check_reserved(self, name: str, span: SourceSpan) -> None:
        if name in RESERVED_NAMES:
            self.msg(f"cannot redeclare builtin name {name}", span)

    def _check_def(self, stmt: ast.DefDecl, env: TypeEnv) -> None:
        self._check_reserved(stmt.name, stmt.span)
        params = [(n, self.resolve_type(t, env)) for n, t in stmt.params]
        result_annot = (self.resolve_type(stmt.result_type, env)
                        if stmt.result_type else None)
        if result_annot is not None:
            # pre-declare so the body can recurse
            env.declare(BindingInfo(stmt.name,
                                    ty.TFunc(tuple(t for _, t in params), result_annot),
                                    stmt.span, origin="def"))
        def_env = env.child("lambda")
        for n, t in params:
            def_env.declare(BindingInfo(n, t, stmt.span, origin="param"))
        ctx = _LambdaCtx(stmt, def_env.depth)
        self.lambda_stack.append(ctx)
        body_t = self.check_expr(stmt.body, def_env, result_annot)
        self.lambda_stack.pop()
        fn_t = ty.TFunc(tuple(t for _, t in params),
                        result_annot if result_annot is not None else body_t,
                        ctx.captures)
        stmt.typ = fn_t
        stmt.capture_set = ctx.captures
        stmt.env_depth = def_env.depth
        env.declare(BindingInfo(stmt.name, fn_t, stmt.span, origin="def"))

    # ---- expressions ----

    def check_expr(self, node: ast.Expr, env: TypeEnv,
                   expected: TypeExpr | None = None) -> TypeExpr:
        if (self.hole_override is not None
                and isinstance(node, ast.Block)
                and node.span.start == self.hole_override[0]):
            expected = self.hole_override[1]
        t = self._check_expr_inner(node, env, expected)
        node.typ = t
        # composites hand the expected type to their children, which report
        # mismatches at tighter spans; avoid double-reporting here
        delegates = (isinstance(node, (ast.Block, ast.Match, ast.Try))
                     or (isinstance(node, ast.If) and node.orelse is not None))
        if not delegates:
            self.expect_conforms(t, expected, node.span)
        return t

    def _check_expr_inner(self, node: ast.Expr, env: TypeEnv,
                          expected: TypeExpr | None) -> TypeExpr:
        if isinstance(node, ast.IntLit):
            return ty.INT
        if isinstance(node, ast.DoubleLit):
            return ty.DOUBLE
        if isinstance(node, ast.BoolLit):
            return ty.BOOL
        if isinstance(node, ast.StringLit):
            return ty.STRING
        if isinstance(node, ast.UnitLit):
            return ty.UNIT
        if isinstance(node, ast.Hole):
            return self.msg("hole marker is not allowed in programs", node.span)
        if isinstance(node, ast.InterpString):
            for part in node.parts:
                if isinstance(part, ast.Expr):
                    self.check_expr(part, env, None)
            return ty.STRING
        if isinstance(node, ast.Name):
            return self._check_name(node, env)
        if isinstance(node, ast.TupleLit):
            if isinstance(expected, ty.TTuple) and len(expected.items) == len(node.items):
                items = tuple(self.check_expr(e, env, x)
                              for e, x in zip(node.items, expected.items))
            else:
                items = tuple(self.check_expr(e, env, None) for e in node.items)
            return ty.TTuple(items)
        if isinstance(node, ast.Lambda):
            return self._check_lambda(
                node, env, expected if isinstance(expected, ty.TFunc) else None)
        if isinstance(node, ast.Apply):
            return self._check_apply(node, env, expected)
        if isinstance(node, ast.FieldAccess):
            return self._check_field(node, env)
        if isinstance(node, ast.BinOp):
            return self._check_binop(node, env)
        if isinstance(node, ast.UnOp):
            return self._check_unop(node, env)
        if isinstance(node, ast.If):
            return self._check_if(node, env, expected)
        if isinstance(node, ast.While):
            self.check_expr(node.cond, env, ty.BOOL)
            self.check_expr(node.body, env.child(), None)
            return ty.UNIT
        if isinstance(node, ast.Match):
            return self._check_match(node, env, expected)
        if isinstance(node, ast.Try):
            body_t = self.check_expr(node.body, env.child(), expected)
            h_env = env.child()
            if node.binder != "_":
                h_env.declare(BindingInfo(node.binder, ty.STRING, node.span,
                                          origin="param"))
            handler_t = self.check_expr(node.handler, h_env, expected)
            joined = ty.join(body_t, handler_t)
            if joined is None:
                return self.error(mismatch(render_type(handler_t),
                                           render_type(body_t), node.handler.span))
            return joined
        if isinstance(node, ast.Throw):
            self.check_expr(node.message, env, ty.STRING)
            return ty.BOTTOM
        if isinstance(node, ast.Block):
            return self._check_stmt_list(node.stmts, env.child(), expected, node.span)
        raise TypeError(f"unknown expression {node!r}")

    def _check_name(self, node: ast.Name, env: TypeEnv) -> TypeExpr:
        if node.name == "None":
            node.contributes = EMPTY_CAPS
            return ty.TOption(ty.BOTTOM)
        hit = env.lookup(node.name)
        if hit is None:
            if self.decls.is_type_name(node.name):
                return self.msg(f"{node.name} is a type, not a value", node.span)
            return self.error(not_found(node.name, node.span))
        info, holder = hit
        node.binding_origin = info.origin
        self.contribute(node, self._contribution_of(info), env, holder)
        return info.precise_type if info.origin == "val" else info.typ

    def _check_lambda(self, node: ast.Lambda, env: TypeEnv,
                      expected: ty.TFunc | None,
                      param_types: tuple[TypeExpr, ...] | None = None) -> TypeExpr:
        if param_types is None and expected is not None:
            if len(expected.params) == len(node.params):
                param_types = expected.params
        resolved: list[TypeExpr] = []
        for i, (pname, ptype_ast) in enumerate(node.params):
            if ptype_ast is not None:
                resolved.append(self.resolve_type(ptype_ast, env))
            elif param_types is not None and i < len(param_types):
                resolved.append(param_types[i])
            else:
                resolved.append(self.msg(
                    f"cannot infer the type of parameter {pname}; annotate it",
                    node.span))
        lam_env = env.child("lambda")
        for (pname, _), ptype in zip(node.params, resolved):
            lam_env.declare(BindingInfo(pname, ptype, node.span, origin="param"))
        ctx = _LambdaCtx(node, lam_env.depth)
        self.lambda_stack.append(ctx)
        body_expected = expected.result if expected is not None else None
        body_t = self.check_expr(node.body, lam_env, body_expected)
        self.lambda_stack.pop()
        node.capture_set = ctx.captures
        node.mutated_outer = frozenset(ctx.mutated)
        node.env_depth = lam_env.depth
        return ty.TFunc(tuple(resolved), body_t, ctx.captures)

    def _check_binop(self, node: ast.BinOp, env: TypeEnv) -> TypeExpr:
        op = node.op
        if op in ("&&", "||"):
            self.check_expr(node.left, env, ty.BOOL)
            self.check_expr(node.right, env, ty.BOOL)
            return ty.BOOL
        left = self.check_expr(node.left, env, None)
        if op == "to":
            self.expect_conforms(left, ty.INT, node.left.span)
            self.check_expr(node.right, env, ty.INT)
            return ty.TList(ty.INT)
        if op in ("==", "!="):
            right = self.check_expr(node.right, env, None)
            if ty.join(left, right) is None:
                return self.error(mismatch(render_type(right), render_type(left),
                                           node.right.span))
            return ty.BOOL
        right = self.check_expr(node.right, env, None)
        if isinstance(left, ty.TBottom) or isinstance(right, ty.TBottom):
            return ty.BOTTOM if op in ("+", "-", "*", "/", "%") else ty.BOOL
        if op in ("<", "<=", ">", ">="):
            if left == right and left in (ty.INT, ty.DOUBLE):
                return ty.BOOL
            return self.error(mismatch(render_type(right), render_type(left),
                                       node.right.span))
        if op == "+" and left == ty.STRING and right == ty.STRING:
            return ty.STRING
        if left == right and left in (ty.INT, ty.DOUBLE):
            return left
        return self.error(mismatch(render_type(right), render_type(left),
                                   node.right.span))

    def _check_unop(self, node: ast.UnOp, env: TypeEnv) -> TypeExpr:
        operand = self.check_expr(node.operand, env, None)
        if node.op == "!":
            self.expect_conforms(operand, ty.BOOL, node.operand.span)
            return ty.BOOL
        if operand in (ty.INT, ty.DOUBLE) or isinstance(operand, ty.TBottom):
            return operand
        return self.error(mismatch(render_type(operand), "Int", node.operand.span))

    def _check_if(self, node: ast.If, env: TypeEnv,
                  expected: TypeExpr | None) -> TypeExpr:
        self.check_expr(node.cond, env, ty.BOOL)
        if node.orelse is None:
            self.check_expr(node.then, env.child(), None)
            return ty.UNIT
        then_t = self.check_expr(node.then, env.child(), expected)
        else_t = self.check_expr(node.orelse, env.child(), expected)
        joined = ty.join(then_t, else_t)
        if joined is None:
            return self.error(mismatch(render_type(else_t), render_type(then_t),
                                       node.orelse.span))
        return joined

    def _check_match(self, node: ast.Match, env: TypeEnv,
                     expected: TypeExpr | None) -> TypeExpr:
        subject_t = self.check_expr(node.subject, env, None)
        if isinstance(subject_t, ty.TBottom):
            for arm in node.arms:
                self.check_expr(arm.body, env.child(), expected)
            return ty.BOTTOM
        if not isinstance(subject_t, ty.TEnum):
            return self.msg(
                f"match subject must be an enum value, found {render_type(subject_t)}",
                node.subject.span)
        info = self.decls.enum(subject_t.name)
        result: TypeExpr | None = None
        for arm in node.arms:
            arm_env = env.child()
            pat = arm.pattern
            if isinstance(pat, ast.PatCase):
                if pat.enum_name != subject_t.name:
                    self.msg(f"pattern {pat.enum_name}.{pat.case_name} does not match "
                             f"subject type {subject_t.name}", pat.span)
                elif info is not None and pat.case_name not in info.cases:
                    self.msg(f"enum {subject_t.name} has no case {pat.case_name}",
                             pat.span)
            elif isinstance(pat, ast.PatBinder):
                arm_env.declare(BindingInfo(pat.name, subject_t, pat.span,
                                            origin="param"))
            body_t = self.check_expr(arm.body, arm_env, expected)
            result = body_t if result is None else ty.join(result, body_t)
            if result is None:
                return self.error(mismatch(render_type(body_t), "the other arms' type",
                                           arm.body.span))
        self.diags.extend(self.check_exhaustive(node, subject_t))
        return result if result is not None else ty.UNIT

    def check_exhaustive(self, node: ast.Match, subject: ty.TEnum) -> list[Diagnostic]:
        """Empty when every case (or a wildcard/binder) is covered; otherwise
        one diagnostic naming the first missing case in declaration order."""
        info = self.decls.enum(subject.name)
        if info is None:
            return []
        covered: set[str] = set()
        for arm in node.arms:
            pat = arm.pattern
            if isinstance(pat, (ast.PatWildcard, ast.PatBinder)):
                return []
            if isinstance(pat, ast.PatCase) and pat.enum_name == subject.name:
                covered.add(pat.case_name)
        for case in info.cases:
            if case not in covered:
                return [non_exhaustive(subject.name, case, node.span)]
        return []

    # ---- field access and application ----

    def _check_field(self, node: ast.FieldAccess, env: TypeEnv) -> TypeExpr:
        base = node.base
        if (isinstance(base, ast.Name) and env.lookup(base.name) is None):
            enum_info = self.decls.enum(base.name)
            if enum_info is not None:
                base.typ = ty.TEnum(base.name)
                base.contributes = EMPTY_CAPS
                if node.name not in enum_info.cases:
                    return self.msg(f"enum {base.name} has no case {node.name}",
                                    node.span)
                node.enum_case = (base.name, node.name)
                return ty.TEnum(base.name)
        base_t = self.check_expr(base, env, None)
        if isinstance(base_t, ty.TBottom):
            return ty.BOTTOM
        if isinstance(base_t, ty.TRecord):
            info = self.decls.record(base_t.name)
            if info is None:
                return self.msg(f"Not found: type {base_t.name}", node.span)
            field_t = info.field_type(node.name)
            if field_t is None:
                return self.msg(f"record {base_t.name} has no field {node.name}",
                                node.span)
            return field_t
        if isinstance(base_t, ty.TTuple):
            if node.name.startswith("_") and node.name[1:].isdigit():
                idx = int(node.name[1:])
                if 1 <= idx <= len(base_t.items):
                    return base_t.items[idx - 1]
            return self.msg(f"tuple of {len(base_t.items)} elements has no field "
                            f"{node.name}", node.span)
        if isinstance(base_t, ty.TList):
            getters = {"size": ty.INT, "isEmpty": ty.BOOL, "nonEmpty": ty.BOOL,
                       "headOption": ty.TOption(base_t.elem),
                       "reverse": base_t}
            if node.name in getters:
                return getters[node.name]
            if node.name in ("map", "filter", "flatMap", "forall", "exists",
                             "contains", "mkString", "take", "drop"):
                return self.msg(f"method {node.name} must be applied", node.span)
        if base_t == ty.STRING and node.name in _STRING_GETTERS:
            return _STRING_GETTERS[node.name]
        if isinstance(base_t, ty.TOption):
            if node.name == "isDefined":
                return ty.BOOL
            if node.name == "isEmpty":
                return ty.BOOL
        return self.msg(f"value of type {render_type(base_t)} has no member "
                        f"{node.name}", node.span)

    def _resolve_hole_expected(self, node: ast.Apply, env: TypeEnv,
                               expected: TypeExpr | None, what: str) -> TypeExpr | None:
        if node.type_args:
            if len(node.type_args) > 1:
                self.msg(f"{what} takes one type argument", node.span)
            return self.resolve_type(node.type_args[0], env)
        if expected is not None and not isinstance(expected, ty.TBottom):
            return expected
        self.msg(f"cannot infer the expected type of this {what} call; "
                 "add a type argument or annotate the surrounding binding", node.span)
        return None

    def _check_task_arg(self, node: ast.Apply, env: TypeEnv, what: str) -> None:
        if len(node.args) != 1 or node.named_args:
            self.msg(f"{what} takes one task string", node.span)
            for arg in node.args:
                self.check_expr(arg, env, None)
            return
        self.check_expr(node.args[0], env, ty.STRING)

    def _agent_contribution(self, node: ast.Apply, env: TypeEnv) -> None:
        default = env.resolve_default_agent()
        caps = EMPTY_CAPS
        holder = None
        if default is not None:
            hit = env.lookup(default)
            if hit is not None and not hit[0].pure_channel:
                caps = CaptureSet(frozenset({default}))
                holder = hit[1]
        self.contribute(node, caps, env, holder)

    def _check_apply(self, node: ast.Apply, env: TypeEnv,
                     expected: TypeExpr | None) -> TypeExpr:
        callee = node.callee
        if isinstance(callee, ast.Name) and env.lookup(callee.name) is None:
            name = callee.name
            record = self.decls.record(name)
            if record is not None:
                return self._check_record_ctor(node, record, env)
            if self.decls.enum(name) is not None:
                return self.msg(
                    f"enum cases are written {name}.<Case>, not called", node.span)
            if name in ("agent", "eval", "subAgent"):
                node.special = name
                what = "agent" if name == "agent" else name
                resolved = self._resolve_hole_expected(node, env, expected, what)
                self._check_task_arg(node, env, what)
                if name == "eval":
                    # model-free: the snippet itself is capture-checked in
                    # the hole's scope when it arrives
                    self.contribute(node, EMPTY_CAPS, env, None)
                else:
                    self._agent_contribution(node, env)
                node.expected = resolved
                return resolved if resolved is not None else ty.BOTTOM
            if name == "agentSafe":
                return self.msg("agentSafe is a host-level operation; in scripts "
                                "use agent(...) with try/catch", node.span)
            if name == "withCapability":
                return self._check_with_capability(node, env)
            if name == "parMap":
                return self._check_par_map(node, env)
            if name == "classify":
                node.special = "classify"
                if len(node.args) != 1:
                    return self.msg("classify takes one argument", node.span)
                elem_expected = expected.elem if isinstance(expected, ty.TClassified) else None
                arg_t = self.check_expr(node.args[0], env, elem_expected)
                return ty.TClassified(arg_t)
            if name == "List":
                node.special = "List"
                return self._check_list_ctor(node, env, expected)
            if name == "Some":
                node.special = "Some"
                if len(node.args) != 1:
                    return self.msg("Some takes one argument", node.span)
                elem_expected = expected.elem if isinstance(expected, ty.TOption) else None
                arg_t = self.check_expr(node.args[0], env, elem_expected)
                return ty.TOption(arg_t)
        if isinstance(callee, ast.FieldAccess):
            return self._check_method(node, callee, env, expected)
        callee_t = self.check_expr(callee, env, None)
        if isinstance(callee_t, ty.TBottom):
            for arg in node.args:
                self.check_expr(arg, env, None)
            return ty.BOTTOM
        if isinstance(callee_t, ty.TList):
            if len(node.args) != 1 or node.named_args:
                return self.msg("list indexing takes one Int", node.span)
            self.check_expr(node.args[0], env, ty.INT)
            node.special = "index"
            return callee_t.elem
        if isinstance(callee_t, ty.TFunc):
            return self._check_call(node, callee_t, env)
        return self.msg(f"expression of type {render_type(callee_t)} is not callable",
                        node.span)

    def _check_call(self, node: ast.Apply, fn: ty.TFunc, env: TypeEnv) -> TypeExpr:
        if node.named_args:
            self.msg("named arguments are only for record constructors", node.span)
        if len(node.args) != len(fn.params):
            found = "(" + ", ".join(
                render_type(self.check_expr(a, env, None)) for a in node.args) + ")"
            required = "(" + ", ".join(render_type(p) for p in fn.params) + ")"
            self.error(mismatch(found, required, node.span))
            return fn.result
        for arg, param in zip(node.args, fn.params):
            if isinstance(arg, ast.Lambda) and isinstance(param, ty.TFunc):
                arg_t = self.check_expr(arg, env, param)
            else:
                arg_t = self.check_expr(arg, env, param)
            _ = arg_t
        return fn.result

    def _check_record_ctor(self, node: ast.Apply, record: RecordInfo,
                           env: TypeEnv) -> TypeExpr:
        node.special = "record"
        node.record_name = record.name
        node.record_field_order = [n for n, _ in record.fields]
        if node.named_args and node.args:
            return self.msg("record constructors take positional or named "
                            "arguments, not both", node.span)
        if node.named_args:
            given = {n: e for n, e in node.named_args}
            if len(given) != len(node.named_args):
                return self.msg("duplicate named argument", node.span)
            for fname, ftype in record.fields:
                if fname not in given:
                    return self.msg(f"missing field {fname} in {record.name}(...)",
                                    node.span)
            for fname, expr in node.named_args:
                ftype = record.field_type(fname)
                if ftype is None:
                    self.msg(f"record {record.name} has no field {fname}", expr.span)
                    self.check_expr(expr, env, None)
                    continue
                self.check_expr(expr, env, ftype)
            return ty.TRecord(record.name)
        if len(node.args) != len(record.fields):
            found = "(" + ", ".join(
                render_type(self.check_expr(a, env, None)) for a in node.args) + ")"
            required = "(" + ", ".join(render_type(t) for _, t in record.fields) + ")"
            self.error(mismatch(found, required, node.span))
            return ty.TRecord(record.name)
        for arg, (fname, ftype) in zip(node.args, record.fields):
            self.check_expr(arg, env, ftype)
        return ty.TRecord(record.name)

    def _check_list_ctor(self, node: ast.Apply, env: TypeEnv,
                         expected: TypeExpr | None) -> TypeExpr:
        elem_expected = expected.elem if isinstance(expected, ty.TList) else None
        if not node.args:
            return ty.TList(elem_expected if elem_expected is not None else ty.BOTTOM)
        if elem_expected is not None:
            for arg in node.args:
                self.check_expr(arg, env, elem_expected)
            return ty.TList(elem_expected)
        elem: TypeExpr = ty.BOTTOM
        for arg in node.args:
            arg_t = self.check_expr(arg, env, None)
            joined = ty.join(elem, arg_t)
            if joined is None:
                self.error(mismatch(render_type(arg_t), render_type(elem), arg.span))
            else:
                elem = joined
        return ty.TList(elem)

    def _check_fn_arg(self, arg: ast.Expr, env: TypeEnv,
                      param_types: tuple[TypeExpr, ...],
                      require_pure: bool = False) -> ty.TFunc:
        """Check a function-valued argument against given parameter types."""
        if isinstance(arg, ast.Lambda):
            fn_t = self._check_lambda(arg, env, None, param_types)
        else:
            t = self.check_expr(arg, env, None)
            if isinstance(t, ty.TBottom):
                return ty.TFunc(param_types, ty.BOTTOM)
            if not isinstance(t, ty.TFunc) or len(t.params) != len(param_types):
                self.error(mismatch(
                    render_type(t),
                    render_type(ty.TFunc(param_types, ty.BOTTOM, TOP_CAPS)),
                    arg.span))
                return ty.TFunc(param_types, ty.BOTTOM)
            fn_t = t
        arg.typ = fn_t
        for given, want in zip(param_types, fn_t.params):
            if not ty.conforms(given, want):
                self.error(mismatch(render_type(fn_t), render_type(
                    ty.TFunc(param_types, fn_t.result, fn_t.captures)), arg.span))
                break
        if require_pure and not fn_t.captures.is_empty:
            self.error(mismatch(
                render_type(fn_t),
                render_type(ty.TFunc(fn_t.params, fn_t.result, EMPTY_CAPS)),
                arg.span))
        return fn_t

    def _check_with_capability(self, node: ast.Apply, env: TypeEnv) -> TypeExpr:
        node.special = "withCapability"
        if len(node.args) != 2 or node.named_args:
            return self.msg("withCapability takes a kind string and a body function",
                            node.span)
        kind_arg, body = node.args
        if not isinstance(kind_arg, ast.StringLit) or kind_arg.value not in ("io", "net", "console"):
            return self.msg('withCapability kind must be one of "io", "net", "console"',
                            kind_arg.span)
        kind = kind_arg.value
        kind_arg.typ = ty.STRING
        node.cap_kind = kind
        grant = env.lookup(kind)
        if grant is None or not isinstance(grant[0].typ, ty.TCap):
            return self.msg(f"capability kind {kind} is not granted in this session",
                            node.span)
        # narrowing an existing grant still counts as touching it
        self.contribute(node, CaptureSet(frozenset({kind})), env, grant[1])
        fn_t = self._check_fn_arg(body, env, (ty.TCap(kind),))
        node.cap_param = body.params[0][0] if isinstance(body, ast.Lambda) else None
        node.body_result_precise = fn_t.result
        return fn_t.result

    def _check_par_map(self, node: ast.Apply, env: TypeEnv) -> TypeExpr:
        node.special = "parMap"
        if len(node.args) != 2 or node.named_args:
            return self.msg("parMap takes a list and a function", node.span)
        items_t = self.check_expr(node.args[0], env, None)
        if isinstance(items_t, ty.TBottom):
            return ty.BOTTOM
        if not isinstance(items_t, ty.TList):
            return self.error(mismatch(render_type(items_t), "List[...]",
                                       node.args[0].span))
        fn_t = self._check_fn_arg(node.args[1], env, (items_t.elem,))
        body = node.args[1]
        if isinstance(body, ast.Lambda) and body.mutated_outer:
            name = sorted(body.mutated_outer)[0]
            self.msg(f"parMap body must not assign to enclosing var {name}",
                     body.span)
        return ty.TList(fn_t.result)

    def _check_method(self, node: ast.Apply, callee: ast.FieldAccess,
                      env: TypeEnv, expected: TypeExpr | None) -> TypeExpr:
        base = callee.base
        method = callee.name
        # Enum case access is never callable; route through field logic first.
        if isinstance(base, ast.Name) and env.lookup(base.name) is None \
                and self.decls.enum(base.name) is not None:
            t = self._check_field(callee, env)
            if isinstance(t, ty.TBottom):
                return t
            return self.msg(f"enum case {render_type(t)}.{method} is not callable",
                            node.span)
        base_t = self.check_expr(base, env, None)
        callee.typ = base_t
        if isinstance(base_t, ty.TBottom):
            for arg in node.args:
                self.check_expr(arg, env, None)
            return ty.BOTTOM
        if isinstance(base_t, ty.TCap) and base_t.kind == "model" and method == "agent":
            node.special = "agent"
            resolved = self._resolve_hole_expected(node, env, expected, "agent")
            self._check_task_arg(node, env, "agent")
            node.expected = resolved
            return resolved if resolved is not None else ty.BOTTOM
        if isinstance(base_t, ty.TClassified) and method == "map":
            node.special = "classifiedMap"
            if len(node.args) != 1:
                return self.msg("Classified.map takes one function", node.span)
            fn_t = self._check_fn_arg(node.args[0], env, (base_t.elem,),
                                      require_pure=True)
            return ty.TClassified(fn_t.result)
        if isinstance(base_t, ty.TList):
            return self._check_list_method(node, base_t, method, env)
        if isinstance(base_t, ty.TOption):
            return self._check_option_method(node, base_t, method, env)
        if base_t == ty.STRING:
            return self._check_string_method(node, method, env)
        if isinstance(base_t, ty.TRecord):
            info = self.decls.record(base_t.name)
            field_t = info.field_type(method) if info else None
            if isinstance(field_t, ty.TFunc):
                return self._check_call(node, field_t, env)
        # fall back to getter-style access applied as a call
        t = self._check_field(callee, env)
        if isinstance(t, ty.TFunc):
            return self._check_call(node, t, env)
        if not isinstance(t, ty.TBottom):
            return self.msg(f"member {method} of {render_type(base_t)} is not callable",
                            node.span)
        return ty.BOTTOM

    def _one_arg(self, node: ast.Apply, env: TypeEnv,
                 expected: TypeExpr | None) -> TypeExpr | None:
        if len(node.args) != 1 or node.named_args:
            self.msg("method takes one argument", node.span)
            return None
        return self.check_expr(node.args[0], env, expected)

    def _check_list_method(self, node: ast.Apply, base_t: ty.TList, method: str,
                           env: TypeEnv) -> TypeExpr:
        elem = base_t.elem
        if method in ("map", "filter", "flatMap", "forall", "exists"):
            if len(node.args) != 1:
                return self.msg(f"{method} takes one function", node.span)
            fn_t = self._check_fn_arg(node.args[0], env, (elem,))
            result = fn_t.result
            if method == "map":
                return ty.TList(result)
            if method == "filter":
                self._expect_result(result, ty.BOOL, node.args[0].span)
                return base_t
            if method == "flatMap":
                if isinstance(result, ty.TList):
                    return result
                if isinstance(result, ty.TBottom):
                    return ty.TList(ty.BOTTOM)
                return self.msg(
                    f"flatMap function must return a List, found {render_type(result)}",
                    node.args[0].span)
            self._expect_result(result, ty.BOOL, node.args[0].span)
            return ty.BOOL
        if method == "contains":
            self._one_arg(node, env, elem if not isinstance(elem, ty.TBottom) else None)
            return ty.BOOL
        if method == "mkString":
            self._one_arg(node, env, ty.STRING)
            return ty.STRING
        if method in ("take", "drop"):
            self._one_arg(node, env, ty.INT)
            return base_t
        return self.msg(f"List has no method {method}", node.span)

    def _expect_result(self, found: TypeExpr, required: TypeExpr,
                       span: SourceSpan) -> None:
        if not isinstance(found, ty.TBottom) and not ty.conforms(found, required):
            self.error(mismatch(render_type(found), render_type(required), span))

    def _check_option_method(self, node: ast.Apply, base_t: ty.TOption, method: str,
                             env: TypeEnv) -> TypeExpr:
        if method == "map":
            if len(node.args) != 1:
                return self.msg("map takes one function", node.span)
            fn_t = self._check_fn_arg(node.args[0], env, (base_t.elem,))
            return ty.TOption(fn_t.result)
        if method == "getOrElse":
            arg_t = self._one_arg(node, env,
                                  base_t.elem if not isinstance(base_t.elem, ty.TBottom) else None)
            if arg_t is None:
                return base_t.elem
            joined = ty.join(base_t.elem, arg_t)
            if joined is None:
                return self.error(mismatch(render_type(arg_t),
                                           render_type(base_t.elem),
                                           node.args[0].span))
            return joined
        return self.msg(f"Option has no method {method}", node.span)

    def _check_string_method(self, node: ast.Apply, method: str,
                             env: TypeEnv) -> TypeExpr:
        if method in ("contains", "startsWith", "endsWith"):
            self._one_arg(node, env, ty.STRING)
            return ty.BOOL
        if method == "split":
            self._one_arg(node, env, ty.STRING)
            return ty.TList(ty.STRING)
        return self.msg(f"String has no method {method}", node.span)


def _type_captures(t: TypeExpr) -> CaptureSet:
    if isinstance(t, ty.TCap):
        return TOP_CAPS  # a capability buried in a compound value: be conservative
    if isinstance(t, ty.TFunc):
        out = t.captures
        return out.union(_type_captures(t.result))
    if isinstance(t, (ty.TList, ty.TOption, ty.TClassified)):
        return _type_captures(t.elem)
    if isinstance(t, ty.TTuple):
        out = EMPTY_CAPS
        for item in t.items:
            out = out.union(_type_captures(item))
        return out
    return EMPTY_CAPS


def check(program: ast.Program, env: TypeEnv, expected: TypeExpr | None = None,
          decls: DeclLayer | None = None,
          hole_override: tuple[int, TypeExpr] | None = None
          ) -> tuple[TypeExpr | None, list[Diagnostic], Checker]:
    """Type-check a program. Returns (final type, sorted diagnostics, checker);
    the checker instance carries the scratch declaration layer and annotations
    used by the capture-check pass."""
    checker = Checker(env, decls if decls is not None else env.decls, hole_override)
    result = checker.check_program(program, env, expected)
    diags = sorted(checker.diags, key=sort_key)
    return (result if not diags else None), diags, checker


def infer_expected(program: ast.Program, env: TypeEnv,
                   decls: DeclLayer | None = None
                   ) -> tuple[TypeExpr | None, list[Diagnostic]]:
    """The expected type the surrounding context imposes on the single
    agent/eval call inside `program`, or an ambiguity diagnostic."""
    _, diags, _ = check(program, env, None, decls)
    for node in walk(program):
        if isinstance(node, ast.Apply) and getattr(node, "special", None) in (
                "agent", "eval", "subAgent") and node.expected is not None:
            return node.expected, []
    return None, diags


def walk(node: ast.Node):
    yield node
    for value in vars(node).values():
        if isinstance(value, ast.Node):
            yield from walk(value)
        elif isinstance(value, (list, tuple)):
            for item in value:
                if isinstance(item, ast.Node):
                    yield from walk(item)
                elif isinstance(item, tuple):
                    for sub in item:
                        if isinstance(sub, ast.Node):
                            yield from walk(sub)
