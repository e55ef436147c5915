"""Rendering of types and programs back to source text.

`render_type` output re-parses to an equal type; `render_program` output
re-parses to a structurally equal AST (subexpressions are parenthesized
liberally, which parsing erases).
"""

from __future__ import annotations

import dataclasses

from ..types import core as ty
from . import ast
from .lexer import HOLE_MARKER


def render_type(t: ty.TypeExpr) -> str:
    if isinstance(t, ty.TInt):
        return "Int"
    if isinstance(t, ty.TDouble):
        return "Double"
    if isinstance(t, ty.TBool):
        return "Bool"
    if isinstance(t, ty.TString):
        return "String"
    if isinstance(t, ty.TUnit):
        return "Unit"
    if isinstance(t, ty.TBottom):
        return "Nothing"
    if isinstance(t, ty.TList):
        return f"List[{render_type(t.elem)}]"
    if isinstance(t, ty.TOption):
        return f"Option[{render_type(t.elem)}]"
    if isinstance(t, ty.TClassified):
        return f"Classified[{render_type(t.elem)}]"
    if isinstance(t, ty.TTuple):
        return "(" + ", ".join(render_type(i) for i in t.items) + ")"
    if isinstance(t, (ty.TRecord, ty.TEnum)):
        return t.name
    if isinstance(t, ty.TCap):
        return ty.CAP_KIND_TO_NAME[t.kind]
    if isinstance(t, ty.TFunc):
        if len(t.params) == 1 and not isinstance(t.params[0], (ty.TFunc, ty.TTuple)):
            left = render_type(t.params[0])
        else:
            left = "(" + ", ".join(render_type(p) for p in t.params) + ")"
        if t.captures.is_top:
            arrow = "=>"
        elif t.captures.is_empty:
            arrow = "->"
        else:
            arrow = "->{" + ", ".join(sorted(t.captures.names)) + "}"
        return f"{left} {arrow} {render_type(t.result)}"
    raise TypeError(f"cannot render {t!r}")


def render_type_ast(t: ast.TypeAst) -> str:
    if isinstance(t, ast.TName):
        if t.args:
            return t.name + "[" + ", ".join(render_type_ast(a) for a in t.args) + "]"
        return t.name
    if isinstance(t, ast.TTuple):
        return "(" + ", ".join(render_type_ast(i) for i in t.items) + ")"
    if isinstance(t, ast.TFunc):
        if len(t.params) == 1 and isinstance(t.params[0], ast.TName):
            left = render_type_ast(t.params[0])
        else:
            left = "(" + ", ".join(render_type_ast(p) for p in t.params) + ")"
        if t.captures == "top":
            arrow = "=>"
        elif t.captures == "pure":
            arrow = "->"
        else:
            arrow = "->{" + ", ".join(t.captures) + "}"
        return f"{left} {arrow} {render_type_ast(t.result)}"
    raise TypeError(f"cannot render {t!r}")


def _escape(text: str, in_interp: bool = False) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t")
    if in_interp:
        out = out.replace("$", "$$")
    return out


def _atom(node: ast.Node) -> str:
    """Render a subexpression, parenthesized unless already atomic."""
    text = render_node(node)
    if isinstance(node, (ast.IntLit, ast.DoubleLit, ast.BoolLit, ast.StringLit,
                         ast.InterpString, ast.Name, ast.UnitLit, ast.TupleLit,
                         ast.Apply, ast.FieldAccess, ast.Block, ast.Hole)):
        return text
    return f"({text})"


def render_node(node: ast.Node) -> str:
    if isinstance(node, ast.Program):
        return "\n".join(render_node(s) for s in node.stmts)
    if isinstance(node, ast.IntLit):
        return str(node.value)
    if isinstance(node, ast.DoubleLit):
        text = repr(node.value)
        if "e" in text or "E" in text or "inf" in text or "nan" in text:
            text = f"{node.value:.17f}"
        return text
    if isinstance(node, ast.BoolLit):
        return "true" if node.value else "false"
    if isinstance(node, ast.StringLit):
        return f'"{_escape(node.value)}"'
    if isinstance(node, ast.InterpString):
        parts = []
        for part in node.parts:
            if isinstance(part, str):
                parts.append(_escape(part, in_interp=True))
            else:
                parts.append("${" + render_node(part) + "}")
        return 's"' + "".join(parts) + '"'
    if isinstance(node, ast.UnitLit):
        return "()"
    if isinstance(node, ast.Name):
        return node.name
    if isinstance(node, ast.Hole):
        return HOLE_MARKER
    if isinstance(node, ast.TupleLit):
        return "(" + ", ".join(render_node(i) for i in node.items) + ")"
    if isinstance(node, ast.Lambda):
        params = ", ".join(
            f"{n}: {render_type_ast(t)}" if t is not None else n
            for n, t in node.params)
        return f"({params}) => {_atom(node.body)}"
    if isinstance(node, ast.Apply):
        callee = _atom(node.callee)
        targs = ""
        if node.type_args:
            targs = "[" + ", ".join(render_type_ast(t) for t in node.type_args) + "]"
        args = [render_node(a) for a in node.args]
        args += [f"{n} = {render_node(e)}" for n, e in node.named_args]
        return f"{callee}{targs}(" + ", ".join(args) + ")"
    if isinstance(node, ast.FieldAccess):
        return f"{_atom(node.base)}.{node.name}"
    if isinstance(node, ast.BinOp):
        if node.op == "to":
            return f"{_atom(node.left)} to {_atom(node.right)}"
        return f"{_atom(node.left)} {node.op} {_atom(node.right)}"
    if isinstance(node, ast.UnOp):
        return f"{node.op}{_atom(node.operand)}"
    if isinstance(node, ast.If):
        text = f"if ({render_node(node.cond)}) {_atom(node.then)}"
        if node.orelse is not None:
            text += f" else {_atom(node.orelse)}"
        return text
    if isinstance(node, ast.While):
        return f"while ({render_node(node.cond)}) {_atom(node.body)}"
    if isinstance(node, ast.Match):
        arms = "\n".join(
            f"  case {render_pattern(a.pattern)} => {_atom(a.body)}" for a in node.arms)
        return f"{_atom(node.subject)} match {{\n{arms}\n}}"
    if isinstance(node, ast.Try):
        return (f"try {_atom(node.body)} catch {{ case {node.binder} => "
                f"{_atom(node.handler)} }}")
    if isinstance(node, ast.Throw):
        return f"throw {_atom(node.message)}"
    if isinstance(node, ast.Block):
        if not node.stmts:
            return "{ }"
        inner = "\n".join("  " + render_node(s) for s in node.stmts)
        return "{\n" + inner + "\n}"
    if isinstance(node, ast.ValDecl):
        kw = "var" if node.mutable else "val"
        annot = f": {render_type_ast(node.type_ast)}" if node.type_ast else ""
        return f"{kw} {node.name}{annot} = {render_node(node.init)}"
    if isinstance(node, ast.Assign):
        return f"{node.name} = {render_node(node.value)}"
    if isinstance(node, ast.DefDecl):
        params = ", ".join(f"{n}: {render_type_ast(t)}" for n, t in node.params)
        annot = f": {render_type_ast(node.result_type)}" if node.result_type else ""
        return f"def {node.name}({params}){annot} = {render_node(node.body)}"
    if isinstance(node, ast.RecordDecl):
        fields = ", ".join(f"{n}: {render_type_ast(t)}" for n, t in node.fields)
        return f"record {node.name}({fields})"
    if isinstance(node, ast.EnumDecl):
        return f"enum {node.name} {{ case " + ", ".join(node.cases) + " }"
    raise TypeError(f"cannot render {node!r}")


def render_pattern(p: ast.Pattern) -> str:
    if isinstance(p, ast.PatWildcard):
        return "_"
    if isinstance(p, ast.PatBinder):
        return p.name
    if isinstance(p, ast.PatCase):
        return f"{p.enum_name}.{p.case_name}"
    raise TypeError(f"cannot render {p!r}")


_SKIP_FIELDS = {"span"}


def structurally_equal(a: object, b: object) -> bool:
    """AST equality ignoring spans and checker annotations."""
    if isinstance(a, ast.Node) and isinstance(b, ast.Node):
        if type(a) is not type(b):
            return False
        for f in dataclasses.fields(a):
            if f.name in _SKIP_FIELDS:
                continue
            if not structurally_equal(getattr(a, f.name), getattr(b, f.name)):
                return False
        return True
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return (len(a) == len(b)
                and all(structurally_equal(x, y) for x, y in zip(a, b)))
    return a == b
