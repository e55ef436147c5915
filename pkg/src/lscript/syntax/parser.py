"""Recursive-descent parser with precedence climbing for operators.

Parsing never executes code; errors are collected as diagnostics with an
expected-token hint. Newlines act as soft statement separators: the token
stream drops them inside parentheses and brackets, and the parser skips
them explicitly after operators and before `else`/`catch`/leading dots.
"""

from __future__ import annotations

from ..diagnostics import Diagnostic, SourceSpan, syntax_error
from . import ast
from .lexer import tokenize
from .tokens import Token, TokenKind

K = TokenKind

_BIN_LEVELS: list[dict[TokenKind, str]] = [
    {K.OR: "||"},
    {K.AND: "&&"},
    {K.EQ: "==", K.NEQ: "!="},
    {K.LT: "<", K.LE: "<=", K.GT: ">", K.GE: ">="},
    {K.PLUS: "+", K.MINUS: "-"},
    {K.STAR: "*", K.SLASH: "/", K.PERCENT: "%"},
]

_STMT_KEYWORDS = {K.VAL, K.VAR, K.DEF, K.RECORD, K.ENUM}


class ParseError(Exception):
    def __init__(self, diag: Diagnostic) -> None:
        super().__init__(diag.render())
        self.diag = diag


def _strip_newlines_in_parens(tokens: list[Token]) -> list[Token]:
    out: list[Token] = []
    stack: list[TokenKind] = []
    for tok in tokens:
        if tok.kind in (K.LPAREN, K.LBRACKET, K.LBRACE):
            stack.append(tok.kind)
        elif tok.kind in (K.RPAREN, K.RBRACKET, K.RBRACE) and stack:
            stack.pop()
        if tok.kind == K.NEWLINE and stack and stack[-1] in (K.LPAREN, K.LBRACKET):
            continue
        out.append(tok)
    return out


class Parser:
    def __init__(self, source: str, source_id: str = "<input>") -> None:
        self.src = source
        self.sid = source_id
        tokens, self.diags = tokenize(source, source_id)
        self.tokens = _strip_newlines_in_parens(tokens)
        self.pos = 0

    # ---- token access ----

    def peek(self, offset: int = 0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def at(self, kind: TokenKind) -> bool:
        return self.peek().kind == kind

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not K.EOF:
            self.pos += 1
        return tok

    def expect(self, kind: TokenKind, what: str) -> Token:
        if self.at(kind):
            return self.advance()
        tok = self.peek()
        got = tok.text or tok.kind.name.lower()
        raise ParseError(syntax_error(f"expected {what}, found {got!r}", tok.span))

    def skip_newlines(self) -> None:
        while self.at(K.NEWLINE):
            self.advance()

    def skip_separators(self) -> None:
        while self.peek().kind in (K.NEWLINE, K.SEMI):
            self.advance()

    def peek_past_newlines(self) -> Token:
        i = self.pos
        while i < len(self.tokens) and self.tokens[i].kind == K.NEWLINE:
            i += 1
        return self.tokens[i]

    def span_from(self, start: int) -> SourceSpan:
        end = self.tokens[self.pos - 1].span.end if self.pos > 0 else start
        return SourceSpan(self.sid, start, max(start, end))

    # ---- entry points ----

    def parse_program(self) -> ast.Program:
        stmts: list[ast.Node] = []
        self.skip_separators()
        while not self.at(K.EOF):
            start_pos = self.pos
            try:
                stmts.append(self.parse_statement())
                if self.peek().kind not in (K.NEWLINE, K.SEMI, K.EOF, K.RBRACE):
                    tok = self.peek()
                    raise ParseError(syntax_error(
                        f"expected end of statement, found {tok.text!r}", tok.span))
            except ParseError as err:
                self.diags.append(err.diag)
                if self.pos == start_pos:
                    self.advance()
                self.recover()
            self.skip_separators()
        return ast.Program(SourceSpan(self.sid, 0, len(self.src)), stmts)

    def recover(self) -> None:
        """Skip to the next statement boundary: a separator or a statement
        keyword at bracket depth zero."""
        depth = 0
        while not self.at(K.EOF):
            kind = self.peek().kind
            if kind in (K.LPAREN, K.LBRACKET, K.LBRACE):
                depth += 1
            elif kind in (K.RPAREN, K.RBRACKET, K.RBRACE):
                depth -= 1
            elif kind in (K.NEWLINE, K.SEMI) and depth <= 0:
                return
            elif kind in _STMT_KEYWORDS and depth <= 0:
                return
            self.advance()

    # ---- statements ----

    def parse_statement(self) -> ast.Node:
        kind = self.peek().kind
        if kind in (K.VAL, K.VAR):
            return self.parse_val()
        if kind == K.DEF:
            return self.parse_def()
        if kind == K.RECORD:
            return self.parse_record()
        if kind == K.ENUM:
            return self.parse_enum()
        if kind == K.IDENT and self.peek(1).kind in (K.ASSIGN, K.PLUS_ASSIGN, K.MINUS_ASSIGN):
            return self.parse_assign()
        return self.parse_expr()

    def parse_val(self) -> ast.ValDecl:
        start = self.peek().span.start
        mutable = self.advance().kind == K.VAR
        name = self.expect(K.IDENT, "a binding name")
        type_ast = None
        if self.at(K.COLON):
            self.advance()
            type_ast = self.parse_type()
        self.expect(K.ASSIGN, "'='")
        self.skip_newlines()
        init = self.parse_expr()
        return ast.ValDecl(self.span_from(start), str(name.value), type_ast, init, mutable)

    def parse_assign(self) -> ast.Assign:
        start = self.peek().span.start
        name_tok = self.advance()
        op = self.advance()
        self.skip_newlines()
        rhs = self.parse_expr()
        name = str(name_tok.value)
        if op.kind in (K.PLUS_ASSIGN, K.MINUS_ASSIGN):
            # desugar n ±= e  →  n = n ± e
            binop = "+" if op.kind == K.PLUS_ASSIGN else "-"
            lhs_ref = ast.Name(name_tok.span, name)
            rhs = ast.BinOp(self.span_from(start), binop, lhs_ref, rhs)
        return ast.Assign(self.span_from(start), name, rhs)

    def parse_def(self) -> ast.DefDecl:
        start = self.advance().span.start
        name = self.expect(K.IDENT, "a function name")
        self.expect(K.LPAREN, "'('")
        params: list[tuple[str, ast.TypeAst]] = []
        while not self.at(K.RPAREN):
            pname = self.expect(K.IDENT, "a parameter name")
            self.expect(K.COLON, "':' with a parameter type")
            params.append((str(pname.value), self.parse_type()))
            if not self.at(K.RPAREN):
                self.expect(K.COMMA, "','")
        self.advance()
        result_type = None
        if self.at(K.COLON):
            self.advance()
            result_type = self.parse_type()
        self.expect(K.ASSIGN, "'='")
        self.skip_newlines()
        body = self.parse_expr()
        return ast.DefDecl(self.span_from(start), str(name.value), params, result_type, body)

    def parse_record(self) -> ast.RecordDecl:
        start = self.advance().span.start
        name = self.expect(K.IDENT, "a record name")
        self.expect(K.LPAREN, "'('")
        fields: list[tuple[str, ast.TypeAst]] = []
        while not self.at(K.RPAREN):
            fname = self.expect(K.IDENT, "a field name")
            self.expect(K.COLON, "':' with a field type")
            fields.append((str(fname.value), self.parse_type()))
            if not self.at(K.RPAREN):
                self.expect(K.COMMA, "','")
        self.advance()
        return ast.RecordDecl(self.span_from(start), str(name.value), fields)

    def parse_enum(self) -> ast.EnumDecl:
        start = self.advance().span.start
        name = self.expect(K.IDENT, "an enum name")
        self.expect(K.LBRACE, "'{'")
        cases: list[str] = []
        self.skip_separators()
        while self.at(K.CASE):
            self.advance()
            cases.append(str(self.expect(K.IDENT, "a case name").value))
            while self.at(K.COMMA):
                self.advance()
                cases.append(str(self.expect(K.IDENT, "a case name").value))
            self.skip_separators()
        self.expect(K.RBRACE, "'}'")
        if not cases:
            raise ParseError(syntax_error("enum needs at least one case", self.span_from(start)))
        return ast.EnumDecl(self.span_from(start), str(name.value), cases)

    # ---- expressions ----

    def parse_expr(self) -> ast.Expr:
        expr = self.parse_infix_to()
        # `subject match { ... }` is postfix on the subject expression
        while self.at(K.MATCH):
            expr = self.parse_match(expr)
        return expr

    def parse_infix_to(self) -> ast.Expr:
        start = self.peek().span.start
        left = self.parse_binary(0)
        while self.at(K.IDENT) and self.peek().value == "to":
            self.advance()
            self.skip_newlines()
            right = self.parse_binary(0)
            left = ast.BinOp(self.span_from(start), "to", left, right)
        return left

    def parse_binary(self, level: int) -> ast.Expr:
        if level >= len(_BIN_LEVELS):
            return self.parse_unary()
        start = self.peek().span.start
        left = self.parse_binary(level + 1)
        ops = _BIN_LEVELS[level]
        while self.peek().kind in ops:
            op = ops[self.advance().kind]
            self.skip_newlines()
            right = self.parse_binary(level + 1)
            left = ast.BinOp(self.span_from(start), op, left, right)
        return left

    def parse_unary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind in (K.MINUS, K.NOT):
            self.advance()
            operand = self.parse_unary()
            return ast.UnOp(self.span_from(tok.span.start),
                            "-" if tok.kind == K.MINUS else "!", operand)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        start = self.peek().span.start
        expr = self.parse_primary()
        while True:
            if self.at(K.DOT):
                self.advance()
                self.skip_newlines()
                name = self.expect(K.IDENT, "a field or method name")
                expr = ast.FieldAccess(self.span_from(start), expr, str(name.value))
            elif self.at(K.LPAREN):
                args, named = self.parse_args()
                expr = ast.Apply(self.span_from(start), expr, args, named, [])
            elif self.at(K.LBRACKET):
                type_args = self.parse_type_args()
                args, named = ([], [])
                if self.at(K.LPAREN):
                    args, named = self.parse_args()
                expr = ast.Apply(self.span_from(start), expr, args, named, type_args)
            elif self.at(K.NEWLINE) and self.peek_past_newlines().kind == K.DOT:
                self.skip_newlines()  # leading-dot method chain continuation
            else:
                return expr

    def parse_args(self) -> tuple[list[ast.Expr], list[tuple[str, ast.Expr]]]:
        self.expect(K.LPAREN, "'('")
        args: list[ast.Expr] = []
        named: list[tuple[str, ast.Expr]] = []
        while not self.at(K.RPAREN):
            if (self.at(K.IDENT) and self.peek(1).kind == K.ASSIGN):
                name = str(self.advance().value)
                self.advance()
                named.append((name, self.parse_expr()))
            else:
                if named:
                    raise ParseError(syntax_error(
                        "positional argument after named argument", self.peek().span))
                args.append(self.parse_expr())
            if not self.at(K.RPAREN):
                self.expect(K.COMMA, "','")
        self.advance()
        return args, named

    def parse_type_args(self) -> list[ast.TypeAst]:
        self.expect(K.LBRACKET, "'['")
        out = [self.parse_type()]
        while self.at(K.COMMA):
            self.advance()
            out.append(self.parse_type())
        self.expect(K.RBRACKET, "']'")
        return out

    def parse_primary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == K.INT:
            self.advance()
            return ast.IntLit(tok.span, tok.value)
        if tok.kind == K.DOUBLE:
            self.advance()
            return ast.DoubleLit(tok.span, tok.value)
        if tok.kind == K.STRING:
            self.advance()
            return ast.StringLit(tok.span, tok.value)
        if tok.kind == K.INTERP:
            return self.parse_interp()
        if tok.kind in (K.TRUE, K.FALSE):
            self.advance()
            return ast.BoolLit(tok.span, tok.kind == K.TRUE)
        if tok.kind == K.HOLE:
            self.advance()
            return ast.Hole(tok.span)
        if tok.kind == K.IDENT:
            if self.peek(1).kind == K.FAT_ARROW:  # bare single-param lambda: x => e
                self.advance()
                self.advance()
                self.skip_newlines()
                body = self.parse_expr()
                return ast.Lambda(self.span_from(tok.span.start),
                                  [(str(tok.value), None)], body)
            self.advance()
            return ast.Name(tok.span, str(tok.value))
        if tok.kind == K.LPAREN:
            return self.parse_paren()
        if tok.kind == K.LBRACE:
            return self.parse_block()
        if tok.kind == K.IF:
            return self.parse_if()
        if tok.kind == K.WHILE:
            return self.parse_while()
        if tok.kind == K.TRY:
            return self.parse_try()
        if tok.kind == K.THROW:
            self.advance()
            msg = self.parse_expr()
            return ast.Throw(self.span_from(tok.span.start), msg)
        got = tok.text or tok.kind.name.lower()
        raise ParseError(syntax_error(f"expected expression, found {got!r}", tok.span))

    def parse_interp(self) -> ast.InterpString:
        tok = self.advance()
        parts: list[object] = []
        for part in tok.parts:
            if part.kind == "text":
                parts.append(part.value)
            else:
                sub = Parser(part.value, self.sid)
                expr = sub.parse_expr()
                if sub.diags:
                    raise ParseError(sub.diags[0])
                if not sub.at(K.EOF):
                    raise ParseError(syntax_error(
                        "trailing input in interpolated expression", tok.span))
                _shift_spans(expr, part.offset)
                parts.append(expr)
        return ast.InterpString(tok.span, parts)

    def parse_paren(self) -> ast.Expr:
        """Parenthesized group, unit literal, tuple literal, or lambda."""
        start = self.peek().span.start
        if self.looks_like_lambda():
            return self.parse_lambda()
        self.advance()
        if self.at(K.RPAREN):
            self.advance()
            return ast.UnitLit(self.span_from(start))
        items = [self.parse_expr()]
        while self.at(K.COMMA):
            self.advance()
            items.append(self.parse_expr())
        self.expect(K.RPAREN, "')'")
        if len(items) == 1:
            return items[0]
        return ast.TupleLit(self.span_from(start), items)

    def looks_like_lambda(self) -> bool:
        """From an LPAREN, scan to its matching RPAREN and test for `=>`."""
        depth = 0
        i = self.pos
        while i < len(self.tokens):
            kind = self.tokens[i].kind
            if kind in (K.LPAREN, K.LBRACKET, K.LBRACE):
                depth += 1
            elif kind in (K.RPAREN, K.RBRACKET, K.RBRACE):
                depth -= 1
                if depth == 0:
                    return self.tokens[i + 1].kind == K.FAT_ARROW if i + 1 < len(self.tokens) else False
            elif kind == K.EOF:
                return False
            i += 1
        return False

    def parse_lambda(self) -> ast.Lambda:
        start = self.peek().span.start
        self.expect(K.LPAREN, "'('")
        params: list[tuple[str, ast.TypeAst | None]] = []
        while not self.at(K.RPAREN):
            pname = self.expect(K.IDENT, "a parameter name")
            ptype = None
            if self.at(K.COLON):
                self.advance()
                ptype = self.parse_type()
            params.append((str(pname.value), ptype))
            if not self.at(K.RPAREN):
                self.expect(K.COMMA, "','")
        self.advance()
        self.expect(K.FAT_ARROW, "'=>'")
        self.skip_newlines()
        body = self.parse_expr()
        return ast.Lambda(self.span_from(start), params, body)

    def parse_block(self) -> ast.Block:
        start = self.expect(K.LBRACE, "'{'").span.start
        stmts: list[ast.Node] = []
        self.skip_separators()
        while not self.at(K.RBRACE):
            if self.at(K.EOF):
                raise ParseError(syntax_error("expected '}'", self.peek().span))
            stmts.append(self.parse_statement())
            if self.peek().kind not in (K.NEWLINE, K.SEMI, K.RBRACE):
                tok = self.peek()
                raise ParseError(syntax_error(
                    f"expected end of statement, found {tok.text!r}", tok.span))
            self.skip_separators()
        self.advance()
        return ast.Block(self.span_from(start), stmts)

    def parse_if(self) -> ast.If:
        start = self.advance().span.start
        self.expect(K.LPAREN, "'(' around the condition")
        cond = self.parse_expr()
        self.expect(K.RPAREN, "')'")
        self.skip_newlines()
        then = self.parse_expr()
        orelse = None
        if self.peek_past_newlines().kind == K.ELSE:
            self.skip_newlines()
            self.advance()
            self.skip_newlines()
            orelse = self.parse_expr()
        return ast.If(self.span_from(start), cond, then, orelse)

    def parse_while(self) -> ast.While:
        start = self.advance().span.start
        self.expect(K.LPAREN, "'(' around the condition")
        cond = self.parse_expr()
        self.expect(K.RPAREN, "')'")
        self.skip_newlines()
        body = self.parse_expr()
        return ast.While(self.span_from(start), cond, body)

    def parse_match(self, subject: ast.Expr) -> ast.Match:
        start = subject.span.start
        self.expect(K.MATCH, "'match'")
        self.expect(K.LBRACE, "'{'")
        arms: list[ast.MatchArm] = []
        self.skip_separators()
        while self.at(K.CASE):
            arm_start = self.advance().span.start
            pattern = self.parse_pattern()
            self.expect(K.FAT_ARROW, "'=>'")
            self.skip_newlines()
            body = self.parse_expr()
            arms.append(ast.MatchArm(self.span_from(arm_start), pattern, body))
            self.skip_separators()
        self.expect(K.RBRACE, "'}' or 'case'")
        if not arms:
            raise ParseError(syntax_error("match needs at least one case", self.span_from(start)))
        return ast.Match(self.span_from(start), subject, arms)

    def parse_pattern(self) -> ast.Pattern:
        tok = self.peek()
        if tok.kind == K.UNDERSCORE:
            self.advance()
            return ast.PatWildcard(tok.span)
        name = self.expect(K.IDENT, "a pattern")
        if self.at(K.DOT):
            self.advance()
            case = self.expect(K.IDENT, "an enum case name")
            return ast.PatCase(self.span_from(tok.span.start),
                               str(name.value), str(case.value))
        return ast.PatBinder(tok.span, str(name.value))

    def parse_try(self) -> ast.Try:
        start = self.advance().span.start
        self.skip_newlines()
        body = self.parse_expr()
        if self.peek_past_newlines().kind != K.CATCH:
            raise ParseError(syntax_error("expected 'catch' after try body",
                                          self.peek().span))
        self.skip_newlines()
        self.advance()
        self.expect(K.LBRACE, "'{'")
        self.skip_separators()
        self.expect(K.CASE, "'case'")
        binder_tok = self.peek()
        if binder_tok.kind == K.UNDERSCORE:
            self.advance()
            binder = "_"
        else:
            binder = str(self.expect(K.IDENT, "a binder name").value)
        self.expect(K.FAT_ARROW, "'=>'")
        self.skip_newlines()
        handler = self.parse_expr()
        self.skip_separators()
        self.expect(K.RBRACE, "'}'")
        return ast.Try(self.span_from(start), body, binder, handler)

    # ---- types ----

    def parse_type(self) -> ast.TypeAst:
        start = self.peek().span.start
        head, is_group = self.parse_type_atom_or_group()
        if self.peek().kind in (K.ARROW, K.FAT_ARROW):
            arrow = self.advance()
            captures: object = "pure" if arrow.kind == K.ARROW else "top"
            if arrow.kind == K.ARROW and self.at(K.LBRACE):
                self.advance()
                names = [str(self.expect(K.IDENT, "a capability name").value)]
                while self.at(K.COMMA):
                    self.advance()
                    names.append(str(self.expect(K.IDENT, "a capability name").value))
                self.expect(K.RBRACE, "'}'")
                captures = names
            result = self.parse_type()
            params = head if is_group else [head]
            return ast.TFunc(self.span_from(start), params, result, captures)
        if is_group:
            items = head
            if len(items) == 0:
                raise ParseError(syntax_error("'()' is not a type", self.span_from(start)))
            if len(items) == 1:
                return items[0]
            return ast.TTuple(self.span_from(start), items)
        return head

    def parse_type_atom_or_group(self):
        """Returns (TypeAst, False) or (list-of-TypeAst, True) for (A, B) groups."""
        if self.at(K.LPAREN):
            self.advance()
            items: list[ast.TypeAst] = []
            while not self.at(K.RPAREN):
                items.append(self.parse_type())
                if not self.at(K.RPAREN):
                    self.expect(K.COMMA, "','")
            self.advance()
            return items, True
        name = self.expect(K.IDENT, "a type name")
        args: list[ast.TypeAst] = []
        if self.at(K.LBRACKET):
            args = self.parse_type_args()
        return ast.TName(self.span_from(name.span.start), str(name.value), args), False


def _shift_spans(node: ast.Node, offset: int) -> None:
    node.span = node.span.shift(offset)
    for value in vars(node).values():
        if isinstance(value, ast.Node):
            _shift_spans(value, offset)
        elif isinstance(value, list):
            for item in value:
                if isinstance(item, ast.Node):
                    _shift_spans(item, offset)
                elif isinstance(item, tuple):
                    for sub in item:
                        if isinstance(sub, ast.Node):
                            _shift_spans(sub, offset)


def parse_program(source: str, source_id: str = "<input>") -> tuple[ast.Program | None, list[Diagnostic]]:
    """Parse a whole program (or snippet-as-block). Empty input parses to an
    empty block; errors return (None, diagnostics)."""
    parser = Parser(source, source_id)
    program = parser.parse_program()
    if parser.diags:
        return None, parser.diags
    return program, []


def parse_type_text(source: str, source_id: str = "<type>") -> tuple[ast.TypeAst | None, list[Diagnostic]]:
    parser = Parser(source, source_id)
    try:
        t = parser.parse_type()
    except ParseError as err:
        return None, [err.diag]
    if parser.diags:
        return None, parser.diags
    if not parser.at(K.EOF):
        return None, [syntax_error("trailing input after type", parser.peek().span)]
    return t, []
