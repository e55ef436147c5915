"""Lexer, parser, splice, and rendering round-trips."""

from __future__ import annotations

import random

import pytest

from lscript.syntax import (
    HOLE_MARKER,
    parse_program,
    parse_type_text,
    render_node,
    splice,
    splice_at,
    structurally_equal,
    tokenize,
)
from lscript.syntax.splice import SpliceError
from lscript.syntax.tokens import TokenKind


def kinds(source):
    tokens, diags = tokenize(source)
    assert not diags
    return [t.kind for t in tokens if t.kind not in (TokenKind.NEWLINE, TokenKind.EOF)]


class TestLexer:
    def test_val_binding(self):
        assert kinds("val x = 1") == [TokenKind.VAL, TokenKind.IDENT,
                                      TokenKind.ASSIGN, TokenKind.INT]

    def test_method_call_chain(self):
        assert kinds("xs.filter(isPrime)") == [
            TokenKind.IDENT, TokenKind.DOT, TokenKind.IDENT,
            TokenKind.LPAREN, TokenKind.IDENT, TokenKind.RPAREN]

    def test_unknown_character_is_diagnostic_not_crash(self):
        tokens, diags = tokenize("val § = 1")
        assert len(diags) == 1
        assert "unknown character" in diags[0].render()
        assert tokens[-1].kind == TokenKind.EOF

    def test_tokens_cover_input(self):
        source = 'val x = 1 + foo(2).bar'
        tokens, _ = tokenize(source)
        covered = sorted((t.span.start, t.span.end) for t in tokens[:-1])
        rebuilt = "".join(source[a:b] for a, b in covered)
        assert rebuilt == source.replace(" ", "")

    def test_hole_marker_token(self):
        assert kinds("val r = <<HOLE>>") == [
            TokenKind.VAL, TokenKind.IDENT, TokenKind.ASSIGN, TokenKind.HOLE]

    def test_interp_with_nested_quotes(self):
        tokens, diags = tokenize('s"Report: ${parts.mkString(" and ")}"')
        assert not diags
        parts = tokens[0].parts
        assert [p.kind for p in parts] == ["text", "expr"]
        assert parts[1].value == 'parts.mkString(" and ")'

    def test_interp_dollar_escape(self):
        tokens, diags = tokenize('s"cost: $$5 for $n"')
        assert not diags
        assert tokens[0].parts[0].value == "cost: $5 for "

    def test_unterminated_string(self):
        _, diags = tokenize('val s = "oops')
        assert any("unterminated" in d.render() for d in diags)


class TestParser:
    def test_list_literal_statement(self):
        program, diags = parse_program("val xs = List(0, 1, 2, 4, 7, 9, 10)")
        assert not diags
        assert len(program.stmts) == 1

    def test_empty_source_is_empty_block(self):
        program, diags = parse_program("")
        assert not diags
        assert program.stmts == []

    def test_missing_init_reports_expected_expression(self):
        program, diags = parse_program("val x =")
        assert program is None
        assert "expected expression" in diags[0].render()

    def test_parse_never_executes(self, session):
        # a program full of effects parses without touching the session
        before = session.observe()
        parse_program('setMemory("k", "v")\nthrow "boom"')
        assert session.observe() == before

    def test_statement_recovery_reports_multiple_errors(self):
        _, diags = parse_program("val x =\nval y = )\nval z = 1")
        assert len(diags) >= 2

    REPRESENTATIVE = [
        "val x = 1 + 2 * 3 - 4",
        'var s = s"n=${1 + 2} tail"',
        "val f = (x: Int, y: String) => y.size + x",
        "def fact(n: Int): Int = if (n <= 1) 1 else n * fact(n - 1)",
        "record Order(id: Int, total: Double)",
        "enum Color { case Red, Green, Blue }",
        'val lab = c match {\n case Color.Red => "r"\n case _ => "o"\n}',
        'val t = try 1 / 0 catch { case e => -1 }',
        "while (i < 10) { i += 1 }",
        "val g: String ->{io} String = (p: String) => readFile(io, p)",
        "val h: (Int, Int) -> Int = (x: Int, y: Int) => x + y",
        "val p = (1, (2, 3))._2._1",
        "val r = agent[List[Int]](\"filter\")",
        "val n = xs.headOption.map(v => v + 1).getOrElse(0)",
        "val piped = searchMemory(\"a\")\n  .headOption\n  .isDefined",
        "throw s\"bad: $x\"",
    ]

    @pytest.mark.parametrize("source", REPRESENTATIVE)
    def test_render_round_trip(self, source):
        program, diags = parse_program(source)
        assert not diags, [d.render() for d in diags]
        rendered = render_node(program)
        reparsed, diags2 = parse_program(rendered)
        assert not diags2, (rendered, [d.render() for d in diags2])
        assert structurally_equal(program, reparsed), rendered

    def test_every_node_carries_span(self):
        from lscript.types.check import walk
        program, _ = parse_program(self.REPRESENTATIVE[6])
        for node in walk(program):
            assert node.span.start <= node.span.end


class TestTypeSyntax:
    @pytest.mark.parametrize("text", [
        "Int", "List[Int]", "Option[String]", "Classified[String]",
        "(String, String)", "Int -> String", "Int => String",
        "String ->{io} String", "(Int, Int) -> Int", "() -> Int",
        "(Int -> Int) -> Int", "List[(String, String)]", "IO",
    ])
    def test_type_parses(self, text):
        t, diags = parse_type_text(text)
        assert not diags
        assert t is not None

    def test_bad_type(self):
        t, diags = parse_type_text("List[")
        assert t is None and diags


class TestSplice:
    def test_single_line_block_wrap(self):
        assert splice("val r = <<HOLE>>", "1 + 2") == "val r = { 1 + 2 }"

    def test_marker_missing(self):
        with pytest.raises(SpliceError) as err:
            splice("val r = 1", "2")
        assert err.value.kind == "marker-missing"

    def test_marker_duplicated(self):
        with pytest.raises(SpliceError) as err:
            splice(f"val r = {HOLE_MARKER} + {HOLE_MARKER}", "2")
        assert err.value.kind == "marker-duplicated"

    def test_multi_statement_snippet(self):
        spliced = splice("val r: List[Int] = <<HOLE>>",
                         "def isPrime(n: Int): Bool = n > 1\nxs.filter(isPrime)")
        program, diags = parse_program(spliced)
        assert not diags
        assert len(program.stmts) == 1

    def test_splice_locality(self):
        # parse(splice(E, S)) differs from parse(E with unit) only at the marker
        enclosing = "val r = 1 + <<HOLE>> + 2"
        with_snippet, offset = splice_at(enclosing, "9 * 9")
        with_unit = enclosing.replace(HOLE_MARKER, "{ () }")
        a, _ = parse_program(with_snippet)
        b, _ = parse_program(with_unit)

        def strip_block_at(program, at):
            from lscript.types.check import walk
            from lscript.syntax import ast
            for node in walk(program):
                if isinstance(node, ast.Block) and node.span.start == at:
                    node.stmts = []
            return program

        assert structurally_equal(strip_block_at(a, offset),
                                  strip_block_at(b, enclosing.index(HOLE_MARKER)))

    def test_random_round_trips(self):
        # seeded random expression soup through render/reparse
        from tests.generators import gen_int, gen_string, gen_bool
        rng = random.Random(20260810)
        for _ in range(150):
            source = "val v = " + random.Random(rng.random()).choice(
                [gen_int(rng), gen_string(rng), gen_bool(rng)])
            program, diags = parse_program(source)
            assert not diags, source
            rendered = render_node(program)
            reparsed, diags2 = parse_program(rendered)
            assert not diags2, rendered
            assert structurally_equal(program, reparsed), rendered
