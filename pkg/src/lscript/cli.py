"""Command-line entry points: REPL, batch runner, and the harness drivers.

Subcommands:
  lscript repl              interactive session
  lscript run FILE.lsc      run a script (exit 0 ok, 1 failure, 2 no file)
  lscript corpus DIR        run the verifier corpus and print the summary
  lscript inject DIR        run the injection scenario suite

Model/session setup comes from a mock-script JSON file (scripted backends,
grants, canned files/http/memory) or from the http backend configured via
LSCRIPT_API_URL / LSCRIPT_API_KEY. Explicit flags always win over
environment values.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .agent import AgentConfig, InstanceRuntime
from .diagnostics import render_with_source
from .interp.evaluator import ScriptError
from .interp.pipeline import run_statement
from .interp.session import Session, SessionConfig, reset_session_ids
from .model import HttpModel, ModelHandle, ScriptedModel, load_model_file
from .stdlib import install_builtins
from .syntax.parser import parse_program
from .trace import JsonlSink, MemorySink


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lscript",
        description="a typed script language whose holes are filled by a model")
    sub = parser.add_subparsers(dest="command")

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--model", default="scripted",
                       help="model backend: scripted | http:<model-name> | none")
        p.add_argument("--mock-script", default=None,
                       help="path to a scripted-model JSON file")
        p.add_argument("--max-attempts", type=int, default=3)
        p.add_argument("--depth-cap", type=int, default=128)
        p.add_argument("--template", default=None,
                       help="path to a system-instruction template file")
        p.add_argument("--trace", default=None, help="JSONL trace output path")
        p.add_argument("--real-io", action="store_true",
                       help="real file reads and HTTP GETs instead of fakes")

    repl_p = sub.add_parser("repl", help="interactive session")
    common(repl_p)
    run_p = sub.add_parser("run", help="run a .lsc script")
    run_p.add_argument("path")
    common(run_p)
    corpus_p = sub.add_parser("corpus", help="run the verifier corpus")
    corpus_p.add_argument("dir")
    corpus_p.add_argument("--report", default=None, help="JSONL report path")
    inject_p = sub.add_parser("inject", help="run the injection scenario suite")
    inject_p.add_argument("dir")
    inject_p.add_argument("--report", default=None, help="JSONL report path")
    inject_p.add_argument("--seeds", type=int, default=5)
    common(inject_p)
    return parser


def _make_handle(name: str, spec, args, pure_channel: bool = False) -> ModelHandle:
    if isinstance(spec, dict):
        return ScriptedModel.from_spec(spec, handle_id=name, pure_channel=pure_channel)
    raise ValueError(f"bad model spec for {name}")


def build_session(args) -> Session:
    """Session per CLI config: scripted instances from the mock-script file,
    or a single http instance, plus grants and canned effect state."""
    reset_session_ids()  # session ids are per-run, so traces replay
    config = SessionConfig(depth_cap=args.depth_cap, max_attempts=args.max_attempts)
    sink = JsonlSink(args.trace) if args.trace else MemorySink()
    session = Session(config, sink)

    spec: dict = {}
    if args.mock_script:
        spec = load_model_file(args.mock_script)

    instances: dict[str, InstanceRuntime] = {}
    template = args.template or "agent_system_v1"
    agent_conf = AgentConfig(max_attempts=args.max_attempts,
                             depth_cap=args.depth_cap, template_id=template)

    if args.model.startswith("http"):
        model_name = args.model.partition(":")[2]
        handle = HttpModel(handle_id="main", model=model_name)
        instances["main"] = InstanceRuntime(handle, agent_conf)
        default = "main"
    elif args.model == "none":
        default = None
    else:
        if "instances" in spec:
            for name, inst_spec in spec["instances"].items():
                handle = ScriptedModel.from_spec(inst_spec, handle_id=name)
                conf = AgentConfig(
                    model_id=name,
                    max_attempts=inst_spec.get("max_attempts", args.max_attempts),
                    depth_cap=inst_spec.get("depth_cap", args.depth_cap),
                    template_id=template)
                instances[name] = InstanceRuntime(handle, conf)
            default = spec.get("default", next(iter(spec["instances"])))
        elif spec:
            handle = ScriptedModel.from_spec(spec, handle_id="main")
            instances["main"] = InstanceRuntime(handle, agent_conf)
            default = "main"
        else:
            default = None

    grants = tuple(spec.get("grants", ["io", "net", "console"]))
    install_builtins(session, grants, instances, default, real_io=args.real_io)
    session.effects.files.update(spec.get("files", {}))
    session.effects.http.update(spec.get("http", {}))
    session.effects.corpus.update(spec.get("corpus", {}))
    session.memory.update(spec.get("memory", {}))
    return session


def _print_diags(outcome, text: str) -> None:
    for diag in outcome.diagnostics:
        print(render_with_source(diag, text), file=sys.stderr)


def _flush_console(session: Session, printed: int) -> int:
    for line in session.effects.console[printed:]:
        print(line)
    return len(session.effects.console)


def run_script(path: str, args) -> int:
    if not os.path.exists(path):
        print(f"no such file: {path}", file=sys.stderr)
        return 2
    with open(path, encoding="utf-8") as fh:
        source = fh.read()
    session = build_session(args)
    program, diags = parse_program(source, path)
    if program is None:
        for diag in diags:
            print(render_with_source(diag, source), file=sys.stderr)
        return 1
    printed = 0
    for stmt in program.stmts:
        text = source[stmt.span.start:stmt.span.end]
        session.trace("turn", {"text": text})
        try:
            outcome = run_statement(session, stmt, text, stmt.span.start)
        except ScriptError as err:
            print(f"error ({err.kind}): {err.message}", file=sys.stderr)
            return 1
        printed = _flush_console(session, printed)
        if not outcome.ok:
            _print_diags(outcome, text)
            for diag in outcome.diagnostics:
                session.trace("diagnostic", {"message": diag.render()})
            return 1
        if outcome.echo:
            print(outcome.echo)
            session.trace("result", {"echo": outcome.echo})
    return 0


def repl_loop(args) -> int:
    session = build_session(args)
    print("lscript repl — :task <text> runs the default agent, :quit exits")
    buffer: list[str] = []
    printed = 0
    while True:
        prompt = "... " if buffer else "> "
        try:
            line = input(prompt)
        except EOFError:
            print()
            return 0
        if not buffer:
            stripped = line.strip()
            if stripped == ":quit":
                return 0
            if stripped.startswith(":task"):
                task = stripped[len(":task"):].strip()
                name = session.fresh_result_name()
                line = f'val {name}: String = agent("{task}")'
        buffer.append(line)
        source = "\n".join(buffer)
        if _unbalanced(source):
            continue
        buffer = []
        if not source.strip():
            continue
        program, diags = parse_program(source, "<repl>")
        if program is None:
            for diag in diags:
                print(render_with_source(diag, source), file=sys.stderr)
            continue
        session.trace("turn", {"text": source})
        for stmt in program.stmts:
            text = source[stmt.span.start:stmt.span.end]
            try:
                outcome = run_statement(session, stmt, text, stmt.span.start)
            except ScriptError as err:
                print(f"error ({err.kind}): {err.message}", file=sys.stderr)
                break
            printed = _flush_console(session, printed)
            if not outcome.ok:
                _print_diags(outcome, text)
                for diag in outcome.diagnostics:
                    session.trace("diagnostic", {"message": diag.render()})
                break
            if outcome.echo:
                print(outcome.echo)
                session.trace("result", {"echo": outcome.echo})


def _unbalanced(source: str) -> bool:
    from .syntax.lexer import tokenize
    from .syntax.tokens import TokenKind

    tokens, _ = tokenize(source)
    depth = 0
    for tok in tokens:
        if tok.kind in (TokenKind.LPAREN, TokenKind.LBRACKET, TokenKind.LBRACE):
            depth += 1
        elif tok.kind in (TokenKind.RPAREN, TokenKind.RBRACKET, TokenKind.RBRACE):
            depth -= 1
    return depth > 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run_script(args.path, args)
    if args.command == "repl":
        return repl_loop(args)
    if args.command == "corpus":
        from .harness.corpus import run_corpus_cli
        return run_corpus_cli(args.dir, args.report)
    if args.command == "inject":
        from .harness.injection import run_injection_cli
        return run_injection_cli(args.dir, args.report, args.seeds)
    build_parser().print_help()
    return 0


if __name__ == "__main__":
    sys.exit(main())
