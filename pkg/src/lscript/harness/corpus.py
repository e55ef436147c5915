"""Verifier corpus runner.

One case per file, three fenced sections:

    ```host
    var balance: Int = 100
    ```
    ```snippet
    balance -= 50
    s"remaining: $balance"
    ```
    ```expect
    type: Int
    reject: Found:    String
    ```

The expect section starts with `type:` (the hole's expected type), then
optional `grants:` and `file:` lines, then either `accept: <rendered
value>` or `reject: <required diagnostic substring>` (the substring runs
to the end of the section and may span lines). Accept cases must evaluate
to exactly the rendered value; reject cases must be rejected before
execution and leave the session observation unchanged.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..interp.hole import eval_hole
from ..interp.pipeline import run_source
from ..interp.session import Session, SessionConfig
from ..interp.values import render_value
from ..stdlib import install_builtins

_FENCE = re.compile(r"```(host|snippet|expect)\n(.*?)```", re.DOTALL)


@dataclass
class CorpusCase:
    case_id: str
    host: str
    snippet: str
    expected_type: str
    expectation: str          # "accept" | "reject"
    payload: str              # rendered value or required substring
    grants: tuple[str, ...] = ()
    files: dict[str, str] = field(default_factory=dict)


@dataclass
class CaseResult:
    case_id: str
    passed: bool
    detail: str = ""


class MalformedCase(Exception):
    pass


def parse_case(path: Path) -> CorpusCase:
    text = path.read_text(encoding="utf-8")
    sections = {name: body for name, body in _FENCE.findall(text)}
    for required in ("host", "snippet", "expect"):
        if required not in sections:
            raise MalformedCase(f"missing ```{required} section")
    expected_type = None
    expectation = None
    payload_lines: list[str] = []
    grants: list[str] = []
    files: dict[str, str] = {}
    lines = sections["expect"].rstrip("\n").split("\n")
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("type: "):
            expected_type = line[len("type: "):]
        elif line.startswith("grants: "):
            grants = line[len("grants: "):].split()
        elif line.startswith("file: "):
            spec = line[len("file: "):]
            fpath, _, content = spec.partition("=")
            files[fpath] = content
        elif line.startswith("accept: "):
            expectation = "accept"
            payload_lines = [line[len("accept: "):]] + lines[i + 1:]
            break
        elif line.startswith("reject: "):
            expectation = "reject"
            payload_lines = [line[len("reject: "):]] + lines[i + 1:]
            break
        elif line.strip():
            raise MalformedCase(f"unknown expect line: {line!r}")
        i += 1
    if expected_type is None or expectation is None:
        raise MalformedCase("expect section needs `type:` and accept/reject")
    return CorpusCase(path.stem, sections["host"].strip("\n"),
                      sections["snippet"].strip("\n"), expected_type,
                      expectation, "\n".join(payload_lines).rstrip("\n"),
                      tuple(grants), files)


def run_case(case: CorpusCase) -> CaseResult:
    session = Session(SessionConfig())
    install_builtins(session, case.grants)
    session.effects.files.update(case.files)
    outcomes, diags = run_source(session, case.host, f"<{case.case_id}:host>")
    if diags or any(not o.ok for o in outcomes):
        bad = diags or [d for o in outcomes for d in o.diagnostics]
        raise MalformedCase("host failed: " + "; ".join(d.render() for d in bad))

    before = session.observe()
    result = eval_hole(case.snippet, session, case.expected_type, None)

    if case.expectation == "accept":
        if not result.is_success:
            return CaseResult(case.case_id, False,
                              "rejected: " + result.diagnostics_text())
        rendered = render_value(result.value)
        if rendered != case.payload:
            return CaseResult(case.case_id, False,
                              f"value {rendered!r} != expected {case.payload!r}")
        return CaseResult(case.case_id, True)

    if result.is_success:
        return CaseResult(case.case_id, False,
                          f"accepted with value {render_value(result.value)!r}")
    text = result.diagnostics_text()
    if case.payload not in text:
        return CaseResult(case.case_id, False,
                          f"diagnostics lack {case.payload!r}: {text!r}")
    if session.observe() != before:
        return CaseResult(case.case_id, False, "session state changed on rejection")
    return CaseResult(case.case_id, True)


@dataclass
class CorpusReport:
    results: list[CaseResult]
    malformed: list[tuple[str, str]]
    elapsed: float

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def passed(self) -> int:
        return sum(1 for r in self.results if r.passed)

    def summary(self) -> str:
        lines = [f"corpus: {self.passed}/{self.total} passed "
                 f"in {self.elapsed:.2f}s"]
        for r in self.results:
            if not r.passed:
                lines.append(f"  FAIL {r.case_id}: {r.detail}")
        for case_id, detail in self.malformed:
            lines.append(f"  MALFORMED {case_id}: {detail}")
        return "\n".join(lines)

    def to_jsonl(self) -> str:
        rows = [json.dumps({"id": r.case_id, "passed": r.passed,
                            "detail": r.detail}, sort_keys=True)
                for r in self.results]
        rows += [json.dumps({"id": cid, "malformed": detail}, sort_keys=True)
                 for cid, detail in self.malformed]
        return "\n".join(rows)


def run_corpus(directory: str | Path) -> CorpusReport:
    """Run every *.case file under `directory` (sorted by id); each case
    gets a fresh session, so outcomes are order-independent."""
    start = time.monotonic()
    results: list[CaseResult] = []
    malformed: list[tuple[str, str]] = []
    for path in sorted(Path(directory).rglob("*.case")):
        try:
            case = parse_case(path)
            results.append(run_case(case))
        except MalformedCase as err:
            malformed.append((path.stem, str(err)))
    return CorpusReport(results, malformed, time.monotonic() - start)


def run_corpus_cli(directory: str, report_path: str | None) -> int:
    report = run_corpus(directory)
    print(report.summary())
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_jsonl() + "\n")
    return 0 if report.passed == report.total and not report.malformed else 1
