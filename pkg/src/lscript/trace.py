"""Attempt-level trace sinks.

One line-delimited JSON object per event so retry and rejection statistics
can be computed offline. Classified content is scrubbed from payloads
before anything is written.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field


@dataclass
class TraceEvent:
    ts: float
    session: str
    kind: str  # turn | attempt | diagnostic | result
    payload: dict

    def to_json(self) -> str:
        return json.dumps({"ts": self.ts, "session": self.session,
                           "kind": self.kind, "payload": self.payload},
                          sort_keys=True)


def _scrub(value, secrets: set[str]):
    if isinstance(value, str):
        for secret in secrets:
            if secret and secret in value:
                value = value.replace(secret, "Classified(<redacted>)")
        return value
    if isinstance(value, dict):
        return {k: _scrub(v, secrets) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_scrub(v, secrets) for v in value]
    return value


class MemorySink:
    """Collects events in memory; the default sink for tests and harnesses."""

    def __init__(self) -> None:
        self.events: list[TraceEvent] = []
        self._lock = threading.Lock()

    def emit(self, session: str, kind: str, payload: dict,
             redact: set[str] | None = None) -> None:
        event = TraceEvent(time.time(), session, kind,
                           _scrub(payload, redact or set()))
        with self._lock:
            self.events.append(event)

    def of_kind(self, kind: str) -> list[TraceEvent]:
        with self._lock:
            return [e for e in self.events if e.kind == kind]


class JsonlSink(MemorySink):
    """Appends each event to a JSONL file as it is emitted."""

    def __init__(self, path: str) -> None:
        super().__init__()
        self.path = path
        self._fh = open(path, "a", encoding="utf-8")

    def emit(self, session: str, kind: str, payload: dict,
             redact: set[str] | None = None) -> None:
        event = TraceEvent(time.time(), session, kind,
                           _scrub(payload, redact or set()))
        with self._lock:
            self.events.append(event)
            self._fh.write(event.to_json() + "\n")
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class BufferSink(MemorySink):
    """Child-session buffer: parMap collects events per element and flushes
    them to the shared sink in input order after the join, so scripted runs
    replay deterministically despite concurrent execution."""

    def flush_to(self, target) -> None:
        with self._lock:
            events = list(self.events)
            self.events.clear()
        for event in events:
            target.emit(event.session, event.kind, event.payload)
