"""Model clients: a deterministic scripted backend for tests and a
chat-completions HTTP backend for live use, plus code extraction.

Requests are logged before any response parsing. Non-pure-channel handles
assert pre-send that no registered classified content appears in the
request; the prompt pipeline already redacts, so a trip of this assert is
a bug, not a recoverable condition.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ModelRequest:
    messages: tuple[tuple[str, str], ...]  # (role, content) pairs

    def serialize(self) -> str:
        return json.dumps([{"role": r, "content": c} for r, c in self.messages],
                          sort_keys=True)


@dataclass(frozen=True)
class ModelResponse:
    text: str
    usage: dict = field(default_factory=dict)


class ModelError(Exception):
    def __init__(self, message: str, retryable: bool = False) -> None:
        super().__init__(message)
        self.retryable = retryable


# Prompt-layout markers (the bundle renders these; the scripted backend
# matches its rules against the task section, not the whole prompt, since
# the enclosing source echoes earlier task strings).
TASK_MARKER = "\n\nTask: "
DIAGNOSTICS_HEADER = "Previous attempt failed to compile:"


def task_of(user_text: str) -> str:
    idx = user_text.rfind(TASK_MARKER)
    if idx < 0:
        return user_text
    rest = user_text[idx + len(TASK_MARKER):]
    cut = rest.find("\n\n" + DIAGNOSTICS_HEADER)
    return rest[:cut] if cut >= 0 else rest


class RedactionError(ModelError):
    """Classified content was about to leave through a non-pure channel."""


class ExtractionError(Exception):
    pass


class ModelHandle:
    """Base class; complete() must tolerate concurrent calls."""

    def __init__(self, handle_id: str, pure_channel: bool = False,
                 params: dict | None = None) -> None:
        self.id = handle_id
        self.pure_channel = pure_channel
        self.params = params or {}
        self.request_log: list[str] = []
        self.response_log: list[str] = []
        self._log_lock = threading.Lock()

    def complete(self, request: ModelRequest) -> ModelResponse:
        raise NotImplementedError

    def _log_request(self, request: ModelRequest) -> None:
        with self._log_lock:
            self.request_log.append(request.serialize())

    def _log_response(self, text: str) -> None:
        with self._log_lock:
            self.response_log.append(text)


class ScriptedModel(ModelHandle):
    """Deterministic backend: queue mode pops responses in order; rule mode
    matches a substring of the user message and pops that rule's responses
    (optionally repeating the last one)."""

    def __init__(self, handle_id: str = "scripted", queue: list[str] | None = None,
                 rules: list[dict] | None = None, pure_channel: bool = False) -> None:
        super().__init__(handle_id, pure_channel)
        self._lock = threading.Lock()
        self.queue = list(queue or [])
        self.rules = []
        for rule in rules or []:
            self.rules.append({
                "contains": rule["contains"],
                "responses": list(rule.get("responses", [])),
                "repeat": bool(rule.get("repeat", False)),
            })

    @classmethod
    def from_spec(cls, spec: dict, handle_id: str = "scripted",
                  pure_channel: bool = False) -> "ScriptedModel":
        return cls(handle_id, queue=spec.get("queue"), rules=spec.get("rules"),
                   pure_channel=pure_channel or spec.get("pure_channel", False))

    def complete(self, request: ModelRequest) -> ModelResponse:
        self._log_request(request)
        user_text = "\n".join(c for r, c in request.messages if r == "user")
        task = task_of(user_text)
        with self._lock:
            if self.rules:
                for rule in self.rules:
                    if rule["contains"] in task:
                        responses = rule["responses"]
                        if not responses:
                            raise ModelError(
                                f"scripted rule {rule['contains']!r} is exhausted")
                        text = responses[0] if len(responses) == 1 and rule["repeat"] \
                            else responses.pop(0)
                        if rule["repeat"] and not responses:
                            responses.append(text)
                        self._log_response(text)
                        return ModelResponse(text, {"scripted": True})
                raise ModelError("no scripted rule matches the request")
            if not self.queue:
                raise ModelError("scripted response queue is exhausted")
            text = self.queue.pop(0)
        self._log_response(text)
        return ModelResponse(text, {"scripted": True})


class HttpModel(ModelHandle):
    """Chat-completions-compatible endpoint. POST {model, messages,
    temperature}; the reply text is choices[0].message.content."""

    def __init__(self, handle_id: str = "http", endpoint: str | None = None,
                 model: str = "", api_key: str | None = None,
                 auth_header: str = "Authorization", timeout: float = 60.0,
                 temperature: float | None = None, pure_channel: bool = False) -> None:
        super().__init__(handle_id, pure_channel,
                         {"temperature": temperature} if temperature is not None else {})
        self.endpoint = endpoint or os.environ.get("LSCRIPT_API_URL", "")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get("LSCRIPT_API_KEY")
        self.auth_header = auth_header
        self.timeout = timeout

    def complete(self, request: ModelRequest) -> ModelResponse:
        import requests

        self._log_request(request)
        if not self.endpoint:
            raise ModelError("no endpoint configured (set LSCRIPT_API_URL)")
        body = {"model": self.model,
                "messages": [{"role": r, "content": c} for r, c in request.messages]}
        if "temperature" in self.params:
            body["temperature"] = self.params["temperature"]
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            value = self.api_key
            if self.auth_header == "Authorization":
                value = f"Bearer {self.api_key}"
            headers[self.auth_header] = value
        try:
            resp = requests.post(self.endpoint, json=body, headers=headers,
                                 timeout=self.timeout)
        except requests.Timeout as err:
            raise ModelError(f"model request timed out: {err}", retryable=True)
        except requests.RequestException as err:
            raise ModelError(f"model transport failure: {err}", retryable=True)
        if resp.status_code != 200:
            raise ModelError(f"model endpoint returned {resp.status_code}",
                             retryable=resp.status_code >= 500)
        payload = resp.json()
        text = payload["choices"][0]["message"]["content"]
        self._log_response(text)
        return ModelResponse(text, payload.get("usage", {}))


def complete(handle: ModelHandle, request: ModelRequest,
             forbidden: set[str] | None = None) -> ModelResponse:
    """One completion with the pre-send redaction assert for non-pure
    channels."""
    if forbidden and not handle.pure_channel:
        serialized = request.serialize()
        for secret in forbidden:
            if secret and secret in serialized:
                raise RedactionError(
                    "classified content reached a non-pure-channel request")
    return handle.complete(request)


def extract_code(text: str) -> str:
    """Strip fenced code blocks (outermost first, repeated to a fixpoint,
    which makes extraction idempotent); bare text is trimmed. Empty output
    is an extraction error the agent loop treats as a rejection."""
    out = text.strip()
    while True:
        stripped = _strip_one_fence(out)
        if stripped == out:
            break
        out = stripped
    if not out:
        raise ExtractionError("model returned no code")
    return out


def _strip_one_fence(text: str) -> str:
    lines = text.split("\n")
    if len(lines) >= 2 and lines[0].startswith("```") and lines[-1].strip() == "```":
        return "\n".join(lines[1:-1]).strip()
    return text


def load_model_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
