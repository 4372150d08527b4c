"""Streaming chat-completion abstraction with three interchangeable backends.

* RemoteChatBackend — speaks the hosted chat-completion HTTP protocol with
  server-sent-event streaming.
* ScriptedChatBackend — replays fixture chunk lists keyed by request
  fingerprint; used by tests and offline pipelines.
* RuleBasedBackend — deterministic stand-in that reads the machine-readable
  ground-truth tags the synthetic generator embeds in clinical notes, with an
  optional error-injection plan.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Mapping, Optional, Protocol, Sequence, Union

import httpx

from ..domain import ClassificationCategory, LabelError, ReactionType


class GatewayError(RuntimeError):
    """Base error for chat-completion failures."""


class BackendUnavailableError(GatewayError):
    """Raised when the backend stays unreachable after retries."""


class StreamProtocolError(GatewayError):
    """Raised on malformed upstream chunks; carries the raw payload."""

    def __init__(self, message: str, raw_payload: str = ""):
        super().__init__(message)
        self.raw_payload = raw_payload


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    user_prompt: str
    model_id: str = "default"
    temperature: float = 0.0
    max_output_tokens: int = 512

    def __post_init__(self) -> None:
        if not self.system_prompt.strip() or not self.user_prompt.strip():
            raise ValueError("system and user prompts must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ChatChunk:
    delta_text: str
    is_final: bool = False


class ChatBackend(Protocol):
    kind: str

    def stream(self, request: ChatRequest) -> Iterator[ChatChunk]: ...


def complete_streaming(
    request: ChatRequest, backend: ChatBackend
) -> Iterator[ChatChunk]:
    """Stream chunks from the backend, enforcing the single-final invariant."""
    finished = False
    for chunk in backend.stream(request):
        if finished:
            raise StreamProtocolError("chunk received after final", chunk.delta_text)
        if chunk.is_final:
            finished = True
        yield chunk
    if not finished:
        raise StreamProtocolError("stream ended without a final chunk")


def complete_text(request: ChatRequest, backend: ChatBackend) -> str:
    """Blocking helper: concatenate the full streamed response."""
    return "".join(chunk.delta_text for chunk in complete_streaming(request, backend))


def first_json_object(text: str) -> Optional[dict]:
    """First balanced brace-delimited JSON object in text, tolerating prose
    and code fences around it. None when no parseable object exists."""
    for start, char in enumerate(text):
        if char != "{":
            continue
        depth = 0
        in_string = False
        escaped = False
        for index in range(start, len(text)):
            current = text[index]
            if in_string:
                if escaped:
                    escaped = False
                elif current == "\\":
                    escaped = True
                elif current == '"':
                    in_string = False
            elif current == '"':
                in_string = True
            elif current == "{":
                depth += 1
            elif current == "}":
                depth -= 1
                if depth == 0:
                    try:
                        parsed = json.loads(text[start : index + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(parsed, dict):
                        return parsed
                    break
        # unbalanced or unparseable from this '{'; try the next one
    return None


def _chunked(response: str, size: int) -> Iterator[ChatChunk]:
    """Split a complete response into content chunks, final flag on the last."""
    if not response:
        yield ChatChunk("", is_final=True)
        return
    pieces = [response[i : i + size] for i in range(0, len(response), size)]
    for piece in pieces[:-1]:
        yield ChatChunk(piece)
    yield ChatChunk(pieces[-1], is_final=True)


class RemoteChatBackend:
    """Client for a hosted chat-completion service with SSE streaming.

    Connection failures are retried with exponential backoff as long as no
    chunk has been delivered; afterwards the stream fails terminally.
    """

    kind = "remote"

    def __init__(
        self,
        base_url: str,
        api_key: Optional[str] = None,
        model: str = "default",
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        backoff_factor: float = 2.0,
        timeout: float = 60.0,
        client: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep

    def stream(self, request: ChatRequest) -> Iterator[ChatChunk]:
        payload = {
            "model": request.model_id if request.model_id != "default" else self.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "stream": True,
        }
        headers = {"Accept": "text/event-stream"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}/v1/chat/completions"

        delay = self.backoff_base
        for attempt in range(1, self.max_attempts + 1):
            emitted = False
            try:
                with self._client.stream(
                    "POST", url, json=payload, headers=headers
                ) as response:
                    if response.status_code >= 500:
                        raise httpx.TransportError(
                            f"upstream returned {response.status_code}"
                        )
                    if response.status_code >= 400:
                        raise BackendUnavailableError(
                            f"chat service rejected the request: "
                            f"HTTP {response.status_code}"
                        )
                    pending: Optional[str] = None
                    for line in response.iter_lines():
                        if not line.startswith("data:"):
                            continue
                        data = line[len("data:") :].strip()
                        if data == "[DONE]":
                            yield ChatChunk(pending or "", is_final=True)
                            return
                        delta = self._parse_delta(data)
                        if delta:
                            if pending is not None:
                                emitted = True
                                yield ChatChunk(pending)
                            pending = delta
                    raise StreamProtocolError("stream ended without [DONE]")
            except httpx.TransportError as exc:
                if emitted or attempt == self.max_attempts:
                    raise BackendUnavailableError(
                        f"chat service unreachable after {attempt} attempt(s): {exc}"
                    ) from exc
                self._sleep(delay)
                delay *= self.backoff_factor

    @staticmethod
    def _parse_delta(data: str) -> Optional[str]:
        try:
            obj = json.loads(data)
            return obj["choices"][0]["delta"].get("content")
        except (json.JSONDecodeError, LookupError, TypeError) as exc:
            raise StreamProtocolError(f"malformed upstream chunk: {exc}", data) from exc


class ScriptedChatBackend:
    """Replays fixture chunk lists keyed by request fingerprint.

    Fixtures map fingerprint → list of chunk strings; the key "*" acts as a
    fallback for any request.
    """

    kind = "scripted"

    def __init__(self, fixtures: Union[Mapping[str, Sequence[str]], str, Path]):
        if isinstance(fixtures, (str, Path)):
            with open(fixtures, encoding="utf-8") as handle:
                fixtures = json.load(handle)
        self._fixtures = dict(fixtures)

    @staticmethod
    def fingerprint(request: ChatRequest) -> str:
        canonical = json.dumps(
            {
                "system": request.system_prompt,
                "user": request.user_prompt,
                "model": request.model_id,
                "temperature": request.temperature,
            },
            sort_keys=True,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def stream(self, request: ChatRequest) -> Iterator[ChatChunk]:
        key = self.fingerprint(request)
        chunks = self._fixtures.get(key)
        if chunks is None:
            chunks = self._fixtures.get("*")
        if chunks is None:
            raise GatewayError(f"no scripted fixture for request fingerprint {key}")
        if not chunks:
            yield ChatChunk("", is_final=True)
            return
        for piece in chunks[:-1]:
            yield ChatChunk(piece)
        yield ChatChunk(chunks[-1], is_final=True)


@dataclass(frozen=True)
class ForcedOutcome:
    """Error-injection entry: labels to emit instead of the embedded truth."""

    classification: Optional[ClassificationCategory] = None
    reaction: Optional[ReactionType] = None


GROUND_TRUTH_TAG_RE = re.compile(
    r"\[GT\s+id=(?P<id>\S+)\s+r=(?P<r>.+?)\s+rt=(?P<rt>.+?)\s*\]"
)

PARSE_REFUSAL_SENTINEL = (
    "UNABLE TO ASSESS: no ground-truth tag present in the patient information."
)


def format_ground_truth_tag(
    case_id: str, classification: ClassificationCategory, reaction: ReactionType
) -> str:
    return f"[GT id={case_id} r={classification.display} rt={reaction.display}]"


class RuleBasedBackend:
    """Deterministic oracle backend for offline end-to-end evaluation.

    Decision prompts are answered from the ground-truth tag embedded in the
    note (optionally perturbed by the error plan); translation prompts echo
    the original text; anything else gets a refusal sentinel that downstream
    parsing rejects, so tests never silently pass.
    """

    kind = "rule"

    def __init__(
        self,
        error_plan: Optional[Mapping[str, ForcedOutcome]] = None,
        chunk_size: int = 48,
    ):
        self.error_plan = dict(error_plan or {})
        self.chunk_size = chunk_size

    def stream(self, request: ChatRequest) -> Iterator[ChatChunk]:
        yield from _chunked(self._respond(request), self.chunk_size)

    def _respond(self, request: ChatRequest) -> str:
        user = request.user_prompt
        if user.startswith("Translate in English from"):
            _, _, text = user.partition(": ")
            return text if text else user
        match = GROUND_TRUTH_TAG_RE.search(user)
        if match is None:
            return PARSE_REFUSAL_SENTINEL
        try:
            classification = ClassificationCategory.parse(match.group("r"))
            reaction = ReactionType.parse(match.group("rt"))
        except LabelError:
            return PARSE_REFUSAL_SENTINEL
        forced = self.error_plan.get(match.group("id"))
        if forced is not None:
            if forced.classification is not None:
                classification = forced.classification
            if forced.reaction is not None:
                reaction = forced.reaction
        analysis = (
            "Documented reaction history reviewed against the prescribed drug's "
            f"composition; findings consistent with {classification.display.lower()}."
        )
        return json.dumps(
            {"a": analysis, "r": classification.display, "rt": reaction.display}
        )
