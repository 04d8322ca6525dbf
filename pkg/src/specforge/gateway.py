"""Single access point for chat-completion and embedding requests.

Speaks the OpenAI-compatible wire protocol to any configured endpoint (local
open-source servers and hosted services both expose it), and ships a
deterministic scripted backend so whole pipeline runs are reproducible bit
for bit in tests.
"""

from __future__ import annotations

import hashlib
import math
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol, Sequence

import httpx

from .errors import (
    BackendUnavailable,
    DimensionMismatch,
    InvalidInput,
    MockScriptError,
    ResponseEmpty,
)
from .logs import CallLog, Clock, utc_now_iso

DEFAULT_TEMPERATURE = 0.0  # reproducibility over variety for all pipeline calls


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    user_prompt: str
    max_output_tokens: int
    temperature: float = DEFAULT_TEMPERATURE
    tag: str = "chat"

    def __post_init__(self) -> None:
        if not self.system_prompt.strip() or not self.user_prompt.strip():
            raise InvalidInput("chat prompts must be non-empty")
        if not self.tag:
            raise InvalidInput("chat request tag must be non-empty")
        if self.max_output_tokens < 1:
            raise InvalidInput("max_output_tokens must be positive")
        if self.temperature < 0:
            raise InvalidInput("temperature must be non-negative")


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    dimension: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.dimension < 1:
            raise InvalidInput("embedding dimension must be positive")
        if len(self.values) != self.dimension:
            raise DimensionMismatch(
                f"vector has {len(self.values)} entries, dimension says {self.dimension}"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise InvalidInput("embedding contains non-finite entries")


class _TransientTransportError(Exception):
    """Internal marker: the request may succeed if retried."""


class Backend(Protocol):
    embedding_dimension: int

    def complete(self, req: ChatRequest) -> str: ...

    def embed_text(self, text: str) -> Sequence[float]: ...


class OpenAIBackend:
    """HTTP client for OpenAI-compatible /chat/completions and /embeddings."""

    def __init__(
        self,
        base_url: str,
        model: str,
        embedding_model: str = "",
        embedding_dimension: int = 0,
        api_key: str = "",
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.embedding_model = embedding_model
        self.embedding_dimension = embedding_dimension
        self._headers = {"Content-Type": "application/json"}
        if api_key:
            self._headers["Authorization"] = f"Bearer {api_key}"
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(self.base_url + path, json=payload, headers=self._headers)
        except httpx.TransportError as exc:
            raise _TransientTransportError(str(exc)) from exc
        if response.status_code >= 500:
            raise _TransientTransportError(f"server error {response.status_code}")
        if response.status_code != 200:
            raise BackendUnavailable(
                f"{path} returned {response.status_code}: {response.text[:200]}"
            )
        return response.json()

    def complete(self, req: ChatRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_prompt},
            ],
            "max_tokens": req.max_output_tokens,
            "temperature": req.temperature,
        }
        data = self._post("/chat/completions", payload)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed chat response: {data!r:.200}") from exc
        return content or ""

    def embed_text(self, text: str) -> Sequence[float]:
        data = self._post("/embeddings", {"model": self.embedding_model, "input": text})
        try:
            return data["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed embedding response: {data!r:.200}") from exc


def hash_unit_vector(text: str, dimension: int) -> list[float]:
    """Deterministic unit vector seeded by a stable hash of the text."""
    seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
    rng = random.Random(seed)
    values = [rng.uniform(-1.0, 1.0) for _ in range(dimension)]
    norm = math.sqrt(sum(v * v for v in values))
    if norm == 0.0:
        values[0] = 1.0
        norm = 1.0
    return [v / norm for v in values]


class ScriptedBackend:
    """Deterministic mock keyed by request tag, not prompt text.

    Each tag maps to a response or an ordered list of responses consumed one
    per call. A response may be an Exception instance (raised as-is) to script
    failure paths. With ``repeat_last`` the final response repeats forever;
    otherwise exhaustion raises :class:`MockScriptError` so call-count
    expectations fail loudly.
    """

    def __init__(
        self,
        responses: Mapping[str, object] | None = None,
        embedding_dimension: int = 8,
        embed_rule: Callable[[str, int], Sequence[float]] = hash_unit_vector,
        repeat_last: bool = False,
    ) -> None:
        self._scripts: dict[str, list[object]] = {}
        for tag, value in (responses or {}).items():
            if isinstance(value, (list, tuple)):
                self._scripts[tag] = list(value)
            else:
                self._scripts[tag] = [value]
        self._cursor: dict[str, int] = {}
        self.embedding_dimension = embedding_dimension
        self._embed_rule = embed_rule
        self._repeat_last = repeat_last
        self._lock = threading.Lock()

    def complete(self, req: ChatRequest) -> str:
        with self._lock:
            if req.tag not in self._scripts:
                raise MockScriptError(f"no scripted response for tag {req.tag!r}")
            script = self._scripts[req.tag]
            i = self._cursor.get(req.tag, 0)
            if i >= len(script):
                if not self._repeat_last:
                    raise MockScriptError(
                        f"script for tag {req.tag!r} exhausted after {len(script)} calls"
                    )
                i = len(script) - 1
            self._cursor[req.tag] = i + 1
            item = script[i]
        if isinstance(item, Exception):
            raise item
        if callable(item):
            return str(item(req))
        return str(item)

    def embed_text(self, text: str) -> Sequence[float]:
        return self._embed_rule(text, self.embedding_dimension)


class TransportGlitch(_TransientTransportError):
    """Scriptable transient failure for exercising the retry path in tests."""


class Gateway:
    """Backend wrapper owning the call log, retry policy, and input guards.

    Safe for concurrent in-flight requests; log appends are atomic. One
    instance per document run keeps call ordering meaningful.
    """

    def __init__(
        self,
        backend: Backend,
        call_log: CallLog | None = None,
        max_retries: int = 3,
        backoff_seconds: float = 0.25,
        max_concurrency: int | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Clock = utc_now_iso,
    ) -> None:
        self.backend = backend
        self.call_log = call_log if call_log is not None else CallLog(clock=clock)
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self._gate = threading.BoundedSemaphore(max_concurrency) if max_concurrency else None
        self._sleep = sleep

    @property
    def embedding_dimension(self) -> int:
        return self.backend.embedding_dimension

    def _call(self, operation: Callable[[], object]) -> object:
        if self._gate is None:
            return operation()
        with self._gate:
            return operation()

    def _with_retries(self, operation: Callable[[], object], what: str) -> object:
        attempt = 0
        while True:
            try:
                return self._call(operation)
            except _TransientTransportError as exc:
                if attempt >= self.max_retries:
                    raise BackendUnavailable(
                        f"{what} failed after {self.max_retries} retries: {exc}"
                    ) from exc
                self._sleep(self.backoff_seconds * (2**attempt))
                attempt += 1

    def chat(self, req: ChatRequest) -> str:
        """Send one chat request, log the completion, and return the text.

        Raises BackendUnavailable when the endpoint stays unreachable and
        ResponseEmpty on a blank completion; both are left to the caller's
        fallback policy.
        """
        text = self._with_retries(lambda: self.backend.complete(req), f"chat[{req.tag}]")
        assert isinstance(text, str)
        self.call_log.record(req.tag, req.system_prompt, req.user_prompt, text)
        if not text.strip():
            raise ResponseEmpty(f"blank completion for tag {req.tag!r}")
        return text

    def embed(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise InvalidInput("cannot embed empty text")
        values = self._with_retries(lambda: self.backend.embed_text(text), "embed")
        assert isinstance(values, Sequence)
        advertised = self.backend.embedding_dimension
        if advertised and len(values) != advertised:
            raise DimensionMismatch(
                f"backend advertised dimension {advertised} but returned {len(values)}"
            )
        vector = EmbeddingVector(values=tuple(values), dimension=len(values))
        self.call_log.record("embed", "", text, f"<{vector.dimension}-dim vector>")
        return vector
