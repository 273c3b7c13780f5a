"""Chat-completion gateway: live HTTP backend, deterministic replay
backend, retry policy, concurrency caps, and token/cost accounting.

The live backend speaks the generic chat-completions JSON shape
(endpoint, headers, and model are configurable) and reads its API key
from an environment variable whose NAME is configured; the key itself
is never logged or echoed. The replay backend serves canned responses
from a script file and is the only backend used in graded tests.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import random
import threading
import time
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence, Union

import httpx

from .errors import (
    AuthError,
    BackendError,
    EmptyResponse,
    RateLimitExhausted,
    ReplayMismatch,
    UnknownModel,
)

Tokenizer = Callable[[str], int]


def heuristic_tokenizer(text: str) -> int:
    """Documented default: ceil(utf-8 bytes / 4)."""
    return math.ceil(len(text.encode("utf-8")) / 4)


def estimate_tokens(text: str, tokenizer: Optional[Tokenizer] = None) -> int:
    return (tokenizer or heuristic_tokenizer)(text)


def content_fingerprint(content: str) -> str:
    """First 16 hex chars of SHA-256 over the whitespace-collapsed prompt.

    Collapsing makes the fingerprint robust to incidental reflow while
    still catching real prompt drift.
    """
    normalized = " ".join(content.split())
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ChatRequest:
    system_role: str
    content: str
    model_id: str
    stage_tag: str  # e.g. "annot.hypothesis.iter2"
    temperature: Optional[float] = None

    def __post_init__(self):
        if not self.content:
            raise ValueError("request content must be nonempty")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    input_tokens: int
    output_tokens: int
    latency: float  # seconds
    provider: str


# ------------------------------------------------------------------- ledger


@dataclass
class CostLedger:
    """Per-model token accumulators plus the rate card.

    Rates are USD per 1M tokens, held as Decimal so the 4-dp
    half-even rounding is exact.
    """

    rate_card: dict[str, tuple[Decimal, Decimal]] = field(default_factory=dict)
    totals: dict[str, list[int]] = field(default_factory=dict)  # model -> [in, out]
    _lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    @staticmethod
    def with_rates(card: dict[str, tuple[Union[str, Decimal], Union[str, Decimal]]]):
        return CostLedger(
            rate_card={
                model: (Decimal(str(rin)), Decimal(str(rout)))
                for model, (rin, rout) in card.items()
            }
        )

    def record(self, model_id: str, input_tokens: int, output_tokens: int) -> None:
        if input_tokens < 0 or output_tokens < 0:
            raise ValueError("token counts must be nonnegative")
        with self._lock:
            bucket = self.totals.setdefault(model_id, [0, 0])
            bucket[0] += input_tokens
            bucket[1] += output_tokens

    def tokens(self, model_id: str) -> tuple[int, int]:
        pair = self.totals.get(model_id, [0, 0])
        return pair[0], pair[1]

    def cost(self, model_id: str) -> Decimal:
        """input*in_rate/1e6 + output*out_rate/1e6, half-even to 4 dp."""
        if model_id not in self.rate_card:
            raise UnknownModel(model_id)
        rate_in, rate_out = self.rate_card[model_id]
        tokens_in, tokens_out = self.tokens(model_id)
        million = Decimal(1_000_000)
        raw = (tokens_in * rate_in + tokens_out * rate_out) / million
        return raw.quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN)

    def snapshot(self) -> dict[str, dict[str, int]]:
        with self._lock:
            return {
                model: {"input_tokens": pair[0], "output_tokens": pair[1]}
                for model, pair in sorted(self.totals.items())
            }

    def export_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["model_id", "input_tokens", "output_tokens", "usd"])
            for model in sorted(self.totals):
                tokens_in, tokens_out = self.tokens(model)
                usd = str(self.cost(model)) if model in self.rate_card else ""
                writer.writerow([model, tokens_in, tokens_out, usd])


# ----------------------------------------------------------------- backends


class Backend(Protocol):
    provider: str

    def send(self, req: ChatRequest) -> ChatResponse: ...


@dataclass(frozen=True)
class ReplayEntry:
    stage_tag: str
    response: str
    fingerprint: Optional[str] = None


class ReplayScript:
    """Ordered canned responses, consumed strictly front to back."""

    def __init__(self, entries: Sequence[ReplayEntry]):
        self.entries = list(entries)
        self.cursor = 0

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ReplayScript":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, list):
            raise ReplayMismatch("replay script must be a JSON array")
        entries = []
        for i, item in enumerate(raw):
            if not isinstance(item, dict) or "stage_tag" not in item or "response" not in item:
                raise ReplayMismatch(f"script entry {i} needs stage_tag and response")
            entries.append(
                ReplayEntry(
                    stage_tag=item["stage_tag"],
                    response=item["response"],
                    fingerprint=item.get("fingerprint"),
                )
            )
        return cls(entries)

    def remaining(self) -> int:
        return len(self.entries) - self.cursor

    def next_for(self, req: ChatRequest) -> ReplayEntry:
        if self.cursor >= len(self.entries):
            raise ReplayMismatch(
                f"script exhausted after {len(self.entries)} entries; "
                f"got extra request for stage {req.stage_tag!r}"
            )
        entry = self.entries[self.cursor]
        if entry.stage_tag != req.stage_tag:
            raise ReplayMismatch(
                f"entry {self.cursor} expects stage {entry.stage_tag!r}, "
                f"pipeline sent {req.stage_tag!r}"
            )
        if entry.fingerprint is not None:
            actual = content_fingerprint(req.content)
            if actual != entry.fingerprint:
                raise ReplayMismatch(
                    f"entry {self.cursor} ({entry.stage_tag}): prompt fingerprint "
                    f"{actual} != scripted {entry.fingerprint}"
                )
        self.cursor += 1
        return entry


class ReplayBackend:
    """Deterministic mock: serves a ReplayScript in order.

    Latency is always 0.0 and token counts come from the heuristic
    tokenizer, so identical runs produce byte-identical traces.
    Single-stream by design: one pipeline at a time.
    """

    provider = "replay"

    def __init__(self, script: ReplayScript):
        self.script = script

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ReplayBackend":
        return cls(ReplayScript.load(path))

    def send(self, req: ChatRequest) -> ChatResponse:
        entry = self.script.next_for(req)
        return ChatResponse(
            text=entry.response,
            input_tokens=estimate_tokens(req.system_role) + estimate_tokens(req.content),
            output_tokens=estimate_tokens(entry.response),
            latency=0.0,
            provider=self.provider,
        )


class _Retryable(BackendError):
    """Internal: transient transport/rate failure, safe to retry."""


class HttpBackend:
    """Generic chat-completions client.

    api_key_env holds the NAME of the environment variable with the
    credential (documented, never logged). endpoint is the full
    completions URL.
    """

    def __init__(
        self,
        endpoint: str,
        api_key_env: str = "SKETCHBENCH_API_KEY",
        provider: str = "http",
        timeout: float = 120.0,  # per-request; engine decision, see docs
        extra_headers: Optional[dict[str, str]] = None,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.provider = provider
        self.extra_headers = dict(extra_headers or {})
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def close(self):
        self._client.close()

    def send(self, req: ChatRequest) -> ChatResponse:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise AuthError(f"credential env var {self.api_key_env} is not set")
        messages = []
        if req.system_role:
            messages.append({"role": "system", "content": req.system_role})
        messages.append({"role": "user", "content": req.content})
        payload: dict = {"model": req.model_id, "messages": messages}
        if req.temperature is not None:
            payload["temperature"] = req.temperature
        headers = {"Authorization": f"Bearer {key}", **self.extra_headers}

        started = time.monotonic()
        try:
            response = self._client.post(self.endpoint, json=payload, headers=headers)
        except httpx.TransportError as exc:
            raise _Retryable(f"transport failure: {type(exc).__name__}") from None
        latency = time.monotonic() - started

        if response.status_code in (401, 403):
            raise AuthError(f"provider rejected credentials ({response.status_code})")
        if response.status_code == 429 or response.status_code >= 500:
            raise _Retryable(f"provider status {response.status_code}")
        if response.status_code != 200:
            raise BackendError(f"provider status {response.status_code}")

        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise BackendError("malformed provider response body")
        if not text:
            raise EmptyResponse(f"stage {req.stage_tag}: provider returned empty text")
        usage = body.get("usage") or {}
        input_tokens = usage.get("prompt_tokens")
        output_tokens = usage.get("completion_tokens")
        if input_tokens is None:
            input_tokens = estimate_tokens(req.system_role) + estimate_tokens(req.content)
        if output_tokens is None:
            output_tokens = estimate_tokens(text)
        return ChatResponse(
            text=text,
            input_tokens=int(input_tokens),
            output_tokens=int(output_tokens),
            latency=latency,
            provider=self.provider,
        )


# ------------------------------------------------------------------ gateway


@dataclass(frozen=True)
class RetryPolicy:
    """Exponential backoff with jitter; AuthError is never retried."""

    attempts: int = 3
    backoffs: tuple[float, ...] = (1.0, 4.0, 16.0)
    jitter: float = 0.2

    def delay(self, attempt: int, rng: random.Random) -> float:
        base = self.backoffs[min(attempt, len(self.backoffs) - 1)]
        return base * (1.0 + rng.uniform(-self.jitter, self.jitter))


class TokenBucket:
    """Simple blocking rate limiter: capacity tokens, steady refill."""

    def __init__(self, capacity: int = 60, refill_per_second: float = 1.0):
        self.capacity = capacity
        self.refill = refill_per_second
        self._tokens = float(capacity)
        self._stamp = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(
                    self.capacity, self._tokens + (now - self._stamp) * self.refill
                )
                self._stamp = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                needed = (1.0 - self._tokens) / self.refill
            time.sleep(needed)


class Gateway:
    """Uniform completion entry point over any backend.

    Applies the in-flight cap and token bucket (live backends), runs
    the retry policy, and records every response in the ledger.
    """

    def __init__(
        self,
        backend,
        ledger: Optional[CostLedger] = None,
        retry: Optional[RetryPolicy] = None,
        max_in_flight: int = 4,
        bucket: Optional[TokenBucket] = None,
        sleeper: Callable[[float], None] = time.sleep,
        rng: Optional[random.Random] = None,
    ):
        self.backend = backend
        self.ledger = ledger if ledger is not None else CostLedger()
        self.retry = retry or RetryPolicy()
        self._slots = threading.Semaphore(max_in_flight)
        self.bucket = bucket
        self._sleep = sleeper
        self._rng = rng or random.Random()
        self._is_replay = isinstance(backend, ReplayBackend)

    def complete(self, req: ChatRequest) -> ChatResponse:
        with self._slots:
            if self.bucket is not None and not self._is_replay:
                self.bucket.acquire()
            response = self._with_retries(req)
        if not response.text:
            raise EmptyResponse(f"stage {req.stage_tag}: empty response text")
        self.ledger.record(req.model_id, response.input_tokens, response.output_tokens)
        return response

    def _with_retries(self, req: ChatRequest) -> ChatResponse:
        last: Optional[Exception] = None
        for attempt in range(self.retry.attempts):
            try:
                return self.backend.send(req)
            except AuthError:
                raise
            except _Retryable as exc:
                last = exc
                if attempt + 1 < self.retry.attempts:
                    self._sleep(self.retry.delay(attempt, self._rng))
        raise RateLimitExhausted(
            f"stage {req.stage_tag}: {self.retry.attempts} attempts failed ({last})"
        )


def complete(gateway: Gateway, req: ChatRequest) -> ChatResponse:
    """Functional alias for Gateway.complete."""
    return gateway.complete(req)
