"""Chat-completion gateway: request assembly, caching, bounded dispatch.

Requests are content-addressed: identical (instruction, body, mode, params)
always hash to the same cache key, so warm re-runs cost nothing and long
benchmark runs resume mid-way. Dispatch holds a semaphore so in-flight
requests never exceed the configured bound, and rate-limit signals retry
with exponential backoff. Errors are never cached.

Wire format is the common chat-completion JSON schema: a ``messages`` list
with optional system and user entries against ``{base}/chat/completions``,
configured via BINSUM_API_BASE / BINSUM_API_KEY or explicit arguments.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

from .errors import (
    AuthError,
    GatewayError,
    LeakageError,
    MalformedResponseError,
    RetryExhaustedError,
)
from .model import RepresentationKind

ENV_API_BASE = "BINSUM_API_BASE"
ENV_API_KEY = "BINSUM_API_KEY"

ZERO_SHOT = "zero_shot"
FEW_SHOT = "few_shot"
CHAIN_OF_THOUGHT = "chain_of_thought"

COT_PHRASE = "Let's think step by step"

REP_LABELS = {
    RepresentationKind.RAW_BYTES: "raw bytes",
    RepresentationKind.ASSEMBLY: "assembly",
    RepresentationKind.IR: "IR",
    RepresentationKind.DECOMPILED_GHIDRA: "decompiled",
    RepresentationKind.DECOMPILED_HEXRAYS: "decompiled",
    RepresentationKind.DECOMPILED_ANGR: "decompiled",
    RepresentationKind.SOURCE: "source",
}


def rep_label(rep: RepresentationKind | str) -> str:
    if isinstance(rep, RepresentationKind):
        return REP_LABELS[rep]
    return rep


@dataclass(frozen=True)
class PromptMode:
    kind: str
    shots: int = 0

    @staticmethod
    def zero_shot() -> "PromptMode":
        return PromptMode(ZERO_SHOT)

    @staticmethod
    def few_shot(shots: int = 2) -> "PromptMode":
        if shots < 1:
            raise ValueError("shots must be positive")
        return PromptMode(FEW_SHOT, shots)

    @staticmethod
    def chain_of_thought() -> "PromptMode":
        return PromptMode(CHAIN_OF_THOUGHT)

    @property
    def label(self) -> str:
        if self.kind == FEW_SHOT:
            return f"few_shot:{self.shots}"
        return self.kind

    @staticmethod
    def parse(label: str) -> "PromptMode":
        if label in ("zero", ZERO_SHOT):
            return PromptMode.zero_shot()
        if label in ("cot", CHAIN_OF_THOUGHT):
            return PromptMode.chain_of_thought()
        if label in ("few", FEW_SHOT):
            return PromptMode.few_shot()
        if label.startswith(("few_shot:", "few:")):
            return PromptMode.few_shot(int(label.split(":", 1)[1]))
        raise ValueError(f"unknown prompt mode {label!r}")


@dataclass(frozen=True)
class CompletionParams:
    model: str = "gpt-4"
    temperature: float = 0.1
    top_p: float = 1.0
    n: int = 1
    max_tokens: int | None = None

    def validate(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.max_tokens is not None and self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class Request:
    system_or_instruction: str
    body: str
    mode: PromptMode
    params: CompletionParams
    cache_key: str

    @staticmethod
    def build(instruction: str, body: str, mode: PromptMode, params: CompletionParams) -> "Request":
        params.validate()
        digest = hashlib.sha256(
            json.dumps(
                {
                    "instruction": instruction,
                    "body": body,
                    "mode": mode.label,
                    "model": params.model,
                    "temperature": params.temperature,
                    "top_p": params.top_p,
                    "n": params.n,
                    "max_tokens": params.max_tokens,
                },
                sort_keys=True,
                ensure_ascii=False,
            ).encode("utf-8")
        ).hexdigest()
        return Request(instruction, body, mode, params, digest)

    def payload(self) -> dict:
        messages = []
        if self.system_or_instruction:
            messages.append({"role": "system", "content": self.system_or_instruction})
        messages.append({"role": "user", "content": self.body})
        out = {
            "model": self.params.model,
            "messages": messages,
            "temperature": self.params.temperature,
            "top_p": self.params.top_p,
            "n": self.params.n,
        }
        if self.params.max_tokens is not None:
            out["max_tokens"] = self.params.max_tokens
        return out


def count_tokens(text: str) -> int:
    """Deterministic approximation: ceil(utf-8 bytes / 4).

    Exact usage reported by an API always overrides this in reports.
    """
    return (len(text.encode("utf-8")) + 3) // 4


@dataclass(frozen=True)
class Usage:
    input_tokens: int
    output_tokens: int
    exact: bool  # False when approximated from byte length

    @property
    def total(self) -> int:
        return self.input_tokens + self.output_tokens


@dataclass(frozen=True)
class Completion:
    text: str
    usage: Usage
    cached: bool = False


def assemble_request(
    prompt: str,
    code: str,
    mode: PromptMode,
    word_limit: int,
    demos: Sequence[tuple[str, str]] | None = None,
    rep: RepresentationKind | str = "binary",
    params: CompletionParams = CompletionParams(),
) -> Request:
    """Build one summarization request.

    The instruction embeds the word limit as ``in <word_limit> words``; the
    body is demonstration pairs (few-shot only, in the given order) followed
    by the test section ``Input <rep> code:\\n<CODE>\\nFunction Summary:``.
    For chain-of-thought this builds the first (reasoning) query; see
    :func:`run_cot` for the full two-step protocol.
    """
    if word_limit < 1:
        raise ValueError("word_limit must be positive")
    label = rep_label(rep)
    sections: list[str] = []

    if mode.kind == FEW_SHOT:
        demos = demos or []
        if len(demos) != mode.shots:
            raise ValueError(f"few_shot({mode.shots}) needs exactly {mode.shots} demos, got {len(demos)}")
        for demo_code, demo_summary in demos:
            if demo_code == code:
                raise LeakageError("demonstration code equals the test code")
            sections.append(
                f"Input {label} code:\n{demo_code}\nFunction Summary: {demo_summary}"
            )
    elif demos:
        raise ValueError(f"demos are only valid in few_shot mode, not {mode.kind}")

    if mode.kind == CHAIN_OF_THOUGHT:
        instruction = prompt
        sections.append(f"Input {label} code:\n{code}\n{COT_PHRASE}.")
    else:
        instruction = f"{prompt}\nSummarize the function in {word_limit} words."
        sections.append(f"Input {label} code:\n{code}\nFunction Summary:")

    return Request.build(instruction, "\n\n".join(sections), mode, params)


class Transport(Protocol):
    """Sends one chat-completion payload, returning the parsed JSON body."""

    def send(self, payload: dict) -> dict: ...


class RateLimitSignal(GatewayError):
    """Transport-level signal that the provider asked us to back off."""


class HttpTransport:
    """HTTP transport against an OpenAI-compatible chat-completions endpoint."""

    def __init__(self, base_url: str | None = None, api_key: str | None = None, timeout: float = 120.0):
        self.base_url = (base_url or os.environ.get(ENV_API_BASE, "")).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.timeout = timeout
        if not self.base_url:
            raise GatewayError(f"no endpoint configured: set {ENV_API_BASE} or pass base_url")

    def send(self, payload: dict) -> dict:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = httpx.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=headers,
                timeout=self.timeout,
            )
        except httpx.HTTPError as exc:
            raise GatewayError(f"transport failure: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credential (HTTP {resp.status_code})")
        if resp.status_code == 429:
            raise RateLimitSignal("rate limited (HTTP 429)")
        if resp.status_code >= 400:
            raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise MalformedResponseError(f"response body is not JSON: {exc}") from exc


class ResponseCache:
    """Content-addressed on-disk cache, one JSON file per cache key.

    Reads are lock-free; writes go through a temp file and an atomic
    rename, so concurrent writers of the same key cannot corrupt it.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Completion | None:
        path = self._path(key)
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
            usage = obj["usage"]
            return Completion(
                text=obj["text"],
                usage=Usage(usage["input_tokens"], usage["output_tokens"], usage["exact"]),
                cached=True,
            )
        except (OSError, ValueError, KeyError):
            return None  # miss; corrupt entries are rewritten on next success

    def put(self, key: str, completion: Completion) -> None:
        obj = {
            "text": completion.text,
            "usage": {
                "input_tokens": completion.usage.input_tokens,
                "output_tokens": completion.usage.output_tokens,
                "exact": completion.usage.exact,
            },
        }
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(obj, fh, ensure_ascii=False)
            os.replace(tmp, self._path(key))
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise


def _parse_completion(raw: dict, request: Request) -> Completion:
    try:
        text = raw["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponseError(
            f"response lacks choices[0].message.content: {str(raw)[:200]}"
        ) from None
    if not isinstance(text, str):
        raise MalformedResponseError("message content is not a string")
    usage_obj = raw.get("usage")
    if isinstance(usage_obj, dict) and "prompt_tokens" in usage_obj:
        usage = Usage(
            input_tokens=int(usage_obj.get("prompt_tokens", 0)),
            output_tokens=int(usage_obj.get("completion_tokens", 0)),
            exact=True,
        )
    else:
        usage = Usage(
            input_tokens=count_tokens(request.system_or_instruction + request.body),
            output_tokens=count_tokens(text),
            exact=False,
        )
    return Completion(text=text, usage=usage, cached=False)


@dataclass
class GatewayStats:
    requests: int = 0
    cache_hits: int = 0
    retries: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    approximate_tokens: bool = False


class Gateway:
    """Shared completion client with caching and a dispatch bound of 5 by default."""

    def __init__(
        self,
        transport: Transport,
        cache_dir: str | Path | None = None,
        concurrency: int = 5,
        max_retries: int = 5,
        backoff_base: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if concurrency < 1:
            raise ValueError("concurrency must be positive")
        self.transport = transport
        self.cache = ResponseCache(cache_dir) if cache_dir is not None else None
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.sleep = sleep
        self._semaphore = threading.BoundedSemaphore(concurrency)
        self._stats_lock = threading.Lock()
        self.stats = GatewayStats()

    def complete(self, request: Request) -> Completion:
        """Resolve a request from cache or the endpoint.

        Cache hits perform no network I/O. Misses dispatch under the
        concurrency bound, retrying rate-limit signals with exponential
        backoff; auth failures, retry exhaustion, and malformed responses
        raise distinct errors and never populate the cache.
        """
        if self.cache is not None:
            hit = self.cache.get(request.cache_key)
            if hit is not None:
                self._record(hit, cached=True)
                return hit
        with self._semaphore:
            raw = self._send_with_retry(request.payload())
        completion = _parse_completion(raw, request)
        if self.cache is not None:
            self.cache.put(request.cache_key, completion)
        self._record(completion, cached=False)
        return completion

    def _send_with_retry(self, payload: dict) -> dict:
        for attempt in range(self.max_retries + 1):
            try:
                return self.transport.send(payload)
            except RateLimitSignal:
                if attempt == self.max_retries:
                    break
                with self._stats_lock:
                    self.stats.retries += 1
                self.sleep(self.backoff_base * (2 ** attempt))
        raise RetryExhaustedError(f"rate limited after {self.max_retries} retries")

    def _record(self, completion: Completion, cached: bool) -> None:
        with self._stats_lock:
            self.stats.requests += 1
            if cached:
                self.stats.cache_hits += 1
            self.stats.input_tokens += completion.usage.input_tokens
            self.stats.output_tokens += completion.usage.output_tokens
            if not completion.usage.exact:
                self.stats.approximate_tokens = True

    def generate(self, instruction: str, params: CompletionParams = CompletionParams()) -> str:
        """One-off generation for prompt synthesis and optimization."""
        request = Request.build("", instruction, PromptMode.zero_shot(), params)
        return self.complete(request).text

    def summarize(
        self,
        prompt: str,
        code: str,
        mode: PromptMode,
        word_limit: int,
        demos: Sequence[tuple[str, str]] | None = None,
        rep: RepresentationKind | str = "binary",
        params: CompletionParams = CompletionParams(),
    ) -> Completion:
        """Assemble and complete one summarization request (CoT included)."""
        if mode.kind == CHAIN_OF_THOUGHT:
            return self.run_cot(prompt, code, word_limit, rep=rep, params=params)
        request = assemble_request(prompt, code, mode, word_limit, demos, rep, params)
        return self.complete(request)

    def run_cot(
        self,
        prompt: str,
        code: str,
        word_limit: int,
        rep: RepresentationKind | str = "binary",
        params: CompletionParams = CompletionParams(),
    ) -> Completion:
        """Two-query chain-of-thought summarization.

        Query 1 asks for step-by-step reasoning about the code; its full
        response text is concatenated into query 2, which requests the
        word-limited summary. Either query failing fails the whole call.
        """
        first = assemble_request(
            prompt, code, PromptMode.chain_of_thought(), word_limit, rep=rep, params=params
        )
        explanation = self.complete(first)
        label = rep_label(rep)
        instruction = f"{prompt}\nSummarize the function in {word_limit} words."
        body = (
            f"Input {label} code:\n{code}\n"
            f"Explanation: {explanation.text}\n"
            "Function Summary:"
        )
        second = Request.build(instruction, body, PromptMode.chain_of_thought(), params)
        summary = self.complete(second)
        usage = Usage(
            input_tokens=explanation.usage.input_tokens + summary.usage.input_tokens,
            output_tokens=explanation.usage.output_tokens + summary.usage.output_tokens,
            exact=explanation.usage.exact and summary.usage.exact,
        )
        return Completion(text=summary.text, usage=usage, cached=explanation.cached and summary.cached)
