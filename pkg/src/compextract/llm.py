"""Prompt construction, chat-completion calls, token budget and replay cache."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from collections import deque
from dataclasses import asdict, dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import httpx

from .errors import ConfigError, EndpointError
from .ingest import DocumentChunk

log = logging.getLogger(__name__)

DEFAULT_MODEL = "gpt-4o"
DEFAULT_BASE_URL = "https://api.openai.com/v1"
BASE_URL_ENV = "OPENAI_BASE_URL"
API_KEY_ENV = "OPENAI_API_KEY"
TRANSIENT_STATUS = frozenset({429}) | frozenset(range(500, 600))


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    raw = resources.files("compextract").joinpath("templates", f"{name}.txt").read_text(encoding="utf-8")
    lines = [ln for ln in raw.splitlines() if not ln.startswith("##")]
    return "\n".join(lines).strip("\n")


@dataclass(frozen=True)
class PromptRequest:
    model_id: str
    temperature: float
    prompt_text: str

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @property
    def fingerprint(self) -> str:
        # float() so that 0 and 0.0 hash alike
        payload = json.dumps([self.model_id, repr(float(self.temperature)), self.prompt_text],
                             ensure_ascii=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    from_cache: bool = False
    attempts: int = 0

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


def build_extraction_prompt(chunk: DocumentChunk, model_id: str = DEFAULT_MODEL,
                            temperature: float = 0.0) -> PromptRequest:
    if not chunk.text.strip():
        raise ValueError(f"chunk {chunk.doc_id}#{chunk.chunk_index} has no text")
    prompt = load_template("extraction") + "\n\n" + chunk.text
    return PromptRequest(model_id, temperature, prompt)


def build_standalone_prompt(sample_id: str, model_id: str = DEFAULT_MODEL,
                            temperature: float = 0.0) -> PromptRequest:
    """Baseline query: asks about a sample without supplying any document text."""
    prompt = load_template("standalone").replace("{sample_id}", sample_id)
    return PromptRequest(model_id, temperature, prompt)


class ReplayCache:
    """One JSON file per request fingerprint.

    Writes go through a temp file and ``os.replace`` so concurrent readers only
    ever see complete entries; writers to the same fingerprint are serialized.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict = {}
        self._guard = threading.Lock()

    def path(self, fingerprint: str) -> Path:
        return self.directory / f"{fingerprint}.json"

    def _lock(self, fingerprint):
        with self._guard:
            return self._locks.setdefault(fingerprint, threading.Lock())

    def store(self, fingerprint: str, response: CompletionResponse,
              request: Optional[PromptRequest] = None) -> Path:
        entry = {
            "fingerprint": fingerprint,
            "response": {
                "text": response.text,
                "prompt_tokens": response.prompt_tokens,
                "completion_tokens": response.completion_tokens,
            },
        }
        if request is not None:
            entry["request"] = asdict(request)
        data = json.dumps(entry, indent=2, ensure_ascii=False, sort_keys=True) + "\n"
        target = self.path(fingerprint)
        with self._lock(fingerprint):
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(data)
                os.replace(tmp, target)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
        return target

    def lookup(self, fingerprint: str) -> Optional[CompletionResponse]:
        target = self.path(fingerprint)
        try:
            raw = target.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        except OSError as exc:
            log.warning("replay cache entry %s unreadable (%s); treating as miss", target, exc)
            return None
        try:
            entry = json.loads(raw)
            if entry.get("fingerprint") != fingerprint:
                raise ValueError("fingerprint mismatch")
            resp = entry["response"]
            text = resp["text"]
            if not isinstance(text, str):
                raise ValueError("response text is not a string")
            return CompletionResponse(text, int(resp.get("prompt_tokens", 0)),
                                      int(resp.get("completion_tokens", 0)), from_cache=True)
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            log.warning("replay cache entry %s is corrupt (%s); treating as miss", target, exc)
            return None


class TokenBudget:
    """Sliding-window tokens-per-minute limiter shared by concurrent callers.

    Callers reserve an upper-bound estimate before the request and settle to the
    reported usage afterwards. The reserve check and the ledger update happen
    under one lock, so the window total never exceeds the limit at admission.
    """

    def __init__(self, tokens_per_minute: int, window: float = 60.0,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if tokens_per_minute <= 0:
            raise ValueError("tokens_per_minute must be positive")
        self.limit = tokens_per_minute
        self.window = window
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._ledger: deque = deque()  # [timestamp, tokens] entries, oldest first

    def _prune(self, now):
        while self._ledger and self._ledger[0][0] <= now - self.window:
            self._ledger.popleft()

    def in_window(self) -> int:
        with self._lock:
            self._prune(self._clock())
            return sum(e[1] for e in self._ledger)

    def reserve(self, tokens: int) -> list:
        if tokens > self.limit:
            raise ConfigError(f"request needs ~{tokens} tokens but the budget is {self.limit}/min")
        while True:
            with self._lock:
                now = self._clock()
                self._prune(now)
                used = sum(e[1] for e in self._ledger)
                if used + tokens <= self.limit:
                    entry = [now, tokens]
                    self._ledger.append(entry)
                    return entry
                wait = self._ledger[0][0] + self.window - now
            self._sleep(max(wait, 0.01))

    def settle(self, entry: list, actual: int) -> None:
        with self._lock:
            entry[1] = actual


def estimate_tokens(req: PromptRequest, completion_allowance: int = 4096) -> int:
    # ~3 chars/token is pessimistic for English and chemistry tables
    return len(req.prompt_text) // 3 + 1 + completion_allowance


class ChatClient:
    """Deterministic chat-completion caller with retry and replay.

    ``transport`` and ``sleep`` are injectable so tests never touch the network.
    """

    def __init__(self, base_url: Optional[str] = None, api_key: Optional[str] = None,
                 cache: Optional[ReplayCache] = None, max_attempts: int = 5,
                 backoff_base: float = 1.0, backoff_factor: float = 2.0,
                 timeout: float = 300.0, transport: Optional[httpx.BaseTransport] = None,
                 sleep: Callable[[float], None] = time.sleep,
                 completion_allowance: int = 4096):
        if max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        self.base_url = (base_url or DEFAULT_BASE_URL).rstrip("/")
        self.api_key = api_key
        self.cache = cache
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self.timeout = timeout
        self.completion_allowance = completion_allowance
        self._transport = transport
        self._sleep = sleep
        self._http: Optional[httpx.Client] = None
        self._stats_lock = threading.Lock()
        self.stats = {"cache_hits": 0, "cache_misses": 0, "network_calls": 0,
                      "prompt_tokens": 0, "completion_tokens": 0}

    @classmethod
    def from_env(cls, **kwargs) -> "ChatClient":
        kwargs.setdefault("base_url", os.environ.get(BASE_URL_ENV) or None)
        kwargs.setdefault("api_key", os.environ.get(API_KEY_ENV) or None)
        return cls(**kwargs)

    def _count(self, **deltas):
        with self._stats_lock:
            for k, v in deltas.items():
                self.stats[k] += v

    def _client(self) -> httpx.Client:
        if self._http is None:
            self._http = httpx.Client(base_url=self.base_url, timeout=self.timeout,
                                      transport=self._transport)
        return self._http

    def close(self):
        if self._http is not None:
            self._http.close()
            self._http = None

    def complete(self, req: PromptRequest, budget: Optional[TokenBudget] = None) -> CompletionResponse:
        fp = req.fingerprint
        if self.cache is not None:
            hit = self.cache.lookup(fp)
            if hit is not None:
                self._count(cache_hits=1)
                return hit
            self._count(cache_misses=1)
        if not self.api_key:
            raise ConfigError(f"no API key: set {API_KEY_ENV} (replay cache had no entry for {fp[:12]})")

        reservation = budget.reserve(estimate_tokens(req, self.completion_allowance)) if budget else None
        try:
            resp = self._post_with_retry(req)
        except BaseException:
            if reservation is not None:
                budget.settle(reservation, 0)
            raise
        if reservation is not None:
            budget.settle(reservation, resp.total_tokens)
        self._count(prompt_tokens=resp.prompt_tokens, completion_tokens=resp.completion_tokens)
        if self.cache is not None:
            self.cache.store(fp, resp, req)
        return resp

    def _post_with_retry(self, req: PromptRequest) -> CompletionResponse:
        body = {
            "model": req.model_id,
            "temperature": req.temperature,
            "messages": [{"role": "user", "content": req.prompt_text}],
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_status = None
        last_detail = ""
        for attempt in range(1, self.max_attempts + 1):
            self._count(network_calls=1)
            try:
                r = self._client().post("/chat/completions", json=body, headers=headers)
            except httpx.TransportError as exc:
                last_status, last_detail = None, repr(exc)
            else:
                if r.status_code == 200:
                    return _decode_completion(r, attempt)
                last_status, last_detail = r.status_code, r.text[:200]
                if r.status_code not in TRANSIENT_STATUS:
                    raise EndpointError(f"endpoint returned {r.status_code}: {last_detail}",
                                        status=r.status_code, attempts=attempt)
            if attempt < self.max_attempts:
                delay = self.backoff_base * self.backoff_factor ** (attempt - 1)
                log.info("attempt %d/%d failed (%s); retrying in %.1fs",
                         attempt, self.max_attempts, last_status or last_detail, delay)
                self._sleep(delay)
        raise EndpointError(f"giving up after {self.max_attempts} attempts "
                            f"(last status {last_status}): {last_detail}",
                            status=last_status, attempts=self.max_attempts)


def _decode_completion(r: httpx.Response, attempts: int) -> CompletionResponse:
    try:
        payload = r.json()
        text = payload["choices"][0]["message"]["content"] or ""
        usage = payload.get("usage") or {}
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise EndpointError(f"malformed completion payload: {exc}", status=r.status_code,
                            attempts=attempts) from exc
    return CompletionResponse(text, int(usage.get("prompt_tokens", 0)),
                              int(usage.get("completion_tokens", 0)), attempts=attempts)
