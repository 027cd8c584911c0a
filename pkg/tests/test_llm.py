import json
import logging
import os
import subprocess
import sys
import threading

import httpx
import pytest

from compextract.errors import ConfigError, EndpointError
from compextract.ingest import DocumentChunk
from compextract.llm import (ChatClient, CompletionResponse, PromptRequest, ReplayCache,
                             TokenBudget, build_extraction_prompt, build_standalone_prompt,
                             load_template)

CHUNK = DocumentChunk("15535", 0, (1, 2), "Table 1. Chemical composition of 15535 ...")


def _ok(text="SiO2, 15535, 44.46-45.5, percent", prompt_tokens=50, completion_tokens=10):
    return httpx.Response(200, json={
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
    })


class Recorder:
    """MockTransport handler replaying a scripted list of responses."""

    def __init__(self, *responses):
        self.responses = list(responses)
        self.requests = []

    def __call__(self, request):
        self.requests.append(request)
        r = self.responses.pop(0)
        if isinstance(r, Exception):
            raise r
        return r


def _client(handler, **kw):
    kw.setdefault("api_key", "test-key")
    kw.setdefault("sleep", lambda s: None)
    return ChatClient(base_url="https://llm.test/v1", transport=httpx.MockTransport(handler), **kw)


# --- prompts -------------------------------------------------------------------

def test_prompt_carries_exemplar_table():
    req = build_extraction_prompt(CHUNK)
    assert "SiO2, 15535, 44.46-45.5, percent," in req.prompt_text
    assert "Cr,   15536, 4100-6419,  ppm" in req.prompt_text
    assert "Compound, SampleId, weight, units" in req.prompt_text
    assert req.prompt_text.startswith(load_template("extraction"))
    assert req.prompt_text.endswith(CHUNK.text)
    assert req.temperature == 0


def test_template_comments_are_stripped():
    assert "##" not in load_template("extraction")
    assert "reconstruction" not in load_template("extraction")


def test_fingerprint_is_pure():
    a = build_extraction_prompt(CHUNK)
    b = build_extraction_prompt(DocumentChunk("other", 3, (5, 5), CHUNK.text))
    assert a.fingerprint == b.fingerprint
    assert PromptRequest("m", 0, "p").fingerprint == PromptRequest("m", 0.0, "p").fingerprint
    assert PromptRequest("m", 0, "p").fingerprint != PromptRequest("m", 0.5, "p").fingerprint
    assert PromptRequest("m", 0, "p").fingerprint != PromptRequest("n", 0, "p").fingerprint


def test_fingerprint_is_stable_across_processes():
    # frozen: changing the hashing scheme silently invalidates every cache
    expected = "8f83cc2bfc90ad07cf58f649167215319cd70e400b7ea20856e1cdf531ce1a5b"
    assert PromptRequest("gpt-4o", 0.0, "hello").fingerprint == expected
    out = subprocess.run(
        [sys.executable, "-c",
         "from compextract.llm import PromptRequest; print(PromptRequest('gpt-4o', 0, 'hello').fingerprint)"],
        capture_output=True, text=True, check=True, env={**os.environ, "PYTHONHASHSEED": "99"})
    assert out.stdout.strip() == expected


def test_negative_temperature_rejected():
    with pytest.raises(ValueError):
        PromptRequest("m", -0.1, "p")


def test_empty_chunk_rejected():
    with pytest.raises(ValueError):
        build_extraction_prompt(DocumentChunk("d", 0, (1, 1), "   "))


def test_standalone_prompt_has_no_document_text():
    req = build_standalone_prompt("15415")
    assert "15415" in req.prompt_text
    assert "{sample_id}" not in req.prompt_text
    assert "Compound, SampleId, weight, units" in req.prompt_text
    assert "Table 1" not in req.prompt_text


# --- replay cache ----------------------------------------------------------------

def test_cache_round_trip(tmp_path):
    cache = ReplayCache(tmp_path)
    resp = CompletionResponse("Cr, 15535, 3900-5094, ppm,\nµ odd bytes", 12, 3)
    cache.store("abc", resp, PromptRequest("m", 0, "p"))
    hit = cache.lookup("abc")
    assert hit.text == resp.text
    assert (hit.prompt_tokens, hit.completion_tokens, hit.from_cache) == (12, 3, True)
    entry = json.loads((tmp_path / "abc.json").read_text(encoding="utf-8"))
    assert entry["request"]["model_id"] == "m"


def test_cache_miss(tmp_path):
    assert ReplayCache(tmp_path).lookup("unknown") is None


@pytest.mark.parametrize("content", ["{not json", '{"fingerprint": "abc"}', '{"fingerprint": "zzz", "response": {"text": "x"}}',
                                     '{"fingerprint": "abc", "response": {"text": 5}}'])
def test_corrupt_entry_is_a_warned_miss(tmp_path, caplog, content):
    (tmp_path / "abc.json").write_text(content, encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        assert ReplayCache(tmp_path).lookup("abc") is None
    assert any("corrupt" in r.message for r in caplog.records)


def test_concurrent_writes_same_fingerprint(tmp_path):
    cache = ReplayCache(tmp_path)
    errors = []

    def writer(i):
        try:
            for _ in range(20):
                cache.store("fp", CompletionResponse(f"text {i}"))
                assert cache.lookup("fp") is not None
        except Exception as exc:  # pragma: no cover - surfaced below
            errors.append(exc)

    threads = [threading.Thread(target=writer, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert cache.lookup("fp").text.startswith("text ")
    assert not list(tmp_path.glob("*.tmp"))


# --- complete ------------------------------------------------------------------

def test_cache_hit_makes_no_network_call(tmp_path):
    cache = ReplayCache(tmp_path)
    req = build_extraction_prompt(CHUNK)
    cache.store(req.fingerprint, CompletionResponse("cached"))
    handler = Recorder()
    client = _client(handler, cache=cache, api_key=None)
    resp = client.complete(req)
    assert resp.from_cache and resp.text == "cached"
    assert handler.requests == []
    assert client.stats["network_calls"] == 0


def test_retry_then_success():
    sleeps = []
    handler = Recorder(httpx.Response(429), httpx.Response(429), _ok())
    client = _client(handler, sleep=sleeps.append)
    resp = client.complete(build_extraction_prompt(CHUNK))
    assert resp.attempts == 3
    assert resp.text.startswith("SiO2")
    assert sleeps == [1.0, 2.0]
    assert len(handler.requests) == 3


def test_request_shape():
    handler = Recorder(_ok())
    _client(handler).complete(PromptRequest("gpt-4o", 0.0, "hello"))
    req = handler.requests[0]
    assert req.url.path == "/v1/chat/completions"
    assert req.headers["authorization"] == "Bearer test-key"
    body = json.loads(req.content)
    assert body == {"model": "gpt-4o", "temperature": 0.0,
                    "messages": [{"role": "user", "content": "hello"}]}


def test_attempt_cap():
    sleeps = []
    handler = Recorder(*[httpx.Response(503)] * 5)
    client = _client(handler, sleep=sleeps.append)
    with pytest.raises(EndpointError) as info:
        client.complete(PromptRequest("m", 0, "p"))
    assert info.value.status == 503
    assert info.value.attempts == 5
    assert sleeps == [1.0, 2.0, 4.0, 8.0]


def test_transport_errors_are_retried():
    handler = Recorder(httpx.ConnectError("boom"), _ok("ok"))
    assert _client(handler).complete(PromptRequest("m", 0, "p")).text == "ok"


def test_client_error_is_not_retried():
    handler = Recorder(httpx.Response(400, text="bad request"), _ok())
    with pytest.raises(EndpointError) as info:
        _client(handler).complete(PromptRequest("m", 0, "p"))
    assert info.value.status == 400 and len(handler.requests) == 1


def test_missing_credential_before_network():
    handler = Recorder(_ok())
    with pytest.raises(ConfigError):
        _client(handler, api_key=None).complete(PromptRequest("m", 0, "p"))
    assert handler.requests == []


def test_from_env(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "k")
    monkeypatch.setenv("OPENAI_BASE_URL", "https://example.test/v1/")
    c = ChatClient.from_env()
    assert c.api_key == "k" and c.base_url == "https://example.test/v1"


def test_empty_completion_is_valid():
    resp = _client(Recorder(_ok(""))).complete(PromptRequest("m", 0, "p"))
    assert resp.text == ""


def test_malformed_payload():
    with pytest.raises(EndpointError):
        _client(Recorder(httpx.Response(200, json={"nope": 1}))).complete(PromptRequest("m", 0, "p"))


def test_success_is_written_to_cache(tmp_path):
    cache = ReplayCache(tmp_path)
    client = _client(Recorder(_ok("fresh")), cache=cache)
    req = PromptRequest("m", 0, "p")
    client.complete(req)
    assert cache.lookup(req.fingerprint).text == "fresh"


# --- token budget ----------------------------------------------------------------

class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.lock = threading.Lock()

    def __call__(self):
        with self.lock:
            return self.now

    def sleep(self, s):
        with self.lock:
            self.now += s


def test_budget_blocks_until_window_frees():
    clock = FakeClock()
    budget = TokenBudget(1000, clock=clock, sleep=clock.sleep)
    a = budget.reserve(600)
    budget.settle(a, 600)
    budget.reserve(300)
    assert clock.now == 0
    budget.reserve(500)  # must wait for the first entry to age out
    assert clock.now >= 60
    assert budget.in_window() <= 1000


def test_budget_rejects_impossible_request():
    with pytest.raises(ConfigError):
        TokenBudget(100).reserve(101)


def test_budget_never_exceeded_under_concurrency():
    clock = FakeClock()
    budget = TokenBudget(1000, clock=clock, sleep=clock.sleep)
    peak = []

    def worker():
        for _ in range(10):
            budget.reserve(150)
            peak.append(budget.in_window())

    threads = [threading.Thread(target=worker) for _ in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert max(peak) <= 1000


def test_complete_settles_budget_to_reported_usage():
    clock = FakeClock()
    budget = TokenBudget(100_000, clock=clock, sleep=clock.sleep)
    _client(Recorder(_ok(prompt_tokens=70, completion_tokens=30))).complete(
        PromptRequest("m", 0, "p" * 300), budget)
    assert budget.in_window() == 100
