import json
import os
from concurrent.futures import ThreadPoolExecutor

import pytest

from harmsynth.backend import (
    FAILURE_KINDS,
    TAGS,
    BackendConfig,
    GenerationRequest,
    GenerationResponse,
    HTTPBackend,
    MockBackend,
    build_backend,
    default_script_path,
)
from harmsynth.errors import ConfigError


def req(text="hello there", tag="synthesize", **kw):
    return GenerationRequest(system_text="sys", user_text=text, tag=tag, **kw)


def test_request_validation():
    assert req().temperature == 1.0
    with pytest.raises(ValueError):
        req(tag="unknown_tag")
    with pytest.raises(ValueError):
        req(text="")
    with pytest.raises(ValueError):
        req(temperature=2.5)
    with pytest.raises(ValueError):
        req(temperature=-0.1)
    with pytest.raises(ValueError):
        GenerationRequest(system_text="s", user_text="u", tag="synthesize", max_output_tokens=0)
    assert req(temperature=0.0).temperature == 0.0
    assert req(temperature=2.0).temperature == 2.0


def test_response_invariants():
    ok = GenerationResponse.success("text")
    assert ok.ok and ok.failure_kind == "none"
    bad = GenerationResponse.failure("transport")
    assert not bad.ok and bad.text == ""
    with pytest.raises(ValueError):
        GenerationResponse(text="", ok=True)
    with pytest.raises(ValueError):
        GenerationResponse(text="x", ok=True, failure_kind="transport")
    with pytest.raises(ValueError):
        GenerationResponse(text="", ok=False, failure_kind="none")
    with pytest.raises(ValueError):
        GenerationResponse(text="", ok=False, failure_kind="weird")


def test_backend_config_validation():
    BackendConfig(kind="mock")
    with pytest.raises(ConfigError):
        BackendConfig(kind="grpc")
    with pytest.raises(ConfigError):
        BackendConfig(kind="http")  # endpoint missing
    with pytest.raises(ConfigError):
        BackendConfig(kind="http", endpoint="https://api.example/v1", api_key_env="")
    with pytest.raises(ConfigError):
        BackendConfig(kind="mock", max_retries=-1)
    with pytest.raises(ConfigError):
        BackendConfig(kind="mock", retry_backoff_ms=0)
    with pytest.raises(ConfigError):
        BackendConfig(kind="mock", requests_per_minute=0)


def test_mock_rule_matching_first_wins():
    backend = MockBackend(
        [
            {"tag": "synthesize", "contains": "special", "template": "special reply"},
            {"tag": "synthesize", "template": "general reply"},
            {"template": "fallback reply"},
        ],
        seed=0,
    )
    assert backend.generate(req("a special request")).text == "special reply"
    assert backend.generate(req("plain request")).text == "general reply"
    assert backend.generate(req("anything", tag="score_quality")).text == "fallback reply"


def test_mock_no_rule_is_malformed():
    backend = MockBackend([{"tag": "score_quality", "template": "7"}], seed=0)
    out = backend.generate(req("x", tag="synthesize"))
    assert not out.ok and out.failure_kind == "malformed"


def test_mock_determinism_and_input_sensitivity():
    script = [{"template": "v={randfloat} p={pick:a|b|c} n={randint:1-100} h={hash8}"}]
    b1 = MockBackend(script, seed=5)
    b2 = MockBackend(script, seed=5)
    b3 = MockBackend(script, seed=6)
    r = req("fixed input")
    assert b1.generate(r).text == b2.generate(r).text
    assert b1.generate(r).text != b3.generate(r).text
    assert b1.generate(req("other input")).text != b1.generate(r).text


def test_mock_placeholder_domains():
    backend = MockBackend([{"template": "{pick:x|y}"}], seed=1)
    values = {backend.generate(req(f"in{i}")).text for i in range(60)}
    assert values <= {"x", "y"} and len(values) == 2

    backend = MockBackend([{"template": "{randint:3-5}"}], seed=1)
    values = {int(backend.generate(req(f"in{i}")).text) for i in range(200)}
    assert values == {3, 4, 5}

    backend = MockBackend([{"template": "{randfloat}"}], seed=1)
    v = float(backend.generate(req("a")).text)
    assert 0.0 <= v < 1.0

    backend = MockBackend([{"template": "{hash8}"}], seed=1)
    text = backend.generate(req("a")).text
    assert len(text) == 8 and all(c in "0123456789abcdef" for c in text)


def test_mock_items_mode_counts_and_bare_failures():
    backend = MockBackend(
        [{"mode": "items", "failure_rate": 0.5, "template": "item {hash8}"}],
        seed=3,
    )
    out = backend.generate(req("give me exactly 40 things"))
    assert out.ok
    lines = out.text.splitlines()
    assert len(lines) == 40
    assert lines[0].startswith("1.")
    assert lines[39].split(".")[0] == "40"
    bare = [ln for ln in lines if ln.rstrip().endswith(".")]
    full = [ln for ln in lines if not ln.rstrip().endswith(".")]
    assert bare and full, "0.5 rate should produce both kinds"


def test_mock_items_mode_default_count_one():
    backend = MockBackend([{"mode": "items", "template": "only item"}], seed=0)
    assert backend.generate(req("no count here")).text == "1. only item"


def test_mock_text_failure_kind():
    backend = MockBackend(
        [{"template": "x", "failure_rate": 1.0, "failure_kind": "refusal"}], seed=0
    )
    out = backend.generate(req("anything"))
    assert not out.ok and out.failure_kind == "refusal"


def test_mock_failure_rate_monte_carlo():
    # per-item failure 0.214 -> ok fraction 0.786 +- 0.01 over 10^4 items
    backend = MockBackend(
        [{"mode": "items", "failure_rate": 0.214, "template": "t {hash8}"}],
        seed=11,
    )
    ok = total = 0
    for i in range(100):
        out = backend.generate(req(f"batch {i}: exactly 100 posts"))
        for line in out.text.splitlines():
            total += 1
            if not line.rstrip().endswith("."):
                ok += 1
    assert total == 10_000
    assert abs(ok / total - 0.786) < 0.01


def test_mock_thread_safety_same_answers():
    backend = MockBackend([{"template": "r={randfloat} {hash8}"}], seed=9)
    requests = [req(f"input {i}") for i in range(50)]
    serial = [backend.generate(r).text for r in requests]
    with ThreadPoolExecutor(max_workers=8) as pool:
        threaded = list(pool.map(lambda r: backend.generate(r).text, requests))
    assert serial == threaded
    assert backend.calls == 100


def test_mock_script_validation():
    with pytest.raises(ConfigError):
        MockBackend([], seed=0)
    with pytest.raises(ConfigError):
        MockBackend([{"tag": "nope", "template": "x"}], seed=0)
    with pytest.raises(ConfigError):
        MockBackend([{"template": "x", "mode": "weird"}], seed=0)
    with pytest.raises(ConfigError):
        MockBackend([{"template": "x", "failure_kind": "none"}], seed=0)
    with pytest.raises(ConfigError):
        MockBackend([{"tag": "synthesize"}], seed=0)


def test_bundled_script_loads_and_covers_all_tags():
    backend = MockBackend.from_file(default_script_path(), seed=0)
    for tag in TAGS:
        out = backend.generate(req("exactly 3 items please", tag=tag))
        assert out.ok or out.failure_kind in FAILURE_KINDS


def test_build_backend_mock_seed_fallback():
    a = build_backend(BackendConfig(kind="mock"), master_seed=4)
    b = build_backend(BackendConfig(kind="mock", mock_seed=4), master_seed=999)
    r = req("exactly 2 posts")
    assert a.generate(r).text == b.generate(r).text


class FakeResponse:
    def __init__(self, status_code=200, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self._text = text

    def json(self):
        if self._payload is None:
            raise ValueError("not json")
        return self._payload


class FakeSession:
    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.posts = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.posts.append({"url": url, "json": json, "headers": headers})
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


def http_config(**kw):
    defaults = dict(
        kind="http",
        endpoint="https://api.example/v1/chat",
        model_name="test-model",
        api_key_env="HARMSYNTH_TEST_KEY",
        max_retries=2,
        retry_backoff_ms=100,
        requests_per_minute=6000,
    )
    defaults.update(kw)
    return BackendConfig(**defaults)


def ok_payload(text="a fine reply"):
    return {"choices": [{"message": {"content": text}}]}


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.sleeps = []

    def clock(self):
        return self.now

    def sleep(self, seconds):
        self.sleeps.append(seconds)
        self.now += seconds


def make_backend(outcomes, monkeypatch, **cfg):
    monkeypatch.setenv("HARMSYNTH_TEST_KEY", "sk-test-value")
    session = FakeSession(outcomes)
    fake = FakeClock()
    backend = HTTPBackend(
        http_config(**cfg), session=session, clock=fake.clock, sleep=fake.sleep
    )
    return backend, session, fake


def test_http_happy_path(monkeypatch):
    backend, session, _ = make_backend([FakeResponse(200, ok_payload())], monkeypatch)
    out = backend.generate(req("hi"))
    assert out.ok and out.text == "a fine reply"
    post = session.posts[0]
    assert post["headers"]["Authorization"] == "Bearer sk-test-value"
    assert post["json"]["model"] == "test-model"
    assert post["json"]["temperature"] == 1.0
    assert post["json"]["messages"][1]["content"] == "hi"


def test_http_key_never_in_body(monkeypatch):
    backend, session, _ = make_backend([FakeResponse(200, ok_payload())], monkeypatch)
    backend.generate(req("hi"))
    assert "sk-test-value" not in json.dumps(session.posts[0]["json"])


def test_http_missing_key_env(monkeypatch):
    monkeypatch.delenv("HARMSYNTH_TEST_KEY", raising=False)
    backend = HTTPBackend(http_config(), session=FakeSession([]))
    with pytest.raises(ConfigError, match="HARMSYNTH_TEST_KEY"):
        backend.generate(req("hi"))


def test_http_429_retries_then_rate_limited(monkeypatch):
    outcomes = [FakeResponse(429)] * 3
    backend, session, fake = make_backend(outcomes, monkeypatch, max_retries=2)
    out = backend.generate(req("hi"))
    assert not out.ok and out.failure_kind == "rate_limited"
    assert len(session.posts) == 3, "attempts = max_retries + 1"


def test_http_retry_backoff_doubles(monkeypatch):
    outcomes = [FakeResponse(500), FakeResponse(500), FakeResponse(200, ok_payload())]
    backend, session, fake = make_backend(
        outcomes, monkeypatch, max_retries=2, retry_backoff_ms=100
    )
    out = backend.generate(req("hi"))
    assert out.ok
    backoffs = [s for s in fake.sleeps if s > 0]
    assert backoffs == sorted(backoffs), "backoff must be nondecreasing"
    assert backoffs[0] == pytest.approx(0.1)
    assert backoffs[1] == pytest.approx(0.2)


def test_http_transport_exception_retries(monkeypatch):
    import requests as _requests

    outcomes = [_requests.ConnectionError(), FakeResponse(200, ok_payload())]
    backend, session, _ = make_backend(outcomes, monkeypatch)
    assert backend.generate(req("hi")).ok
    outcomes = [_requests.ConnectionError()] * 3
    backend, _, _ = make_backend(outcomes, monkeypatch, max_retries=2)
    out = backend.generate(req("hi"))
    assert out.failure_kind == "transport"


def test_http_4xx_fails_fast(monkeypatch):
    backend, session, _ = make_backend([FakeResponse(400)], monkeypatch)
    out = backend.generate(req("hi"))
    assert out.failure_kind == "transport"
    assert len(session.posts) == 1


def test_http_malformed_payloads(monkeypatch):
    backend, _, _ = make_backend([FakeResponse(200, None)], monkeypatch)
    assert backend.generate(req("hi")).failure_kind == "malformed"
    backend, _, _ = make_backend([FakeResponse(200, {"wrong": "shape"})], monkeypatch)
    assert backend.generate(req("hi")).failure_kind == "malformed"
    backend, _, _ = make_backend(
        [FakeResponse(200, {"choices": [{"message": {"content": ""}}]})], monkeypatch
    )
    assert backend.generate(req("hi")).failure_kind == "malformed"


def test_http_refusal_detection(monkeypatch):
    backend, _, _ = make_backend(
        [FakeResponse(200, ok_payload("I can't assist with that request."))],
        monkeypatch,
    )
    assert backend.generate(req("hi")).failure_kind == "refusal"


def test_http_refusal_markers_configurable(monkeypatch):
    monkeypatch.setenv("HARMSYNTH_TEST_KEY", "k")
    session = FakeSession([FakeResponse(200, ok_payload("NOPE: not doing that"))])
    backend = HTTPBackend(http_config(), refusal_markers=("nope:",), session=session)
    assert backend.generate(req("hi")).failure_kind == "refusal"


def test_http_custom_body_template_typed_values(monkeypatch):
    monkeypatch.setenv("HARMSYNTH_TEST_KEY", "k")
    template = json.dumps(
        {"prompt": "{user}", "temp": "{temperature}", "cap": "{max_tokens}"}
    )
    session = FakeSession([FakeResponse(200, {"out": "fine"})])
    backend = HTTPBackend(
        http_config(), body_template=template, response_path="out", session=session
    )
    out = backend.generate(req("question", temperature=0.25, max_output_tokens=64))
    assert out.ok and out.text == "fine"
    body = session.posts[0]["json"]
    assert body["temp"] == 0.25 and isinstance(body["temp"], float)
    assert body["cap"] == 64 and isinstance(body["cap"], int)


def test_http_requires_http_kind():
    with pytest.raises(ConfigError):
        HTTPBackend(BackendConfig(kind="mock"))


def test_pacer_spaces_calls(monkeypatch):
    monkeypatch.setenv("HARMSYNTH_TEST_KEY", "k")
    session = FakeSession([FakeResponse(200, ok_payload())] * 3)
    fake = FakeClock()
    backend = HTTPBackend(
        http_config(requests_per_minute=60.0),
        session=session,
        clock=fake.clock,
        sleep=fake.sleep,
    )
    for _ in range(3):
        assert backend.generate(req("hi")).ok
    # 60 rpm -> 1s interval; second and third calls must each wait ~1s
    waits = [s for s in fake.sleeps if s > 0]
    assert len(waits) == 2
    assert all(w == pytest.approx(1.0) for w in waits)
