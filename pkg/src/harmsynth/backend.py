"""Text-generation backends: a deterministic scripted mock and an HTTP client.

Every model call goes through ``generate(GenerationRequest)`` and comes
back as a :class:`GenerationResponse`: generation problems are data
(``ok=False`` plus a failure kind), not exceptions, so callers can count
them into run accounting without control-flow gymnastics.

The mock backend is a pure function of (script, seed, request): no
internal RNG state, so concurrent calls and call reordering cannot
change any response. That property is what makes full pipeline runs
reproducible byte for byte.
"""

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from importlib import resources

import requests

from harmsynth.errors import ConfigError

__all__ = [
    "TAGS",
    "FAILURE_KINDS",
    "GenerationRequest",
    "GenerationResponse",
    "BackendConfig",
    "MockBackend",
    "HTTPBackend",
    "build_backend",
]

TAGS = (
    "extract_attributes",
    "synthesize",
    "score_quality",
    "refine_theme",
    "contextualize",
)

FAILURE_KINDS = ("none", "transport", "rate_limited", "refusal", "malformed")


@dataclass(frozen=True)
class GenerationRequest:
    system_text: str
    user_text: str
    tag: str
    temperature: float = 1.0
    max_output_tokens: int = 512

    def __post_init__(self):
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.tag not in TAGS:
            raise ValueError(f"unknown request tag: {self.tag!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    ok: bool
    failure_kind: str = "none"

    def __post_init__(self):
        if self.failure_kind not in FAILURE_KINDS:
            raise ValueError(f"unknown failure kind: {self.failure_kind!r}")
        if self.ok and (self.failure_kind != "none" or not self.text):
            raise ValueError("ok responses carry text and no failure kind")
        if not self.ok and self.failure_kind == "none":
            raise ValueError("failed responses need a failure kind")

    @classmethod
    def success(cls, text: str) -> "GenerationResponse":
        return cls(text=text, ok=True)

    @classmethod
    def failure(cls, kind: str) -> "GenerationResponse":
        return cls(text="", ok=False, failure_kind=kind)


@dataclass(frozen=True)
class BackendConfig:
    """Which backend to build and how; http kind needs endpoint + key env."""

    kind: str = "mock"
    endpoint: str = ""
    model_name: str = ""
    api_key_env: str = "HARMSYNTH_API_KEY"
    max_retries: int = 3
    retry_backoff_ms: int = 1000
    requests_per_minute: float = 60.0
    script_path: str | None = None
    mock_seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"unknown backend kind: {self.kind!r}")
        if self.kind == "http" and (not self.endpoint or not self.api_key_env):
            raise ConfigError("http backend requires endpoint and api_key_env")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be non-negative")
        if self.retry_backoff_ms <= 0:
            raise ConfigError("retry_backoff_ms must be positive")
        if self.requests_per_minute <= 0:
            raise ConfigError("requests_per_minute must be positive")


_PLACEHOLDER = re.compile(r"\{(pick|randint|randfloat|hash8)(?::([^{}]*))?\}")
_EXACT_COUNT = re.compile(r"exactly (\d+)")


def _u64(key: str) -> float:
    """Uniform in [0, 1) keyed by a string; stable across runs and platforms."""
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


@dataclass(frozen=True)
class _Rule:
    template: str
    tag: str | None = None
    contains: str | None = None
    mode: str = "text"
    failure_rate: float = 0.0
    failure_kind: str = "transport"

    def matches(self, req: GenerationRequest) -> bool:
        if self.tag is not None and self.tag != req.tag:
            return False
        if self.contains is not None and self.contains not in req.user_text:
            return False
        return True


class MockBackend:
    """Scripted backend: first matching rule answers, all draws are keyed.

    A rule is a dict with ``template`` plus optional ``tag`` (exact match
    on the request tag), ``contains`` (substring of the user text),
    ``mode`` (``"text"`` or ``"items"``), ``failure_rate`` and
    ``failure_kind``. Templates may use ``{pick:a|b|c}``,
    ``{randint:lo-hi}``, ``{randfloat}`` and ``{hash8}``; each occurrence
    draws independently.

    ``"items"`` mode answers with a numbered list. The item count is read
    from the phrase ``exactly N`` in the user text (1 if absent), and
    ``failure_rate`` applies per item: a failed item renders as a bare
    ``"i."`` line, the mock's stand-in for a malformed generation.
    """

    def __init__(self, script: list[dict], seed: int):
        if not script:
            raise ConfigError("mock script must have at least one rule")
        self._rules = []
        for idx, raw in enumerate(script):
            if "template" not in raw:
                raise ConfigError(f"mock rule {idx} missing template")
            rule = _Rule(
                template=str(raw["template"]),
                tag=raw.get("tag"),
                contains=raw.get("contains"),
                mode=raw.get("mode", "text"),
                failure_rate=float(raw.get("failure_rate", 0.0)),
                failure_kind=raw.get("failure_kind", "transport"),
            )
            if rule.tag is not None and rule.tag not in TAGS:
                raise ConfigError(f"mock rule {idx} has unknown tag {rule.tag!r}")
            if rule.mode not in ("text", "items"):
                raise ConfigError(f"mock rule {idx} has unknown mode {rule.mode!r}")
            if rule.failure_kind not in FAILURE_KINDS or rule.failure_kind == "none":
                raise ConfigError(
                    f"mock rule {idx} has unknown failure kind {rule.failure_kind!r}"
                )
            self._rules.append(rule)
        self._seed = seed
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_file(cls, path, seed: int) -> "MockBackend":
        with open(path, encoding="utf-8") as fh:
            script = json.load(fh)
        if not isinstance(script, list):
            raise ConfigError("mock script file must hold a JSON array of rules")
        return cls(script, seed)

    def _draw(self, rule_idx: int, req: GenerationRequest, item: int, what: str):
        key = f"{self._seed}|{rule_idx}|{req.tag}|{req.user_text}|{item}|{what}"
        return _u64(key)

    def _render(
        self, rule_idx: int, rule: _Rule, req: GenerationRequest, item: int
    ) -> str:
        ordinal = 0

        def fill(match: re.Match) -> str:
            nonlocal ordinal
            kind, arg = match.group(1), match.group(2) or ""
            u = self._draw(rule_idx, req, item, f"ph{ordinal}")
            ordinal += 1
            if kind == "pick":
                options = arg.split("|")
                k = int(u * len(options))
                if k >= len(options):
                    k = len(options) - 1
                return options[k]
            if kind == "randint":
                lo_s, _, hi_s = arg.partition("-")
                lo, hi = int(lo_s), int(hi_s)
                span = hi - lo + 1
                k = int(u * span)
                if k >= span:
                    k = span - 1
                return str(lo + k)
            if kind == "randfloat":
                return f"{u:.3f}"
            digest = hashlib.sha256(
                f"{self._seed}|{rule_idx}|{req.tag}|{req.user_text}|{item}|h".encode()
            ).hexdigest()
            return digest[:8]

        return _PLACEHOLDER.sub(fill, rule.template)

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        with self._lock:
            self.calls += 1
        for idx, rule in enumerate(self._rules):
            if not rule.matches(req):
                continue
            if rule.mode == "items":
                match = _EXACT_COUNT.search(req.user_text)
                count = int(match.group(1)) if match else 1
                lines = []
                for i in range(count):
                    if (
                        rule.failure_rate > 0.0
                        and self._draw(idx, req, i, "fail") < rule.failure_rate
                    ):
                        lines.append(f"{i + 1}.")
                    else:
                        lines.append(f"{i + 1}. {self._render(idx, rule, req, i)}")
                return GenerationResponse.success("\n".join(lines))
            if (
                rule.failure_rate > 0.0
                and self._draw(idx, req, 0, "fail") < rule.failure_rate
            ):
                return GenerationResponse.failure(rule.failure_kind)
            text = self._render(idx, rule, req, 0)
            if not text:
                return GenerationResponse.failure("malformed")
            return GenerationResponse.success(text)
        return GenerationResponse.failure("malformed")


class _Pacer:
    """Spaces calls so at most ``rpm`` start per minute; clock injectable."""

    def __init__(self, rpm: float, clock=time.monotonic, sleep=time.sleep):
        self._interval = 60.0 / rpm
        self._clock = clock
        self._sleep = sleep
        self._next_at = None
        self._lock = threading.Lock()

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            if self._next_at is not None and now < self._next_at:
                self._sleep(self._next_at - now)
                now = self._next_at
            self._next_at = now + self._interval


DEFAULT_BODY_TEMPLATE = json.dumps(
    {
        "model": "{model}",
        "messages": [
            {"role": "system", "content": "{system}"},
            {"role": "user", "content": "{user}"},
        ],
        "temperature": "{temperature}",
        "max_tokens": "{max_tokens}",
    }
)

DEFAULT_RESPONSE_PATH = "choices/0/message/content"

# Completions that are polite refusals rather than content; matched on the
# lowercased, stripped reply prefix. Not retried: the request is the problem.
DEFAULT_REFUSAL_MARKERS = (
    "i can't assist",
    "i cannot assist",
    "i can't help",
    "i cannot help",
    "i won't",
    "i will not",
    "sorry, but i can't",
)


class HTTPBackend:
    """JSON chat API client with pacing, retries, and typed failures.

    The API key is read from the environment variable named by
    ``config.api_key_env`` at call time and never stored, echoed, or
    logged. ``body_template`` is a JSON document whose string values
    ``{system}``, ``{user}``, ``{model}``, ``{temperature}`` and
    ``{max_tokens}`` are substituted per request; a value that is exactly
    one placeholder is replaced with the typed value. ``response_path``
    walks the reply JSON (slash-separated, integers index arrays).

    429 and transport errors are retried up to ``config.max_retries``
    extra attempts with doubling backoff (base ``retry_backoff_ms``);
    other non-2xx statuses, missing reply fields, and refusal prefixes
    fail immediately with kinds transport, malformed, and refusal.
    """

    def __init__(
        self,
        config: BackendConfig,
        body_template: str = DEFAULT_BODY_TEMPLATE,
        response_path: str = DEFAULT_RESPONSE_PATH,
        refusal_markers: tuple[str, ...] = DEFAULT_REFUSAL_MARKERS,
        session=None,
        clock=time.monotonic,
        sleep=time.sleep,
        timeout: float = 60.0,
    ):
        if config.kind != "http":
            raise ConfigError("HTTPBackend requires a config with kind='http'")
        self._config = config
        self._timeout = timeout
        try:
            self._body = json.loads(body_template)
        except json.JSONDecodeError as exc:
            raise ConfigError("body template is not valid JSON") from exc
        self._path = response_path.split("/")
        self._markers = tuple(m.lower() for m in refusal_markers)
        self._session = session or requests.Session()
        self._pacer = _Pacer(config.requests_per_minute, clock=clock, sleep=sleep)
        self._sleep = sleep

    def _api_key(self) -> str:
        key = os.environ.get(self._config.api_key_env)
        if not key:
            raise ConfigError(
                f"environment variable {self._config.api_key_env} is not set"
            )
        return key

    def _fill(self, node, req: GenerationRequest):
        typed = {
            "{system}": req.system_text,
            "{user}": req.user_text,
            "{model}": self._config.model_name,
            "{temperature}": req.temperature,
            "{max_tokens}": req.max_output_tokens,
        }
        if isinstance(node, dict):
            return {k: self._fill(v, req) for k, v in node.items()}
        if isinstance(node, list):
            return [self._fill(v, req) for v in node]
        if isinstance(node, str):
            if node in typed:
                return typed[node]
            out = node
            for mark, value in typed.items():
                out = out.replace(mark, str(value))
            return out
        return node

    def _extract(self, payload) -> str | None:
        node = payload
        for step in self._path:
            try:
                if isinstance(node, list):
                    node = node[int(step)]
                elif isinstance(node, dict):
                    node = node[step]
                else:
                    return None
            except (KeyError, IndexError, ValueError):
                return None
        return node if isinstance(node, str) else None

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        headers = {
            "Authorization": f"Bearer {self._api_key()}",
            "Content-Type": "application/json",
        }
        body = self._fill(self._body, req)
        backoff = self._config.retry_backoff_ms / 1000.0
        last_kind = "transport"
        for attempt in range(self._config.max_retries + 1):
            if attempt:
                self._sleep(backoff * 2.0 ** (attempt - 1))
            self._pacer.wait()
            try:
                resp = self._session.post(
                    self._config.endpoint,
                    json=body,
                    headers=headers,
                    timeout=self._timeout,
                )
            except requests.RequestException:
                last_kind = "transport"
                continue
            if resp.status_code == 429:
                last_kind = "rate_limited"
                continue
            if resp.status_code >= 500:
                last_kind = "transport"
                continue
            if resp.status_code != 200:
                return GenerationResponse.failure("transport")
            try:
                payload = resp.json()
            except ValueError:
                return GenerationResponse.failure("malformed")
            text = self._extract(payload)
            if not text:
                return GenerationResponse.failure("malformed")
            head = text.strip().lower()
            if any(head.startswith(mark) for mark in self._markers):
                return GenerationResponse.failure("refusal")
            return GenerationResponse.success(text)
        return GenerationResponse.failure(last_kind)


def default_script_path() -> str:
    return str(resources.files("harmsynth") / "templates" / "mock_script.json")


def build_backend(config: BackendConfig, master_seed: int = 0):
    """Construct the backend a config describes.

    The mock seed falls back to ``master_seed`` so one seed flag governs
    a whole run unless the config pins the mock separately.
    """
    if config.kind == "mock":
        script = config.script_path or default_script_path()
        seed = config.mock_seed if config.mock_seed is not None else master_seed
        return MockBackend.from_file(script, seed)
    return HTTPBackend(config)
