"""Provider-agnostic chat-completion gateway with record/replay cassettes.

Every completion is keyed by a content hash of (system preamble, rendered
prompt, generation params). Record mode appends the exchange to a cassette;
replay mode answers purely from the cassette and never touches the network,
which is what makes the whole pipeline deterministic under test.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Optional, Protocol

import requests

from .errors import CassetteMissError, ConfigurationError, GatewayError
from .prompts import PromptSpec, render_prompt

logger = logging.getLogger(__name__)

ENV_API_KEY = "NCG_LLM_API_KEY"
ENV_BASE_URL = "NCG_LLM_BASE_URL"

DEFAULT_MAX_IN_FLIGHT = 4
DEFAULT_MAX_ATTEMPTS = 3


@dataclass(frozen=True)
class GenerationParams:
    model_name: str
    temperature: float = 0.0
    max_tokens: int = 1024
    seed: Optional[int] = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def as_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
        }


def request_hash(system_preamble: Optional[str], rendered_prompt: str, params: GenerationParams) -> str:
    """Content hash of everything that determines a completion.

    Timestamps are deliberately excluded so a replayed request maps to the
    recorded one.
    """
    payload = json.dumps(
        {
            "system": system_preamble or "",
            "prompt": rendered_prompt,
            "params": params.as_dict(),
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CassetteEntry:
    request_hash: str
    system_preamble: str
    rendered_prompt: str
    params: dict
    response_text: str
    timestamp: str

    def as_dict(self) -> dict:
        return {
            "request_hash": self.request_hash,
            "system_preamble": self.system_preamble,
            "rendered_prompt": self.rendered_prompt,
            "params": self.params,
            "response_text": self.response_text,
            "timestamp": self.timestamp,
        }


class Cassette:
    """Append-only store of recorded exchanges, one JSON object per line.

    Lookups are by request hash; appends are serialized so concurrent
    recording through the gateway is safe.
    """

    def __init__(self, path=None):
        self.path = str(path) if path is not None else None
        self._entries: dict[str, CassetteEntry] = {}
        self._lock = threading.Lock()
        if self.path and os.path.exists(self.path):
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                    entry = CassetteEntry(**raw)
                except (json.JSONDecodeError, TypeError) as exc:
                    raise GatewayError(
                        f"malformed cassette entry at {self.path}:{lineno}: {exc}"
                    ) from exc
                self._entries[entry.request_hash] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, request_hash: str) -> bool:
        return request_hash in self._entries

    def get(self, request_hash: str) -> Optional[CassetteEntry]:
        return self._entries.get(request_hash)

    def append(self, entry: CassetteEntry) -> None:
        with self._lock:
            self._entries[entry.request_hash] = entry
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry.as_dict(), ensure_ascii=False) + "\n")

    def file_hash(self) -> str:
        if not self.path or not os.path.exists(self.path):
            return ""
        with open(self.path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()


class GatewayMode(Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"

    @classmethod
    def from_string(cls, s: str) -> "GatewayMode":
        try:
            return cls(s.strip().lower())
        except ValueError:
            raise ConfigurationError(
                f"unknown gateway mode {s!r}; expected live, record, or replay"
            ) from None


class Provider(Protocol):
    def complete(self, system_preamble: str, prompt: str, params: GenerationParams) -> str:
        ...


class HTTPProvider:
    """Chat-completion transport: POST {model, messages, temperature,
    max_tokens} to a fixed URL with bearer auth.

    Server errors and transport failures are retried with bounded
    exponential backoff; 4xx responses are configuration errors and are
    never retried.
    """

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        backoff_base: float = 0.5,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url if base_url is not None else os.environ.get(ENV_BASE_URL)
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY)
        if not self.base_url:
            raise ConfigurationError(f"no provider base URL; set {ENV_BASE_URL}")
        if not self.api_key:
            raise ConfigurationError(f"no provider API key; set {ENV_API_KEY}")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self._sleep = sleeper

    def complete(self, system_preamble: str, prompt: str, params: GenerationParams) -> str:
        messages = []
        if system_preamble:
            messages.append({"role": "system", "content": system_preamble})
        messages.append({"role": "user", "content": prompt})
        body = {
            "model": params.model_name,
            "messages": messages,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if params.seed is not None:
            body["seed"] = params.seed
        headers = {"Authorization": f"Bearer {self.api_key}"}

        last_error: Exception | None = None
        for attempt in range(1, self.max_attempts + 1):
            try:
                resp = requests.post(
                    self.base_url, json=body, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("provider transport error (attempt %d): %s", attempt, exc)
            else:
                if 200 <= resp.status_code < 300:
                    return self._extract_text(resp)
                if 400 <= resp.status_code < 500:
                    raise ConfigurationError(
                        f"provider rejected request ({resp.status_code}): {resp.text[:200]}"
                    )
                last_error = GatewayError(
                    f"provider returned {resp.status_code}: {resp.text[:200]}"
                )
                logger.warning("provider server error (attempt %d): %s", attempt, last_error)
            if attempt < self.max_attempts:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
        raise GatewayError(
            f"provider failed after {self.max_attempts} attempts: {last_error}"
        )

    @staticmethod
    def _extract_text(resp) -> str:
        try:
            doc = resp.json()
        except ValueError as exc:
            raise GatewayError(f"provider returned non-JSON body: {resp.text[:200]}") from exc
        try:
            return doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            pass
        if isinstance(doc.get("content"), str):
            return doc["content"]
        raise GatewayError(f"provider response missing completion text: {str(doc)[:200]}")


@dataclass(frozen=True)
class UsageRecord:
    request_hash: str
    template_id: str
    timestamp: str
    replayed: bool


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class LLMGateway:
    """Front door for every completion in the pipeline.

    mode=REPLAY answers from the cassette only (a miss is an error, the
    provider is never consulted); RECORD calls the provider and appends;
    LIVE calls the provider without touching the cassette. A semaphore
    bounds in-flight provider calls so callers may fan out freely.
    """

    provider: Optional[Provider] = None
    cassette: Cassette = field(default_factory=Cassette)
    mode: GatewayMode = GatewayMode.REPLAY
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    def __post_init__(self):
        self._semaphore = threading.Semaphore(self.max_in_flight)
        self._usage_lock = threading.Lock()
        self.usage: list[UsageRecord] = []

    def reset_usage(self) -> None:
        with self._usage_lock:
            self.usage = []

    def newest_usage_timestamp(self) -> str:
        with self._usage_lock:
            return max((u.timestamp for u in self.usage), default="")

    def complete(self, prompt: PromptSpec, params: GenerationParams) -> str:
        rendered = render_prompt(prompt)
        system = prompt.system_preamble or ""
        key = request_hash(system, rendered, params)

        if self.mode is GatewayMode.REPLAY:
            entry = self.cassette.get(key)
            if entry is None:
                raise CassetteMissError(prompt.template_id, key)
            self._note(key, prompt.template_id, entry.timestamp, replayed=True)
            return entry.response_text

        if self.provider is None:
            raise ConfigurationError(f"gateway mode {self.mode.value} requires a provider")

        with self._semaphore:
            response = self.provider.complete(system, rendered, params)
        stamp = _utcnow()
        if self.mode is GatewayMode.RECORD:
            self.cassette.append(
                CassetteEntry(
                    request_hash=key,
                    system_preamble=system,
                    rendered_prompt=rendered,
                    params=params.as_dict(),
                    response_text=response,
                    timestamp=stamp,
                )
            )
        self._note(key, prompt.template_id, stamp, replayed=False)
        return response

    def _note(self, key: str, template_id: str, stamp: str, replayed: bool) -> None:
        with self._usage_lock:
            self.usage.append(
                UsageRecord(
                    request_hash=key,
                    template_id=template_id,
                    timestamp=stamp,
                    replayed=replayed,
                )
            )
