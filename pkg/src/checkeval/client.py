"""Chat-completion client with bounded retries and a record/replay cassette.

Cassette entries are JSON files named by the request key, so a replay run
needs nothing but the cassette directory. The key covers the model name,
messages, temperature and replicate index; the replicate index also goes
out on the wire as the ``X-Replicate-Index`` header, which compatible
servers ignore.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import httpx

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
MAX_ATTEMPTS = 3


class LLMClientError(RuntimeError):
    pass


class TransportError(LLMClientError):
    pass


class StatusError(LLMClientError):
    def __init__(self, status: int, body: str):
        super().__init__(f"server returned {status}: {body[:200]}")
        self.status = status
        self.body = body


class CassetteMiss(LLMClientError):
    def __init__(self, key: str, directory: Path):
        super().__init__(f"no recorded response for key {key} in {directory}")
        self.key = key


@dataclass(frozen=True)
class ModelEndpoint:
    base_url: str
    model_name: str
    temperature: float
    auth_token_env: Optional[str] = None
    timeout: float = 60.0
    max_concurrency: int = 4

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]
    temperature: float
    replicate_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple((r, c) for r, c in self.messages))
        if not any(role == "user" for role, _ in self.messages):
            raise ValueError("a chat request needs at least one user message")
        for role, _ in self.messages:
            if role not in ROLES:
                raise ValueError(f"unknown role {role!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.replicate_index < 0:
            raise ValueError("replicate_index must be >= 0")

    @classmethod
    def user(cls, content: str, temperature: float, replicate_index: int = 0,
             system: Optional[str] = None) -> "ChatRequest":
        msgs = [("system", system)] if system else []
        msgs.append(("user", content))
        return cls(tuple(msgs), temperature, replicate_index)

    def to_dict(self, model_name: str) -> dict:
        return {
            "model": model_name,
            "messages": [{"role": r, "content": c} for r, c in self.messages],
            "temperature": self.temperature,
            "replicate_index": self.replicate_index,
        }


def request_key(model_name: str, request: ChatRequest) -> str:
    payload = json.dumps(request.to_dict(model_name), sort_keys=True, ensure_ascii=False,
                         separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Cassette:
    directory: Path
    mode: str = "replay"

    def __post_init__(self):
        object.__setattr__(self, "directory", Path(self.directory))
        if self.mode not in ("record", "replay", "passthrough"):
            raise ValueError(f"unknown cassette mode {self.mode!r}")

    def path_for(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def load(self, key: str) -> Optional[dict]:
        path = self.path_for(key)
        if not path.exists():
            return None
        with path.open(encoding="utf-8") as fh:
            return json.load(fh)

    def store(self, key: str, request: dict, response: dict) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        entry = {
            "key": key,
            "request": request,
            "response": response,
            "recorded_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(entry, fh, ensure_ascii=False, indent=1, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, self.path_for(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _response_text(body: dict) -> str:
    try:
        return body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise StatusError(200, f"malformed completion body: {json.dumps(body)[:200]}") from exc


@dataclass
class ClientStats:
    requests: int = 0
    cassette_hits: int = 0
    network_calls: int = 0


class LLMClient:
    """One endpoint plus one cassette.

    Safe to share between threads; the number of in-flight HTTP requests
    never exceeds ``endpoint.max_concurrency``.
    """

    def __init__(self, endpoint: ModelEndpoint, cassette: Cassette,
                 transport: Optional[httpx.BaseTransport] = None, backoff: float = 0.5):
        self.endpoint = endpoint
        self.cassette = cassette
        self.backoff = backoff
        self.stats = ClientStats()
        self._slots = threading.BoundedSemaphore(endpoint.max_concurrency)
        self._lock = threading.Lock()
        self._transport = transport
        self._http: Optional[httpx.Client] = None

    def _client(self) -> httpx.Client:
        with self._lock:
            if self._http is None:
                headers = {"Content-Type": "application/json"}
                env = self.endpoint.auth_token_env
                if env and os.environ.get(env):
                    headers["Authorization"] = f"Bearer {os.environ[env]}"
                self._http = httpx.Client(
                    base_url=self.endpoint.base_url,
                    headers=headers,
                    timeout=self.endpoint.timeout,
                    transport=self._transport,
                )
            return self._http

    def close(self) -> None:
        if self._http is not None:
            self._http.close()
            self._http = None

    def __enter__(self) -> "LLMClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _bump(self, name: str) -> None:
        with self._lock:
            setattr(self.stats, name, getattr(self.stats, name) + 1)

    def _post(self, request: ChatRequest) -> dict:
        body = {
            "model": self.endpoint.model_name,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
        }
        headers = {"X-Replicate-Index": str(request.replicate_index)}
        last: Optional[Exception] = None
        for attempt in range(MAX_ATTEMPTS):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with self._slots:
                    self._bump("network_calls")
                    resp = self._client().post("chat/completions", json=body, headers=headers)
            except httpx.HTTPError as exc:
                last = TransportError(f"{type(exc).__name__}: {exc}")
                logger.warning("transport failure (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code >= 400:
                last = StatusError(resp.status_code, resp.text)
                logger.warning("status %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            try:
                return resp.json()
            except ValueError:
                last = StatusError(resp.status_code, resp.text)
        assert last is not None
        raise last

    def complete(self, request: ChatRequest) -> str:
        self._bump("requests")
        key = request_key(self.endpoint.model_name, request)
        mode = self.cassette.mode
        if mode != "passthrough":
            entry = self.cassette.load(key)
            if entry is not None:
                self._bump("cassette_hits")
                return _response_text(entry["response"])
            if mode == "replay":
                raise CassetteMiss(key, self.cassette.directory)
        response = self._post(request)
        text = _response_text(response)
        if mode == "record":
            self.cassette.store(key, request.to_dict(self.endpoint.model_name), response)
        return text


def complete(endpoint: ModelEndpoint, request: ChatRequest, cassette: Cassette,
             transport: Optional[httpx.BaseTransport] = None) -> str:
    """One-shot completion; prefer a shared ``LLMClient`` for batches."""
    with LLMClient(endpoint, cassette, transport=transport) as client:
        return client.complete(request)
