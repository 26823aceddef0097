"""HTTP client for the local generation server.

The wire protocol is a single non-streaming call: POST {endpoint}/api/generate
with a JSON body of exactly {"model", "prompt", "stream"}, answered by a JSON
object whose "response" field carries the generated text.
"""

from __future__ import annotations

from dataclasses import dataclass
from urllib.parse import urlparse

import requests

DEFAULT_ENDPOINT = "http://127.0.0.1:11434"
DEFAULT_TIMEOUT_MS = 15000
HEALTH_CHECK_CAP_MS = 2000


class ModelClientError(Exception):
    """Base for backend failures; subclasses let callers log the cause."""


class BackendTimeout(ModelClientError):
    pass


class BackendUnreachable(ModelClientError):
    pass


class ProtocolError(ModelClientError):
    pass


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = DEFAULT_ENDPOINT
    model_name: str = "codellama"
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        parsed = urlparse(self.endpoint)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValueError(f"endpoint is not an HTTP URL: {self.endpoint!r}")


def generate(config: BackendConfig, prompt: str) -> str:
    """Request one completion; non-streaming, single attempt.

    Raises BackendTimeout when the deadline passes, BackendUnreachable when
    the server cannot be contacted, and ProtocolError for a non-200 status
    or a body without a "response" text field.
    """
    url = config.endpoint.rstrip("/") + "/api/generate"
    payload = {"model": config.model_name, "prompt": prompt, "stream": False}
    try:
        resp = requests.post(url, json=payload, timeout=config.timeout_ms / 1000.0)
    except requests.exceptions.Timeout as exc:
        raise BackendTimeout(f"no reply within {config.timeout_ms} ms") from exc
    except requests.exceptions.ConnectionError as exc:
        raise BackendUnreachable(f"cannot reach {config.endpoint}") from exc
    if resp.status_code != 200:
        raise ProtocolError(f"generation server answered HTTP {resp.status_code}")
    try:
        data = resp.json()
    except ValueError as exc:
        raise ProtocolError("generation server sent a non-JSON body") from exc
    if not isinstance(data, dict) or not isinstance(data.get("response"), str):
        raise ProtocolError('generation server reply lacks a "response" field')
    return data["response"]


def health_check(config: BackendConfig) -> bool:
    """True iff GET {endpoint}/ answers at all within min(timeout, 2 s)."""
    cap_s = min(config.timeout_ms, HEALTH_CHECK_CAP_MS) / 1000.0
    try:
        requests.get(config.endpoint.rstrip("/") + "/", timeout=cap_s)
        return True
    except requests.exceptions.RequestException:
        return False
