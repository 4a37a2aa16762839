"""Chat-completion client for evaluating remote models as search agents.

Sends interleaved text and inline base64 PNG parts, retries transient
failures with exponential backoff, and returns the model text verbatim;
parsing stays with the caller. Auth comes from a named environment
variable so tokens never live in run configs.
"""

from __future__ import annotations

import base64
import os
import time
from dataclasses import dataclass

import httpx

from panosearch.projection import ViewImage, png_bytes


class RemoteAgentError(RuntimeError):
    """Request still failing after the configured retries."""


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    auth_token_env_var: str = "PANOSEARCH_API_TOKEN"
    temperature: float = 0.0  # eval default; rollout sampling uses 0.7
    timeout_s: float = 60.0
    max_retries: int = 3
    backoff_s: float = 0.5

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")


def _wire_part(part: dict) -> dict:
    if part["type"] == "text":
        return {"type": "text", "text": part["text"]}
    image = part["image"]
    if isinstance(image, ViewImage):
        raw = png_bytes(image.pixels)
    elif isinstance(image, (str, os.PathLike)):
        with open(image, "rb") as fh:
            raw = fh.read()
    else:
        raise TypeError(f"cannot encode image part {type(image)}")
    encoded = base64.b64encode(raw).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{encoded}"}}


def wire_messages(messages: list[dict]) -> list[dict]:
    return [
        {"role": msg["role"], "content": [_wire_part(p) for p in msg["content"]]}
        for msg in messages
    ]


class RemoteAgent:
    def __init__(self, config: EndpointConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        token = os.environ.get(config.auth_token_env_var)
        if not token:
            raise ValueError(
                f"auth token environment variable {config.auth_token_env_var!r} is not set"
            )
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            headers={"Authorization": f"Bearer {token}"},
            timeout=config.timeout_s,
            transport=transport,
        )

    def complete(self, messages: list[dict]) -> str:
        """POST the conversation; returns the model text verbatim."""
        payload = {
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": wire_messages(messages),
        }
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries):
            try:
                resp = self._client.post("/chat/completions", json=payload)
                resp.raise_for_status()
                body = resp.json()
                content = body["choices"][0]["message"]["content"]
                if not isinstance(content, str):
                    raise RemoteAgentError("endpoint returned non-string content")
                return content
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                if attempt < self.config.max_retries - 1:
                    time.sleep(self.config.backoff_s * (2**attempt))
        raise RemoteAgentError(
            f"endpoint failed after {self.config.max_retries} attempts: {last_error}"
        ) from last_error

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RemoteAgent":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
