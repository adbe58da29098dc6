"""Chat-completion clients: live HTTPS endpoint and recorded-replay files."""

from __future__ import annotations

import hashlib
import os
from pathlib import Path
from typing import Protocol

import requests

from .errors import TransportError

ENV_URL = "ICCO_LLM_URL"
ENV_KEY = "ICCO_LLM_KEY"
ENV_MODEL = "ICCO_LLM_MODEL"


class ChatClient(Protocol):
    def complete(self, prompt: str) -> str: ...


def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:24]


class LiveChatClient:
    """JSON chat-completion endpoint; configuration from environment variables."""

    def __init__(
        self,
        url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        timeout: float = 60.0,
    ):
        self.url = url or os.environ.get(ENV_URL)
        self.api_key = api_key or os.environ.get(ENV_KEY)
        self.model = model or os.environ.get(ENV_MODEL)
        self.timeout = timeout
        if not self.url or not self.model:
            raise TransportError(
                f"live client needs an endpoint and model; set {ENV_URL} and {ENV_MODEL}"
            )

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {"model": self.model, "messages": [{"role": "user", "content": prompt}]}
        try:
            resp = requests.post(self.url, json=payload, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except requests.RequestException as exc:
            raise TransportError(f"chat endpoint failure: {exc}") from exc
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"malformed chat response: {exc}") from exc


class ReplayChatClient:
    """Serves responses from a (prompt hash -> response file) directory.

    With `record_from` set, missing prompts are fetched from the inner client
    and stored, which is how golden fixtures get refreshed.
    """

    def __init__(self, directory: str | Path, record_from: ChatClient | None = None):
        self.directory = Path(directory)
        self.record_from = record_from
        if record_from is not None:
            self.directory.mkdir(parents=True, exist_ok=True)

    def path_for(self, prompt: str) -> Path:
        return self.directory / f"{prompt_key(prompt)}.txt"

    def complete(self, prompt: str) -> str:
        path = self.path_for(prompt)
        if path.exists():
            return path.read_text()
        if self.record_from is not None:
            response = self.record_from.complete(prompt)
            path.write_text(response)
            return response
        raise TransportError(f"no recorded response for prompt hash {prompt_key(prompt)} in {self.directory}")
