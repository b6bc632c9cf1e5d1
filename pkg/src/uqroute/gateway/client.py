"""Minimal client for OpenAI-compatible chat-completion endpoints.

Local inference servers (llama.cpp, vLLM, Ollama) speak this dialect, so the
weak model can live on-device while the strong one sits behind a remote URL.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import httpx

from ..errors import UqrouteError


class EndpointError(UqrouteError):
    """Transport failure or non-2xx reply from a completion endpoint."""


@dataclass
class ChatCompletion:
    text: str
    tokens: list[str] = field(default_factory=list)
    token_logprobs: list[float] = field(default_factory=list)
    # per generated token: alternative token -> logprob
    top_logprobs: list[dict[str, float]] = field(default_factory=list)
    latency_ms: float = 0.0


class CompletionClient:
    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 30.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._http = httpx.Client(timeout=timeout, headers=headers)

    def close(self) -> None:
        self._http.close()

    def chat(
        self,
        prompt: str,
        temperature: float = 0.0,
        top_p: float = 1.0,
        logprobs: bool = False,
        top_logprobs: int | None = None,
        max_tokens: int | None = None,
    ) -> ChatCompletion:
        body: dict = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "top_p": top_p,
        }
        if logprobs:
            body["logprobs"] = True
            if top_logprobs is not None:
                body["top_logprobs"] = top_logprobs
        if max_tokens is not None:
            body["max_tokens"] = max_tokens
        start = time.monotonic()
        try:
            resp = self._http.post(f"{self.base_url}/chat/completions", json=body)
        except httpx.HTTPError as e:
            raise EndpointError(f"{self.base_url}: {e}") from e
        latency = (time.monotonic() - start) * 1000.0
        if resp.status_code != 200:
            raise EndpointError(f"{self.base_url}: HTTP {resp.status_code}")
        try:
            payload = resp.json()
            choice = payload["choices"][0]
            text = choice["message"]["content"]
        except (KeyError, IndexError, ValueError) as e:
            raise EndpointError(f"{self.base_url}: malformed completion body") from e
        completion = ChatCompletion(text=text, latency_ms=latency)
        content = (choice.get("logprobs") or {}).get("content") or []
        for entry in content:
            completion.tokens.append(entry.get("token", ""))
            # defend against endpoints emitting tiny positive rounding noise
            completion.token_logprobs.append(min(float(entry["logprob"]), 0.0))
            alts = {
                alt["token"]: min(float(alt["logprob"]), 0.0)
                for alt in entry.get("top_logprobs", [])
            }
            completion.top_logprobs.append(alts)
        return completion
