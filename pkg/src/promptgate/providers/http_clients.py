"""HTTP clients for the three public chat-completion wire contracts.

Provider-reported usage is preferred over local counting whenever present;
the hard cap is validated against reported output usage. Credentials come
from environment variables unless passed explicitly.
"""

from __future__ import annotations

import os
import time

import httpx

from ..errors import AuthError, IntegrityError, TransportError
from ..tokencount import count_tokens
from .base import BaseProviderClient, CompletionRequest, CompletionResponse


def _check_cap(output_tokens: int, request: CompletionRequest) -> None:
    if output_tokens > request.bundle.max_tokens:
        raise IntegrityError(
            f"provider reported {output_tokens} output tokens above the "
            f"{request.bundle.max_tokens}-token cap"
        )


class _HttpClientBase(BaseProviderClient):
    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        api_key: str | None = None,
        api_key_env: str = "",
        transport: httpx.BaseTransport | None = None,
        **kwargs,
    ):
        super().__init__(**kwargs)
        self.base_url = base_url.rstrip("/")
        self.model = model
        self._api_key = api_key
        self._api_key_env = api_key_env
        self._client = httpx.Client(transport=transport)

    def api_key(self) -> str:
        if self._api_key is not None:
            return self._api_key
        return os.environ.get(self._api_key_env, "")

    def _post(self, url: str, payload: dict, headers: dict, timeout_ms: int) -> httpx.Response:
        try:
            resp = self._client.post(
                url, json=payload, headers=headers, timeout=timeout_ms / 1000.0
            )
        except httpx.TimeoutException as exc:
            raise TransportError(f"{self.name}: timeout: {exc}") from exc
        except httpx.HTTPError as exc:
            raise TransportError(f"{self.name}: transport failure: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"{self.name}: credentials rejected ({resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"{self.name}: upstream error {resp.status_code}")
        if resp.status_code != 200:
            raise TransportError(
                f"{self.name}: unexpected status {resp.status_code}", retryable=False
            )
        return resp


class OpenAIChatClient(_HttpClientBase):
    """POST {base}/chat/completions with bearer auth."""

    name = "openai"

    def __init__(self, base_url: str = "https://api.openai.com/v1",
                 model: str = "gpt-4o-mini", **kwargs):
        kwargs.setdefault("api_key_env", "OPENAI_API_KEY")
        super().__init__(base_url, model, **kwargs)

    def _attempt(self, request: CompletionRequest) -> CompletionResponse:
        started = time.perf_counter()
        resp = self._post(
            f"{self.base_url}/chat/completions",
            {
                "model": self.model,
                "messages": [
                    {"role": "system", "content": request.bundle.system_prompt},
                    {"role": "user", "content": request.bundle.user_prompt},
                ],
                "max_tokens": request.bundle.max_tokens,
            },
            {"Authorization": f"Bearer {self.api_key()}"},
            request.timeout_ms,
        )
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
            usage = body.get("usage")
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise IntegrityError(f"{self.name}: malformed response: {exc}") from exc
        if usage is not None:
            input_tokens = int(usage.get("prompt_tokens", 0))
            output_tokens = int(usage.get("completion_tokens", 0))
        else:
            input_tokens = count_tokens(
                request.bundle.system_prompt
            ) + count_tokens(request.bundle.user_prompt)
            output_tokens = count_tokens(text)
        _check_cap(output_tokens, request)
        return CompletionResponse(
            text=text,
            output_tokens=output_tokens,
            input_tokens=input_tokens,
            provider_reported_usage=usage,
            latency_ms=(time.perf_counter() - started) * 1000.0,
            success=True,
        )


class AnthropicMessagesClient(_HttpClientBase):
    """POST {base}/v1/messages with x-api-key auth."""

    name = "anthropic"

    def __init__(self, base_url: str = "https://api.anthropic.com",
                 model: str = "claude-3-haiku-20240307", **kwargs):
        kwargs.setdefault("api_key_env", "ANTHROPIC_API_KEY")
        super().__init__(base_url, model, **kwargs)

    def _attempt(self, request: CompletionRequest) -> CompletionResponse:
        started = time.perf_counter()
        resp = self._post(
            f"{self.base_url}/v1/messages",
            {
                "model": self.model,
                "system": request.bundle.system_prompt,
                "messages": [{"role": "user", "content": request.bundle.user_prompt}],
                "max_tokens": request.bundle.max_tokens,
            },
            {"x-api-key": self.api_key(), "anthropic-version": "2023-06-01"},
            request.timeout_ms,
        )
        try:
            body = resp.json()
            text = "".join(
                block.get("text", "") for block in body["content"]
                if block.get("type") == "text"
            )
            usage = body.get("usage")
        except (KeyError, TypeError, ValueError) as exc:
            raise IntegrityError(f"{self.name}: malformed response: {exc}") from exc
        if usage is not None:
            input_tokens = int(usage.get("input_tokens", 0))
            output_tokens = int(usage.get("output_tokens", 0))
        else:
            input_tokens = count_tokens(
                request.bundle.system_prompt
            ) + count_tokens(request.bundle.user_prompt)
            output_tokens = count_tokens(text)
        _check_cap(output_tokens, request)
        return CompletionResponse(
            text=text,
            output_tokens=output_tokens,
            input_tokens=input_tokens,
            provider_reported_usage=usage,
            latency_ms=(time.perf_counter() - started) * 1000.0,
            success=True,
        )


class GeminiGenerateClient(_HttpClientBase):
    """POST {base}/v1beta/models/{model}:generateContent with key query param."""

    name = "gemini"

    def __init__(self, base_url: str = "https://generativelanguage.googleapis.com",
                 model: str = "gemini-2.0-flash-lite", **kwargs):
        kwargs.setdefault("api_key_env", "GEMINI_API_KEY")
        super().__init__(base_url, model, **kwargs)

    def _attempt(self, request: CompletionRequest) -> CompletionResponse:
        started = time.perf_counter()
        resp = self._post(
            f"{self.base_url}/v1beta/models/{self.model}:generateContent"
            f"?key={self.api_key()}",
            {
                "systemInstruction": {"parts": [{"text": request.bundle.system_prompt}]},
                "contents": [
                    {"role": "user", "parts": [{"text": request.bundle.user_prompt}]}
                ],
                "generationConfig": {"maxOutputTokens": request.bundle.max_tokens},
            },
            {},
            request.timeout_ms,
        )
        try:
            body = resp.json()
            parts = body["candidates"][0]["content"]["parts"]
            text = "".join(part.get("text", "") for part in parts)
            usage = body.get("usageMetadata")
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise IntegrityError(f"{self.name}: malformed response: {exc}") from exc
        if usage is not None:
            input_tokens = int(usage.get("promptTokenCount", 0))
            output_tokens = int(usage.get("candidatesTokenCount", 0))
            usage = {"input_tokens": input_tokens, "output_tokens": output_tokens}
        else:
            input_tokens = count_tokens(
                request.bundle.system_prompt
            ) + count_tokens(request.bundle.user_prompt)
            output_tokens = count_tokens(text)
        _check_cap(output_tokens, request)
        return CompletionResponse(
            text=text,
            output_tokens=output_tokens,
            input_tokens=input_tokens,
            provider_reported_usage=usage,
            latency_ms=(time.perf_counter() - started) * 1000.0,
            success=True,
        )
