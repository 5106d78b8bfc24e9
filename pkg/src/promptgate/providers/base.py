"""Provider client abstraction: request/response types and the retry policy."""

from __future__ import annotations

import json
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

from ..errors import TransportError
from ..templates import PromptBundle


@dataclass(frozen=True)
class CompletionRequest:
    provider: str
    model: str
    bundle: PromptBundle
    timeout_ms: int = 30_000
    retry_budget: int = 2  # extra attempts after the first


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    output_tokens: int
    input_tokens: int
    provider_reported_usage: Mapping[str, int] | None
    latency_ms: float
    success: bool
    attempts: int = 1


def _failed(attempts: int, latency_ms: float) -> CompletionResponse:
    return CompletionResponse(
        text="",
        output_tokens=0,
        input_tokens=0,
        provider_reported_usage=None,
        latency_ms=latency_ms,
        success=False,
        attempts=attempts,
    )


class BaseProviderClient(ABC):
    """Shared completion flow: attempt, retry transient failures, audit.

    Subclasses implement ``_attempt``. Retryable transport errors are
    retried with exponential backoff up to the request's budget; only
    after exhaustion does ``complete`` return ``success=False``.
    Non-retryable errors (auth, malformed responses) propagate.
    """

    name: str = "provider"

    def __init__(
        self,
        *,
        audit_path: str | Path | None = None,
        backoff_base_s: float = 0.1,
        backoff_max_s: float = 2.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._audit_path = Path(audit_path) if audit_path else None
        self._audit_lock = threading.Lock()
        self._backoff_base_s = backoff_base_s
        self._backoff_max_s = backoff_max_s
        self._sleep = sleep

    @abstractmethod
    def _attempt(self, request: CompletionRequest) -> CompletionResponse:
        """One raw completion attempt; raises TransportError on failure."""

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        started = time.perf_counter()
        attempts = 0
        while True:
            attempts += 1
            try:
                response = self._attempt(request)
            except TransportError as exc:
                exc.attempts = attempts
                if not exc.retryable:
                    self._audit(request, None, attempts, started)
                    raise
                if attempts > request.retry_budget:
                    response = _failed(attempts, (time.perf_counter() - started) * 1000.0)
                    self._audit(request, response, attempts, started)
                    return response
                self._sleep(
                    min(self._backoff_base_s * 2 ** (attempts - 1), self._backoff_max_s)
                )
                continue
            response = CompletionResponse(
                text=response.text,
                output_tokens=response.output_tokens,
                input_tokens=response.input_tokens,
                provider_reported_usage=response.provider_reported_usage,
                latency_ms=(time.perf_counter() - started) * 1000.0,
                success=response.success,
                attempts=attempts,
            )
            self._audit(request, response, attempts, started)
            return response

    def _audit(
        self,
        request: CompletionRequest,
        response: CompletionResponse | None,
        attempts: int,
        started: float,
    ) -> None:
        if self._audit_path is None:
            return
        entry = {
            "ts": time.time(),
            "provider": request.provider,
            "model": request.model,
            "max_tokens": request.bundle.max_tokens,
            "attempts": attempts,
            "latency_ms": (time.perf_counter() - started) * 1000.0,
            "success": bool(response.success) if response is not None else False,
            "input_tokens": response.input_tokens if response is not None else None,
            "output_tokens": response.output_tokens if response is not None else None,
        }
        line = json.dumps(entry, sort_keys=True)
        with self._audit_lock, open(self._audit_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
