"""Provider clients: mock calibration, cap enforcement, retries, wire contracts."""

import json

import httpx
import numpy as np
import pytest

from promptgate.errors import AuthError, IntegrityError, TransportError
from promptgate.providers import (
    AnthropicMessagesClient,
    CompletionRequest,
    CompletionResponse,
    GeminiGenerateClient,
    MockProvider,
    OpenAIChatClient,
    ProviderProfile,
)
from promptgate.providers.base import BaseProviderClient
from promptgate.providers.mock import DEFAULT_PROFILES, _clipped_mean, _solve_location
from promptgate.templates import TemplateRegistry
from promptgate.types import VERBOSE, Query, TemplateId

REGISTRY = TemplateRegistry()


def make_request(text: str, template=VERBOSE, provider="mock", qid="q") -> CompletionRequest:
    bundle = REGISTRY.render_prompt(Query(id=qid, text=text), template)
    return CompletionRequest(provider=provider, model="m", bundle=bundle)


class TestClippedNormalSolver:
    def test_solved_location_hits_target_mean(self):
        for target, cap in [(496.0, 500), (45.3, 50), (181.3, 200), (800.0, 1000)]:
            sigma = 0.15 * target
            loc = _solve_location(target, sigma, 1.0, float(cap))
            assert abs(_clipped_mean(loc, sigma, 1.0, float(cap)) - target) < 1e-6

    def test_monte_carlo_agrees(self):
        target, cap = 496.0, 500
        sigma = 0.15 * target
        loc = _solve_location(target, sigma, 1.0, float(cap))
        rng = np.random.default_rng(0)
        draws = np.clip(loc + sigma * rng.standard_normal(200_000), 1, cap)
        assert abs(draws.mean() - target) < 0.5


class TestMockProvider:
    def test_deterministic_per_request(self):
        mock = MockProvider(DEFAULT_PROFILES["openai"])
        req = make_request("what is the airspeed of an unladen swallow?")
        r1 = mock.complete(req)
        r2 = mock.complete(req)
        assert r1.text == r2.text
        assert r1.output_tokens == r2.output_tokens

    def test_output_never_exceeds_cap(self):
        mock = MockProvider(DEFAULT_PROFILES["gemini"])
        for template in list(REGISTRY._specs) + [TemplateId("custom-unknown")]:
            cap = REGISTRY.token_cap(template)
            for i in range(200):
                resp = mock.complete(make_request(f"query {i}", template, qid=str(i)))
                assert resp.success
                assert 1 <= resp.output_tokens <= cap

    def test_gemini_verbose_mean_496(self):
        mock = MockProvider(DEFAULT_PROFILES["gemini"])
        draws = [
            mock.complete(make_request(f"distinct question {i}", VERBOSE)).output_tokens
            for i in range(1000)
        ]
        assert abs(np.mean(draws) - 496.0) <= 5.0

    def test_openai_routed_mix_mean_334(self):
        from promptgate.fixtures import DEFAULT_TEMPLATE_MIX, mix_counts

        mock = MockProvider(DEFAULT_PROFILES["openai"])
        counts = mix_counts(1000, DEFAULT_TEMPLATE_MIX)
        draws = []
        i = 0
        for name, count in counts.items():
            template = TemplateId(name)
            for _ in range(count):
                draws.append(
                    mock.complete(
                        make_request(f"routed query {i}", template, qid=str(i))
                    ).output_tokens
                )
                i += 1
        assert abs(np.mean(draws) - 334.0) <= 5.0

    def test_text_token_count_matches_reported_usage(self):
        from promptgate.tokencount import count_tokens

        mock = MockProvider(DEFAULT_PROFILES["anthropic"])
        for i in range(50):
            resp = mock.complete(make_request(f"check {i}", qid=str(i)))
            assert count_tokens(resp.text) == resp.output_tokens
            assert resp.provider_reported_usage["output_tokens"] == resp.output_tokens

    def test_unknown_cap_uses_fraction(self):
        profile = ProviderProfile(name="x", cap_means={}, unknown_mean_fraction=0.5)
        assert profile.mean_for_cap(1000) == 500.0


class FlakyClient(BaseProviderClient):
    """Fails with retryable transport errors N times, then succeeds."""

    name = "flaky"

    def __init__(self, failures: int, **kwargs):
        kwargs.setdefault("sleep", lambda s: None)
        super().__init__(**kwargs)
        self.failures_left = failures
        self.attempts_seen = 0

    def _attempt(self, request):
        self.attempts_seen += 1
        if self.failures_left > 0:
            self.failures_left -= 1
            raise TransportError("transient")
        return CompletionResponse(
            text="ok", output_tokens=1, input_tokens=1,
            provider_reported_usage=None, latency_ms=0.0, success=True,
        )


class TestRetryPolicy:
    def test_two_failures_then_success_is_three_attempts(self):
        client = FlakyClient(failures=2)
        resp = client.complete(make_request("hello"))
        assert resp.success is True
        assert resp.attempts == 3
        assert client.attempts_seen == 3

    def test_budget_exhaustion_returns_failure(self):
        client = FlakyClient(failures=10)
        req = make_request("hello")
        resp = client.complete(req)
        assert resp.success is False
        assert resp.attempts == req.retry_budget + 1

    def test_auth_error_is_not_retried(self):
        class AuthFailing(BaseProviderClient):
            name = "auth"

            def __init__(self):
                super().__init__(sleep=lambda s: None)
                self.attempts = 0

            def _attempt(self, request):
                self.attempts += 1
                raise AuthError("bad key")

        client = AuthFailing()
        with pytest.raises(AuthError):
            client.complete(make_request("hello"))
        assert client.attempts == 1

    def test_backoff_is_exponential(self):
        delays = []
        client = FlakyClient(failures=3, sleep=delays.append)
        client.complete(make_request("hello", qid="b"))
        # two backoffs before the budget of 2 extra attempts runs out
        assert delays == [0.1, 0.2]


class TestAuditLog:
    def test_entries_written(self, tmp_path):
        audit = tmp_path / "audit.jsonl"
        mock = MockProvider(DEFAULT_PROFILES["openai"], audit_path=audit)
        mock.complete(make_request("first"))
        mock.complete(make_request("second"))
        lines = [json.loads(l) for l in audit.read_text().splitlines()]
        assert len(lines) == 2
        assert all(entry["success"] for entry in lines)
        assert all(entry["provider"] == "mock" for entry in lines)


def _openai_transport(payload_fn):
    def handler(request: httpx.Request) -> httpx.Response:
        return payload_fn(request)

    return httpx.MockTransport(handler)


class TestOpenAIWire:
    def test_parses_usage_and_text(self):
        def handler(request):
            body = json.loads(request.content)
            assert body["max_tokens"] == 500
            assert body["messages"][0]["role"] == "system"
            return httpx.Response(200, json={
                "choices": [{"message": {"content": "The answer."}}],
                "usage": {"prompt_tokens": 30, "completion_tokens": 12},
            })

        client = OpenAIChatClient(
            "https://api.test/v1", transport=_openai_transport(handler), api_key="k"
        )
        resp = client.complete(make_request("question?"))
        assert resp.success and resp.text == "The answer."
        assert resp.input_tokens == 30 and resp.output_tokens == 12

    def test_auth_rejection_raises(self):
        client = OpenAIChatClient(
            "https://api.test/v1",
            transport=_openai_transport(lambda r: httpx.Response(401, json={})),
            api_key="bad",
        )
        with pytest.raises(AuthError):
            client.complete(make_request("q"))

    def test_reported_usage_above_cap_is_integrity_error(self):
        def handler(request):
            return httpx.Response(200, json={
                "choices": [{"message": {"content": "x"}}],
                "usage": {"prompt_tokens": 1, "completion_tokens": 999},
            })

        client = OpenAIChatClient(
            "https://api.test/v1", transport=_openai_transport(handler), api_key="k"
        )
        with pytest.raises(IntegrityError):
            client.complete(make_request("q", TemplateId("minimal")))

    def test_malformed_response_is_integrity_error(self):
        client = OpenAIChatClient(
            "https://api.test/v1",
            transport=_openai_transport(lambda r: httpx.Response(200, json={"nope": 1})),
            api_key="k",
        )
        with pytest.raises(IntegrityError):
            client.complete(make_request("q"))

    def test_server_errors_retried_then_fail(self):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            return httpx.Response(503, json={})

        client = OpenAIChatClient(
            "https://api.test/v1", transport=_openai_transport(handler), api_key="k",
            sleep=lambda s: None,
        )
        resp = client.complete(make_request("q"))
        assert resp.success is False
        assert calls["n"] == 3  # initial + 2 retries


class TestAnthropicWire:
    def test_parses_content_blocks(self):
        def handler(request):
            assert request.headers["x-api-key"] == "k"
            body = json.loads(request.content)
            assert body["system"].startswith("Give a comprehensive")
            return httpx.Response(200, json={
                "content": [{"type": "text", "text": "Claude says hi."}],
                "usage": {"input_tokens": 21, "output_tokens": 9},
            })

        client = AnthropicMessagesClient(
            "https://api.test", transport=_openai_transport(handler), api_key="k"
        )
        resp = client.complete(make_request("hello"))
        assert resp.text == "Claude says hi."
        assert resp.input_tokens == 21 and resp.output_tokens == 9


class TestGeminiWire:
    def test_parses_candidates(self):
        def handler(request):
            assert "models/gemini-2.0-flash-lite:generateContent" in str(request.url)
            body = json.loads(request.content)
            assert body["generationConfig"]["maxOutputTokens"] == 500
            return httpx.Response(200, json={
                "candidates": [{"content": {"parts": [{"text": "Gemini replies."}]}}],
                "usageMetadata": {"promptTokenCount": 17, "candidatesTokenCount": 8},
            })

        client = GeminiGenerateClient(
            "https://api.test", transport=_openai_transport(handler), api_key="k"
        )
        resp = client.complete(make_request("hello"))
        assert resp.text == "Gemini replies."
        assert resp.input_tokens == 17 and resp.output_tokens == 8
