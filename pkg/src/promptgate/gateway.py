"""HTTP gateway: routing and completion endpoints with live savings stats.

Degradation policy: if the embedding backend is down, /v1/route reports
503 (no decision is fabricated) while /v1/complete stays available by
falling back to the verbose template with ``degraded=true`` — the call is
flagged in the ledger and excluded from savings percentages.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .accounting import (
    Ledger,
    UsageRecord,
    cost_of_tokens,
    routing_accuracy,
    savings_vs_baseline,
)
from .embed_cache import EmbeddingCache
from .embedding import Embedder, LocalTestEmbedder, RemoteEmbedder
from .errors import ContractViolation, DatasetError, TransportError
from .mlp import MlpModel, load_model
from .pricing import PRICING_PRESETS, cost_params_from_pricing, load_pricing_file
from .providers import (
    AnthropicMessagesClient,
    BaseProviderClient,
    CompletionRequest,
    GeminiGenerateClient,
    MockProvider,
    OpenAIChatClient,
)
from .providers.mock import DEFAULT_PROFILES
from .router import MODE_COST_AWARE, RouterConfig, route
from .templates import TemplateRegistry
from .types import CANONICAL_TEMPLATES, VERBOSE, ProviderPricing, Query, TemplateId


@dataclass(frozen=True)
class GatewayConfig:
    model_path: str
    host: str = "127.0.0.1"
    port: int = 8080
    confidence_threshold: float = 0.3
    mode: str = "argmax_with_fallback"
    templates_path: str | None = None
    pricing_path: str | None = None
    pricing_tier: str = "lower"
    ledger_path: str | None = None
    cache_path: str | None = None
    embedding_backend: str = "local"  # "local" or "remote"
    embedding_base_url: str | None = None
    embedding_model: str = "text-embedding-3-small"
    providers: tuple[str, ...] = ("mock:openai", "mock:gemini", "mock:anthropic")
    default_provider: str = "mock:openai"
    api_key: str | None = None
    concurrency_limit: int = 64

    @classmethod
    def from_file(cls, path: str | Path) -> "GatewayConfig":
        """Load the documented JSON config schema (see README)."""
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DatasetError(f"gateway config {path}: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise DatasetError(f"gateway config {path}: unknown keys {sorted(unknown)}")
        if "providers" in raw:
            raw["providers"] = tuple(raw["providers"])
        return cls(**raw)


@dataclass(frozen=True)
class GatewayState:
    """Immutable snapshot of everything a request needs.

    Swapping the app's state reference is atomic, so a config reload never
    affects requests already in flight.
    """

    model: MlpModel
    registry: TemplateRegistry
    router_cfg: RouterConfig
    embedder: Embedder
    cache: EmbeddingCache | None
    providers: Mapping[str, BaseProviderClient]
    pricing: Mapping[str, ProviderPricing]
    ledger: Ledger
    default_provider: str
    api_key: str | None = None
    started_at: float = field(default_factory=time.time)


def _build_provider(spec: str) -> BaseProviderClient:
    if spec.startswith("mock:"):
        profile_name = spec.split(":", 1)[1]
        if profile_name not in DEFAULT_PROFILES:
            raise ContractViolation(f"no mock profile named {profile_name!r}")
        return MockProvider(DEFAULT_PROFILES[profile_name])
    if spec == "openai":
        return OpenAIChatClient()
    if spec == "anthropic":
        return AnthropicMessagesClient()
    if spec == "gemini":
        return GeminiGenerateClient()
    raise ContractViolation(f"unknown provider spec {spec!r}")


def _pricing_key(provider_name: str) -> str:
    return provider_name.split(":", 1)[1] if ":" in provider_name else provider_name


def build_state(config: GatewayConfig, *, embedder: Embedder | None = None) -> GatewayState:
    """Construct gateway state; refuses to start if the model won't load."""
    model = load_model(config.model_path)
    registry = (
        TemplateRegistry.from_file(config.templates_path)
        if config.templates_path
        else TemplateRegistry()
    )
    pricing_table = (
        load_pricing_file(config.pricing_path) if config.pricing_path else PRICING_PRESETS
    )
    providers = {spec: _build_provider(spec) for spec in config.providers}
    if config.default_provider not in providers:
        raise ContractViolation(
            f"default provider {config.default_provider!r} is not configured"
        )
    pricing: dict[str, ProviderPricing] = {}
    for name in providers:
        key = (_pricing_key(name), config.pricing_tier)
        if key in pricing_table:
            pricing[name] = pricing_table[key]

    if embedder is None:
        if config.embedding_backend == "local":
            embedder = LocalTestEmbedder()
        elif config.embedding_backend == "remote":
            if not config.embedding_base_url:
                raise ContractViolation("remote embedding backend needs embedding_base_url")
            embedder = RemoteEmbedder(config.embedding_base_url, config.embedding_model)
        else:
            raise ContractViolation(
                f"unknown embedding backend {config.embedding_backend!r}"
            )

    default_pricing = pricing.get(config.default_provider)
    if config.mode == MODE_COST_AWARE and default_pricing is not None:
        router_cfg = RouterConfig(
            confidence_threshold=config.confidence_threshold,
            mode=MODE_COST_AWARE,
            cost_params=cost_params_from_pricing(default_pricing, registry),
        )
    else:
        router_cfg = RouterConfig(confidence_threshold=config.confidence_threshold)

    return GatewayState(
        model=model,
        registry=registry,
        router_cfg=router_cfg,
        embedder=embedder,
        cache=EmbeddingCache(config.cache_path) if config.cache_path else EmbeddingCache(),
        providers=providers,
        pricing=pricing,
        ledger=Ledger(config.ledger_path),
        default_provider=config.default_provider,
        api_key=config.api_key,
    )


class RouteBody(BaseModel):
    text: str
    threshold: float | None = None
    mode: str | None = None
    id: str | None = None


class CompleteBody(BaseModel):
    text: str
    provider: str | None = None
    template_override: str | None = None
    label: str | None = None
    id: str | None = None


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "message": message}, **extra},
    )


def _request_cfg(state: GatewayState, body: RouteBody) -> RouterConfig | JSONResponse:
    cfg = state.router_cfg
    if body.mode is not None and body.mode != cfg.mode:
        if body.mode == MODE_COST_AWARE:
            pricing = state.pricing.get(state.default_provider)
            if pricing is None:
                return _error(400, "no_pricing", "cost_aware mode needs pricing")
            cfg = RouterConfig(
                confidence_threshold=cfg.confidence_threshold,
                mode=MODE_COST_AWARE,
                cost_params=cost_params_from_pricing(pricing, state.registry),
            )
        elif body.mode == "argmax_with_fallback":
            cfg = RouterConfig(confidence_threshold=cfg.confidence_threshold)
        else:
            return _error(400, "bad_mode", f"unknown mode {body.mode!r}")
    if body.threshold is not None:
        if not 0.0 <= body.threshold <= 1.0:
            return _error(400, "bad_threshold", "threshold must lie in [0, 1]")
        cfg = cfg.with_threshold(body.threshold)
    return cfg


def create_app(state: GatewayState) -> FastAPI:
    app = FastAPI(title="promptgate", version="1")
    app.state.gateway = state

    def current_state() -> GatewayState:
        return app.state.gateway

    def auth_failure(request: Request, state: GatewayState) -> JSONResponse | None:
        if state.api_key and request.headers.get("X-API-Key") != state.api_key:
            return _error(401, "unauthorized", "missing or invalid API key")
        return None

    @app.post("/v1/route")
    def route_endpoint(body: RouteBody, request: Request):
        state = current_state()
        denied = auth_failure(request, state)
        if denied is not None:
            return denied
        if not body.text.strip():
            return _error(400, "empty_text", "text must be non-empty")
        cfg = _request_cfg(state, body)
        if isinstance(cfg, JSONResponse):
            return cfg
        query = Query(id=body.id or str(uuid.uuid4()), text=body.text)
        try:
            result = route(query, state.model, cfg, state.embedder, state.cache)
        except TransportError as exc:
            return _error(503, "embedding_unavailable", str(exc), degraded=True)
        return {
            "id": query.id,
            "template": result.template.name,
            "confidence": result.confidence,
            "probs": {t.name: p for t, p in zip(CANONICAL_TEMPLATES, result.probs)},
            "fallback_applied": result.fallback_applied,
            "expected_cost": result.expected_cost,
            "latency_us": result.latency_us,
        }

    @app.post("/v1/complete")
    def complete_endpoint(body: CompleteBody, request: Request):
        state = current_state()
        denied = auth_failure(request, state)
        if denied is not None:
            return denied
        if not body.text.strip():
            return _error(400, "empty_text", "text must be non-empty")
        provider_name = body.provider or state.default_provider
        client = state.providers.get(provider_name)
        if client is None:
            return _error(400, "unknown_provider", f"provider {provider_name!r} not configured")
        query = Query(id=body.id or str(uuid.uuid4()), text=body.text)

        degraded = False
        fallback_applied = False
        if body.template_override is not None:
            template = TemplateId(body.template_override)
        else:
            try:
                decision = route(query, state.model, state.router_cfg, state.embedder, state.cache)
                template = decision.template
                fallback_applied = decision.fallback_applied
            except TransportError:
                template = VERBOSE
                degraded = True

        bundle = state.registry.render_prompt(query, template)
        completion = client.complete(
            CompletionRequest(
                provider=provider_name,
                model=getattr(client, "model", provider_name),
                bundle=bundle,
            )
        )
        pricing = state.pricing.get(provider_name)
        if completion.success and pricing is not None:
            cost = cost_of_tokens(completion.input_tokens, pricing, "input") + cost_of_tokens(
                completion.output_tokens, pricing, "output"
            )
        else:
            cost = 0.0
        baseline = _baseline_estimate(state, client)
        record = UsageRecord(
            query_id=query.id,
            provider=provider_name,
            template=template.name,
            fallback=fallback_applied,
            input_tokens=completion.input_tokens,
            output_tokens=completion.output_tokens,
            baseline_output_tokens=baseline,
            baseline_estimated=True,
            cost_usd=cost,
            degraded=degraded,
            success=completion.success,
            expected_label=body.label,
        )
        state.ledger.append(record)
        if not completion.success:
            return _error(
                502,
                "provider_failure",
                f"provider {provider_name} failed after {completion.attempts} attempts",
            )
        return {
            "id": query.id,
            "template": template.name,
            "response_text": completion.text,
            "input_tokens": completion.input_tokens,
            "output_tokens": completion.output_tokens,
            "cost": cost,
            "baseline_estimate": baseline,
            "degraded": degraded,
            "fallback_applied": fallback_applied,
        }

    @app.get("/v1/stats")
    def stats_endpoint(request: Request):
        state = current_state()
        denied = auth_failure(request, state)
        if denied is not None:
            return denied
        records = state.ledger.records()
        savings = savings_vs_baseline(records)
        labeled = [r for r in records if r.expected_label is not None and r.success]
        accuracy = None
        if labeled:
            report = routing_accuracy(
                [r.template for r in labeled], [r.expected_label for r in labeled]
            )
            accuracy = {
                "n": report.n,
                "correct": report.correct,
                "accuracy": report.accuracy,
                "class_labels": list(report.class_labels),
                "confusion": [list(row) for row in report.confusion],
            }
        return {
            "uptime_seconds": time.time() - state.started_at,
            "query_count": len(records),
            "savings": {
                "providers": [
                    {
                        "provider": p.provider,
                        "baseline_tokens": p.baseline_tokens,
                        "actual_tokens": p.actual_tokens,
                        "tokens_saved": p.tokens_saved,
                        "percent_saved": p.percent_saved,
                        "cost_usd": p.cost_usd,
                        "invalid": p.invalid,
                    }
                    for p in savings.providers
                ],
                "total_baseline_tokens": savings.total_baseline_tokens,
                "total_actual_tokens": savings.total_actual_tokens,
                "total_tokens_saved": savings.total_tokens_saved,
                "total_percent_saved": savings.total_percent_saved,
                "total_cost_usd": savings.total_cost_usd,
                "template_distribution": {
                    "counts": savings.template_distribution.counts,
                    "percents": savings.template_distribution.percents,
                    "n": savings.template_distribution.n,
                },
            },
            "accuracy": accuracy,
        }

    return app


def _baseline_estimate(state: GatewayState, client: BaseProviderClient) -> int:
    verbose_cap = state.registry.token_cap(VERBOSE)
    estimator = getattr(client, "expected_output_tokens", None)
    if callable(estimator):
        return int(round(estimator(verbose_cap)))
    return int(round(state.registry.mean_tokens(VERBOSE)))


def replace_state(app: FastAPI, state: GatewayState) -> None:
    """Atomically swap the gateway state; in-flight requests keep the old one."""
    app.state.gateway = state


def serve(config: GatewayConfig, *, host: str | None = None, port: int | None = None) -> None:
    import uvicorn

    state = build_state(config)
    app = create_app(state)
    uvicorn.run(
        app,
        host=host or config.host,
        port=port or config.port,
        limit_concurrency=config.concurrency_limit or None,
    )
