"""Paired routed-vs-verbose benchmark over a labeled dataset.

For every query each provider is called twice: once with the routed
template and once with the verbose template, so the baseline is measured
rather than estimated. Savings and routing accuracy come out of the same
run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

from .accounting import (
    AccuracyReport,
    SavingsReport,
    UsageRecord,
    cost_of_tokens,
    routing_accuracy,
    savings_vs_baseline,
)
from .dataset import LabeledQuery
from .embedding import Embedder
from .mlp import MlpModel
from .providers import BaseProviderClient, CompletionRequest
from .router import RouteFailure, RouterConfig, route_batch
from .templates import TemplateRegistry
from .types import VERBOSE, ProviderPricing

if TYPE_CHECKING:
    from .embed_cache import EmbeddingCache


@dataclass(frozen=True)
class BenchResult:
    savings: SavingsReport
    accuracy: AccuracyReport
    records: tuple[UsageRecord, ...]
    route_failures: int
    mean_decision_us: float


def run_bench(
    data: Sequence[LabeledQuery],
    model: MlpModel,
    providers: Mapping[str, BaseProviderClient],
    *,
    registry: TemplateRegistry | None = None,
    router_cfg: RouterConfig | None = None,
    embedder: Embedder,
    cache: "EmbeddingCache | None" = None,
    pricing: Mapping[str, ProviderPricing] | None = None,
) -> BenchResult:
    registry = registry or TemplateRegistry()
    router_cfg = router_cfg or RouterConfig()
    pricing = pricing or {}

    outcomes = route_batch([item.query for item in data], model, router_cfg, embedder, cache)

    records: list[UsageRecord] = []
    predictions: list[str] = []
    labels: list[str] = []
    decision_total_us = 0.0
    failures = 0
    for item, outcome in zip(data, outcomes):
        if isinstance(outcome, RouteFailure):
            failures += 1
            continue
        predictions.append(outcome.template.name)
        labels.append(item.label.name)
        decision_total_us += outcome.decision_us

        routed_bundle = registry.render_prompt(item.query, outcome.template)
        verbose_bundle = registry.render_prompt(item.query, VERBOSE)
        for provider_name, client in providers.items():
            model_name = getattr(client, "model", provider_name)
            routed = client.complete(
                CompletionRequest(provider=provider_name, model=model_name, bundle=routed_bundle)
            )
            baseline = client.complete(
                CompletionRequest(provider=provider_name, model=model_name, bundle=verbose_bundle)
            )
            provider_pricing = pricing.get(provider_name)
            if routed.success and provider_pricing is not None:
                cost = cost_of_tokens(
                    routed.input_tokens, provider_pricing, "input"
                ) + cost_of_tokens(routed.output_tokens, provider_pricing, "output")
            else:
                cost = 0.0
            records.append(
                UsageRecord(
                    query_id=item.query.id,
                    provider=provider_name,
                    template=outcome.template.name,
                    fallback=outcome.fallback_applied,
                    input_tokens=routed.input_tokens,
                    output_tokens=routed.output_tokens,
                    baseline_output_tokens=baseline.output_tokens,
                    baseline_estimated=False,
                    cost_usd=cost,
                    success=routed.success and baseline.success,
                    expected_label=item.label.name,
                )
            )

    return BenchResult(
        savings=savings_vs_baseline(records),
        accuracy=routing_accuracy(predictions, labels),
        records=tuple(records),
        route_failures=failures,
        mean_decision_us=decision_total_us / max(len(predictions), 1),
    )
