"""Embedded provider pricing table and cost-parameter derivation."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ContractViolation, DatasetError
from .templates import TemplateRegistry
from .types import CANONICAL_TEMPLATES, VERBOSE, CostParams, ProviderPricing

PRICING_TABLE_VERSION = 1

#: Embedded default routing cost: roughly $0.40 per million queries of
#: embedding-API spend.
ROUTING_USD_PER_QUERY = 4.0e-7

#: (provider, tier) -> pricing. Two tiers per provider, 2025 list prices.
PRICING_PRESETS: dict[tuple[str, str], ProviderPricing] = {
    ("openai", "lower"): ProviderPricing("openai", "gpt-4o-mini", 0.15, 0.60),
    ("openai", "higher"): ProviderPricing("openai", "gpt-4o", 2.50, 10.00),
    ("gemini", "lower"): ProviderPricing("gemini", "gemini-2.0-flash-lite", 0.00, 0.00),
    ("gemini", "higher"): ProviderPricing("gemini", "gemini-2.5-pro", 1.25, 10.00),
    ("anthropic", "lower"): ProviderPricing("anthropic", "claude-3-haiku", 0.25, 1.25),
    ("anthropic", "higher"): ProviderPricing("anthropic", "claude-sonnet-4", 3.00, 15.00),
}


def pricing_for(provider: str, tier: str = "lower") -> ProviderPricing:
    try:
        return PRICING_PRESETS[(provider, tier)]
    except KeyError:
        raise ContractViolation(f"no pricing preset for ({provider!r}, {tier!r})") from None


def load_pricing_file(path: str | Path) -> dict[tuple[str, str], ProviderPricing]:
    """Load a pricing table from JSON, replacing matching preset rows.

    Schema: ``{"version": 1, "rows": [{"provider", "tier", "model",
    "input_usd_per_mtok", "output_usd_per_mtok"}, ...]}``.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"pricing config {path}: {exc}") from exc
    if raw.get("version") != PRICING_TABLE_VERSION:
        raise DatasetError(
            f"pricing config {path}: unsupported version {raw.get('version')!r}"
        )
    table = dict(PRICING_PRESETS)
    for i, row in enumerate(raw.get("rows", [])):
        try:
            table[(row["provider"], row.get("tier", "lower"))] = ProviderPricing(
                provider=row["provider"],
                model=row["model"],
                input_usd_per_mtok=float(row["input_usd_per_mtok"]),
                output_usd_per_mtok=float(row["output_usd_per_mtok"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"pricing config {path}: row {i}: {exc}") from exc
    return table


def cost_params_from_pricing(
    pricing: ProviderPricing,
    registry: TemplateRegistry,
    *,
    fallback_usd: float | None = None,
    routing_usd_per_query: float = ROUTING_USD_PER_QUERY,
) -> CostParams:
    """Derive per-template expected costs from output pricing.

    c(t) = (output price per token) * mean output tokens of t. The
    fallback defaults to the verbose template's cost, the safe choice a
    misroute is assumed to be retried with.
    """
    alpha = pricing.output_usd_per_mtok / 1_000_000.0
    per_template = tuple(
        alpha * registry.mean_tokens(template) for template in CANONICAL_TEMPLATES
    )
    if fallback_usd is None:
        fallback_usd = alpha * registry.mean_tokens(VERBOSE)
    return CostParams(
        per_template_usd=per_template,
        fallback_usd=fallback_usd,
        routing_usd_per_query=routing_usd_per_query,
    )
