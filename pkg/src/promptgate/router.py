"""Routing decisions: confidence-thresholded argmax with a verbose fallback,
or expected-cost minimization when cost parameters are configured."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .costs import expected_cost, select_cost_aware
from .embedding import Embedder, embed
from .errors import ContractViolation, PromptGateError
from .mlp.model import LabelCodec, MlpModel
from .types import (
    CANONICAL_TEMPLATES,
    K_TEMPLATES,
    VERBOSE,
    CostParams,
    ProbVector,
    Query,
    TemplateId,
)

if TYPE_CHECKING:
    from .embed_cache import EmbeddingCache

DEFAULT_CONFIDENCE_THRESHOLD = 0.3

MODE_ARGMAX = "argmax_with_fallback"
MODE_COST_AWARE = "cost_aware"

# A saturated softmax rounds to exactly 1.0 in float64 even though the true
# probability is strictly below 1. Comparing against the threshold one ulp
# under 1.0 keeps the ideal-arithmetic behavior: threshold 1.0 always falls
# back, and no comparison at any representable threshold < 1 is affected.
_JUST_BELOW_ONE = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class RouterConfig:
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    mode: str = MODE_ARGMAX
    cost_params: CostParams | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ContractViolation("confidence_threshold must lie in [0, 1]")
        if self.mode not in (MODE_ARGMAX, MODE_COST_AWARE):
            raise ContractViolation(f"unknown router mode {self.mode!r}")
        if (self.mode == MODE_COST_AWARE) != (self.cost_params is not None):
            raise ContractViolation("cost_params must be present iff mode is cost_aware")

    def with_threshold(self, threshold: float) -> "RouterConfig":
        return replace(self, confidence_threshold=threshold)


@dataclass(frozen=True)
class RouteResult:
    """One routing decision. ``confidence`` is max(probs); when the
    confidence fallback fired, ``template`` is always verbose."""

    template: TemplateId
    confidence: float
    probs: ProbVector
    fallback_applied: bool
    latency_us: float
    decision_us: float
    expected_cost: float | None = None


@dataclass(frozen=True)
class RouteFailure:
    """Per-item failure marker used by batch routing."""

    query_id: str
    error: PromptGateError


def canonical_probs(codec: LabelCodec, probs: np.ndarray) -> ProbVector:
    """Scatter codec-ordered probabilities into the canonical 5-slot vector."""
    values = np.zeros(K_TEMPLATES, dtype=np.float64)
    for i, label in enumerate(codec.labels):
        values[label.canonical_index] = probs[i]
    return ProbVector(values)


def decide(probs: ProbVector, cfg: RouterConfig) -> tuple[TemplateId, bool, float | None]:
    """The pure decision rule, shared by single and batch routing.

    Below the confidence threshold the verbose template is chosen
    unconditionally; otherwise argmax (ties to the cheapest template) or,
    in cost-aware mode, the expected-cost minimizer.
    """
    confidence = probs.max_value()
    if min(confidence, _JUST_BELOW_ONE) < cfg.confidence_threshold:
        cost = (
            expected_cost(VERBOSE.canonical_index, cfg.cost_params, probs)
            if cfg.cost_params is not None
            else None
        )
        return VERBOSE, True, cost
    if cfg.mode == MODE_COST_AWARE:
        assert cfg.cost_params is not None
        template, cost = select_cost_aware(cfg.cost_params, probs)
        return template, False, cost
    return CANONICAL_TEMPLATES[probs.max_index()], False, None


def route(
    query: Query,
    model: MlpModel,
    cfg: RouterConfig,
    embedder: Embedder,
    cache: "EmbeddingCache | None" = None,
) -> RouteResult:
    """Embed (cache-first), classify, and decide.

    Embedding failures propagate as transport errors; no template decision
    is fabricated here. The gateway layer owns the degradation policy.
    """
    t_start = time.perf_counter_ns()
    vector = embed(query, embedder, cache)
    t_embedded = time.perf_counter_ns()
    probs = canonical_probs(model.codec, model.predict_proba(vector.values))
    template, fallback, cost = decide(probs, cfg)
    t_done = time.perf_counter_ns()
    return RouteResult(
        template=template,
        confidence=probs.max_value(),
        probs=probs,
        fallback_applied=fallback,
        latency_us=(t_done - t_start) / 1000.0,
        decision_us=(t_done - t_embedded) / 1000.0,
        expected_cost=cost,
    )


def route_batch(
    queries: Sequence[Query],
    model: MlpModel,
    cfg: RouterConfig,
    embedder: Embedder,
    cache: "EmbeddingCache | None" = None,
) -> list[RouteResult | RouteFailure]:
    """Route each query independently; per-item failures do not stop the batch."""
    results: list[RouteResult | RouteFailure] = []
    for query in queries:
        try:
            results.append(route(query, model, cfg, embedder, cache))
        except PromptGateError as exc:
            results.append(RouteFailure(query_id=query.id, error=exc))
    return results
