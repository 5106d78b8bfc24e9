"""Closed-form cost mathematics: expected-cost selection and the generalization bound."""

from __future__ import annotations

import math
from typing import Sequence

from .errors import ContractViolation
from .types import CANONICAL_TEMPLATES, CostParams, ProbVector, TemplateId


def expected_cost(template_index: int, params: CostParams, probs: ProbVector) -> float:
    """Expected USD cost of committing to template ``i``.

    E[C_i] = c(t_i) * P[i] + c_fallback * (1 - P[i]): with probability P[i]
    the template is right and costs c(t_i); otherwise the safe fallback is
    assumed to be paid.
    """
    k = len(probs)
    if not 0 <= template_index < k:
        raise ContractViolation(f"template_index {template_index} out of range [0, {k})")
    if len(params.per_template_usd) != k:
        raise ContractViolation(
            f"cost table has {len(params.per_template_usd)} entries for {k} templates"
        )
    p = probs[template_index]
    return params.per_template_usd[template_index] * p + params.fallback_usd * (1.0 - p)


def select_cost_aware(
    params: CostParams,
    probs: ProbVector,
    templates: Sequence[TemplateId] = CANONICAL_TEMPLATES,
) -> tuple[TemplateId, float]:
    """Pick the template with minimal expected cost.

    Ties break toward the lowest index, i.e. the cheapest template in
    canonical order. Returns the winning id and its expected cost.
    """
    if len(templates) != len(probs):
        raise ContractViolation(
            f"{len(templates)} templates supplied for a {len(probs)}-entry distribution"
        )
    best_index = 0
    best_cost = math.inf
    for i in range(len(probs)):
        cost = expected_cost(i, params, probs)
        if cost < best_cost:
            best_cost = cost
            best_index = i
    return templates[best_index], best_cost


def pac_bound(empirical_loss: float, n: int, d_vc: float, delta: float) -> float:
    """Distribution-free upper bound on expected loss.

    bound = L_hat + sqrt((d_vc * ln(2n / d_vc) + ln(4 / delta)) / (2n)),
    holding with probability at least 1 - delta over n training samples
    for a hypothesis class of VC dimension d_vc.
    """
    if n <= 0:
        raise ContractViolation("n must be positive")
    if d_vc <= 0:
        raise ContractViolation("d_vc must be positive")
    if not 0.0 < delta < 1.0:
        raise ContractViolation("delta must lie in (0, 1)")
    if 2.0 * n / d_vc <= 1.0:
        raise ContractViolation("2n/d_vc must exceed 1 (log argument must be > 1)")
    radical = (d_vc * math.log(2.0 * n / d_vc) + math.log(4.0 / delta)) / (2.0 * n)
    return empirical_loss + math.sqrt(radical)


def projected_total_cost(
    n_queries: int, params: CostParams, per_query_generation_cost: float
) -> float:
    """Total cost of serving ``n_queries``: routing plus generation components."""
    if n_queries < 0:
        raise ContractViolation("n_queries must be >= 0")
    if per_query_generation_cost < 0:
        raise ContractViolation("per_query_generation_cost must be >= 0")
    return n_queries * params.routing_usd_per_query + n_queries * per_query_generation_cost
