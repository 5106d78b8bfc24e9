"""Core domain types: queries, template identities, probabilities, cost parameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import ContractViolation

_KNOWN_TEMPLATE_NAMES = ("minimal", "executive", "standard", "technical", "verbose")


@dataclass(frozen=True)
class TemplateId:
    """Identity of a response template.

    The five known templates carry a canonical ordering by token cap,
    minimal < executive < standard < technical < verbose. Any other name
    is carried through as an "unknown" template so foreign configuration
    never crashes the gateway.
    """

    name: str

    @property
    def is_known(self) -> bool:
        return self.name in _KNOWN_TEMPLATE_NAMES

    @property
    def canonical_index(self) -> int:
        try:
            return _KNOWN_TEMPLATE_NAMES.index(self.name)
        except ValueError:
            raise ContractViolation(
                f"template {self.name!r} has no canonical index"
            ) from None

    def __str__(self) -> str:
        return self.name


MINIMAL = TemplateId("minimal")
EXECUTIVE = TemplateId("executive")
STANDARD = TemplateId("standard")
TECHNICAL = TemplateId("technical")
VERBOSE = TemplateId("verbose")

#: The five known templates in canonical (token-cap) order.
CANONICAL_TEMPLATES: tuple[TemplateId, ...] = (
    MINIMAL,
    EXECUTIVE,
    STANDARD,
    TECHNICAL,
    VERBOSE,
)
K_TEMPLATES = len(CANONICAL_TEMPLATES)


@dataclass(frozen=True)
class Query:
    """A single incoming query. ``text`` must be non-empty after trimming."""

    id: str
    text: str
    metadata: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ContractViolation(f"query {self.id!r}: text must be non-empty")


@dataclass(frozen=True)
class TemplateSpec:
    """A template's prompt plus its token economics.

    ``token_cap`` is the hard API-level limit; ``mean_tokens`` is the
    expected output length used for cost projection (defaults to the cap).
    """

    id: TemplateId
    system_prompt: str
    token_cap: int
    mean_tokens: float

    def __post_init__(self) -> None:
        if self.token_cap <= 0:
            raise ContractViolation(f"{self.id}: token_cap must be positive")
        if not 0 < self.mean_tokens <= self.token_cap:
            raise ContractViolation(
                f"{self.id}: mean_tokens must be in (0, token_cap]"
            )


@dataclass(frozen=True)
class ProviderPricing:
    """Per-million-token USD prices for one provider model."""

    provider: str
    model: str
    input_usd_per_mtok: float
    output_usd_per_mtok: float

    def __post_init__(self) -> None:
        if self.input_usd_per_mtok < 0 or self.output_usd_per_mtok < 0:
            raise ContractViolation(f"{self.provider}/{self.model}: prices must be >= 0")


class ProbVector:
    """An immutable probability distribution over templates in canonical order.

    Entries must lie in [0, 1] and sum to 1 within ``SUM_TOLERANCE``.
    """

    SUM_TOLERANCE = 1e-9

    __slots__ = ("_values",)

    def __init__(self, values: Sequence[float] | np.ndarray):
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ContractViolation("probability vector must be 1-D and non-empty")
        if not np.all(np.isfinite(arr)):
            raise ContractViolation("probability vector has non-finite entries")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ContractViolation("probability entries must lie in [0, 1]")
        if abs(float(arr.sum()) - 1.0) > self.SUM_TOLERANCE:
            raise ContractViolation(
                f"probabilities sum to {arr.sum():.12f}, expected 1 within "
                f"{self.SUM_TOLERANCE}"
            )
        arr.flags.writeable = False
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    def max_index(self) -> int:
        """Index of the largest entry; ties resolve to the lowest index."""
        return int(np.argmax(self._values))

    def max_value(self) -> float:
        return float(self._values[self.max_index()])

    def __len__(self) -> int:
        return int(self._values.size)

    def __getitem__(self, i: int) -> float:
        return float(self._values[i])

    def __iter__(self) -> Iterator[float]:
        return iter(self._values.tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProbVector):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    def __repr__(self) -> str:
        return f"ProbVector({self._values.tolist()})"


@dataclass(frozen=True)
class CostParams:
    """Per-template expected generation costs plus fallback and routing costs (USD)."""

    per_template_usd: tuple[float, ...]
    fallback_usd: float
    routing_usd_per_query: float = 0.0

    def __post_init__(self) -> None:
        if len(self.per_template_usd) < 1:
            raise ContractViolation("per_template_usd must have at least one entry")
        if any(c < 0 for c in self.per_template_usd):
            raise ContractViolation("template costs must be >= 0")
        if self.fallback_usd < 0 or self.routing_usd_per_query < 0:
            raise ContractViolation("fallback and routing costs must be >= 0")
