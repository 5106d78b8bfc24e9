"""Template registry with dual-layer output control.

Each template pairs a system prompt (soft steering) with a hard
``max_tokens`` cap forwarded to the provider API, so output length is
bounded even when the model ignores the prompt. Unknown template names
fall back to a 1000-token safety cap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ContractViolation, DatasetError
from .types import CANONICAL_TEMPLATES, Query, TemplateId, TemplateSpec

DEFAULT_UNKNOWN_CAP = 1000
UNKNOWN_SYSTEM_PROMPT = "Answer the question."

_DEFAULT_SPECS: dict[str, tuple[str, int]] = {
    "minimal": ("Answer briefly and directly", 50),
    "executive": ("Summarize the answer for a decision-maker in a few sentences.", 150),
    "standard": ("Explain your answer step by step, concisely.", 200),
    "technical": ("Answer with precise technical detail and terminology.", 400),
    "verbose": (
        "Give a comprehensive, detailed explanation with examples and context",
        500,
    ),
}


@dataclass(frozen=True)
class PromptBundle:
    """A fully rendered request: prompts plus the hard token cap."""

    system_prompt: str
    user_prompt: str
    max_tokens: int

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ContractViolation("max_tokens must be positive")


class TemplateRegistry:
    """Immutable mapping from the five known templates to their specs."""

    def __init__(
        self,
        specs: Mapping[TemplateId, TemplateSpec] | None = None,
        default_cap: int = DEFAULT_UNKNOWN_CAP,
    ):
        if specs is None:
            specs = {
                TemplateId(name): TemplateSpec(
                    id=TemplateId(name),
                    system_prompt=prompt,
                    token_cap=cap,
                    mean_tokens=float(cap),
                )
                for name, (prompt, cap) in _DEFAULT_SPECS.items()
            }
        missing = [t.name for t in CANONICAL_TEMPLATES if t not in specs]
        if missing:
            raise ContractViolation(f"registry is missing templates: {missing}")
        extra = [t.name for t in specs if not t.is_known]
        if extra:
            raise ContractViolation(f"registry contains unknown templates: {extra}")
        if default_cap <= 0:
            raise ContractViolation("default_cap must be positive")
        self._specs = dict(specs)
        self._default_cap = default_cap

    @property
    def default_cap(self) -> int:
        return self._default_cap

    def spec(self, template: TemplateId) -> TemplateSpec | None:
        return self._specs.get(template)

    def token_cap(self, template: TemplateId) -> int:
        spec = self._specs.get(template)
        return spec.token_cap if spec is not None else self._default_cap

    def mean_tokens(self, template: TemplateId) -> float:
        spec = self._specs.get(template)
        return spec.mean_tokens if spec is not None else float(self._default_cap)

    def system_prompt(self, template: TemplateId) -> str:
        spec = self._specs.get(template)
        return spec.system_prompt if spec is not None else UNKNOWN_SYSTEM_PROMPT

    def render_prompt(self, query: Query, template: TemplateId) -> PromptBundle:
        """Build the provider request: registry prompt verbatim, query text untouched."""
        return PromptBundle(
            system_prompt=self.system_prompt(template),
            user_prompt=query.text,
            max_tokens=self.token_cap(template),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "TemplateRegistry":
        """Load overrides on top of the defaults.

        The file is JSON mapping template name to any of
        ``{"system_prompt", "max_tokens", "mean_tokens"}``.
        """
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DatasetError(f"template config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise DatasetError(f"template config {path}: expected a JSON object")
        base = cls()
        specs = dict(base._specs)
        for name, fields in raw.items():
            tid = TemplateId(name)
            if not tid.is_known:
                raise DatasetError(f"template config {path}: unknown template {name!r}")
            current = specs[tid]
            cap = int(fields.get("max_tokens", current.token_cap))
            specs[tid] = TemplateSpec(
                id=tid,
                system_prompt=str(fields.get("system_prompt", current.system_prompt)),
                token_cap=cap,
                mean_tokens=float(fields.get("mean_tokens", cap)),
            )
        return cls(specs, default_cap=base._default_cap)


DEFAULT_REGISTRY = TemplateRegistry()


def token_cap(template: TemplateId) -> int:
    """Hard cap for a template under the default registry; unknown names get 1000."""
    return DEFAULT_REGISTRY.token_cap(template)


def render_prompt(query: Query, template: TemplateId) -> PromptBundle:
    """Render against the default registry."""
    return DEFAULT_REGISTRY.render_prompt(query, template)
