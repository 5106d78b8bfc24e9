"""Deterministic mock provider.

Output lengths are drawn from a clipped normal per template cap, with the
location solved so the post-clipping mean equals the profile's calibrated
mean. Response text is deterministic filler sized to the drawn token
count under the built-in counting scheme, so end-to-end accounting tests
run without any network.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from ..errors import ContractViolation
from ..tokencount import count_tokens, filler_text
from .base import BaseProviderClient, CompletionRequest, CompletionResponse

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _phi(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT2PI


def _Phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


def _clipped_mean(loc: float, sigma: float, lo: float, hi: float) -> float:
    a = (lo - loc) / sigma
    b = (hi - loc) / sigma
    return (
        lo * _Phi(a)
        + hi * (1.0 - _Phi(b))
        + loc * (_Phi(b) - _Phi(a))
        - sigma * (_phi(b) - _phi(a))
    )


@lru_cache(maxsize=512)
def _solve_location(target: float, sigma: float, lo: float, hi: float) -> float:
    """Location of a clipped normal whose post-clipping mean is ``target``."""
    if not lo < target < hi:
        raise ContractViolation(f"target mean {target} must lie strictly in ({lo}, {hi})")
    low, high = lo - 12.0 * sigma, hi + 12.0 * sigma
    for _ in range(200):
        mid = 0.5 * (low + high)
        if _clipped_mean(mid, sigma, lo, hi) < target:
            low = mid
        else:
            high = mid
    return 0.5 * (low + high)


@dataclass(frozen=True)
class ProviderProfile:
    """Mock generation behavior for one provider.

    ``cap_means`` maps a template's hard token cap (the only trace of the
    template visible on the wire) to the mean output length. Caps absent
    from the map default to ``unknown_mean_fraction`` of the cap.
    ``dispersion`` is the pre-clipping std as a fraction of the mean.
    """

    name: str
    cap_means: Mapping[int, float] = field(default_factory=dict)
    dispersion: float = 0.15
    seed: int = 7
    unknown_mean_fraction: float = 0.8

    def mean_for_cap(self, cap: int) -> float:
        mean = self.cap_means.get(cap)
        if mean is None:
            mean = self.unknown_mean_fraction * cap
        return min(float(mean), cap - 0.5) if cap > 1 else 1.0


# Calibrated to observed per-provider generation behavior: verbose-cap means
# are the measured always-verbose averages; the remaining caps are scaled so
# the production routing mix reproduces each provider's measured routed mean.
DEFAULT_PROFILES: dict[str, ProviderProfile] = {
    "openai": ProviderProfile(
        name="openai",
        cap_means={50: 45.3, 150: 135.9, 200: 181.3, 400: 362.5, 500: 498.0},
    ),
    "gemini": ProviderProfile(
        name="gemini",
        cap_means={50: 42.4, 150: 127.1, 200: 169.4, 400: 338.8, 500: 496.0},
    ),
    "anthropic": ProviderProfile(
        name="anthropic",
        cap_means={50: 42.5, 150: 127.5, 200: 170.0, 400: 340.0, 500: 455.0},
    ),
}


class MockProvider(BaseProviderClient):
    """Lock-free deterministic provider: the RNG is seeded per request."""

    def __init__(self, profile: ProviderProfile, **kwargs):
        super().__init__(**kwargs)
        self.profile = profile
        self.name = f"mock:{profile.name}"

    def _request_seed(self, request: CompletionRequest) -> int:
        h = hashlib.blake2b(digest_size=8, key=self.profile.seed.to_bytes(8, "little"))
        h.update(self.profile.name.encode("utf-8"))
        h.update(b"\x00")
        h.update(request.bundle.system_prompt.encode("utf-8"))
        h.update(b"\x00")
        h.update(request.bundle.user_prompt.encode("utf-8"))
        h.update(b"\x00")
        h.update(str(request.bundle.max_tokens).encode("ascii"))
        return int.from_bytes(h.digest(), "little")

    def sample_output_tokens(self, request: CompletionRequest) -> int:
        cap = request.bundle.max_tokens
        if cap <= 1:
            return 1
        mean = self.profile.mean_for_cap(cap)
        sigma = max(self.profile.dispersion * mean, 1e-6)
        loc = _solve_location(mean, sigma, 1.0, float(cap))
        rng = np.random.default_rng(self._request_seed(request))
        draw = loc + sigma * rng.standard_normal()
        return int(min(max(round(draw), 1), cap))

    def expected_output_tokens(self, cap: int) -> float:
        """Mean output length for a cap; the always-verbose baseline estimate."""
        return self.profile.mean_for_cap(cap)

    def _attempt(self, request: CompletionRequest) -> CompletionResponse:
        started = time.perf_counter()
        n_tokens = self.sample_output_tokens(request)
        text = filler_text(n_tokens)
        input_tokens = count_tokens(request.bundle.system_prompt) + count_tokens(
            request.bundle.user_prompt
        )
        output_tokens = count_tokens(text)
        return CompletionResponse(
            text=text,
            output_tokens=output_tokens,
            input_tokens=input_tokens,
            provider_reported_usage={
                "input_tokens": input_tokens,
                "output_tokens": output_tokens,
            },
            latency_ms=(time.perf_counter() - started) * 1000.0,
            success=True,
        )
