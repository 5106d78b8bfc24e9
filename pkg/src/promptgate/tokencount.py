"""Token counting: pluggable schemes plus a documented built-in approximation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol


class TokenizerScheme(Protocol):
    """Anything that can turn text into a deterministic token count."""

    name: str

    def count(self, text: str) -> int: ...


@dataclass(frozen=True)
class ApproxScheme:
    """Built-in BPE-free approximation.

    count = max(ceil(chars / 4), floor(words * 4 / 3)); empty text counts 0.
    The character side tracks prose (roughly 4 chars per token), the word
    side tracks dense/symbolic text where short words each cost a token.
    Both sides are monotone under concatenation, so the max is too.
    """

    name: str = "approx-v1"

    def count(self, text: str) -> int:
        if not text:
            return 0
        chars = len(text)
        words = len(text.split())
        return max(math.ceil(chars / 4), (words * 4) // 3)


BUILTIN_SCHEME = ApproxScheme()


def count_tokens(text: str, scheme: TokenizerScheme = BUILTIN_SCHEME) -> int:
    """Deterministic token count of ``text`` under ``scheme``."""
    return scheme.count(text)


_FILLER_WORDS = ("tokens", "filler", "sample", "output", "budget", "stride")


@lru_cache(maxsize=4096)
def filler_text(n_tokens: int) -> str:
    """Deterministic filler whose built-in token count is exactly ``n_tokens``.

    Six-letter words keep the character side of the approximation dominant,
    so the tail can be tuned one character at a time.
    """
    if n_tokens <= 0:
        return ""
    parts: list[str] = []
    i = 0
    while True:
        candidate = parts + [_FILLER_WORDS[i % len(_FILLER_WORDS)]]
        if BUILTIN_SCHEME.count(" ".join(candidate)) > n_tokens:
            break
        parts = candidate
        i += 1
        if BUILTIN_SCHEME.count(" ".join(parts)) == n_tokens:
            return " ".join(parts)
    text = " ".join(parts) if parts else "to"
    while BUILTIN_SCHEME.count(text) < n_tokens:
        text += "x"
    return text
