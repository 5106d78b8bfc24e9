"""Query embedding: a deterministic local backend, a remote HTTP backend, and
cache-first lookup so each unique text is embedded at most once."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol, Sequence

import httpx
import numpy as np

from .errors import AuthError, ContractViolation, IntegrityError, TransportError
from .types import Query

if TYPE_CHECKING:
    from .embed_cache import EmbeddingCache

EMBEDDING_DIM = 1536


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """A fixed-dimension embedding tagged with the backend that produced it."""

    values: np.ndarray
    model_tag: str

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (EMBEDDING_DIM,):
            raise IntegrityError(
                f"embedding has shape {arr.shape}, expected ({EMBEDDING_DIM},)"
            )
        if not np.all(np.isfinite(arr)):
            raise IntegrityError("embedding contains non-finite values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


def normalize_text(text: str) -> str:
    """Trim and collapse internal whitespace. Case is preserved."""
    return " ".join(text.split())


def cache_key(text: str, model_tag: str) -> bytes:
    """256-bit content hash of (normalized text, backend tag)."""
    h = hashlib.sha256()
    h.update(normalize_text(text).encode("utf-8"))
    h.update(b"\x00")
    h.update(model_tag.encode("utf-8"))
    return h.digest()


class Embedder(Protocol):
    """An embedding backend."""

    model_tag: str

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class LocalTestEmbedder:
    """Deterministic offline embedder: hashed character trigrams, L2-normalized.

    Output depends only on the text (and the constructor seed), never on the
    platform, so every test and offline deployment can run without network.
    Empty or whitespace-only text maps to the all-zeros sentinel vector,
    which is exempt from the unit-norm property.
    """

    def __init__(self, seed: int = 0):
        self._seed = seed
        self.model_tag = f"local-test-v1:{seed}"

    def _embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(EMBEDDING_DIM, dtype=np.float64)
        norm_text = normalize_text(text)
        if not norm_text:
            return vec
        seed_bytes = self._seed.to_bytes(8, "little", signed=True)
        grams = (
            [norm_text[i : i + 3] for i in range(len(norm_text) - 2)]
            if len(norm_text) >= 3
            else [norm_text]
        )
        for gram in grams:
            digest = hashlib.blake2b(
                gram.encode("utf-8"), digest_size=16, key=seed_bytes
            ).digest()
            index = int.from_bytes(digest[:8], "little") % EMBEDDING_DIM
            sign = 1.0 if digest[8] & 1 else -1.0
            vec[index] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self._embed_one(t) for t in texts]


_DEFAULT_LOCAL = LocalTestEmbedder()


def local_test_embed(text: str) -> EmbeddingVector:
    """Embed with the default seed-0 local backend."""
    return EmbeddingVector(_DEFAULT_LOCAL.embed_texts([text])[0], _DEFAULT_LOCAL.model_tag)


class RemoteEmbedder:
    """Client for an OpenAI-style ``/embeddings`` JSON endpoint.

    The auth token is read from ``api_key_env`` at call time; requests are
    batched up to ``batch_size`` texts per call.
    """

    def __init__(
        self,
        base_url: str,
        model: str = "text-embedding-3-small",
        *,
        api_key_env: str = "PROMPTGATE_EMBED_API_KEY",
        timeout_s: float = 30.0,
        batch_size: int = 64,
        transport: httpx.BaseTransport | None = None,
    ):
        if batch_size < 1:
            raise ContractViolation("batch_size must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.batch_size = batch_size
        self.model_tag = f"remote:{model}"
        self._client = httpx.Client(timeout=timeout_s, transport=transport)

    def _post_batch(self, batch: list[str]) -> list[np.ndarray]:
        headers = {}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            resp = self._client.post(
                f"{self.base_url}/embeddings",
                json={"model": self.model, "input": batch},
                headers=headers,
            )
        except httpx.TimeoutException as exc:
            raise TransportError(f"embedding backend timeout: {exc}") from exc
        except httpx.HTTPError as exc:
            raise TransportError(f"embedding backend unreachable: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"embedding backend rejected credentials ({resp.status_code})")
        if resp.status_code >= 500 or resp.status_code == 429:
            raise TransportError(f"embedding backend error {resp.status_code}")
        if resp.status_code != 200:
            raise TransportError(
                f"embedding backend error {resp.status_code}", retryable=False
            )
        try:
            items = resp.json()["data"]
            vectors = [np.asarray(item["embedding"], dtype=np.float64) for item in items]
        except (KeyError, TypeError, ValueError) as exc:
            raise IntegrityError(f"malformed embedding response: {exc}") from exc
        if len(vectors) != len(batch):
            raise IntegrityError(
                f"embedding backend returned {len(vectors)} vectors for {len(batch)} texts"
            )
        for v in vectors:
            if v.shape != (EMBEDDING_DIM,):
                raise IntegrityError(
                    f"embedding backend returned dimension {v.shape}, "
                    f"expected ({EMBEDDING_DIM},)"
                )
        return vectors

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            out.extend(self._post_batch(list(texts[start : start + self.batch_size])))
        return out


def embed(
    query: Query, backend: Embedder, cache: "EmbeddingCache | None" = None
) -> EmbeddingVector:
    """Cache-first embedding of one query.

    On a miss the backend is called and the result stored, so identical
    text (after whitespace normalization) with the same backend yields a
    bit-identical vector from then on.
    """
    key = cache_key(query.text, backend.model_tag)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    vec = EmbeddingVector(backend.embed_texts([query.text])[0], backend.model_tag)
    if cache is not None:
        cache.put(key, vec)
    return vec


def embed_batch(
    queries: Sequence[Query], backend: Embedder, cache: "EmbeddingCache | None" = None
) -> list[EmbeddingVector]:
    """Embed many queries, fetching only cache misses (one batched call)."""
    keys = [cache_key(q.text, backend.model_tag) for q in queries]
    results: list[EmbeddingVector | None] = [None] * len(queries)
    miss_indices: list[int] = []
    for i, key in enumerate(keys):
        hit = cache.get(key) if cache is not None else None
        if hit is not None:
            results[i] = hit
        else:
            miss_indices.append(i)
    if miss_indices:
        fetched = backend.embed_texts([queries[i].text for i in miss_indices])
        for i, raw in zip(miss_indices, fetched):
            vec = EmbeddingVector(raw, backend.model_tag)
            if cache is not None:
                cache.put(keys[i], vec)
            results[i] = vec
    return [r for r in results if r is not None]
