"""Synthetic fixtures: separable labeled queries and Gaussian embedding clusters.

Run as a module to write a dataset file:
    python -m promptgate.fixtures --out data/queries.jsonl --n 1000
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import LabeledQuery
from .embedding import EMBEDDING_DIM
from .errors import ContractViolation
from .types import CANONICAL_TEMPLATES, Query, TemplateId

#: Routing mix used to calibrate the default mock provider profiles.
DEFAULT_TEMPLATE_MIX: dict[str, float] = {
    "verbose": 0.518,
    "standard": 0.285,
    "executive": 0.104,
    "minimal": 0.074,
    "technical": 0.019,
}

BALANCED_MIX: dict[str, float] = {t.name: 1.0 / len(CANONICAL_TEMPLATES) for t in CANONICAL_TEMPLATES}


def mix_counts(n: int, mix: Mapping[str, float]) -> dict[str, int]:
    """Largest-remainder integer allocation of ``n`` items over the mix."""
    total = sum(mix.values())
    if total <= 0:
        raise ContractViolation("mix weights must be positive")
    names = sorted(mix)
    ideals = {name: n * mix[name] / total for name in names}
    counts = {name: int(ideals[name]) for name in names}
    leftovers = n - sum(counts.values())
    by_remainder = sorted(names, key=lambda name: (-(ideals[name] - counts[name]), name))
    for i in range(leftovers):
        counts[by_remainder[i % len(names)]] += 1
    return counts


def make_gaussian_clusters(
    n: int = 2000,
    *,
    separation: float = 6.0,
    dim: int = EMBEDDING_DIM,
    seed: int = 0,
    centers_seed: int = 1234,
) -> tuple[np.ndarray, list[TemplateId]]:
    """Well-separated isotropic Gaussian clusters, one per known template.

    Cluster centers are random directions scaled by ``separation`` with unit
    noise, so in high dimension even a linear probe separates them easily.
    ``centers_seed`` fixes the cluster geometry independently of the draw
    seed, so different draws sample the same population.
    """
    centers_rng = np.random.default_rng(centers_seed)
    k = len(CANONICAL_TEMPLATES)
    centers = centers_rng.standard_normal((k, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    centers *= separation
    rng = np.random.default_rng(seed)
    assignments = rng.integers(0, k, size=n)
    X = centers[assignments] + rng.standard_normal((n, dim))
    labels = [CANONICAL_TEMPLATES[i] for i in assignments]
    return X, labels


_WORDS_PER_CLASS = 12
_WORDS_PER_QUERY = 20


def make_labeled_queries(
    n: int = 1000,
    *,
    mix: Mapping[str, float] | None = None,
    seed: int = 0,
    id_prefix: str = "q",
) -> list[LabeledQuery]:
    """Synthetic queries whose class vocabulary makes them separable under
    the local test embedder: each class draws from its own word pool."""
    if mix is None:
        mix = DEFAULT_TEMPLATE_MIX
    counts = mix_counts(n, mix)
    rng = np.random.default_rng(seed)
    items: list[LabeledQuery] = []
    serial = 0
    for name in sorted(counts):
        label = TemplateId(name)
        pool = [f"{name}-{j:02d}" for j in range(_WORDS_PER_CLASS)]
        for _ in range(counts[name]):
            # Texts draw only from the closed class vocabulary: one-off
            # tokens would hash into rare features whose tiny training
            # variance the standardizer then blows up into pure noise.
            length = int(rng.integers(_WORDS_PER_QUERY - 5, _WORDS_PER_QUERY + 6))
            words = [pool[int(w)] for w in rng.integers(0, _WORDS_PER_CLASS, length)]
            text = " ".join(words)
            items.append(
                LabeledQuery(query=Query(id=f"{id_prefix}{serial}", text=text), label=label)
            )
            serial += 1
    # Interleave classes deterministically so file order carries no signal.
    order = rng.permutation(len(items))
    return [items[i] for i in order]


def write_dataset_jsonl(items: Sequence[LabeledQuery], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(
                json.dumps(
                    {
                        "id": item.query.id,
                        "text": item.query.text,
                        "label": item.label.name,
                        "subject": item.subject,
                    }
                )
                + "\n"
            )


def main() -> None:
    import argparse

    parser = argparse.ArgumentParser(description="Write a synthetic labeled dataset")
    parser.add_argument("--out", required=True)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--balanced", action="store_true",
                        help="equal class shares instead of the production mix")
    args = parser.parse_args()
    items = make_labeled_queries(
        args.n, mix=BALANCED_MIX if args.balanced else None, seed=args.seed
    )
    write_dataset_jsonl(items, args.out)
    print(f"wrote {len(items)} queries to {args.out}")


if __name__ == "__main__":
    main()
