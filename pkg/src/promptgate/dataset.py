"""Labeled-query datasets: JSONL/CSV ingestion and deterministic stratified splits."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ContractViolation, DatasetError, StratificationError
from .types import Query, TemplateId


@dataclass(frozen=True)
class LabeledQuery:
    query: Query
    label: TemplateId
    subject: str | None = None

    def __post_init__(self) -> None:
        if not self.label.is_known:
            raise ContractViolation(f"label {self.label.name!r} is not a known template")


@dataclass(frozen=True)
class SplitSpec:
    """Stratified split fractions; they must sum to 1."""

    train: float = 0.7
    validation: float = 0.1
    test: float = 0.2
    seed: int = 42

    def __post_init__(self) -> None:
        if min(self.train, self.validation, self.test) <= 0:
            raise ContractViolation("split fractions must be positive")
        if abs(self.train + self.validation + self.test - 1.0) > 1e-9:
            raise ContractViolation("split fractions must sum to 1")


def _row_to_item(row: dict, line_no: int, seen_ids: set[str]) -> LabeledQuery:
    try:
        raw_id = str(row["id"])
        text = str(row["text"])
        label = TemplateId(str(row["label"]))
    except KeyError as exc:
        raise DatasetError(f"line {line_no}: missing field {exc}") from exc
    if not label.is_known:
        raise DatasetError(f"line {line_no}: unknown label {label.name!r}")
    if raw_id in seen_ids:
        warnings.warn(f"line {line_no}: duplicate id {raw_id!r}, suffixing", stacklevel=3)
        suffix = 2
        while f"{raw_id}#{suffix}" in seen_ids:
            suffix += 1
        raw_id = f"{raw_id}#{suffix}"
    seen_ids.add(raw_id)
    try:
        query = Query(id=raw_id, text=text)
    except ContractViolation as exc:
        raise DatasetError(f"line {line_no}: {exc}") from exc
    subject = row.get("subject")
    return LabeledQuery(query=query, label=label, subject=str(subject) if subject else None)


def load_dataset(path: str | Path, fmt: str | None = None) -> list[LabeledQuery]:
    """Load and validate a labeled dataset.

    ``fmt`` is ``"jsonl"`` or ``"csv"``; by default it is inferred from the
    suffix. Rows with unknown labels or empty text are rejected with their
    line number; duplicate ids are kept with a warning and a ``#n`` suffix.
    """
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if fmt not in ("jsonl", "csv"):
        raise ContractViolation(f"format must be 'jsonl' or 'csv', got {fmt!r}")

    items: list[LabeledQuery] = []
    seen_ids: set[str] = set()
    try:
        raw_text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"{path}: {exc}") from exc

    if fmt == "jsonl":
        for line_no, line in enumerate(raw_text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}: line {line_no}: {exc}") from exc
            if not isinstance(row, dict):
                raise DatasetError(f"{path}: line {line_no}: expected a JSON object")
            items.append(_row_to_item(row, line_no, seen_ids))
    else:
        reader = csv.DictReader(raw_text.splitlines())
        for line_no, row in enumerate(reader, start=2):  # header is line 1
            items.append(_row_to_item(row, line_no, seen_ids))
    return items


def _allocate(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    """Largest-remainder allocation of ``n`` items to (train, val, test).

    Ties and leftovers go to train first, then validation, then test.
    """
    fractions = (spec.train, spec.validation, spec.test)
    ideals = [f * n for f in fractions]
    floors = [int(i) for i in ideals]
    remainder = n - sum(floors)
    by_remainder = sorted(range(3), key=lambda i: (-(ideals[i] - floors[i]), i))
    for i in range(remainder):
        floors[by_remainder[i]] += 1
    return floors[0], floors[1], floors[2]


def stratified_split(
    data: Sequence[LabeledQuery], spec: SplitSpec = SplitSpec()
) -> tuple[list[LabeledQuery], list[LabeledQuery], list[LabeledQuery]]:
    """Deterministic per-class split into train/validation/test.

    Each class is permuted with the seeded generator and sliced by
    largest-remainder allocation, so per-class proportions stay within one
    item of the global fractions and the partitions are disjoint and
    exhaustive.
    """
    by_class: dict[str, list[int]] = {}
    for i, item in enumerate(data):
        by_class.setdefault(item.label.name, []).append(i)
    for name, members in sorted(by_class.items()):
        if len(members) < 3:
            raise StratificationError(
                f"class {name!r} has {len(members)} members; need >= 3 to stratify"
            )

    rng = np.random.default_rng(spec.seed)
    train: list[LabeledQuery] = []
    validation: list[LabeledQuery] = []
    test: list[LabeledQuery] = []
    for name in sorted(by_class):
        members = np.array(by_class[name])
        members = members[rng.permutation(members.size)]
        n_train, n_val, n_test = _allocate(members.size, spec)
        # Allocation can zero out a tiny class's val/test share; the >= 3
        # precondition guarantees at least one candidate to steal from train.
        if n_val == 0:
            n_train -= 1
            n_val += 1
        if n_test == 0:
            n_train -= 1
            n_test += 1
        train.extend(data[i] for i in members[:n_train])
        validation.extend(data[i] for i in members[n_train : n_train + n_val])
        test.extend(data[i] for i in members[n_train + n_val :])
    return train, validation, test
