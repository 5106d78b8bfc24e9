"""Token/cost ledger and report generation.

Savings are measured against the always-verbose counterfactual: for every
call the ledger stores the actual output tokens and the baseline output
tokens (measured from a paired verbose call in benchmark mode, estimated
from the provider's verbose mean in gateway mode).
"""

from __future__ import annotations

import csv
import json
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ContractViolation, DatasetError
from .types import ProviderPricing, TemplateId


@dataclass(frozen=True)
class UsageRecord:
    query_id: str
    provider: str
    template: str
    fallback: bool
    input_tokens: int
    output_tokens: int
    baseline_output_tokens: int
    baseline_estimated: bool
    cost_usd: float
    timestamp: float = field(default_factory=time.time)
    degraded: bool = False
    success: bool = True
    expected_label: str | None = None

    def __post_init__(self) -> None:
        if min(self.input_tokens, self.output_tokens, self.baseline_output_tokens) < 0:
            raise ContractViolation("token counts must be >= 0")
        if self.cost_usd < 0:
            raise ContractViolation("cost must be >= 0")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "UsageRecord":
        try:
            return cls(**json.loads(line))
        except (TypeError, ValueError) as exc:
            raise DatasetError(f"bad ledger line: {exc}") from exc


class Ledger:
    """Append-only usage log, optionally mirrored to a JSON-lines file."""

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._records: list[UsageRecord] = []

    def append(self, record: UsageRecord) -> None:
        with self._lock:
            self._records.append(record)
            if self._path is not None:
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(record.to_json() + "\n")

    def records(self) -> list[UsageRecord]:
        with self._lock:
            return list(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    @classmethod
    def load(cls, path: str | Path) -> "Ledger":
        ledger = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    ledger._records.append(UsageRecord.from_json(line))
        return ledger


@dataclass(frozen=True)
class TemplateHistogram:
    counts: dict[str, int]
    percents: dict[str, float]
    n: int


@dataclass(frozen=True)
class ProviderSavings:
    provider: str
    baseline_tokens: int
    actual_tokens: int
    tokens_saved: int
    percent_saved: float
    cost_usd: float
    invalid: bool = False


@dataclass(frozen=True)
class SavingsReport:
    providers: tuple[ProviderSavings, ...]
    total_baseline_tokens: int
    total_actual_tokens: int
    total_tokens_saved: int
    total_percent_saved: float
    total_cost_usd: float
    template_distribution: TemplateHistogram
    query_count: int


@dataclass(frozen=True)
class AccuracyReport:
    n: int
    correct: int
    accuracy: float
    class_labels: tuple[str, ...]
    confusion: tuple[tuple[int, ...], ...]  # rows: true label, cols: prediction


def cost_of_tokens(tokens: int, pricing: ProviderPricing, kind: str) -> float:
    """USD cost of ``tokens`` at the provider's per-million price."""
    if tokens < 0:
        raise ContractViolation("tokens must be >= 0")
    if kind == "input":
        price = pricing.input_usd_per_mtok
    elif kind == "output":
        price = pricing.output_usd_per_mtok
    else:
        raise ContractViolation(f"kind must be 'input' or 'output', got {kind!r}")
    return tokens * price / 1_000_000.0


def template_distribution(records: Iterable[UsageRecord | str]) -> TemplateHistogram:
    """Histogram of routed templates; accepts records or bare template names."""
    counts: dict[str, int] = {}
    for item in records:
        name = item.template if isinstance(item, UsageRecord) else str(item)
        counts[name] = counts.get(name, 0) + 1
    n = sum(counts.values())
    percents = {name: 100.0 * c / n for name, c in counts.items()} if n else {}
    return TemplateHistogram(counts=counts, percents=percents, n=n)


def savings_vs_baseline(
    records: Sequence[UsageRecord],
    *,
    include_degraded: bool = False,
) -> SavingsReport:
    """Per-provider and total savings against the always-verbose baseline.

    Degraded calls are excluded by default: they were forced to verbose by
    an outage, not routed, so counting them would overstate the baseline.
    A provider with a zero baseline but nonzero actual usage is flagged
    invalid rather than reported as a nonsense percentage.
    """
    kept = [r for r in records if r.success and (include_degraded or not r.degraded)]
    by_provider: dict[str, list[UsageRecord]] = {}
    for r in kept:
        by_provider.setdefault(r.provider, []).append(r)

    rows = []
    for provider in sorted(by_provider):
        provider_records = by_provider[provider]
        baseline = sum(r.baseline_output_tokens for r in provider_records)
        actual = sum(r.output_tokens for r in provider_records)
        saved = baseline - actual
        invalid = baseline == 0 and actual > 0
        percent = 100.0 * saved / baseline if baseline > 0 else (0.0 if invalid else 0.0)
        rows.append(
            ProviderSavings(
                provider=provider,
                baseline_tokens=baseline,
                actual_tokens=actual,
                tokens_saved=saved,
                percent_saved=percent,
                cost_usd=sum(r.cost_usd for r in provider_records),
                invalid=invalid,
            )
        )

    total_baseline = sum(r.baseline_tokens for r in rows)
    total_actual = sum(r.actual_tokens for r in rows)
    total_saved = total_baseline - total_actual
    return SavingsReport(
        providers=tuple(rows),
        total_baseline_tokens=total_baseline,
        total_actual_tokens=total_actual,
        total_tokens_saved=total_saved,
        total_percent_saved=100.0 * total_saved / total_baseline if total_baseline else 0.0,
        total_cost_usd=sum(r.cost_usd for r in rows),
        template_distribution=template_distribution(kept),
        query_count=len(kept),
    )


def routing_accuracy(
    predictions: Sequence[TemplateId | str], labels: Sequence[TemplateId | str]
) -> AccuracyReport:
    """Exact accuracy plus a complete confusion matrix (rows = true labels)."""
    if len(predictions) != len(labels):
        raise ContractViolation(
            f"{len(predictions)} predictions for {len(labels)} labels"
        )
    if not labels:
        raise ContractViolation("routing_accuracy needs at least one pair")
    preds = [str(p) for p in predictions]
    truth = [str(label) for label in labels]
    class_labels = tuple(sorted(set(preds) | set(truth)))
    index = {name: i for i, name in enumerate(class_labels)}
    matrix = [[0] * len(class_labels) for _ in class_labels]
    correct = 0
    for p, t in zip(preds, truth):
        matrix[index[t]][index[p]] += 1
        if p == t:
            correct += 1
    return AccuracyReport(
        n=len(truth),
        correct=correct,
        accuracy=correct / len(truth),
        class_labels=class_labels,
        confusion=tuple(tuple(row) for row in matrix),
    )


def _report_to_dict(report: SavingsReport) -> dict:
    return {
        "providers": [asdict(p) for p in report.providers],
        "total_baseline_tokens": report.total_baseline_tokens,
        "total_actual_tokens": report.total_actual_tokens,
        "total_tokens_saved": report.total_tokens_saved,
        "total_percent_saved": report.total_percent_saved,
        "total_cost_usd": report.total_cost_usd,
        "template_distribution": asdict(report.template_distribution),
        "query_count": report.query_count,
    }


def _report_from_dict(raw: dict) -> SavingsReport:
    return SavingsReport(
        providers=tuple(ProviderSavings(**p) for p in raw["providers"]),
        total_baseline_tokens=raw["total_baseline_tokens"],
        total_actual_tokens=raw["total_actual_tokens"],
        total_tokens_saved=raw["total_tokens_saved"],
        total_percent_saved=raw["total_percent_saved"],
        total_cost_usd=raw["total_cost_usd"],
        template_distribution=TemplateHistogram(**raw["template_distribution"]),
        query_count=raw["query_count"],
    )


_CSV_COLUMNS = (
    "provider",
    "baseline_tokens",
    "actual_tokens",
    "tokens_saved",
    "percent_saved",
    "cost_usd",
    "invalid",
)


def export_report(report: SavingsReport, fmt: str, path: str | Path) -> None:
    """Write a savings report. JSON keeps full precision and round-trips via
    ``load_report``; CSV has one row per provider plus a totals row, floats
    rounded to 6 decimals."""
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(_report_to_dict(report), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    elif fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_COLUMNS)
            for p in report.providers:
                writer.writerow([
                    p.provider, p.baseline_tokens, p.actual_tokens, p.tokens_saved,
                    f"{p.percent_saved:.6f}", f"{p.cost_usd:.6f}", int(p.invalid),
                ])
            writer.writerow([
                "TOTAL", report.total_baseline_tokens, report.total_actual_tokens,
                report.total_tokens_saved, f"{report.total_percent_saved:.6f}",
                f"{report.total_cost_usd:.6f}", 0,
            ])
    else:
        raise ContractViolation(f"unsupported report format {fmt!r}")


def load_report(path: str | Path) -> SavingsReport:
    """Load a JSON report written by ``export_report``."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return _report_from_dict(raw)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"report {path}: {exc}") from exc


def format_percent(value: float) -> str:
    """Percentages are printed to 0.1pp in human-facing summaries."""
    return f"{value:.1f}%"
