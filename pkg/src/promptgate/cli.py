"""Command-line interface: train | evaluate | route | bench | serve | report."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .accounting import Ledger, export_report, format_percent, savings_vs_baseline
from .benchharness import run_bench
from .dataset import SplitSpec, load_dataset, stratified_split
from .embed_cache import EmbeddingCache
from .embedding import LocalTestEmbedder, embed_batch
from .errors import PromptGateError
from .gateway import GatewayConfig, _build_provider, _pricing_key
from .mlp import TrainConfig, load_model, save_model, train_mlp
from .mlp.kernels import backend_name
from .mlp.train import holdout_accuracy
from .pricing import PRICING_PRESETS, cost_params_from_pricing, pricing_for
from .router import MODE_COST_AWARE, RouterConfig, RouteFailure, route, route_batch
from .templates import TemplateRegistry
from .types import Query


@click.group()
def main() -> None:
    """Cost-aware routing gateway for LLM queries."""


def _load_cache(path: str | None) -> EmbeddingCache:
    return EmbeddingCache(path) if path else EmbeddingCache()


def _embed_items(items, embedder, cache):
    vectors = embed_batch([item.query for item in items], embedder, cache)
    X = np.stack([v.values for v in vectors])
    labels = [item.label for item in items]
    return X, labels


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--out", "model_path", required=True, type=click.Path())
@click.option("--cache", "cache_path", default=None, type=click.Path())
@click.option("--report", "report_path", default=None, type=click.Path())
@click.option("--seed", default=42, show_default=True)
@click.option("--split-seed", default=42, show_default=True)
@click.option("--max-epochs", default=200, show_default=True)
@click.option("--batch-size", default=64, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
@click.option("--l2-alpha", default=0.01, show_default=True)
@click.option("--patience", default=10, show_default=True)
@click.option("--hidden", default="512,256,128", show_default=True)
def train(data_path, model_path, cache_path, report_path, seed, split_seed,
          max_epochs, batch_size, learning_rate, l2_alpha, patience, hidden):
    """Train the routing classifier on a labeled dataset file."""
    try:
        data = load_dataset(data_path)
        train_items, val_items, test_items = stratified_split(data, SplitSpec(seed=split_seed))
        embedder = LocalTestEmbedder()
        cache = _load_cache(cache_path)
        X_train, y_train = _embed_items(train_items, embedder, cache)
        X_val, y_val = _embed_items(val_items, embedder, cache)
        X_test, y_test = _embed_items(test_items, embedder, cache)

        cfg = TrainConfig(
            l2_alpha=l2_alpha,
            learning_rate=learning_rate,
            batch_size=batch_size,
            max_epochs=max_epochs,
            patience=patience,
            seed=seed,
            hidden_sizes=tuple(int(h) for h in hidden.split(",")),
        )
        model, train_report = train_mlp(X_train, y_train, cfg, X_val=X_val, labels_val=y_val)
        save_model(model, model_path)
        accuracy = holdout_accuracy(model, X_test, y_test)
    except PromptGateError as exc:
        raise click.ClickException(str(exc)) from exc

    summary = {
        "model_path": str(model_path),
        "epochs_run": train_report.epochs_run,
        "final_train_loss": train_report.final_train_loss,
        "best_validation_loss": train_report.best_validation_loss,
        "wall_seconds": train_report.wall_seconds,
        "seed": train_report.seed,
        "holdout_accuracy": accuracy,
        "n_train": len(train_items),
        "n_validation": len(val_items),
        "n_test": len(test_items),
        "kernel_backend": backend_name(),
    }
    if report_path:
        Path(report_path).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    click.echo(
        f"trained {train_report.epochs_run} epochs in {train_report.wall_seconds:.1f}s "
        f"(backend={backend_name()}), held-out accuracy "
        f"{format_percent(100.0 * accuracy)}, model -> {model_path}"
    )


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--cache", "cache_path", default=None, type=click.Path())
@click.option("--threshold", default=0.3, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path())
def evaluate(model_path, data_path, cache_path, threshold, out_path):
    """Measure routing accuracy of a trained model against labels."""
    from .accounting import routing_accuracy

    try:
        model = load_model(model_path)
        data = load_dataset(data_path)
        cfg = RouterConfig(confidence_threshold=threshold)
        outcomes = route_batch(
            [item.query for item in data], model, cfg, LocalTestEmbedder(), _load_cache(cache_path)
        )
        pairs = [
            (outcome.template.name, item.label.name)
            for item, outcome in zip(data, outcomes)
            if not isinstance(outcome, RouteFailure)
        ]
        if not pairs:
            raise click.ClickException("no queries could be routed")
        report = routing_accuracy([p for p, _ in pairs], [t for _, t in pairs])
    except PromptGateError as exc:
        raise click.ClickException(str(exc)) from exc

    payload = {
        "n": report.n,
        "correct": report.correct,
        "accuracy": report.accuracy,
        "class_labels": list(report.class_labels),
        "confusion": [list(row) for row in report.confusion],
    }
    if out_path:
        Path(out_path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    click.echo(
        f"routing accuracy {format_percent(100.0 * report.accuracy)} "
        f"({report.correct}/{report.n})"
    )


@main.command(name="route")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--text", required=True)
@click.option("--threshold", default=0.3, show_default=True)
@click.option("--mode", default="argmax_with_fallback", show_default=True,
              type=click.Choice(["argmax_with_fallback", "cost_aware"]))
@click.option("--pricing-provider", default="openai", show_default=True,
              help="pricing preset used in cost_aware mode")
def route_cmd(model_path, text, threshold, mode, pricing_provider):
    """Route a single query and print the decision."""
    try:
        model = load_model(model_path)
        if mode == MODE_COST_AWARE:
            params = cost_params_from_pricing(pricing_for(pricing_provider), TemplateRegistry())
            cfg = RouterConfig(confidence_threshold=threshold, mode=mode, cost_params=params)
        else:
            cfg = RouterConfig(confidence_threshold=threshold)
        result = route(Query(id="cli", text=text), model, cfg, LocalTestEmbedder())
    except PromptGateError as exc:
        raise click.ClickException(str(exc)) from exc
    line = f"{result.template.name} confidence={result.confidence:.4f}"
    if result.fallback_applied:
        line += " (fallback)"
    if result.expected_cost is not None:
        line += f" expected_cost=${result.expected_cost:.6f}"
    click.echo(line)


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--providers", default="mock:openai,mock:gemini,mock:anthropic",
              show_default=True)
@click.option("--cache", "cache_path", default=None, type=click.Path())
@click.option("--threshold", default=0.3, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--csv", "csv_path", default=None, type=click.Path())
@click.option("--ledger", "ledger_path", default=None, type=click.Path())
def bench(model_path, data_path, providers, cache_path, threshold, out_path, csv_path,
          ledger_path):
    """Paired routed-vs-verbose benchmark against the chosen providers."""
    try:
        model = load_model(model_path)
        data = load_dataset(data_path)
        clients = {spec: _build_provider(spec) for spec in providers.split(",") if spec}
        pricing = {}
        for name in clients:
            key = (_pricing_key(name), "lower")
            if key in PRICING_PRESETS:
                pricing[name] = PRICING_PRESETS[key]
        result = run_bench(
            data,
            model,
            clients,
            router_cfg=RouterConfig(confidence_threshold=threshold),
            embedder=LocalTestEmbedder(),
            cache=_load_cache(cache_path),
            pricing=pricing,
        )
    except PromptGateError as exc:
        raise click.ClickException(str(exc)) from exc

    if ledger_path:
        ledger = Ledger(ledger_path)
        for record in result.records:
            ledger.append(record)
    if out_path:
        export_report(result.savings, "json", out_path)
    if csv_path:
        export_report(result.savings, "csv", csv_path)

    for row in result.savings.providers:
        click.echo(
            f"{row.provider}: baseline {row.baseline_tokens} -> actual {row.actual_tokens} "
            f"tokens, saved {row.tokens_saved} ({format_percent(row.percent_saved)})"
        )
    click.echo(
        f"TOTAL: saved {result.savings.total_tokens_saved} of "
        f"{result.savings.total_baseline_tokens} output tokens "
        f"({format_percent(result.savings.total_percent_saved)}); "
        f"routing accuracy {format_percent(100.0 * result.accuracy.accuracy)}; "
        f"mean decision {result.mean_decision_us / 1000.0:.2f} ms"
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
def serve(config_path, host, port):
    """Run the HTTP gateway described by a JSON config file."""
    from .gateway import serve as serve_gateway

    try:
        config = GatewayConfig.from_file(config_path)
        serve_gateway(config, host=host, port=port)
    except PromptGateError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command()
@click.option("--ledger", "ledger_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--csv", "csv_path", default=None, type=click.Path())
@click.option("--include-degraded", is_flag=True, default=False)
def report(ledger_path, out_path, csv_path, include_degraded):
    """Summarize a usage ledger into a savings report."""
    try:
        ledger = Ledger.load(ledger_path)
        savings = savings_vs_baseline(ledger.records(), include_degraded=include_degraded)
    except PromptGateError as exc:
        raise click.ClickException(str(exc)) from exc
    if out_path:
        export_report(savings, "json", out_path)
    if csv_path:
        export_report(savings, "csv", csv_path)
    for row in savings.providers:
        click.echo(
            f"{row.provider}: saved {row.tokens_saved} of {row.baseline_tokens} "
            f"({format_percent(row.percent_saved)})"
            + (" [INVALID BASELINE]" if row.invalid else "")
        )
    click.echo(
        f"TOTAL: {format_percent(savings.total_percent_saved)} saved over "
        f"{savings.query_count} calls, ${savings.total_cost_usd:.6f} spent"
    )


if __name__ == "__main__":
    sys.exit(main())
