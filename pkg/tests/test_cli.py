"""CLI workflows through click's test runner."""

import json

import pytest
from click.testing import CliRunner

from promptgate.cli import main
from promptgate.fixtures import BALANCED_MIX, make_labeled_queries, write_dataset_jsonl


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def dataset_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "train.jsonl"
    write_dataset_jsonl(make_labeled_queries(300, mix=BALANCED_MIX, seed=21), path)
    return path


@pytest.fixture(scope="module")
def cli_model(runner, dataset_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-models") / "model.pgm"
    report = out.parent / "train_report.json"
    result = runner.invoke(main, [
        "train", "--data", str(dataset_path), "--out", str(out),
        "--report", str(report), "--max-epochs", "40", "--batch-size", "32",
    ])
    assert result.exit_code == 0, result.output
    return out, report


class TestTrain:
    def test_writes_model_and_report(self, cli_model):
        model_path, report_path = cli_model
        assert model_path.exists()
        report = json.loads(report_path.read_text())
        assert report["holdout_accuracy"] >= 0.95
        assert report["epochs_run"] <= 40
        assert report["n_train"] + report["n_validation"] + report["n_test"] == 300

    def test_missing_data_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["train", "--data", str(tmp_path / "none.jsonl"),
                                      "--out", str(tmp_path / "m.pgm")])
        assert result.exit_code == 2

    def test_missing_flags_exit_2(self, runner):
        assert runner.invoke(main, ["train"]).exit_code == 2


class TestEvaluate:
    def test_reports_accuracy(self, runner, dataset_path, cli_model, tmp_path):
        model_path, _ = cli_model
        out = tmp_path / "eval.json"
        result = runner.invoke(main, [
            "evaluate", "--model", str(model_path), "--data", str(dataset_path),
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert "routing accuracy" in result.output
        payload = json.loads(out.read_text())
        assert payload["n"] == 300
        assert payload["accuracy"] >= 0.95


class TestRoute:
    def test_prints_template_and_exits_zero(self, runner, cli_model):
        model_path, _ = cli_model
        result = runner.invoke(main, [
            "route", "--model", str(model_path),
            "--text", "minimal-00 minimal-05 minimal-09 case 77",
        ])
        assert result.exit_code == 0, result.output
        assert "confidence=" in result.output

    def test_cost_aware_mode(self, runner, cli_model):
        model_path, _ = cli_model
        result = runner.invoke(main, [
            "route", "--model", str(model_path), "--mode", "cost_aware",
            "--text", "standard-02 standard-04 case 8",
        ])
        assert result.exit_code == 0, result.output
        assert "expected_cost=$" in result.output


class TestBench:
    def test_paired_bench_writes_reports(self, runner, cli_model, tmp_path):
        model_path, _ = cli_model
        data = tmp_path / "bench.jsonl"
        write_dataset_jsonl(make_labeled_queries(60, seed=31, id_prefix="b"), data)
        out_json = tmp_path / "savings.json"
        out_csv = tmp_path / "savings.csv"
        ledger = tmp_path / "bench_ledger.jsonl"
        result = runner.invoke(main, [
            "bench", "--model", str(model_path), "--data", str(data),
            "--out", str(out_json), "--csv", str(out_csv), "--ledger", str(ledger),
        ])
        assert result.exit_code == 0, result.output
        assert "TOTAL:" in result.output
        report = json.loads(out_json.read_text())
        assert {p["provider"] for p in report["providers"]} == {
            "mock:openai", "mock:gemini", "mock:anthropic"
        }
        assert ledger.exists()
        assert out_csv.read_text().startswith("provider,")


class TestReport:
    def test_summarizes_ledger(self, runner, cli_model, tmp_path):
        model_path, _ = cli_model
        data = tmp_path / "r.jsonl"
        write_dataset_jsonl(make_labeled_queries(30, seed=41, id_prefix="r"), data)
        ledger = tmp_path / "ledger.jsonl"
        bench_result = runner.invoke(main, [
            "bench", "--model", str(model_path), "--data", str(data),
            "--ledger", str(ledger),
        ])
        assert bench_result.exit_code == 0, bench_result.output
        out = tmp_path / "summary.json"
        result = runner.invoke(main, ["report", "--ledger", str(ledger), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "TOTAL" in result.output
        assert out.exists()


class TestServeConfigValidation:
    def test_bad_config_exits_nonzero(self, runner, tmp_path):
        config = tmp_path / "gw.json"
        config.write_text(json.dumps({"model_path": str(tmp_path / "missing.pgm")}))
        result = runner.invoke(main, ["serve", "--config", str(config)])
        assert result.exit_code != 0
