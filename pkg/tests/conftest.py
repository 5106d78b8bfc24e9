"""Shared fixtures and the acceptance-criteria summary hook."""

import numpy as np
import pytest

from promptgate.embedding import LocalTestEmbedder, embed_batch
from promptgate.fixtures import BALANCED_MIX, make_labeled_queries
from promptgate.mlp import TrainConfig, load_model, save_model, train_mlp

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE_RESULTS[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[nodeid]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {nodeid.split('::')[-1]}")


@pytest.fixture(scope="session")
def text_training_set():
    """Balanced synthetic queries, separable under the local embedder."""
    return make_labeled_queries(400, mix=BALANCED_MIX, seed=11, id_prefix="t")


@pytest.fixture(scope="session")
def text_model_path(tmp_path_factory, text_training_set):
    """A model trained on the text fixture, persisted once per session."""
    embedder = LocalTestEmbedder()
    vectors = embed_batch([item.query for item in text_training_set], embedder)
    X = np.stack([v.values for v in vectors])
    labels = [item.label for item in text_training_set]
    model, _ = train_mlp(X, labels, TrainConfig(seed=5, batch_size=64, max_epochs=60))
    path = tmp_path_factory.mktemp("models") / "router.pgm"
    save_model(model, path)
    return path


@pytest.fixture(scope="session")
def text_model(text_model_path):
    return load_model(text_model_path)
