"""Training loop: Adam over minibatches with early stopping on a validation split."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ContractViolation, DivergenceError, TrainingError
from ..types import TemplateId
from . import kernels
from .model import LabelCodec, MlpModel, Standardizer, fit_standardizer

DEFAULT_HIDDEN_SIZES = (512, 256, 128)

# The output layer starts near zero (He scaled down by this factor) so the
# untrained network predicts the uniform distribution; hidden layers use
# plain He-uniform.
_OUTPUT_INIT_SCALE = 0.01


@dataclass(frozen=True)
class TrainConfig:
    l2_alpha: float = 0.01
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 10
    validation_fraction: float = 0.1
    seed: int = 42
    hidden_sizes: tuple[int, ...] = DEFAULT_HIDDEN_SIZES
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    standardizer_epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if self.l2_alpha < 0:
            raise ContractViolation("l2_alpha must be >= 0")
        if min(self.learning_rate, self.batch_size, self.max_epochs, self.patience) <= 0:
            raise ContractViolation("learning_rate, batch_size, max_epochs, patience must be positive")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ContractViolation("validation_fraction must lie in (0, 1)")
        if not self.hidden_sizes or any(h <= 0 for h in self.hidden_sizes):
            raise ContractViolation("hidden_sizes must be positive")


@dataclass(frozen=True)
class TrainReport:
    epochs_run: int
    final_train_loss: float
    best_validation_loss: float
    wall_seconds: float
    seed: int


def holdout_accuracy(model: MlpModel, X: np.ndarray, labels: Sequence[TemplateId]) -> float:
    """Argmax accuracy of the bare classifier on held-out embeddings."""
    probs = model.predict_proba_batch(np.asarray(X, dtype=np.float64))
    y = np.array([model.codec.encode(label) for label in labels], dtype=np.int64)
    return float((probs.argmax(axis=1) == y).mean())


def _init_params(
    rng: np.random.Generator, sizes: Sequence[int]
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    n_layers = len(sizes) - 1
    for layer in range(n_layers):
        fan_in, fan_out = sizes[layer], sizes[layer + 1]
        limit = np.sqrt(6.0 / fan_in)
        if layer == n_layers - 1:
            limit *= _OUTPUT_INIT_SCALE
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return weights, biases


def _stratified_validation_split(
    y: np.ndarray, fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-class holdout of at least one sample per class."""
    train_idx: list[np.ndarray] = []
    val_idx: list[np.ndarray] = []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        members = members[rng.permutation(members.size)]
        n_val = max(1, int(round(fraction * members.size)))
        val_idx.append(members[:n_val])
        train_idx.append(members[n_val:])
    return np.concatenate(train_idx), np.concatenate(val_idx)


def train_mlp(
    X: np.ndarray,
    labels: Sequence[TemplateId],
    cfg: TrainConfig = TrainConfig(),
    *,
    X_val: np.ndarray | None = None,
    labels_val: Sequence[TemplateId] | None = None,
) -> tuple[MlpModel, TrainReport]:
    """Fit the classifier. Deterministic given ``cfg.seed``.

    When ``X_val``/``labels_val`` are given they drive early stopping;
    otherwise ``validation_fraction`` of the training data is held out
    per class. The parameters achieving the best validation
    cross-entropy are restored before returning.
    """
    started = time.perf_counter()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise TrainingError(f"X must be 2-D, got shape {X.shape}")
    if len(labels) != X.shape[0]:
        raise TrainingError("labels length must match X rows")

    codec = LabelCodec.from_labels(labels)
    if len(codec) < 2:
        raise TrainingError("training needs at least 2 classes")
    y = np.array([codec.encode(label) for label in labels], dtype=np.int64)
    class_counts = np.bincount(y, minlength=len(codec))
    if class_counts.min() < 10:
        small = codec.decode(int(class_counts.argmin()))
        raise TrainingError(
            f"class {small} has {class_counts.min()} samples; need >= 10 per class"
        )

    standardizer = fit_standardizer(X, epsilon=cfg.standardizer_epsilon)
    rng = np.random.default_rng(cfg.seed)
    sizes = (X.shape[1], *cfg.hidden_sizes, len(codec))
    weights, biases = _init_params(rng, sizes)

    if X_val is not None and labels_val is not None and len(labels_val) > 0:
        X_train, y_train = X, y
        X_valid = np.asarray(X_val, dtype=np.float64)
        y_valid = np.array([codec.encode(l) for l in labels_val], dtype=np.int64)
    else:
        tr, va = _stratified_validation_split(y, cfg.validation_fraction, rng)
        X_train, y_train = X[tr], y[tr]
        X_valid, y_valid = X[va], y[va]

    adam_m = [np.zeros(W.size) for W in weights] + [np.zeros(b.size) for b in biases]
    adam_v = [np.zeros(W.size) for W in weights] + [np.zeros(b.size) for b in biases]
    step = 0
    n_train = X_train.shape[0]
    best_val = np.inf
    best_weights = [W.copy() for W in weights]
    best_biases = [b.copy() for b in biases]
    epochs_since_best = 0
    epochs_run = 0
    final_train_loss = np.nan

    # A view over the live parameter arrays; Adam mutates them in place.
    live = MlpModel(
        weights=tuple(weights),
        biases=tuple(biases),
        l2_alpha=cfg.l2_alpha,
        codec=codec,
        standardizer=standardizer,
    )

    for epoch in range(cfg.max_epochs):
        epochs_run = epoch + 1
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n_train, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads_w, grads_b = live.loss_and_grads(X_train[batch], y_train[batch])
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss {loss} at epoch {epoch + 1}, step {step + 1} "
                    f"(lr={cfg.learning_rate}, l2_alpha={cfg.l2_alpha})"
                )
            epoch_loss += loss
            n_batches += 1
            step += 1
            flat_grads = [g.reshape(-1) for g in grads_w] + [g for g in grads_b]
            flat_params = [W.reshape(-1) for W in weights] + list(biases)
            for p, g, m, v in zip(flat_params, flat_grads, adam_m, adam_v):
                kernels.adam_update(
                    p, g, m, v, step, cfg.learning_rate,
                    cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon,
                )
        final_train_loss = epoch_loss / n_batches

        val_loss = live.mean_xent(X_valid, y_valid)
        if not np.isfinite(val_loss):
            raise DivergenceError(f"non-finite validation loss at epoch {epoch + 1}")
        if val_loss < best_val:
            best_val = val_loss
            best_weights = [W.copy() for W in weights]
            best_biases = [b.copy() for b in biases]
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= cfg.patience:
                break

    weights = best_weights
    biases = best_biases
    report = TrainReport(
        epochs_run=epochs_run,
        final_train_loss=float(final_train_loss),
        best_validation_loss=float(best_val),
        wall_seconds=time.perf_counter() - started,
        seed=cfg.seed,
    )
    model = MlpModel(
        weights=tuple(weights),
        biases=tuple(biases),
        l2_alpha=cfg.l2_alpha,
        codec=codec,
        standardizer=standardizer,
    )
    return model, report
