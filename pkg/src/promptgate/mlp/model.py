"""The routing classifier: standardizer, label codec, and the MLP itself.

The network is a plain feed-forward stack (ReLU hidden layers, softmax
head) over standardized embeddings. The training loss is mean
cross-entropy plus ``l2_alpha`` times the sum of squared weights (biases
are not penalized).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ContractViolation, IntegrityError, TrainingError
from ..types import TemplateId
from . import kernels

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Standardizer:
    """Column-wise (x - mean) / (std + epsilon) transform.

    ``std`` is the population standard deviation; ``epsilon`` guards
    zero-variance features.
    """

    mean: np.ndarray
    std: np.ndarray
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ContractViolation("mean and std must be 1-D vectors of equal length")
        if np.any(self.std < 0):
            raise ContractViolation("std entries must be >= 0")
        if self.epsilon <= 0:
            raise ContractViolation("epsilon must be positive")

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return kernels.standardize(X[None, :], self.mean, self.std, self.epsilon)[0]
        return kernels.standardize(X, self.mean, self.std, self.epsilon)


def fit_standardizer(X: np.ndarray, epsilon: float = 1e-8) -> Standardizer:
    """Population statistics over the rows of ``X`` (requires n >= 2)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TrainingError("standardizer needs at least 2 samples")
    mean = X.mean(axis=0)
    # For exactly-constant columns the float summation error would leak a
    # tiny nonzero residual; pin their mean so they transform to exactly 0.
    constant = np.all(X == X[0], axis=0)
    mean[constant] = X[0][constant]
    std = np.sqrt(((X - mean) ** 2).mean(axis=0))
    return Standardizer(mean=mean, std=std, epsilon=epsilon)


@dataclass(frozen=True)
class LabelCodec:
    """Bijection between template labels and the integer indices 0..K-1."""

    labels: tuple[TemplateId, ...]

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise ContractViolation("codec labels must be distinct")

    @classmethod
    def from_labels(cls, labels: Sequence[TemplateId]) -> "LabelCodec":
        """Build from training labels, ordered canonically (cheapest first)."""
        unique = sorted(set(labels), key=lambda t: t.canonical_index)
        return cls(tuple(unique))

    def encode(self, label: TemplateId) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ContractViolation(f"label {label} not in codec") from None

    def decode(self, index: int) -> TemplateId:
        if not 0 <= index < len(self.labels):
            raise ContractViolation(f"class index {index} out of range")
        return self.labels[index]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class MlpModel:
    """Trained classifier: parameters plus the preprocessing it was fit with."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    l2_alpha: float
    codec: LabelCodec
    standardizer: Standardizer
    format_version: int = MODEL_FORMAT_VERSION

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ContractViolation("weights and biases must pair up")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.ndim != 1 or W.shape[1] != b.shape[0]:
                raise ContractViolation(f"layer {i}: inconsistent shapes")
            if i > 0 and self.weights[i - 1].shape[1] != W.shape[0]:
                raise ContractViolation(f"layer {i}: broken shape chain")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ContractViolation(f"layer {i}: non-finite parameters")
        if self.weights[-1].shape[1] != len(self.codec):
            raise ContractViolation("output width must match the codec")
        if self.standardizer.mean.shape[0] != self.weights[0].shape[0]:
            raise ContractViolation("standardizer width must match the input layer")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(W.shape[1] for W in self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def _forward(self, Xs: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Hidden activations (input included) and raw output logits."""
        activations = [Xs]
        A = Xs
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            A = kernels.relu(A @ W + b)
            activations.append(A)
        logits = A @ self.weights[-1] + self.biases[-1]
        return activations, logits

    def predict_proba_batch(self, X: np.ndarray) -> np.ndarray:
        """Class probabilities for raw (unscaled) embedding rows."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise IntegrityError(
                f"input has shape {X.shape}, expected (n, {self.input_dim})"
            )
        if not np.all(np.isfinite(X)):
            raise IntegrityError("input contains non-finite values")
        _, logits = self._forward(self.standardizer.transform(X))
        return kernels.softmax_rows(logits)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Probabilities for a single raw embedding, in codec order."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise IntegrityError(f"expected a 1-D embedding, got shape {x.shape}")
        return self.predict_proba_batch(x[None, :])[0]

    def loss_and_grads(
        self, X: np.ndarray, y: np.ndarray
    ) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
        """Full loss (CE + L2) and its parameter gradients on one batch.

        ``X`` is raw; standardization happens inside so the gradients match
        exactly what training optimizes.
        """
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        activations, logits = self._forward(self.standardizer.transform(X))
        probs, ce = kernels.softmax_xent(logits, y)
        l2 = self.l2_alpha * sum(float((W * W).sum()) for W in self.weights)
        loss = ce + l2

        grads_w: list[np.ndarray] = [np.empty(0)] * len(self.weights)
        grads_b: list[np.ndarray] = [np.empty(0)] * len(self.biases)
        delta = kernels.xent_backward(probs, y)
        for layer in range(len(self.weights) - 1, -1, -1):
            grads_w[layer] = activations[layer].T @ delta + 2.0 * self.l2_alpha * self.weights[layer]
            grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = kernels.relu_backward(delta @ self.weights[layer].T, activations[layer])
        return loss, grads_w, grads_b

    def mean_xent(self, X: np.ndarray, y: np.ndarray) -> float:
        """Mean cross-entropy only (no L2); the early-stopping metric."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        _, logits = self._forward(self.standardizer.transform(X))
        _, ce = kernels.softmax_xent(logits, y)
        return ce
