"""Pure-numpy reference implementations of the classifier's hot kernels."""

from __future__ import annotations

import numpy as np


def standardize(X: np.ndarray, mean: np.ndarray, std: np.ndarray, eps: float) -> np.ndarray:
    return (X - mean) / (std + eps)


def relu(Z: np.ndarray) -> np.ndarray:
    return np.maximum(Z, 0.0)


def relu_backward(delta: np.ndarray, activation: np.ndarray) -> np.ndarray:
    return delta * (activation > 0.0)


def softmax_rows(Z: np.ndarray) -> np.ndarray:
    shifted = Z - Z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_xent(Z: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Row softmax plus mean cross-entropy against integer labels.

    Log-probabilities come from the shifted logsumexp, so the loss stays
    finite even for saturated logits.
    """
    shifted = Z - Z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    sums = e.sum(axis=1, keepdims=True)
    probs = e / sums
    logp = shifted[np.arange(Z.shape[0]), y] - np.log(sums[:, 0])
    return probs, float(-logp.mean())


def xent_backward(probs: np.ndarray, y: np.ndarray) -> np.ndarray:
    """d(mean CE)/d(logits) = (probs - onehot) / batch."""
    n = probs.shape[0]
    dZ = probs.copy()
    dZ[np.arange(n), y] -= 1.0
    dZ /= n
    return dZ


def adam_update(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
) -> None:
    """One in-place Adam step over flat float64 arrays."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)
