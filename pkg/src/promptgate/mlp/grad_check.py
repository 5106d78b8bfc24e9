"""Finite-difference oracle for the backward pass."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation
from .model import MlpModel

# Coordinates where both gradients are below this magnitude carry no
# information about the backward pass and are skipped.
_DEAD_COORD = 1e-10


def gradient_check(
    model: MlpModel,
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_coords: int = 200,
    h: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples at least ``n_coords`` parameter coordinates uniformly across
    all weight matrices and bias vectors. Everything runs in float64;
    mutated parameters are restored exactly after each probe.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] > 8:
        raise ContractViolation("gradient_check expects a batch of <= 8 samples")

    _, grads_w, grads_b = model.loss_and_grads(X, y)
    params = list(model.weights) + list(model.biases)
    grads = grads_w + grads_b

    sizes = [p.size for p in params]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(total, size=min(n_coords, total), replace=False)

    offsets = np.cumsum([0] + sizes)
    max_rel = 0.0
    for flat_index in chosen:
        array_index = int(np.searchsorted(offsets, flat_index, side="right") - 1)
        local = int(flat_index - offsets[array_index])
        p = params[array_index]
        coord = np.unravel_index(local, p.shape)
        original = p[coord]

        p[coord] = original + h
        loss_plus, _, _ = model.loss_and_grads(X, y)
        p[coord] = original - h
        loss_minus, _, _ = model.loss_and_grads(X, y)
        p[coord] = original

        numeric = (loss_plus - loss_minus) / (2.0 * h)
        analytic = float(grads[array_index][coord])
        denom = max(abs(analytic), abs(numeric))
        if denom < _DEAD_COORD:
            continue
        max_rel = max(max_rel, abs(analytic - numeric) / denom)
    return max_rel
