"""Numba-jitted counterparts of the numpy kernels.

Explicit loops compile to fused machine code, removing temporary arrays
in the elementwise-heavy steps (standardize, ReLU masks, softmax rows,
Adam updates). fastmath stays off so each backend is IEEE-deterministic.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def standardize(X, mean, std, eps):
    n, d = X.shape
    out = np.empty((n, d), dtype=np.float64)
    for i in range(n):
        for j in range(d):
            out[i, j] = (X[i, j] - mean[j]) / (std[j] + eps)
    return out


@njit(cache=True)
def relu(Z):
    n, d = Z.shape
    out = np.empty((n, d), dtype=np.float64)
    for i in range(n):
        for j in range(d):
            z = Z[i, j]
            out[i, j] = z if z > 0.0 else 0.0
    return out


@njit(cache=True)
def relu_backward(delta, activation):
    n, d = delta.shape
    out = np.empty((n, d), dtype=np.float64)
    for i in range(n):
        for j in range(d):
            out[i, j] = delta[i, j] if activation[i, j] > 0.0 else 0.0
    return out


@njit(cache=True)
def softmax_rows(Z):
    n, k = Z.shape
    out = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        zmax = Z[i, 0]
        for j in range(1, k):
            if Z[i, j] > zmax:
                zmax = Z[i, j]
        total = 0.0
        for j in range(k):
            e = math.exp(Z[i, j] - zmax)
            out[i, j] = e
            total += e
        for j in range(k):
            out[i, j] /= total
    return out


@njit(cache=True)
def softmax_xent(Z, y):
    n, k = Z.shape
    probs = np.empty((n, k), dtype=np.float64)
    loss = 0.0
    for i in range(n):
        zmax = Z[i, 0]
        for j in range(1, k):
            if Z[i, j] > zmax:
                zmax = Z[i, j]
        total = 0.0
        for j in range(k):
            e = math.exp(Z[i, j] - zmax)
            probs[i, j] = e
            total += e
        for j in range(k):
            probs[i, j] /= total
        loss -= (Z[i, y[i]] - zmax) - math.log(total)
    return probs, loss / n


@njit(cache=True)
def xent_backward(probs, y):
    n, k = probs.shape
    dZ = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        for j in range(k):
            dZ[i, j] = probs[i, j] / n
        dZ[i, y[i]] -= 1.0 / n
    return dZ


@njit(cache=True)
def adam_update(param, grad, m, v, t, lr, beta1, beta2, eps):
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for i in range(param.shape[0]):
        g = grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        param[i] -= lr * (m[i] / bc1) / (math.sqrt(v[i] / bc2) + eps)
