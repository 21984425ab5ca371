"""Numpy building blocks for the link network: 1-D convolution along the
leading axis, batch normalization, ReLU, and dense layers, each with an
exact analytic backward pass.

Activations are kept in (L, M, C) layout where L is the convolved axis and
M collects every other axis. The convolution gathers its shifted taps into
one (L*M, K*C) matrix so each layer is a single GEMM; batch normalization
is written to minimize temporaries, which matters on the single-core
training path.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided


def conv1d_forward(x: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, dict]:
    """Same-padded correlation along axis 0.

    x: (L, M, Cin), w: (K, Cin, Cout) with odd K. Returns the (L, M, Cout)
    output and the cache for the backward pass. Single-channel inputs gather
    their taps into one GEMM; wider inputs accumulate one GEMM per tap over
    contiguous views, which profiles faster than the gathered copy.
    """
    length, m, cin = x.shape
    k, _, cout = w.shape
    pad = k // 2
    xp = np.zeros((length + k - 1, m, cin), dtype=x.dtype)
    xp[pad:pad + length] = x
    cache = {"xp": xp, "shape": (length, m, cin)}
    if cin == 1:
        s0, s1, _ = xp.strides
        view = as_strided(xp, shape=(length, m, k), strides=(s0, s1, s0))
        col = np.ascontiguousarray(view).reshape(length * m, k)
        cache["col"] = col
        y = col @ w.reshape(k, cout)
    else:
        y = np.zeros((length * m, cout), dtype=x.dtype)
        tmp = np.empty_like(y)
        for tap in range(k):
            np.matmul(xp[tap:tap + length].reshape(length * m, cin), w[tap], out=tmp)
            y += tmp
    return y.reshape(length, m, cout), cache


def conv1d_backward(cache: dict, w: np.ndarray,
                    dy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of conv1d_forward w.r.t. input and kernel."""
    k, cin, cout = w.shape
    length, m, _ = cache["shape"]
    pad = k // 2
    dyf = dy.reshape(length * m, cout)
    xp = cache["xp"]
    dxp = np.zeros_like(xp)
    if cin == 1:
        dw = (cache["col"].T @ dyf).reshape(k, cin, cout)
        dcol = (dyf @ w.reshape(k, cout).T).reshape(length, m, k)
        for tap in range(k):
            dxp[tap:tap + length, :, 0] += dcol[:, :, tap]
    else:
        dw = np.empty_like(w)
        for tap in range(k):
            xs = xp[tap:tap + length].reshape(length * m, cin)
            dw[tap] = xs.T @ dyf
            dxp[tap:tap + length] += (dyf @ w[tap].T).reshape(length, m, cin)
    return dxp[pad:pad + length], dw


def bn_forward(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
               running_mean: np.ndarray, running_var: np.ndarray,
               train: bool, eps: float = 1e-5) -> tuple[np.ndarray, dict]:
    """Per-channel batch normalization over all leading axes of (..., C).

    Train mode normalizes with batch statistics, eval mode with the running
    statistics. The cache carries what the backward pass needs (train mode
    only)."""
    n = x.size // x.shape[-1]
    flat = x.reshape(n, x.shape[-1])
    if train:
        # Column sums through BLAS; substantially faster than ufunc
        # reductions along the leading axis.
        ones = np.ones((1, n), dtype=x.dtype)
        mean = (ones @ flat)[0]
        mean /= n
        sq = np.einsum("nc,nc->c", flat, flat)
        var = sq / n - mean * mean
        np.maximum(var, 0.0, out=var)
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = x - mean
    xhat *= inv_std
    y = xhat * gamma
    y += beta
    cache = {"xhat": xhat, "inv_std": inv_std,
             "batch_mean": mean if train else None,
             "batch_var": var if train else None}
    return y, cache


def bn_backward(cache: dict, gamma: np.ndarray,
                dy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backward for train-mode batch normalization. Consumes the cached
    normalized activations."""
    xhat, inv_std = cache["xhat"], cache["inv_std"]
    c = dy.shape[-1]
    n = dy.size // c
    dyf = dy.reshape(n, c)
    dbeta = (np.ones((1, n), dtype=dy.dtype) @ dyf)[0]
    dgamma = np.einsum("nc,nc->c", dyf, xhat.reshape(n, c))
    # dx = gamma*inv_std*(dy - dbeta/n - xhat*dgamma/n); xhat is reused as
    # scratch, so callers must not touch the cache afterwards.
    xhat *= dgamma / n
    dx = dy - dbeta / n
    dx -= xhat
    dx *= gamma * inv_std
    return dx, dgamma, dbeta


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_inplace(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0, out=x)


def relu_backward(y: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Masks dy in place using the post-activation output y."""
    dy *= y > 0
    return dy


def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ w + b


def linear_backward(x: np.ndarray, w: np.ndarray,
                    dy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def softmax2(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of (B, 2) logits, numerically stable."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax2(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return shifted - lse
