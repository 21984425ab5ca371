"""Adam training loop with cosine-annealed learning rate."""

from __future__ import annotations

import numpy as np

from .model import (LinkerParams, backward_batch, batch_loss, forward_batch,
                    init_params, is_learnable)
from .samples import LinkSample, TrainConfig


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


def cosine_lr(base_lr: float, epoch: int, total_epochs: int) -> float:
    """Annealed rate at an epoch boundary: base at 0, zero at total_epochs."""
    if total_epochs <= 0:
        return base_lr
    t = min(max(epoch, 0), total_epochs)
    return base_lr * 0.5 * (1.0 + np.cos(np.pi * t / total_epochs))


class Adam:
    def __init__(self, names, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {n: None for n in names}
        self.v: dict[str, np.ndarray] = {n: None for n in names}

    def step(self, params: LinkerParams, grads: dict[str, np.ndarray],
             lr: float) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            if self.m[name] is None:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params.tensors[name] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def samples_to_arrays(samples: list[LinkSample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    wa = np.stack([s.window_a.data for s in samples]).astype(np.float32)
    wb = np.stack([s.window_b.data for s in samples]).astype(np.float32)
    y = np.array([s.label for s in samples], dtype=np.int64)
    return wa, wb, y


def train(samples: list[LinkSample], config: TrainConfig) -> tuple[LinkerParams, list[float]]:
    """Train from a fresh seed-controlled initialization. Returns the final
    parameters and the mean loss of every epoch."""
    if not samples:
        raise ValueError("cannot train on an empty sample list")
    params = init_params(config.seed, dtype=np.float32)
    if config.epochs == 0:
        return params, []
    wa, wb, labels = samples_to_arrays(samples)
    return _fit(params, wa, wb, labels, config)


def _fit(params: LinkerParams, wa: np.ndarray, wb: np.ndarray, labels: np.ndarray,
         config: TrainConfig) -> tuple[LinkerParams, list[float]]:
    n = len(labels)
    rng = np.random.default_rng(config.seed)
    adam = Adam([k for k in params.tensors if is_learnable(k)])
    history: list[float] = []
    for epoch in range(config.epochs):
        lr = cosine_lr(config.learning_rate, epoch, config.epochs)
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            logits, cache = forward_batch(params, wa[idx], wb[idx], train=True,
                                          update_running=True)
            loss, dlogits = batch_loss(logits, labels[idx], config.label_smoothing)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            grads = backward_batch(params, cache, dlogits)
            adam.step(params, grads, lr)
            epoch_loss += loss * len(idx)
        history.append(epoch_loss / n)
    return params, history


def predict_proba(params: LinkerParams, wa: np.ndarray, wb: np.ndarray,
                  batch_size: int = 1024) -> np.ndarray:
    """Eval-mode same-identity probabilities for window pair arrays."""
    from . import nn

    out = np.empty(len(wa), dtype=np.float64)
    for start in range(0, len(wa), batch_size):
        sl = slice(start, start + batch_size)
        logits, _ = forward_batch(params, wa[sl], wb[sl], train=False)
        out[sl] = nn.softmax2(logits.astype(np.float64))[:, 1]
    return out
