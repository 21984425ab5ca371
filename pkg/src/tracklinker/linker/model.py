"""The appearance-free link network.

Two tracklet windows (30 frames x 5 motion features) each pass a shared
pair of branches: temporal convolutions (7x1 kernels along the frame axis)
and feature convolutions (1x5 kernels across the motion features), every
convolution followed by batch normalization and ReLU. The branch outputs
are fused by element-wise multiplication, averaged over time, and flattened
into one embedding per tracklet. The two embeddings are concatenated and a
two-layer MLP produces logits (s0, s1); softmax of s1 is the probability
that the windows belong to one identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .windows import Window

WINDOW_LEN = 30
WINDOW_FEATURES = 5
BRANCH_CHANNELS = (8, 12, 16)
TEMPORAL_KERNEL = 7
SPATIAL_KERNEL = 5
EMBED_DIM = BRANCH_CHANNELS[-1] * WINDOW_FEATURES
MLP_HIDDEN = 128
BN_MOMENTUM = 0.9

_BRANCHES = (("t", TEMPORAL_KERNEL), ("s", SPATIAL_KERNEL))


def architecture() -> dict[str, tuple[int, ...]]:
    """Tensor name -> shape for the fixed architecture, including the
    batch-norm running statistics."""
    shapes: dict[str, tuple[int, ...]] = {}
    for prefix, kernel in _BRANCHES:
        cin = 1
        for i, cout in enumerate(BRANCH_CHANNELS, start=1):
            shapes[f"{prefix}{i}.w"] = (kernel, cin, cout)
            for stat in ("gamma", "beta", "rmean", "rvar"):
                shapes[f"{prefix}{i}.{stat}"] = (cout,)
            cin = cout
    shapes["fc1.w"] = (2 * EMBED_DIM, MLP_HIDDEN)
    shapes["fc1.b"] = (MLP_HIDDEN,)
    shapes["fc2.w"] = (MLP_HIDDEN, 2)
    shapes["fc2.b"] = (2,)
    return shapes


def is_learnable(name: str) -> bool:
    return not name.endswith((".rmean", ".rvar"))


@dataclass
class LinkerParams:
    """All tensors of the link network, keyed by canonical name."""

    tensors: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        expected = architecture()
        if set(self.tensors) != set(expected):
            missing = sorted(set(expected) - set(self.tensors))
            extra = sorted(set(self.tensors) - set(expected))
            raise ValueError(f"parameter set mismatch: missing={missing}, unexpected={extra}")
        for name, arr in self.tensors.items():
            if arr.shape != expected[name]:
                raise ValueError(f"tensor {name}: expected shape {expected[name]}, "
                                 f"got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"tensor {name} contains non-finite values")
            if name.endswith(".rvar") and np.any(arr <= 0):
                raise ValueError(f"tensor {name}: running variance must be positive")

    @property
    def dtype(self) -> np.dtype:
        return self.tensors["fc1.w"].dtype

    def copy(self) -> "LinkerParams":
        return LinkerParams({k: v.copy() for k, v in self.tensors.items()})

    def astype(self, dtype) -> "LinkerParams":
        return LinkerParams({k: v.astype(dtype) for k, v in self.tensors.items()})

    def num_learnable(self) -> int:
        return sum(v.size for k, v in self.tensors.items() if is_learnable(k))

    def allclose(self, other: "LinkerParams", rtol: float = 0.0, atol: float = 0.0) -> bool:
        return all(np.allclose(self.tensors[k], other.tensors[k], rtol=rtol, atol=atol)
                   for k in self.tensors)


def init_params(seed: int, dtype=np.float32) -> LinkerParams:
    """Deterministic initialization: conv and dense weights uniform in
    +/-sqrt(6/(fan_in+fan_out)), biases and BN shifts zero, BN scales one."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in architecture().items():
        if name.endswith(".w"):
            if len(shape) == 3:
                k, cin, cout = shape
                fan_in, fan_out = k * cin, k * cout
            else:
                fan_in, fan_out = shape
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            tensors[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
        elif name.endswith((".gamma", ".rvar")):
            tensors[name] = np.ones(shape, dtype=dtype)
        else:
            tensors[name] = np.zeros(shape, dtype=dtype)
    return LinkerParams(tensors)


@dataclass(frozen=True)
class ForwardTrace:
    """Intermediate quantities of one pair evaluation."""

    e_a: np.ndarray
    e_b: np.ndarray
    e_o: np.ndarray
    s0: float
    s1: float
    p_hat: float


def _branch_forward(tensors: dict[str, np.ndarray], prefix: str, x: np.ndarray,
                    train: bool, update_running: bool) -> tuple[np.ndarray, list[dict]]:
    caches = []
    h = x
    for i in range(1, len(BRANCH_CHANNELS) + 1):
        w = tensors[f"{prefix}{i}.w"]
        y, conv_cache = nn.conv1d_forward(h, w)
        yn, bn_cache = nn.bn_forward(y, tensors[f"{prefix}{i}.gamma"],
                                     tensors[f"{prefix}{i}.beta"],
                                     tensors[f"{prefix}{i}.rmean"],
                                     tensors[f"{prefix}{i}.rvar"], train)
        if train and update_running:
            rmean = tensors[f"{prefix}{i}.rmean"]
            rvar = tensors[f"{prefix}{i}.rvar"]
            rmean *= BN_MOMENTUM
            rmean += (1.0 - BN_MOMENTUM) * bn_cache["batch_mean"].astype(rmean.dtype)
            rvar *= BN_MOMENTUM
            rvar += (1.0 - BN_MOMENTUM) * bn_cache["batch_var"].astype(rvar.dtype)
        a = nn.relu_inplace(yn)
        caches.append({"conv": conv_cache, "bn": bn_cache, "act": a})
        h = a
    return h, caches


def _branch_backward(tensors: dict[str, np.ndarray], prefix: str,
                     caches: list[dict], dh: np.ndarray,
                     grads: dict[str, np.ndarray]) -> None:
    for i in range(len(BRANCH_CHANNELS), 0, -1):
        cache = caches[i - 1]
        dh = nn.relu_backward(cache["act"], dh)
        dh, dgamma, dbeta = nn.bn_backward(cache["bn"], tensors[f"{prefix}{i}.gamma"], dh)
        dh, dw = nn.conv1d_backward(cache["conv"], tensors[f"{prefix}{i}.w"], dh)
        grads[f"{prefix}{i}.w"] = dw
        grads[f"{prefix}{i}.gamma"] = dgamma
        grads[f"{prefix}{i}.beta"] = dbeta


def forward_windows(params: LinkerParams, windows: np.ndarray, train: bool,
                    update_running: bool = False) -> tuple[np.ndarray, dict]:
    """Embed a batch of windows. windows: (N, 30, 5) -> embeddings (N, EMBED_DIM)."""
    n = windows.shape[0]
    if train and n < 2:
        raise ValueError("train-mode batch statistics need at least 2 windows")
    x = np.asarray(windows, dtype=params.dtype)
    tensors = params.tensors
    c = BRANCH_CHANNELS[-1]

    xt = x.transpose(1, 0, 2).reshape(WINDOW_LEN, n * WINDOW_FEATURES, 1)
    t_out, t_caches = _branch_forward(tensors, "t", xt, train, update_running)
    xs = x.transpose(2, 0, 1).reshape(WINDOW_FEATURES, n * WINDOW_LEN, 1)
    s_out, s_caches = _branch_forward(tensors, "s", xs, train, update_running)

    t_nhwc = t_out.reshape(WINDOW_LEN, n, WINDOW_FEATURES, c).transpose(1, 0, 2, 3)
    s_nhwc = s_out.reshape(WINDOW_FEATURES, n, WINDOW_LEN, c).transpose(1, 2, 0, 3)
    fused = t_nhwc * s_nhwc
    pooled = fused.mean(axis=1)
    emb = pooled.reshape(n, EMBED_DIM)
    cache = {"t_caches": t_caches, "s_caches": s_caches,
             "t_nhwc": t_nhwc, "s_nhwc": s_nhwc, "n": n}
    return emb, cache


def backward_windows(params: LinkerParams, cache: dict, demb: np.ndarray,
                     grads: dict[str, np.ndarray]) -> None:
    n = cache["n"]
    c = BRANCH_CHANNELS[-1]
    dpooled = demb.reshape(n, WINDOW_FEATURES, c)
    dfused = np.broadcast_to(dpooled[:, None] / WINDOW_LEN,
                             (n, WINDOW_LEN, WINDOW_FEATURES, c))
    dt_nhwc = dfused * cache["s_nhwc"]
    ds_nhwc = dfused * cache["t_nhwc"]
    dt = dt_nhwc.transpose(1, 0, 2, 3).reshape(WINDOW_LEN, n * WINDOW_FEATURES, c)
    ds = ds_nhwc.transpose(2, 0, 1, 3).reshape(WINDOW_FEATURES, n * WINDOW_LEN, c)
    _branch_backward(params.tensors, "t", cache["t_caches"], dt, grads)
    _branch_backward(params.tensors, "s", cache["s_caches"], ds, grads)


def forward_batch(params: LinkerParams, wa: np.ndarray, wb: np.ndarray, train: bool,
                  update_running: bool = False) -> tuple[np.ndarray, dict]:
    """Score a batch of window pairs. wa, wb: (B, 30, 5). Returns logits (B, 2)
    and the cache consumed by backward_batch."""
    b = wa.shape[0]
    windows = np.concatenate([wa, wb], axis=0)
    emb, wcache = forward_windows(params, windows, train, update_running)
    e_o = np.concatenate([emb[:b], emb[b:]], axis=1)
    tensors = params.tensors
    h_pre = nn.linear_forward(e_o, tensors["fc1.w"], tensors["fc1.b"])
    h = nn.relu(h_pre)
    logits = nn.linear_forward(h, tensors["fc2.w"], tensors["fc2.b"])
    cache = {"windows": wcache, "e_o": e_o, "h": h, "b": b}
    return logits, cache


def backward_batch(params: LinkerParams, cache: dict,
                   dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of every learnable tensor given d(loss)/d(logits)."""
    tensors = params.tensors
    grads: dict[str, np.ndarray] = {}
    dh, grads["fc2.w"], grads["fc2.b"] = nn.linear_backward(cache["h"], tensors["fc2.w"],
                                                            dlogits)
    dh = nn.relu_backward(cache["h"], dh)
    de_o, grads["fc1.w"], grads["fc1.b"] = nn.linear_backward(cache["e_o"], tensors["fc1.w"],
                                                              dh)
    demb = np.concatenate([de_o[:, :EMBED_DIM], de_o[:, EMBED_DIM:]], axis=0)
    backward_windows(params, cache["windows"], demb, grads)
    return grads


def _window_array(w) -> np.ndarray:
    data = w.data if isinstance(w, Window) else np.asarray(w, dtype=np.float64)
    if data.shape != (WINDOW_LEN, WINDOW_FEATURES):
        raise ValueError(f"window must be {WINDOW_LEN}x{WINDOW_FEATURES}, got {data.shape}")
    return data


def forward(params: LinkerParams, a, b, mode: str = "eval") -> ForwardTrace:
    """Evaluate one ordered (predecessor, successor) pair of windows."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    wa = _window_array(a)[None]
    wb = _window_array(b)[None]
    logits, cache = forward_batch(params, wa, wb, train=(mode == "train"))
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError("non-finite activation; parameters look corrupt")
    s0, s1 = float(logits[0, 0]), float(logits[0, 1])
    logp = nn.log_softmax2(np.array([[s0, s1]], dtype=np.float64))
    p_hat = float(np.exp(logp[0, 1]))
    wcache = cache["windows"]
    emb_cache_n = wcache["n"]
    fused = wcache["t_nhwc"] * wcache["s_nhwc"]
    emb = fused.mean(axis=1).reshape(emb_cache_n, EMBED_DIM)
    return ForwardTrace(e_a=emb[0].copy(), e_b=emb[1].copy(),
                        e_o=cache["e_o"][0].copy(), s0=s0, s1=s1, p_hat=p_hat)


def loss(p_hat: float, label: int, smoothing: float = 0.0) -> float:
    """Cross-entropy of the same-identity probability against a (possibly
    smoothed) binary label. Zero smoothing is the plain binary cross-entropy."""
    if not 0.0 < p_hat < 1.0:
        raise ValueError(f"p_hat must lie strictly in (0, 1), got {p_hat}")
    if not 0.0 <= smoothing < 0.5:
        raise ValueError(f"smoothing must lie in [0, 0.5), got {smoothing}")
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label}")
    target = label * (1.0 - smoothing) + (1 - label) * smoothing
    return float(-target * np.log(p_hat) - (1.0 - target) * np.log(1.0 - p_hat))


def batch_loss(logits: np.ndarray, labels: np.ndarray,
               smoothing: float) -> tuple[float, np.ndarray]:
    """Mean smoothed cross-entropy over a batch and its logit gradient."""
    labels = np.asarray(labels, dtype=logits.dtype)
    target1 = labels * (1.0 - smoothing) + (1.0 - labels) * smoothing
    logp = nn.log_softmax2(logits)
    per_sample = -(target1 * logp[:, 1] + (1.0 - target1) * logp[:, 0])
    mean = float(per_sample.mean())
    targets = np.stack([1.0 - target1, target1], axis=1)
    dlogits = (nn.softmax2(logits) - targets) / logits.shape[0]
    return mean, dlogits


def backward(params: LinkerParams, sample, smoothing: float = 0.0) -> dict[str, np.ndarray]:
    """Analytic gradient of the single-sample loss w.r.t. every learnable
    tensor, with train-mode batch statistics."""
    wa = _window_array(sample.window_a)[None]
    wb = _window_array(sample.window_b)[None]
    logits, cache = forward_batch(params, wa, wb, train=True)
    _, dlogits = batch_loss(logits, np.array([sample.label]), smoothing)
    return backward_batch(params, cache, dlogits)
