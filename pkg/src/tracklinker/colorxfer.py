"""Statistics-matching color transfer in the decorrelated log-LMS (l-alpha-beta)
color space, plus the binary PPM container it operates on.

The content image is re-statted so its per-channel mean and standard
deviation match those of a reference style, which normalizes image
appearance across cameras before feature extraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import defaults
from ._validation import check_image_rgb

# Ruderman/Reinhard decomposition constants.
RGB_TO_LMS = np.array([[0.3811, 0.5783, 0.0402],
                       [0.1967, 0.7244, 0.0782],
                       [0.0241, 0.1288, 0.8444]])
LMS_TO_LAB = np.diag([1.0 / np.sqrt(3.0), 1.0 / np.sqrt(6.0), 1.0 / np.sqrt(2.0)]) @ \
    np.array([[1.0, 1.0, 1.0],
              [1.0, 1.0, -2.0],
              [1.0, -1.0, 0.0]])
LMS_FROM_RGB_INV = np.linalg.inv(RGB_TO_LMS)
LAB_TO_LMS = np.linalg.inv(LMS_TO_LAB)

LOG_CLAMP = 1e-6
STD_FLOOR = 1e-6


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel (l, alpha, beta) mean and standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != (3,) or std.shape != (3,):
            raise ValueError("channel stats must have 3 components per field")
        if np.any(std <= 0):
            raise ValueError("channel std components must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


def rgb_to_lab(image: np.ndarray) -> np.ndarray:
    """8-bit (H, W, 3) RGB -> float l-alpha-beta. RGB is scaled to [0, 1],
    mapped to LMS, clamped below before the base-10 log, and decorrelated."""
    image = check_image_rgb(image)
    rgb = image.astype(np.float64) / 255.0
    lms = rgb @ RGB_TO_LMS.T
    np.maximum(lms, LOG_CLAMP, out=lms)
    log_lms = np.log10(lms)
    return log_lms @ LMS_TO_LAB.T


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Inverse of rgb_to_lab: back through log-LMS, clamped to [0, 1] and
    quantized to 8 bits with round-half-up."""
    lab = np.asarray(lab, dtype=np.float64)
    if lab.ndim != 3 or lab.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) lab image, got shape {lab.shape}")
    if not np.all(np.isfinite(lab)):
        raise ValueError("lab image contains non-finite values")
    log_lms = lab @ LAB_TO_LMS.T
    lms = np.power(10.0, log_lms)
    rgb = lms @ LMS_FROM_RGB_INV.T
    np.clip(rgb, 0.0, 1.0, out=rgb)
    return np.floor(rgb * 255.0 + 0.5).astype(np.uint8)


def channel_stats(images: Sequence[np.ndarray]) -> ChannelStats:
    """Pooled per-channel mean and population standard deviation over all
    pixels of all images, computed in l-alpha-beta. The std is floored at
    1e-6 so degenerate inputs stay usable."""
    if len(images) == 0:
        raise ValueError("channel_stats needs at least one image")
    total = 0
    acc = np.zeros(3)
    acc_sq = np.zeros(3)
    for image in images:
        lab = rgb_to_lab(image).reshape(-1, 3)
        total += lab.shape[0]
        acc += lab.sum(axis=0)
        acc_sq += (lab * lab).sum(axis=0)
    if total < 2:
        raise ValueError("channel_stats needs at least 2 pixels in total")
    mean = acc / total
    var = np.maximum(acc_sq / total - mean * mean, 0.0)
    std = np.maximum(np.sqrt(var), STD_FLOOR)
    return ChannelStats(mean=mean, std=std)


def transfer_lab(lab: np.ndarray, content_stats: ChannelStats,
                 reference_stats: ChannelStats) -> np.ndarray:
    """Per channel: scale deviations from the content mean by the std ratio
    and recenter on the reference mean."""
    scale = reference_stats.std / content_stats.std
    return (lab - content_stats.mean) * scale + reference_stats.mean


def transfer(content: np.ndarray, content_stats: ChannelStats,
             reference_stats: ChannelStats) -> np.ndarray:
    """Re-stat an RGB image in l-alpha-beta and convert back to 8-bit RGB."""
    return lab_to_rgb(transfer_lab(rgb_to_lab(content), content_stats, reference_stats))


def read_ppm(stream: IO[bytes]) -> np.ndarray:
    """Binary PPM (P6, maxval 255) -> (H, W, 3) uint8."""
    data = stream.read()
    if not data.startswith(b"P6"):
        raise ValueError("not a binary PPM (P6) file")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PPM header")
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise ValueError("malformed PPM header") from None
    if width < 1 or height < 1:
        raise ValueError(f"invalid PPM dimensions {width}x{height}")
    if maxval != 255:
        raise ValueError(f"only maxval 255 is supported, got {maxval}")
    need = width * height * 3
    raw = data[pos:pos + need]
    if len(raw) != need:
        raise ValueError("truncated PPM pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(image: np.ndarray, stream: IO[bytes]) -> None:
    image = check_image_rgb(image)
    height, width = image.shape[:2]
    stream.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
    stream.write(np.ascontiguousarray(image).tobytes())


class ColorTransfer(BaseEstimator):
    """Estimator-style wrapper: fit() pools reference statistics over every
    ``reference_stride``-th frame, transform() re-stats content frames
    individually."""

    def __init__(self, reference_stride: int = defaults.REFERENCE_STRIDE):
        self.reference_stride = reference_stride

    def fit(self, X, y=None) -> "ColorTransfer":
        if self.reference_stride < 1:
            raise ValueError("reference_stride must be >= 1")
        frames = list(X)
        if not frames:
            raise ValueError("fit needs at least one reference image")
        self.reference_stats_ = channel_stats(frames[::self.reference_stride])
        return self

    def transform(self, X) -> list[np.ndarray]:
        if not hasattr(self, "reference_stats_"):
            raise RuntimeError("ColorTransfer is not fitted; call fit first")
        out = []
        for image in X:
            stats = channel_stats([image])
            out.append(transfer(image, stats, self.reference_stats_))
        return out
