"""Input validation helpers shared by the estimator front ends."""

from __future__ import annotations

import numpy as np

from .trackio import TrackSet


def check_window_pairs(X) -> np.ndarray:
    """Coerce to a finite float array of shape (n, 2, 30, 5)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 4 or X.shape[1:] != (2, 30, 5):
        raise ValueError(f"expected window pairs of shape (n, 2, 30, 5), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("window pairs contain non-finite values")
    return X


def check_trackset(ts) -> TrackSet:
    if not isinstance(ts, TrackSet):
        raise TypeError(f"expected a TrackSet, got {type(ts).__name__}")
    return ts


def check_image_rgb(img) -> np.ndarray:
    """Coerce to an (H, W, 3) uint8 image."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must have at least one pixel")
    if img.dtype != np.uint8:
        if np.issubdtype(img.dtype, np.integer) and img.min() >= 0 and img.max() <= 255:
            img = img.astype(np.uint8)
        else:
            raise ValueError(f"expected 8-bit channel values, got dtype {img.dtype}")
    return img
