"""Fixed-size motion windows cut from tracklets for the link network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..trackio import Tracklet

WINDOW_LEN = 30
WINDOW_FEATURES = 5

PREDECESSOR = "predecessor"
SUCCESSOR = "successor"


@dataclass(frozen=True)
class Window:
    """30x5 matrix of normalized (frame, x, y, w, h) rows."""

    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.shape != (WINDOW_LEN, WINDOW_FEATURES):
            raise ValueError(f"window must be {WINDOW_LEN}x{WINDOW_FEATURES}, "
                             f"got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("window contains non-finite values")


def make_window(tracklet: Tracklet, side: str,
                image_size: tuple[int, int]) -> Window:
    """Build the model input for one side of a candidate junction.

    The predecessor side takes the tracklet's last 30 entries, the successor
    side its first 30. Shorter tracklets repeat the boundary entry: the
    predecessor window is padded at the front with its starting frame, the
    successor window at the back with its ending frame. Frame indices are
    offset by the window's first frame and divided by 30; x and w are divided
    by the image width, y and h by the image height.
    """
    if side not in (PREDECESSOR, SUCCESSOR):
        raise ValueError(f"side must be {PREDECESSOR!r} or {SUCCESSOR!r}, got {side!r}")
    if not tracklet.entries:
        raise ValueError("cannot build a window from an empty tracklet")
    width, height = image_size
    if width <= 0 or height <= 0:
        raise ValueError(f"image size must be positive, got {image_size}")

    if side == PREDECESSOR:
        selected = tracklet.entries[-WINDOW_LEN:]
        pad = WINDOW_LEN - len(selected)
        entries = [selected[0]] * pad + list(selected)
    else:
        selected = tracklet.entries[:WINDOW_LEN]
        pad = WINDOW_LEN - len(selected)
        entries = list(selected) + [selected[-1]] * pad

    data = np.empty((WINDOW_LEN, WINDOW_FEATURES), dtype=np.float64)
    frame_ref = entries[0].frame
    for row, entry in enumerate(entries):
        b = entry.box
        data[row, 0] = (entry.frame - frame_ref) / WINDOW_LEN
        data[row, 1] = b.x / width
        data[row, 2] = b.y / height
        data[row, 3] = b.w / width
        data[row, 4] = b.h / height
    return Window(data)
