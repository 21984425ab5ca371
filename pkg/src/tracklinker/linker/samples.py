"""Training-pair construction from ground-truth trajectories.

Positives are trajectories cut in two with a small frame gap. Negatives,
three per positive by default, come in three flavors: fragments of two
different identities placed inside the gating envelope, same-identity pairs
whose successor is pushed outside the spatial gate, and same-identity cuts
whose gap falls outside the temporal gate (including overlaps).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import defaults
from ..trackio import Box, Tracklet, TrackEntry, TrackSet
from .windows import PREDECESSOR, SUCCESSOR, Window, make_window

_MIN_FRAGMENT = 3
_MAX_TRIES = 500


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = defaults.LEARNING_RATE
    epochs: int = defaults.EPOCHS
    batch_size: int = defaults.BATCH_SIZE
    label_smoothing: float = defaults.LABEL_SMOOTHING
    neg_pos_ratio: float = defaults.NEG_POS_RATIO
    seed: int = 0
    image_size: tuple[int, int] = defaults.IMAGE_SIZE

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.label_smoothing <= 0.2:
            raise ValueError("label_smoothing must lie in [0, 0.2]")
        if self.neg_pos_ratio <= 0:
            raise ValueError("neg_pos_ratio must be positive")


@dataclass(frozen=True)
class LinkSample:
    window_a: Window
    window_b: Window
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


class InsufficientGroundTruth(ValueError):
    pass


def _fragment(parent: Tracklet, entries: list[TrackEntry]) -> Tracklet:
    return Tracklet(parent.id, entries)


def _shifted(entries: list[TrackEntry], dx: float, dy: float) -> list[TrackEntry]:
    return [TrackEntry(e.frame, Box(e.box.x + dx, e.box.y + dy, e.box.w, e.box.h), e.conf)
            for e in entries]


def _cut(tracklet: Tracklet, rng: np.random.Generator,
         gap_lo: int, gap_hi: int) -> tuple[list[TrackEntry], list[TrackEntry], int] | None:
    """Split a trajectory into (head, tail) whose frame gap falls in
    [gap_lo, gap_hi]. Returns None when the draw does not fit."""
    entries = tracklet.entries
    n = len(entries)
    if n < 2 * _MIN_FRAGMENT:
        return None
    k = int(rng.integers(_MIN_FRAGMENT, n - _MIN_FRAGMENT + 1))
    gap = int(rng.integers(gap_lo, gap_hi + 1))
    cut_frame = entries[k - 1].frame
    frames = [e.frame for e in entries]
    j = int(np.searchsorted(frames, cut_frame + gap))
    if n - j < _MIN_FRAGMENT:
        return None
    actual = entries[j].frame - cut_frame
    if not gap_lo <= actual <= gap_hi:
        return None
    return list(entries[:k]), list(entries[j:]), actual


def _overlap_cut(tracklet: Tracklet,
                 rng: np.random.Generator) -> tuple[list[TrackEntry], list[TrackEntry]] | None:
    entries = tracklet.entries
    n = len(entries)
    if n < 2 * _MIN_FRAGMENT:
        return None
    k = int(rng.integers(2 * _MIN_FRAGMENT, n + 1))
    back = int(rng.integers(_MIN_FRAGMENT, min(12, k - _MIN_FRAGMENT) + 1))
    j = k - back
    if n - j < _MIN_FRAGMENT:
        return None
    return list(entries[:k]), list(entries[j:])


def _center(entry: TrackEntry) -> np.ndarray:
    return np.array(entry.box.center)


def _pair_windows(parent_a: Tracklet, head: list[TrackEntry], parent_b: Tracklet,
                  tail: list[TrackEntry], image_size) -> tuple[Window, Window]:
    wa = make_window(_fragment(parent_a, head), PREDECESSOR, image_size)
    wb = make_window(_fragment(parent_b, tail), SUCCESSOR, image_size)
    return wa, wb


def generate_samples(gt: TrackSet, config: TrainConfig,
                     num_positives: int | None = None,
                     spatial_radius: float = defaults.SPATIAL_RADIUS) -> list[LinkSample]:
    """Deterministically draw labeled window pairs from ground truth.

    Emits ``num_positives`` positives followed by ``neg_pos_ratio`` times as
    many negatives (rounded). The default positive count scales with the
    amount of ground truth."""
    long_enough = [t for t in gt.tracklets.values() if len(t) >= 2]
    eligible = sorted((t for t in gt.tracklets.values() if len(t) >= 2 * _MIN_FRAGMENT),
                      key=lambda t: t.id)
    if len(long_enough) < 2 or not eligible:
        raise InsufficientGroundTruth(
            "need at least 2 tracklets, with one long enough to cut")

    if num_positives is None:
        num_positives = sum(max(1, len(t) // 20) for t in eligible)
    num_negatives = int(round(config.neg_pos_ratio * num_positives))
    rng = np.random.default_rng(config.seed)
    image_size = config.image_size
    max_gap = defaults.MAX_GAP

    def pick(tracklets) -> Tracklet:
        return tracklets[int(rng.integers(len(tracklets)))]

    positives: list[LinkSample] = []
    while len(positives) < num_positives:
        for _ in range(_MAX_TRIES):
            t = pick(eligible)
            cut = _cut(t, rng, 1, max_gap)
            if cut is None:
                continue
            head, tail, _ = cut
            wa, wb = _pair_windows(t, head, t, tail, image_size)
            positives.append(LinkSample(wa, wb, 1))
            break
        else:
            raise InsufficientGroundTruth("could not cut a positive pair from ground truth")

    negatives: list[LinkSample] = []
    while len(negatives) < num_negatives:
        kind = len(negatives) % 3
        for _ in range(_MAX_TRIES):
            sample = _make_negative(kind, eligible, rng, image_size, spatial_radius,
                                    max_gap, pick)
            if sample is not None:
                negatives.append(sample)
                break
        else:
            raise InsufficientGroundTruth("could not construct a negative pair")

    return positives + negatives


def _make_negative(kind: int, eligible: list[Tracklet], rng: np.random.Generator,
                   image_size, spatial_radius: float, max_gap: int,
                   pick) -> LinkSample | None:
    if kind == 0:
        # Fragments of two identities, successor moved inside the gate.
        if len(eligible) < 2:
            kind = 1
        else:
            ta, tb = pick(eligible), pick(eligible)
            if ta.id == tb.id:
                return None
            ka = int(rng.integers(_MIN_FRAGMENT, len(ta) + 1))
            kb = int(rng.integers(0, len(tb) - _MIN_FRAGMENT + 1))
            head, tail = list(ta.entries[:ka]), list(tb.entries[kb:])
            radius = float(rng.uniform(0.35, 0.95)) * spatial_radius
            angle = float(rng.uniform(0.0, 2.0 * np.pi))
            target = _center(head[-1]) + radius * np.array([np.cos(angle), np.sin(angle)])
            delta = target - _center(tail[0])
            tail = _shifted(tail, delta[0], delta[1])
            wa, wb = _pair_windows(ta, head, tb, tail, image_size)
            return LinkSample(wa, wb, 0)
    if kind == 1:
        # Same identity, successor displaced beyond the spatial gate.
        t = pick(eligible)
        cut = _cut(t, rng, 1, max_gap)
        if cut is None:
            return None
        head, tail, _ = cut
        radius = float(rng.uniform(1.3, 2.2)) * spatial_radius
        angle = float(rng.uniform(0.0, 2.0 * np.pi))
        tail = _shifted(tail, radius * np.cos(angle), radius * np.sin(angle))
        wa, wb = _pair_windows(t, head, t, tail, image_size)
        return LinkSample(wa, wb, 0)
    # Same identity, gap outside the temporal gate: a long real cut, or an
    # overlapping pair whose successor rewinds into the predecessor.
    t = pick(eligible)
    if rng.random() < 0.7:
        cut = _cut(t, rng, max_gap + 1, 3 * max_gap)
        if cut is None:
            return None
        head, tail, _ = cut
    else:
        cut = _overlap_cut(t, rng)
        if cut is None:
            return None
        head, tail = cut
    wa, wb = _pair_windows(t, head, t, tail, image_size)
    return LinkSample(wa, wb, 0)
