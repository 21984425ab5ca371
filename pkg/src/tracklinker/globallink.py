"""Within-camera tracklet linking: gate candidate junctions, score them with
the link network, solve the assignment, and merge matched tracklets."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator

from . import defaults, lap
from ._validation import check_trackset
from .linker.model import LinkerParams, forward_batch
from .linker import nn
from .linker.windows import PREDECESSOR, SUCCESSOR, make_window
from .trackio import Tracklet, TrackSet
from .unionfind import UnionFind


@dataclass(frozen=True)
class GateConfig:
    """Candidate gate: frame gap strictly above the lower bound and at most
    the upper bound, junction centers within the spatial radius, and the
    minimum link score."""

    temporal_gap: tuple[int, int] = (0, defaults.MAX_GAP)
    spatial_radius: float = defaults.SPATIAL_RADIUS
    score_threshold: float = defaults.SCORE_THRESHOLD

    def __post_init__(self) -> None:
        lo, hi = self.temporal_gap
        if lo < 0 or hi <= lo:
            raise ValueError(f"temporal gap must satisfy 0 <= lo < hi, got {self.temporal_gap}")
        if self.spatial_radius <= 0:
            raise ValueError("spatial_radius must be positive")
        if not 0.0 < self.score_threshold < 1.0:
            raise ValueError("score_threshold must lie in (0, 1)")


@dataclass(frozen=True)
class CandidatePair:
    pred_id: int
    succ_id: int
    gap: int
    center_distance: float
    p_hat: float | None = None

    @property
    def edge_cost(self) -> float:
        if self.p_hat is None:
            raise ValueError("pair is not scored yet")
        return 1.0 - self.p_hat


def candidate_pairs(tracklets: TrackSet, gate: GateConfig) -> list[CandidatePair]:
    """Ordered (predecessor, successor) pairs passing the temporal and
    spatial gate."""
    check_trackset(tracklets)
    lo, hi = gate.temporal_gap
    items = sorted(tracklets.tracklets.values(), key=lambda t: (t.start_frame, t.id))
    starts = [t.start_frame for t in items]
    out: list[CandidatePair] = []
    for pred in sorted(tracklets.tracklets.values(), key=lambda t: t.id):
        end = pred.end_frame
        last_box = pred.entries[-1].box
        cx, cy = last_box.center
        left = bisect.bisect_right(starts, end + lo)
        right = bisect.bisect_right(starts, end + hi)
        for succ in items[left:right]:
            if succ.id == pred.id:
                continue
            gap = succ.start_frame - end
            sx, sy = succ.entries[0].box.center
            dist = float(np.hypot(sx - cx, sy - cy))
            if dist <= gate.spatial_radius:
                out.append(CandidatePair(pred_id=pred.id, succ_id=succ.id,
                                         gap=gap, center_distance=dist))
    return out


def score_pairs(params: LinkerParams, pairs: list[CandidatePair], tracklets: TrackSet,
                image_size: tuple[int, int] = defaults.IMAGE_SIZE,
                batch_size: int = 512) -> list[CandidatePair]:
    """Attach the link probability to every candidate (eval mode, batched).
    Windows are built once per (tracklet, side)."""
    check_trackset(tracklets)
    if not pairs:
        return []
    window_cache: dict[tuple[int, str], np.ndarray] = {}

    def window(tid: int, side: str) -> np.ndarray:
        key = (tid, side)
        if key not in window_cache:
            window_cache[key] = make_window(tracklets.tracklets[tid], side,
                                            image_size).data.astype(np.float32)
        return window_cache[key]

    wa = np.stack([window(p.pred_id, PREDECESSOR) for p in pairs])
    wb = np.stack([window(p.succ_id, SUCCESSOR) for p in pairs])
    scored: list[CandidatePair] = []
    for start in range(0, len(pairs), batch_size):
        sl = slice(start, start + batch_size)
        logits, _ = forward_batch(params, wa[sl], wb[sl], train=False)
        if not np.all(np.isfinite(logits)):
            raise FloatingPointError("non-finite link score; parameters look corrupt")
        p_same = nn.softmax2(logits.astype(np.float64))[:, 1]
        for pair, p in zip(pairs[sl], p_same):
            scored.append(replace(pair, p_hat=float(p)))
    return scored


def link(tracklets: TrackSet, scored_pairs: list[CandidatePair],
         gate: GateConfig) -> TrackSet:
    """Assign successors to predecessors (cost 1 - p_hat, scores below the
    threshold infeasible) and merge the accepted matches. Chains collapse
    into one trajectory carrying the smallest original id; everything else
    passes through unchanged."""
    check_trackset(tracklets)
    for pair in scored_pairs:
        if pair.p_hat is None:
            raise ValueError(f"pair ({pair.pred_id}, {pair.succ_id}) is not scored")
        if pair.pred_id not in tracklets.tracklets or pair.succ_id not in tracklets.tracklets:
            raise ValueError(f"pair ({pair.pred_id}, {pair.succ_id}) references "
                             f"unknown tracklets")

    usable = [p for p in scored_pairs if p.p_hat >= gate.score_threshold]
    uf = UnionFind(sorted(tracklets.tracklets))
    if usable:
        pred_ids = sorted({p.pred_id for p in usable})
        succ_ids = sorted({p.succ_id for p in usable})
        row = {tid: i for i, tid in enumerate(pred_ids)}
        col = {tid: j for j, tid in enumerate(succ_ids)}
        cost = np.zeros((len(pred_ids), len(succ_ids)))
        feasible = np.zeros_like(cost, dtype=bool)
        for pair in usable:
            cost[row[pair.pred_id], col[pair.succ_id]] = pair.edge_cost
            feasible[row[pair.pred_id], col[pair.succ_id]] = True
        solution = lap.solve(lap.CostMatrix(cost=cost, feasible=feasible))
        for r, c in solution.pairs:
            uf.union(pred_ids[r], succ_ids[c])

    merged: dict[int, Tracklet] = {}
    for _, members in uf.groups().items():
        new_id = min(members)
        entries = sorted((e for tid in members for e in tracklets.tracklets[tid].entries),
                         key=lambda e: e.frame)
        for a, b in zip(entries, entries[1:]):
            if a.frame == b.frame:
                raise ValueError(f"merging tracklets {sorted(members)} would "
                                 f"duplicate frame {a.frame}")
        merged[new_id] = Tracklet(new_id, entries)
    return TrackSet(tracklets=merged, camera_id=tracklets.camera_id)


class TrackletLinker(BaseEstimator):
    """Estimator-style wrapper: transform() repairs a TrackSet with a trained
    link network."""

    def __init__(self, model: LinkerParams | None = None,
                 max_gap: int = defaults.MAX_GAP,
                 spatial_radius: float = defaults.SPATIAL_RADIUS,
                 score_threshold: float = defaults.SCORE_THRESHOLD,
                 image_size: tuple[int, int] = defaults.IMAGE_SIZE):
        self.model = model
        self.max_gap = max_gap
        self.spatial_radius = spatial_radius
        self.score_threshold = score_threshold
        self.image_size = image_size

    def _gate(self) -> GateConfig:
        return GateConfig(temporal_gap=(0, self.max_gap),
                          spatial_radius=self.spatial_radius,
                          score_threshold=self.score_threshold)

    def fit(self, X=None, y=None) -> "TrackletLinker":
        return self

    def transform(self, X: TrackSet) -> TrackSet:
        if self.model is None:
            raise RuntimeError("TrackletLinker needs a trained model")
        gate = self._gate()
        pairs = candidate_pairs(X, gate)
        scored = score_pairs(self.model, pairs, X, image_size=self.image_size)
        return link(X, scored, gate)
