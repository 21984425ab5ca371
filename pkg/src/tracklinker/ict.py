"""Cross-camera tracklet association: mean appearance embeddings, cosine
distance matrices, thresholded assignment, and global identity allocation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import defaults, lap
from .trackio import EmbeddingTrack, TrackSet
from .unionfind import UnionFind

GlobalIdMap = dict[tuple[str, int], int]


@dataclass(frozen=True)
class AssocConfig:
    """Association threshold: cosine distances above alpha are suppressed."""

    alpha: float = defaults.PROFILE_ALPHA["mmct"]

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")


@dataclass(frozen=True)
class TrackletEmbedding:
    tracklet_id: int
    camera_id: str
    vector: np.ndarray

    def __post_init__(self) -> None:
        vector = np.asarray(self.vector, dtype=np.float64)
        if not np.all(np.isfinite(vector)):
            raise ValueError("embedding vector must be finite")
        if np.linalg.norm(vector) == 0.0:
            raise ValueError("embedding vector must not be all-zero")
        object.__setattr__(self, "vector", vector)


def mean_embedding(track: EmbeddingTrack, last_k: int = defaults.MEAN_EMBED_FRAMES) -> np.ndarray:
    """Arithmetic mean of the vectors of the last min(k, length) frames."""
    if last_k < 1:
        raise ValueError("last_k must be >= 1")
    vectors = [v for _, v in track.entries[-last_k:]]
    return np.mean(vectors, axis=0)


def distance_matrix(q: Sequence[TrackletEmbedding],
                    f: Sequence[TrackletEmbedding]) -> np.ndarray:
    """Pairwise cosine distance, rows over q and columns over f; values lie
    in [0, 2]."""
    if not q or not f:
        return np.zeros((len(q), len(f)))
    qm = np.stack([e.vector for e in q])
    fm = np.stack([e.vector for e in f])
    qn = np.linalg.norm(qm, axis=1, keepdims=True)
    fn = np.linalg.norm(fm, axis=1, keepdims=True)
    if np.any(qn == 0) or np.any(fn == 0):
        raise ValueError("zero-norm embedding vector")
    cos = (qm / qn) @ (fm / fn).T
    return np.clip(1.0 - cos, 0.0, 2.0)


def associate(distances: np.ndarray, config: AssocConfig) -> list[tuple[int, int]]:
    """Minimum-cost assignment over cells with distance <= alpha."""
    distances = np.asarray(distances, dtype=np.float64)
    if distances.ndim != 2:
        raise ValueError("distance matrix must be 2-D")
    feasible = distances <= config.alpha
    solution = lap.solve(lap.CostMatrix(cost=np.where(feasible, distances, 0.0),
                                        feasible=feasible))
    return list(solution.pairs)


def _camera_embeddings(trackset: TrackSet,
                       embeddings: Mapping[int, EmbeddingTrack],
                       last_k: int) -> list[TrackletEmbedding]:
    out = []
    for tid in sorted(trackset.tracklets):
        if tid not in embeddings:
            raise ValueError(f"camera {trackset.camera_id!r}: tracklet {tid} "
                             f"has no embeddings")
        out.append(TrackletEmbedding(tracklet_id=tid, camera_id=trackset.camera_id,
                                     vector=mean_embedding(embeddings[tid], last_k)))
    return out


def assign_global_ids(per_camera: Sequence[tuple[TrackSet, Mapping[int, EmbeddingTrack]]],
                      config: AssocConfig,
                      last_k: int = defaults.MEAN_EMBED_FRAMES) -> GlobalIdMap:
    """Sequentially associate each camera against the pool of all previously
    processed tracklets (the first camera anchors), merging matches with
    union-find. Global ids are contiguous from 1, in camera-then-tracklet
    order."""
    if not per_camera:
        raise ValueError("assign_global_ids needs at least one camera")
    seen_cameras: set[str] = set()
    keys: list[tuple[str, int]] = []
    uf = UnionFind()
    pool: list[TrackletEmbedding] = []
    for trackset, embeddings in per_camera:
        cam = trackset.camera_id
        if cam in seen_cameras:
            raise ValueError(f"duplicate camera id {cam!r}")
        seen_cameras.add(cam)
        current = _camera_embeddings(trackset, embeddings, last_k)
        for emb in current:
            key = (cam, emb.tracklet_id)
            uf.add(key)
            keys.append(key)
        if pool and current:
            dist = distance_matrix(pool, current)
            for row, col in associate(dist, config):
                uf.union((pool[row].camera_id, pool[row].tracklet_id),
                         (current[col].camera_id, current[col].tracklet_id))
        pool.extend(current)

    mapping: GlobalIdMap = {}
    root_to_gid: dict = {}
    for key in keys:
        root = uf.find(key)
        if root not in root_to_gid:
            root_to_gid[root] = len(root_to_gid) + 1
        mapping[key] = root_to_gid[root]
    return mapping


def write_global_ids(mapping: GlobalIdMap, stream: IO[str]) -> None:
    stream.write("camera_id,tracklet_id,global_id\n")
    for (cam, tid), gid in sorted(mapping.items()):
        stream.write(f"{cam},{tid},{gid}\n")


def read_global_ids(stream: IO[str] | Iterable[str]) -> GlobalIdMap:
    mapping: GlobalIdMap = {}
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or (line_no == 1 and line.startswith("camera_id")):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"line {line_no}: expected camera_id,tracklet_id,global_id")
        cam, tid, gid = parts[0], int(parts[1]), int(parts[2])
        if (cam, tid) in mapping:
            raise ValueError(f"line {line_no}: duplicate key ({cam}, {tid})")
        mapping[(cam, tid)] = gid
    return mapping


class CrossCameraAssociator(BaseEstimator):
    """Estimator-style wrapper over assign_global_ids. fit() consumes a
    sequence of (TrackSet, embeddings) pairs and exposes ``global_ids_``."""

    def __init__(self, alpha: float = defaults.PROFILE_ALPHA["mmct"],
                 last_k: int = defaults.MEAN_EMBED_FRAMES):
        self.alpha = alpha
        self.last_k = last_k

    def fit(self, X, y=None) -> "CrossCameraAssociator":
        self.global_ids_ = assign_global_ids(list(X), AssocConfig(alpha=self.alpha),
                                             last_k=self.last_k)
        return self

    def fit_predict(self, X, y=None) -> GlobalIdMap:
        return self.fit(X).global_ids_
