"""Synthetic scenes: ground-truth trajectories, camera-biased embeddings,
and injected identity switches, so the whole pipeline is testable without
real footage."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .trackio import EMBED_DIM, Box, EmbeddingTrack, TrackEntry, Tracklet, TrackSet

_MIN_FRAGMENT = 3


@dataclass(frozen=True)
class SceneConfig:
    num_identities: int = 20
    cameras: int = 1
    frames: int = 200
    image_size: tuple[int, int] = (1920, 1080)
    walk_step_std: float = 5.0
    occlusion_rate: float = 0.5
    occlusion_gap: tuple[int, int] = (1, 10)
    embedding_intra_std: float = 0.05
    embedding_inter_separation: float = 0.6
    camera_bias_std: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_identities < 1 or self.cameras < 1 or self.frames < 1:
            raise ValueError("num_identities, cameras, and frames must be >= 1")
        if not 0.0 <= self.occlusion_rate <= 1.0:
            raise ValueError("occlusion_rate must lie in [0, 1]")
        lo, hi = self.occlusion_gap
        if not 1 <= lo <= hi <= 10:
            raise ValueError("occlusion_gap must lie within (0, 10]")
        if not 0.0 <= self.embedding_inter_separation < 2.0:
            raise ValueError("embedding_inter_separation must lie in [0, 2)")


@dataclass
class Scene:
    """Per-camera ground truth (tracklet ids are the global identity ids)
    plus per-camera embedding tracks."""

    gt: dict[str, TrackSet]
    embeddings: dict[str, dict[int, EmbeddingTrack]]
    config: SceneConfig | None = None


@dataclass(frozen=True)
class Cut:
    """One injected identity switch: the trajectory that was split, the two
    fragment ids, and the frame gap between them."""

    original_id: int
    head_id: int
    tail_id: int
    gap: int
    cut_frame: int


@dataclass
class FragmentResult:
    trackset: TrackSet
    cuts: list[Cut] = field(default_factory=list)


def _base_embeddings(rng: np.random.Generator, count: int,
                     min_separation: float) -> np.ndarray:
    """Unit vectors whose pairwise cosine distance is >= min_separation."""
    vectors = np.empty((count, EMBED_DIM))
    placed = 0
    for _ in range(200 * count + 200):
        v = rng.standard_normal(EMBED_DIM)
        v /= np.linalg.norm(v)
        if placed and np.max(vectors[:placed] @ v) > 1.0 - min_separation:
            continue
        vectors[placed] = v
        placed += 1
        if placed == count:
            return vectors
    raise ValueError(
        f"cannot place {count} embeddings with cosine separation "
        f">= {min_separation}; request is infeasible")


def _perturb(rng: np.random.Generator, base: np.ndarray, max_cos_dist: float) -> np.ndarray:
    """A unit vector within the given cosine distance of base."""
    if max_cos_dist <= 0:
        return base.copy()
    cos_theta = 1.0 - rng.uniform(0.0, max_cos_dist)
    raw = rng.standard_normal(base.shape)
    ortho = raw - (raw @ base) * base
    norm = np.linalg.norm(ortho)
    if norm < 1e-12:
        return base.copy()
    ortho /= norm
    return cos_theta * base + np.sqrt(max(0.0, 1.0 - cos_theta ** 2)) * ortho


def _walk_trajectory(rng: np.random.Generator, config: SceneConfig,
                     start_frame: int, length: int) -> list[TrackEntry]:
    width, height = config.image_size
    w0 = rng.uniform(40.0, 70.0)
    h0 = w0 * rng.uniform(2.2, 2.6)
    speed = config.walk_step_std * rng.uniform(0.8, 1.2)
    heading = rng.uniform(0.0, 2.0 * np.pi)
    margin_x, margin_y = w0 / 2 + 2, h0 / 2 + 2
    cx = rng.uniform(margin_x, width - margin_x)
    cy = rng.uniform(margin_y, height - margin_y)
    entries = []
    for i in range(length):
        jitter = rng.uniform(0.98, 1.02)
        bw, bh = w0 * jitter, h0 * jitter
        entries.append(TrackEntry(start_frame + i,
                                  Box(cx - bw / 2, cy - bh / 2, bw, bh), 1.0))
        heading += rng.normal(0.0, 0.15)
        cx += speed * np.cos(heading)
        cy += speed * np.sin(heading)
        # reflect off the walls so boxes stay inside the frame
        if cx < margin_x:
            cx = 2 * margin_x - cx
            heading = np.pi - heading
        elif cx > width - margin_x:
            cx = 2 * (width - margin_x) - cx
            heading = np.pi - heading
        if cy < margin_y:
            cy = 2 * margin_y - cy
            heading = -heading
        elif cy > height - margin_y:
            cy = 2 * (height - margin_y) - cy
            heading = -heading
    return entries


def gen_scene(config: SceneConfig) -> Scene:
    """Deterministically generate per-camera ground truth and embeddings.

    Every identity walks independently in each camera it appears in (moving
    cameras share no geometry). Its embedding samples scatter around a base
    vector, with an additive per-camera bias modelling style differences.
    """
    rng = np.random.default_rng(config.seed)
    bases = _base_embeddings(rng, config.num_identities,
                             config.embedding_inter_separation)
    camera_names = [f"cam{i}" for i in range(1, config.cameras + 1)]
    biases = {}
    for name in camera_names:
        direction = rng.standard_normal(EMBED_DIM)
        biases[name] = config.camera_bias_std * direction / np.linalg.norm(direction)

    gt = {name: {} for name in camera_names}
    embeddings: dict[str, dict[int, EmbeddingTrack]] = {name: {} for name in camera_names}
    for identity in range(1, config.num_identities + 1):
        count = int(rng.integers(1, config.cameras + 1))
        chosen = sorted(rng.choice(config.cameras, size=count, replace=False))
        for cam_index in chosen:
            name = camera_names[cam_index]
            entries = _walk_trajectory(rng, config, 1, config.frames)
            gt[name][identity] = Tracklet(identity, entries)
            vecs = []
            for entry in entries:
                v = _perturb(rng, bases[identity - 1], config.embedding_intra_std)
                vecs.append((entry.frame, v + biases[name]))
            embeddings[name][identity] = EmbeddingTrack(identity, vecs)

    tracksets = {name: TrackSet(tracklets=gt[name], camera_id=name)
                 for name in camera_names}
    return Scene(gt=tracksets, embeddings=embeddings, config=config)


def fragment(gt: TrackSet, config: SceneConfig) -> FragmentResult:
    """Inject identity switches: each trajectory is cut with probability
    ``occlusion_rate`` at a random interior frame, the configured gap is
    dropped, and the tail continues under a fresh id. Tails may be cut
    again. Retained boxes are untouched."""
    rng = np.random.default_rng(config.seed + 1)
    next_id = max(gt.tracklets, default=0) + 1
    out: dict[int, Tracklet] = {}
    cuts: list[Cut] = []

    for tid in sorted(gt.tracklets):
        tracklet = gt.tracklets[tid]
        current_id = tid
        original_id = tid
        entries = list(tracklet.entries)
        while (len(entries) >= 2 * _MIN_FRAGMENT + 1
               and rng.random() < config.occlusion_rate):
            gap = int(rng.integers(config.occlusion_gap[0], config.occlusion_gap[1] + 1))
            k = int(rng.integers(_MIN_FRAGMENT, len(entries) - _MIN_FRAGMENT + 1))
            cut_frame = entries[k - 1].frame
            frames = [e.frame for e in entries]
            j = int(np.searchsorted(frames, cut_frame + gap))
            if len(entries) - j < _MIN_FRAGMENT:
                break
            actual_gap = entries[j].frame - cut_frame
            if actual_gap > config.occlusion_gap[1]:
                break
            head, tail = entries[:k], entries[j:]
            out[current_id] = Tracklet(current_id, head)
            tail_id = next_id
            next_id += 1
            cuts.append(Cut(original_id=original_id, head_id=current_id,
                            tail_id=tail_id, gap=actual_gap, cut_frame=cut_frame))
            current_id = tail_id
            entries = tail
        out[current_id] = Tracklet(current_id, entries)

    return FragmentResult(trackset=TrackSet(tracklets=out, camera_id=gt.camera_id),
                          cuts=cuts)
