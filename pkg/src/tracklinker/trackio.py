"""MOTChallenge-format track files, per-detection embedding files, and the
core track data model shared by the rest of the toolkit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple

import numpy as np

EMBED_DIM = 128


class FormatError(ValueError):
    """A line of an input file violates the expected format."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class Box:
    """Axis-aligned box: left/top corner plus width/height in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError("box coordinates must be finite")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box width/height must be positive, got w={self.w}, h={self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


class TrackEntry(NamedTuple):
    """One frame of a tracklet. Confidence is carried so result files
    round-trip verbatim; ground-truth style files default it to 1."""

    frame: int
    box: Box
    conf: float = 1.0


@dataclass(frozen=True)
class Detection:
    frame: int
    track_id: int
    box: Box
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")
        if self.track_id < 1:
            raise ValueError(f"track_id must be >= 1, got {self.track_id}")


@dataclass
class Tracklet:
    """Frame-ordered boxes of one identity within one camera."""

    id: int
    entries: list[TrackEntry]

    def __post_init__(self) -> None:
        if self.id < 1:
            raise ValueError(f"tracklet id must be >= 1, got {self.id}")
        if not self.entries:
            raise ValueError("tracklet must have at least one entry")
        frames = [e.frame for e in self.entries]
        if any(b >= a for a, b in zip(frames[1:], frames)):
            raise ValueError(f"tracklet {self.id}: frames must be strictly increasing")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def start_frame(self) -> int:
        return self.entries[0].frame

    @property
    def end_frame(self) -> int:
        return self.entries[-1].frame


@dataclass
class TrackSet:
    """All tracklets of one camera, keyed by tracklet id."""

    tracklets: dict[int, Tracklet] = field(default_factory=dict)
    camera_id: str = ""

    def __post_init__(self) -> None:
        for tid, t in self.tracklets.items():
            if tid != t.id:
                raise ValueError(f"tracklet keyed {tid} carries id {t.id}")

    @property
    def frame_range(self) -> tuple[int, int] | None:
        """(min, max) frame over all entries, or None when empty."""
        frames = [e.frame for t in self.tracklets.values() for e in t.entries]
        if not frames:
            return None
        return (min(frames), max(frames))

    def num_detections(self) -> int:
        return sum(len(t) for t in self.tracklets.values())

    def __len__(self) -> int:
        return len(self.tracklets)


@dataclass
class EmbeddingTrack:
    """Frame-ordered per-detection appearance vectors of one tracklet."""

    id: int
    entries: list[tuple[int, np.ndarray]]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("embedding track must have at least one entry")
        frames = [f for f, _ in self.entries]
        if any(b >= a for a, b in zip(frames[1:], frames)):
            raise ValueError(f"embedding track {self.id}: frames must be strictly increasing")
        for f, v in self.entries:
            if v.shape != (EMBED_DIM,):
                raise ValueError(f"embedding track {self.id}, frame {f}: expected "
                                 f"{EMBED_DIM}-dim vector, got shape {v.shape}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"embedding track {self.id}, frame {f}: non-finite values")

    def __len__(self) -> int:
        return len(self.entries)


def _parse_float(token: str, what: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"cannot parse {what} from {token!r}", line_no) from None
    if not math.isfinite(value):
        raise FormatError(f"{what} is not finite: {token!r}", line_no)
    return value


def _parse_int(token: str, what: str, line_no: int) -> int:
    value = _parse_float(token, what, line_no)
    if value != int(value):
        raise FormatError(f"{what} must be integral, got {token!r}", line_no)
    return int(value)


def parse_mot(stream: IO[str] | Iterable[str], camera_id: str = "") -> TrackSet:
    """Parse MOTChallenge CSV lines ``frame,id,x,y,w,h[,conf,...]`` into a
    TrackSet. Trailing columns beyond the confidence are ignored; a missing
    confidence defaults to 1 (ground-truth convention). Detections are grouped
    per id and ordered by frame regardless of input line order."""
    per_id: dict[int, list[TrackEntry]] = {}
    seen: set[tuple[int, int]] = set()
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) < 6:
            raise FormatError(f"expected at least 6 comma-separated fields, got {len(fields)}",
                              line_no)
        frame = _parse_int(fields[0], "frame", line_no)
        track_id = _parse_int(fields[1], "track id", line_no)
        if frame < 1:
            raise FormatError(f"frame must be >= 1, got {frame}", line_no)
        if track_id < 1:
            raise FormatError(f"track id must be >= 1, got {track_id}", line_no)
        x = _parse_float(fields[2], "x", line_no)
        y = _parse_float(fields[3], "y", line_no)
        w = _parse_float(fields[4], "w", line_no)
        h = _parse_float(fields[5], "h", line_no)
        if w <= 0 or h <= 0:
            raise FormatError(f"non-positive box size w={w}, h={h}", line_no)
        conf = _parse_float(fields[6], "confidence", line_no) if len(fields) > 6 else 1.0
        if (frame, track_id) in seen:
            raise FormatError(f"duplicate detection for frame {frame}, id {track_id}", line_no)
        seen.add((frame, track_id))
        per_id.setdefault(track_id, []).append(TrackEntry(frame, Box(x, y, w, h), conf))

    tracklets = {
        tid: Tracklet(tid, sorted(entries, key=lambda e: e.frame))
        for tid, entries in per_id.items()
    }
    return TrackSet(tracklets=tracklets, camera_id=camera_id)


def _fmt(value: float) -> str:
    # repr() of a Python float is the shortest string that parses back to the
    # same value, which is what the round-trip contract needs.
    return repr(float(value))


def write_mot(trackset: TrackSet, stream: IO[str]) -> None:
    """Write a TrackSet as MOT CSV, one detection per line sorted by
    (frame, id), with the conventional three trailing ``-1`` columns."""
    rows: list[tuple[int, int, TrackEntry]] = []
    for tid, tracklet in trackset.tracklets.items():
        for entry in tracklet.entries:
            rows.append((entry.frame, tid, entry))
    rows.sort(key=lambda r: (r[0], r[1]))
    for frame, tid, entry in rows:
        b = entry.box
        stream.write(f"{frame},{tid},{_fmt(b.x)},{_fmt(b.y)},{_fmt(b.w)},{_fmt(b.h)},"
                     f"{_fmt(entry.conf)},-1,-1,-1\n")


def parse_embeddings(stream: IO[str] | Iterable[str]) -> dict[int, EmbeddingTrack]:
    """Parse embedding CSV lines ``frame,id,f0,...,f127`` into per-id
    EmbeddingTracks, frame-ordered."""
    per_id: dict[int, list[tuple[int, np.ndarray]]] = {}
    seen: set[tuple[int, int]] = set()
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != EMBED_DIM + 2:
            raise FormatError(f"expected {EMBED_DIM + 2} fields, got {len(fields)}", line_no)
        frame = _parse_int(fields[0], "frame", line_no)
        track_id = _parse_int(fields[1], "track id", line_no)
        if (frame, track_id) in seen:
            raise FormatError(f"duplicate embedding for frame {frame}, id {track_id}", line_no)
        seen.add((frame, track_id))
        try:
            vec = np.array([float(t) for t in fields[2:]], dtype=np.float64)
        except ValueError:
            raise FormatError("cannot parse embedding values", line_no) from None
        if not np.all(np.isfinite(vec)):
            raise FormatError("non-finite embedding value", line_no)
        per_id.setdefault(track_id, []).append((frame, vec))

    return {
        tid: EmbeddingTrack(tid, sorted(entries, key=lambda e: e[0]))
        for tid, entries in per_id.items()
    }


def write_embeddings(tracks: dict[int, EmbeddingTrack], stream: IO[str]) -> None:
    """Write embedding tracks as ``frame,id,f0..f127`` CSV sorted by
    (frame, id). Values carry 6 significant digits."""
    rows: list[tuple[int, int, np.ndarray]] = []
    for tid, track in tracks.items():
        for frame, vec in track.entries:
            rows.append((frame, tid, vec))
    rows.sort(key=lambda r: (r[0], r[1]))
    for frame, tid, vec in rows:
        values = ",".join(f"{v:.6g}" for v in vec)
        stream.write(f"{frame},{tid},{values}\n")
