"""Tracking evaluation: CLEAR-MOT counts (MOTA, IDS, FRAG, MT, ML) from
per-frame matching with carry-over, and trajectory-level identity scores
(IDF1, IDP, IDR) from a global minimum-cost bipartite matching."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import lap
from .ict import GlobalIdMap
from .trackio import Box, TrackSet


@dataclass(frozen=True)
class SctReport:
    mota: float
    idf1: float
    idp: float
    idr: float
    ids: int
    frag: int
    fp: int
    fn: int
    mt: int
    ml: int
    num_gt: int

    def rows(self) -> list[tuple[str, float]]:
        return [("MOTA", self.mota), ("IDF1", self.idf1), ("IDP", self.idp),
                ("IDR", self.idr), ("IDS", self.ids), ("FRAG", self.frag),
                ("FP", self.fp), ("FN", self.fn), ("MT", self.mt), ("ML", self.ml)]


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes."""
    if a.w <= 0 or a.h <= 0 or b.w <= 0 or b.h <= 0:
        raise ValueError("boxes must have positive area")
    x1 = max(a.x, b.x)
    y1 = max(a.y, b.y)
    x2 = min(a.x + a.w, b.x + b.w)
    y2 = min(a.y + a.h, b.y + b.h)
    inter = max(0.0, x2 - x1) * max(0.0, y2 - y1)
    union = a.w * a.h + b.w * b.h - inter
    if union <= 0:
        return 0.0
    # identical float coordinates can push the ratio a few ulp past 1
    return min(inter / union, 1.0)


def _by_frame(trackset: TrackSet) -> dict[int, list[tuple[int, Box]]]:
    frames: dict[int, list[tuple[int, Box]]] = {}
    for tid, tracklet in sorted(trackset.tracklets.items()):
        for entry in tracklet.entries:
            frames.setdefault(entry.frame, []).append((tid, entry.box))
    return frames


def _clear_counts(gt: TrackSet, pred: TrackSet, iou_threshold: float) -> dict:
    gt_frames = _by_frame(gt)
    pred_frames = _by_frame(pred)
    frames = sorted(set(gt_frames) | set(pred_frames))

    fp = fn = ids = frag = 0
    last_match: dict[int, int] = {}
    prev_matches: dict[int, int] = {}
    present: dict[int, int] = {}
    covered: dict[int, int] = {}
    in_gap: dict[int, bool] = {}
    ever_matched: dict[int, bool] = {}

    for frame in frames:
        gts = gt_frames.get(frame, [])
        preds = pred_frames.get(frame, [])
        gt_ids = [g for g, _ in gts]
        gt_boxes = {g: b for g, b in gts}
        pred_boxes = {p: b for p, b in preds}

        matches: dict[int, int] = {}
        taken: set[int] = set()
        # keep the previous frame's pairing where it still holds
        for g, p in prev_matches.items():
            if g in gt_boxes and p in pred_boxes and p not in taken:
                if iou(gt_boxes[g], pred_boxes[p]) >= iou_threshold:
                    matches[g] = p
                    taken.add(p)
        free_gt = [g for g in gt_ids if g not in matches]
        free_pred = [p for p, _ in preds if p not in taken]
        if free_gt and free_pred:
            cost = np.zeros((len(free_gt), len(free_pred)))
            feasible = np.zeros_like(cost, dtype=bool)
            for i, g in enumerate(free_gt):
                for j, p in enumerate(free_pred):
                    overlap = iou(gt_boxes[g], pred_boxes[p])
                    if overlap >= iou_threshold:
                        cost[i, j] = 1.0 - overlap
                        feasible[i, j] = True
            solution = lap.solve(lap.CostMatrix(cost=cost, feasible=feasible))
            for i, j in solution.pairs:
                matches[free_gt[i]] = free_pred[j]
                taken.add(free_pred[j])

        fp += len(preds) - len(matches)
        fn += len(gts) - len(matches)
        for g in gt_ids:
            present[g] = present.get(g, 0) + 1
            if g in matches:
                p = matches[g]
                if g in last_match and last_match[g] != p:
                    ids += 1
                last_match[g] = p
                covered[g] = covered.get(g, 0) + 1
                if in_gap.get(g):
                    frag += 1
                in_gap[g] = False
                ever_matched[g] = True
            elif ever_matched.get(g):
                in_gap[g] = True
        prev_matches = matches

    return {"fp": fp, "fn": fn, "ids": ids, "frag": frag,
            "present": present, "covered": covered}


def _id_overlap_counts(gt_tracks: Mapping, pred_tracks: Mapping,
                       iou_threshold: float) -> tuple[int, int, int]:
    """Ristani-style trajectory matching. Track maps are id -> {frame_key:
    Box}. Returns (IDTP, IDFP, IDFN)."""
    gt_ids = sorted(gt_tracks)
    pred_ids = sorted(pred_tracks)
    ng, npred = len(gt_ids), len(pred_ids)
    total_gt = sum(len(v) for v in gt_tracks.values())
    total_pred = sum(len(v) for v in pred_tracks.values())
    if ng == 0 or npred == 0:
        return 0, total_pred, total_gt

    overlap = np.zeros((ng, npred), dtype=np.int64)
    for i, g in enumerate(gt_ids):
        boxes_g = gt_tracks[g]
        for j, p in enumerate(pred_ids):
            boxes_p = pred_tracks[p]
            small, large = (boxes_g, boxes_p) if len(boxes_g) <= len(boxes_p) \
                else (boxes_p, boxes_g)
            count = 0
            for key, box in small.items():
                other = large.get(key)
                if other is not None and iou(box, other) >= iou_threshold:
                    count += 1
            overlap[i, j] = count

    size = ng + npred
    cost = np.zeros((size, size))
    feasible = np.zeros((size, size), dtype=bool)
    len_g = np.array([len(gt_tracks[g]) for g in gt_ids])
    len_p = np.array([len(pred_tracks[p]) for p in pred_ids])
    cost[:ng, :npred] = len_g[:, None] + len_p[None, :] - 2 * overlap
    feasible[:ng, :npred] = True
    for i in range(ng):
        cost[i, npred + i] = len_g[i]
        feasible[i, npred + i] = True
    for j in range(npred):
        cost[ng + j, j] = len_p[j]
        feasible[ng + j, j] = True
    feasible[ng:, npred:] = True

    solution = lap.solve(lap.CostMatrix(cost=cost, feasible=feasible))
    idtp = int(sum(overlap[i, j] for i, j in solution.pairs if i < ng and j < npred))
    return idtp, total_pred - idtp, total_gt - idtp


def _tracks_as_maps(trackset: TrackSet) -> dict[int, dict[int, Box]]:
    return {tid: {e.frame: e.box for e in t.entries}
            for tid, t in trackset.tracklets.items()}


def _id_scores(idtp: int, idfp: int, idfn: int) -> tuple[float, float, float]:
    idp = idtp / (idtp + idfp) if idtp + idfp > 0 else 0.0
    idr = idtp / (idtp + idfn) if idtp + idfn > 0 else 0.0
    idf1 = 2 * idtp / (2 * idtp + idfp + idfn) if 2 * idtp + idfp + idfn > 0 else 0.0
    return idf1, idp, idr


def evaluate(gt: TrackSet, pred: TrackSet, iou_threshold: float = 0.5) -> SctReport:
    """Score a single camera's predictions against ground truth."""
    if not gt.tracklets:
        raise ValueError("ground truth is empty")
    clear = _clear_counts(gt, pred, iou_threshold)
    num_gt = sum(clear["present"].values())
    mota = 1.0 - (clear["fp"] + clear["fn"] + clear["ids"]) / num_gt
    idtp, idfp, idfn = _id_overlap_counts(_tracks_as_maps(gt), _tracks_as_maps(pred),
                                          iou_threshold)
    idf1, idp, idr = _id_scores(idtp, idfp, idfn)
    mt = ml = 0
    for g, n_present in clear["present"].items():
        coverage = clear["covered"].get(g, 0) / n_present
        if coverage >= 0.8:
            mt += 1
        elif coverage <= 0.2:
            ml += 1
    return SctReport(mota=mota, idf1=idf1, idp=idp, idr=idr, ids=clear["ids"],
                     frag=clear["frag"], fp=clear["fp"], fn=clear["fn"],
                     mt=mt, ml=ml, num_gt=num_gt)


def evaluate_mtmc(gt: Mapping[str, TrackSet], pred: Mapping[str, TrackSet],
                  global_ids: GlobalIdMap | None = None,
                  iou_threshold: float = 0.5) -> tuple[float, float, float]:
    """(IDF1, IDP, IDR) over the union of all cameras' detections.

    Ground-truth tracklet ids are the global identity labels. Prediction
    tracklets are relabeled through ``global_ids``; pass None when the
    prediction ids are already global."""
    gt_tracks: dict[int, dict] = {}
    for cam, trackset in gt.items():
        for tid, tracklet in trackset.tracklets.items():
            target = gt_tracks.setdefault(tid, {})
            for e in tracklet.entries:
                target[(cam, e.frame)] = e.box
    pred_tracks: dict[int, dict] = {}
    for cam, trackset in pred.items():
        for tid, tracklet in trackset.tracklets.items():
            if global_ids is None:
                gid = tid
            else:
                if (cam, tid) not in global_ids:
                    raise ValueError(f"tracklet ({cam!r}, {tid}) missing from the "
                                     f"global id map")
                gid = global_ids[(cam, tid)]
            target = pred_tracks.setdefault(gid, {})
            for e in tracklet.entries:
                target[(cam, e.frame)] = e.box
    idtp, idfp, idfn = _id_overlap_counts(gt_tracks, pred_tracks, iou_threshold)
    return _id_scores(idtp, idfp, idfn)


def format_report(report: SctReport) -> str:
    """Plain-text metrics table."""
    lines = [f"{'metric':<8}{'value':>10}"]
    for name, value in report.rows():
        if isinstance(value, float):
            lines.append(f"{name:<8}{value:>10.4f}")
        else:
            lines.append(f"{name:<8}{value:>10d}")
    return "\n".join(lines)


def report_csv_rows(report: SctReport) -> list[str]:
    """``metric,value`` rows for machine consumption."""
    out = ["metric,value"]
    for name, value in report.rows():
        if isinstance(value, float):
            out.append(f"{name},{value:.6f}")
        else:
            out.append(f"{name},{value}")
    return out
