import numpy as np
import pytest

from tracklinker.metrics import evaluate, evaluate_mtmc, format_report, iou, report_csv_rows
from tracklinker.trackio import Box, TrackEntry, Tracklet, TrackSet


def track(tid, frames, xy=(0.0, 0.0), step=(5.0, 0.0), size=(20.0, 40.0)):
    entries = []
    x, y = xy
    for f in frames:
        entries.append(TrackEntry(f, Box(x, y, size[0], size[1])))
        x += step[0]
        y += step[1]
    return Tracklet(tid, entries)


def as_set(*tracklets, camera_id=""):
    return TrackSet(tracklets={t.id: t for t in tracklets}, camera_id=camera_id)


class TestIou:
    def test_identical(self):
        assert iou(Box(0, 0, 10, 10), Box(0, 0, 10, 10)) == 1.0

    def test_disjoint(self):
        assert iou(Box(0, 0, 10, 10), Box(20, 20, 5, 5)) == 0.0

    def test_half_overlap(self):
        assert iou(Box(0, 0, 10, 10), Box(5, 0, 10, 10)) == pytest.approx(50 / 150)


class TestPerfectAndEmpty:
    def test_perfect_tracker(self):
        gt = as_set(track(1, range(1, 51)), track(2, range(10, 40), xy=(300, 300)))
        report = evaluate(gt, gt)
        assert report.mota == 1.0
        assert report.idf1 == 1.0
        assert report.ids == 0
        assert report.frag == 0
        assert report.fp == 0 and report.fn == 0
        assert report.mt == 2 and report.ml == 0

    def test_empty_prediction(self):
        gt = as_set(track(1, range(1, 21)))
        report = evaluate(gt, TrackSet())
        assert report.mota == 0.0
        assert report.idf1 == 0.0
        assert report.fn == 20
        assert report.ml == 1

    def test_empty_gt_rejected(self):
        with pytest.raises(ValueError):
            evaluate(TrackSet(), TrackSet())


class TestHalfSplit:
    def test_split_track_scores(self):
        # one 100-frame GT trajectory predicted as two 50-frame halves
        gt = as_set(track(1, range(1, 101), step=(3.0, 1.0)))
        g = gt.tracklets[1]
        pred = as_set(Tracklet(7, list(g.entries[:50])),
                      Tracklet(8, [TrackEntry(e.frame, e.box) for e in g.entries[50:]]))
        report = evaluate(gt, pred)
        assert report.ids == 1
        assert report.frag == 0
        assert report.idf1 == pytest.approx(0.5)
        assert report.fp == 0 and report.fn == 0
        assert report.mota == pytest.approx(1.0 - 1 / 100)

    def test_gap_then_resume_same_id_is_frag_not_ids(self):
        gt = as_set(track(1, range(1, 41)))
        g = gt.tracklets[1]
        pred = as_set(Tracklet(5, list(g.entries[:15]) + list(g.entries[25:])))
        report = evaluate(gt, pred)
        assert report.ids == 0
        assert report.frag == 1
        assert report.fn == 10


class TestInvariants:
    def test_relabeling_invariance(self):
        rng = np.random.default_rng(0)
        gt = as_set(track(1, range(1, 31)), track(2, range(5, 35), xy=(200, 0)),
                    track(3, range(1, 26), xy=(0, 300)))
        pred_tracks = []
        for tid, t in gt.tracklets.items():
            k = int(rng.integers(10, len(t)))
            pred_tracks.append(Tracklet(tid * 10, list(t.entries[:k])))
        pred = as_set(*pred_tracks)
        base = evaluate(gt, pred)
        relabeled = as_set(*[Tracklet(i + 1, list(t.entries))
                             for i, t in enumerate(pred_tracks)])
        again = evaluate(gt, relabeled)
        assert again == base.__class__(**{**base.__dict__})
        assert again.idf1 == base.idf1 and again.ids == base.ids

    def test_idf1_is_harmonic_mean(self):
        gt = as_set(track(1, range(1, 61)))
        pred = as_set(track(2, range(1, 31)))
        r = evaluate(gt, pred)
        if r.idp + r.idr > 0:
            assert r.idf1 == pytest.approx(2 * r.idp * r.idr / (r.idp + r.idr))

    def test_merging_fragments_improves_scores(self):
        gt = as_set(track(1, range(1, 101), step=(2.0, 2.0)))
        g = gt.tracklets[1]
        split = as_set(Tracklet(2, list(g.entries[:50])),
                       Tracklet(3, list(g.entries[50:])))
        merged = as_set(Tracklet(2, list(g.entries)))
        r_split = evaluate(gt, split)
        r_merged = evaluate(gt, merged)
        assert r_merged.ids <= r_split.ids
        assert r_merged.idf1 >= r_split.idf1

    def test_mota_at_most_one(self):
        gt = as_set(track(1, range(1, 11)))
        noisy = as_set(track(1, range(1, 11)), track(9, range(1, 11), xy=(500, 500)))
        r = evaluate(gt, noisy)
        assert r.mota <= 1.0
        assert r.fp == 10


class TestMtmc:
    def make_two_camera_scene(self):
        cams = {}
        for cam in ("cam1", "cam2"):
            cams[cam] = as_set(track(1, range(1, 31), xy=(10, 10)),
                               track(2, range(1, 31), xy=(400, 200)),
                               camera_id=cam)
        return cams

    def test_perfect_global_ids(self):
        gt = self.make_two_camera_scene()
        idf1, idp, idr = evaluate_mtmc(gt, gt, None)
        assert (idf1, idp, idr) == (1.0, 1.0, 1.0)

    def test_unmerged_identities_score_lower(self):
        gt = self.make_two_camera_scene()
        # prediction identical but camera 2 uses fresh ids (no cross-camera merge)
        pred = {"cam1": gt["cam1"],
                "cam2": as_set(*[Tracklet(t.id + 10, list(t.entries))
                                 for t in gt["cam2"].tracklets.values()],
                               camera_id="cam2")}
        merged_map = {("cam1", 1): 1, ("cam1", 2): 2, ("cam2", 11): 1, ("cam2", 12): 2}
        split_map = {("cam1", 1): 1, ("cam1", 2): 2, ("cam2", 11): 3, ("cam2", 12): 4}
        idf1_merged, _, _ = evaluate_mtmc(gt, pred, merged_map)
        idf1_split, _, _ = evaluate_mtmc(gt, pred, split_map)
        assert idf1_merged == 1.0
        assert idf1_split < idf1_merged

    def test_single_camera_reduces_to_sct_idf1(self):
        gt = as_set(track(1, range(1, 41)), track(2, range(1, 41), xy=(300, 0)),
                    camera_id="cam1")
        pred = as_set(Tracklet(5, list(gt.tracklets[1].entries[:20])),
                      Tracklet(6, list(gt.tracklets[1].entries[20:])),
                      Tracklet(7, list(gt.tracklets[2].entries)),
                      camera_id="cam1")
        sct = evaluate(gt, pred)
        idf1, idp, idr = evaluate_mtmc({"cam1": gt}, {"cam1": pred}, None)
        assert idf1 == pytest.approx(sct.idf1)
        assert idp == pytest.approx(sct.idp)
        assert idr == pytest.approx(sct.idr)

    def test_missing_mapping_entry_rejected(self):
        gt = self.make_two_camera_scene()
        with pytest.raises(ValueError, match="missing"):
            evaluate_mtmc(gt, gt, {("cam1", 1): 1})


class TestReportFormat:
    def test_table_and_csv(self):
        gt = as_set(track(1, range(1, 11)))
        r = evaluate(gt, gt)
        table = format_report(r)
        assert "MOTA" in table and "IDF1" in table
        rows = report_csv_rows(r)
        assert rows[0] == "metric,value"
        assert any(row.startswith("MOTA,") for row in rows)
