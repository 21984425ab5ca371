import io

import numpy as np
import pytest

from tracklinker import ict
from tracklinker.ict import (AssocConfig, CrossCameraAssociator, TrackletEmbedding,
                             assign_global_ids, associate, distance_matrix,
                             mean_embedding, read_global_ids, write_global_ids)
from tracklinker.synth import SceneConfig, gen_scene
from tracklinker.trackio import EmbeddingTrack


def embed(tid, cam, vec):
    return TrackletEmbedding(tracklet_id=tid, camera_id=cam, vector=np.asarray(vec, float))


def unit(i, dim=128):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


class TestMeanEmbedding:
    def test_single_frame(self):
        v = np.arange(128, dtype=float)
        track = EmbeddingTrack(1, [(1, v)])
        np.testing.assert_array_equal(mean_embedding(track), v)

    def test_forty_frames_uses_last_thirty(self):
        entries = [(f, np.full(128, float(f))) for f in range(1, 41)]
        track = EmbeddingTrack(1, entries)
        expected = np.mean([float(f) for f in range(11, 41)])
        np.testing.assert_allclose(mean_embedding(track, last_k=30),
                                   np.full(128, expected))

    def test_constant_track(self):
        v = np.linspace(0, 1, 128)
        track = EmbeddingTrack(1, [(f, v.copy()) for f in range(1, 8)])
        np.testing.assert_allclose(mean_embedding(track), v)


class TestDistanceMatrix:
    def test_identical_orthogonal_antiparallel(self):
        q = [embed(1, "a", unit(0))]
        f = [embed(1, "b", unit(0)), embed(2, "b", unit(1)), embed(3, "b", -unit(0))]
        d = distance_matrix(q, f)
        np.testing.assert_allclose(d, [[0.0, 1.0, 2.0]], atol=1e-12)

    def test_range_and_scale_invariance(self):
        rng = np.random.default_rng(0)
        q = [embed(i, "a", rng.standard_normal(128)) for i in range(5)]
        f = [embed(i, "b", rng.standard_normal(128)) for i in range(7)]
        d = distance_matrix(q, f)
        assert np.all(d >= -1e-9) and np.all(d <= 2 + 1e-9)
        scaled = [embed(e.tracklet_id, "a", 3.7 * e.vector) for e in q]
        np.testing.assert_allclose(distance_matrix(scaled, f), d, atol=1e-9)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            embed(1, "a", np.zeros(128))


class TestAssociate:
    def test_accepts_below_threshold(self):
        assert associate(np.array([[0.2]]), AssocConfig(alpha=0.5)) == [(0, 0)]

    def test_rejects_above_threshold(self):
        assert associate(np.array([[0.9]]), AssocConfig(alpha=0.5)) == []

    def test_diagonal_preference(self):
        d = np.array([[0.1, 0.4], [0.4, 0.1]])
        assert associate(d, AssocConfig(alpha=0.5)) == [(0, 0), (1, 1)]

    def test_threshold_monotonicity(self):
        rng = np.random.default_rng(1)
        d = rng.uniform(0, 2, size=(6, 6))
        counts = [len(associate(d, AssocConfig(alpha=a)))
                  for a in (0.3, 0.4, 0.5, 0.6)]
        assert counts == sorted(counts)

    def test_boundary_is_feasible(self):
        assert associate(np.array([[0.5]]), AssocConfig(alpha=0.5)) == [(0, 0)]


class TestAssignGlobalIds:
    def scene(self, cameras, seed=3):
        return gen_scene(SceneConfig(num_identities=8, cameras=cameras, frames=60,
                                     embedding_intra_std=0.05,
                                     embedding_inter_separation=0.6, seed=seed))

    def per_camera(self, scene):
        return [(scene.gt[cam], scene.embeddings[cam]) for cam in scene.gt]

    def test_single_camera_is_relabeling(self):
        scene = self.scene(1)
        mapping = assign_global_ids(self.per_camera(scene), AssocConfig())
        gids = sorted(mapping.values())
        assert gids == list(range(1, len(mapping) + 1))

    def test_two_identical_cameras_merge_fully(self):
        scene = self.scene(2)
        mapping = assign_global_ids(self.per_camera(scene), AssocConfig(alpha=0.5))
        for identity in scene.gt["cam1"].tracklets:
            if identity in scene.gt["cam2"].tracklets:
                assert mapping[("cam1", identity)] == mapping[("cam2", identity)]

    def test_no_merges_when_all_far(self):
        scene = self.scene(2)
        mapping = assign_global_ids(self.per_camera(scene), AssocConfig(alpha=0.001))
        total = sum(len(ts.tracklets) for ts, _ in self.per_camera(scene))
        assert len(set(mapping.values())) == total

    def test_totality(self):
        scene = self.scene(3)
        per_cam = self.per_camera(scene)
        mapping = assign_global_ids(per_cam, AssocConfig())
        keys = {(ts.camera_id, tid) for ts, _ in per_cam for tid in ts.tracklets}
        assert set(mapping) == keys

    def test_duplicate_camera_rejected(self):
        scene = self.scene(1)
        pair = self.per_camera(scene)[0]
        with pytest.raises(ValueError, match="duplicate camera"):
            assign_global_ids([pair, pair], AssocConfig())

    def test_missing_embeddings_rejected(self):
        scene = self.scene(1)
        ts = scene.gt["cam1"]
        with pytest.raises(ValueError, match="no embeddings"):
            assign_global_ids([(ts, {})], AssocConfig())


class TestGlobalIdCsv:
    def test_round_trip(self):
        mapping = {("cam1", 1): 1, ("cam1", 2): 2, ("cam2", 5): 1}
        buf = io.StringIO()
        write_global_ids(mapping, buf)
        again = read_global_ids(io.StringIO(buf.getvalue()))
        assert again == mapping

    def test_duplicate_key_rejected(self):
        text = "camera_id,tracklet_id,global_id\ncam1,1,1\ncam1,1,2\n"
        with pytest.raises(ValueError, match="duplicate"):
            read_global_ids(io.StringIO(text))


class TestEstimator:
    def test_fit_predict_matches_function(self):
        scene = gen_scene(SceneConfig(num_identities=6, cameras=2, frames=50, seed=9))
        per_cam = [(scene.gt[c], scene.embeddings[c]) for c in scene.gt]
        est = CrossCameraAssociator(alpha=0.5, last_k=30)
        result = est.fit_predict(per_cam)
        direct = assign_global_ids(per_cam, AssocConfig(alpha=0.5), last_k=30)
        assert result == direct

    def test_get_params(self):
        est = CrossCameraAssociator(alpha=0.8, last_k=10)
        assert est.get_params() == {"alpha": 0.8, "last_k": 10}
