import io

import numpy as np
import pytest

from tracklinker import colorxfer
from tracklinker.colorxfer import (ChannelStats, ColorTransfer, channel_stats,
                                   lab_to_rgb, read_ppm, rgb_to_lab, transfer,
                                   transfer_lab, write_ppm)


def random_image(rng, h=24, w=32):
    return rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)


class TestColorSpace:
    def test_mid_gray_has_near_zero_chrominance(self):
        img = np.full((2, 2, 3), 128, dtype=np.uint8)
        lab = rgb_to_lab(img)
        assert np.all(np.abs(lab[..., 1]) < 2e-3)
        assert np.all(np.abs(lab[..., 2]) < 2e-3)

    def test_black_pixel_is_finite(self):
        img = np.zeros((1, 1, 3), dtype=np.uint8)
        lab = rgb_to_lab(img)
        assert np.all(np.isfinite(lab))

    def test_white_round_trip(self):
        img = np.full((1, 1, 3), 255, dtype=np.uint8)
        back = lab_to_rgb(rgb_to_lab(img))
        assert np.all(np.abs(back.astype(int) - 255) <= 1)

    def test_round_trip_random_pixels(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(100, 100, 3)).astype(np.uint8)
        back = lab_to_rgb(rgb_to_lab(img))
        assert np.max(np.abs(back.astype(int) - img.astype(int))) <= 1

    def test_out_of_gamut_lab_clamps(self):
        lab = np.full((1, 1, 3), 50.0)
        rgb = lab_to_rgb(lab)
        assert rgb.dtype == np.uint8
        lab_neg = np.full((1, 1, 3), -50.0)
        assert lab_to_rgb(lab_neg).dtype == np.uint8


class TestChannelStats:
    def test_constant_image_hits_std_floor(self):
        img = np.full((4, 4, 3), 77, dtype=np.uint8)
        stats = channel_stats([img])
        np.testing.assert_allclose(stats.std, 1e-6)

    def test_duplicated_image_changes_nothing(self):
        rng = np.random.default_rng(1)
        img = random_image(rng)
        one = channel_stats([img])
        two = channel_stats([img, img])
        np.testing.assert_allclose(one.mean, two.mean)
        np.testing.assert_allclose(one.std, two.std)

    def test_two_pixel_hand_computation(self):
        img = np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8)
        lab = rgb_to_lab(img).reshape(2, 3)
        stats = channel_stats([img])
        np.testing.assert_allclose(stats.mean, lab.mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(stats.std, np.maximum(lab.std(axis=0), 1e-6),
                                   atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            channel_stats([])

    def test_single_pixel_rejected(self):
        with pytest.raises(ValueError, match="2 pixels"):
            channel_stats([np.zeros((1, 1, 3), dtype=np.uint8)])

    def test_stats_require_positive_std(self):
        with pytest.raises(ValueError):
            ChannelStats(mean=np.zeros(3), std=np.array([1.0, 0.0, 1.0]))


class TestTransfer:
    def test_identity_transfer(self):
        rng = np.random.default_rng(2)
        img = random_image(rng)
        stats = channel_stats([img])
        out = transfer(img, stats, stats)
        assert np.max(np.abs(out.astype(int) - img.astype(int))) <= 1

    def test_constant_content_moves_to_reference_mean(self):
        rng = np.random.default_rng(3)
        content = np.full((8, 8, 3), 42, dtype=np.uint8)
        reference = random_image(rng)
        out = transfer(content, channel_stats([content]), channel_stats([reference]))
        assert len(np.unique(out.reshape(-1, 3), axis=0)) == 1
        out_lab = rgb_to_lab(out).reshape(-1, 3)[0]
        ref_mean = channel_stats([reference]).mean
        np.testing.assert_allclose(out_lab, ref_mean, atol=0.02)

    def test_output_stats_match_reference_pre_quantization(self):
        rng = np.random.default_rng(4)
        content = random_image(rng, 40, 40)
        reference = random_image(rng, 40, 40)
        c_stats = channel_stats([content])
        r_stats = channel_stats([reference])
        out_lab = transfer_lab(rgb_to_lab(content), c_stats, r_stats)
        flat = out_lab.reshape(-1, 3)
        np.testing.assert_allclose(flat.mean(axis=0), r_stats.mean, atol=1e-3)
        np.testing.assert_allclose(flat.std(axis=0), r_stats.std, atol=1e-3)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        content, reference = random_image(rng), random_image(rng)
        a = transfer(content, channel_stats([content]), channel_stats([reference]))
        b = transfer(content, channel_stats([content]), channel_stats([reference]))
        assert np.array_equal(a, b)


class TestPpm:
    def test_round_trip(self):
        rng = np.random.default_rng(6)
        img = random_image(rng, 5, 7)
        buf = io.BytesIO()
        write_ppm(img, buf)
        buf.seek(0)
        again = read_ppm(buf)
        assert np.array_equal(img, again)

    def test_header_with_comment(self):
        raw = b"P6\n# a comment\n2 1\n255\n" + bytes(6)
        img = read_ppm(io.BytesIO(raw))
        assert img.shape == (1, 2, 3)

    def test_rejects_non_p6(self):
        with pytest.raises(ValueError, match="P6"):
            read_ppm(io.BytesIO(b"P3\n1 1\n255\n000"))

    def test_rejects_truncated_pixels(self):
        with pytest.raises(ValueError, match="truncated"):
            read_ppm(io.BytesIO(b"P6\n2 2\n255\n" + bytes(5)))

    def test_rejects_wrong_maxval(self):
        with pytest.raises(ValueError, match="maxval"):
            read_ppm(io.BytesIO(b"P6\n1 1\n65535\n" + bytes(6)))


class TestEstimator:
    def test_fit_transform_identity(self):
        rng = np.random.default_rng(7)
        img = random_image(rng)
        est = ColorTransfer()
        out = est.fit([img]).transform([img])
        assert np.max(np.abs(out[0].astype(int) - img.astype(int))) <= 1

    def test_get_params_round_trip(self):
        est = ColorTransfer(reference_stride=5)
        assert est.get_params() == {"reference_stride": 5}
        est.set_params(reference_stride=2)
        assert est.reference_stride == 2

    def test_transform_before_fit_raises(self):
        with pytest.raises(RuntimeError, match="not fitted"):
            ColorTransfer().transform([np.zeros((2, 2, 3), dtype=np.uint8)])

    def test_stride_pools_every_kth_frame(self):
        rng = np.random.default_rng(8)
        frames = [random_image(rng) for _ in range(7)]
        est = ColorTransfer(reference_stride=3).fit(frames)
        expected = channel_stats(frames[::3])
        np.testing.assert_allclose(est.reference_stats_.mean, expected.mean)
        np.testing.assert_allclose(est.reference_stats_.std, expected.std)
