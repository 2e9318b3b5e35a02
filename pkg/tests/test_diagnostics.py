import math

import numpy as np
import pytest

from mast.diagnostics import (attention_entropy_profile, boundary_band_stats,
                              laplacian_map, paired_composite_experiment,
                              write_pgm)
from mast.errors import EmptyBand, InvalidInput
from mast.masks import MaskSet, read_pgm
from mast.numerics import row_softmax

import oracles


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed=seed))


class TestLaplacian:
    def test_constant_image(self):
        assert laplacian_map(np.full((5, 5), 3.0)).max() == 0.0

    def test_affine_ramp_interior(self):
        yy, xx = np.mgrid[0:8, 0:9]
        lap = laplacian_map(2.0 * yy + 0.5 * xx + 1.0)
        assert np.abs(lap[1:-1, 1:-1]).max() < 1e-12

    def test_unit_step_column_matches_hand_convolution(self):
        img = np.zeros((5, 8))
        img[:, 4:] = 1.0
        lap = laplacian_map(img)
        # cross kernel on a step: |')'| = 1 on both columns flanking the edge
        np.testing.assert_allclose(lap[:, 3], 1.0)
        np.testing.assert_allclose(lap[:, 4], 1.0)
        np.testing.assert_allclose(lap[:, :3], 0.0)
        np.testing.assert_allclose(lap[:, 5:], 0.0)

    def test_matches_manual_stencil(self):
        img = _rng(0).standard_normal((6, 7))
        lap = laplacian_map(img)
        p = np.pad(img, 1, mode="edge")
        for y in range(6):
            for x in range(7):
                want = abs(p[y, x + 1] + p[y + 2, x + 1] + p[y + 1, x]
                           + p[y + 1, x + 2] - 4 * p[y + 1, x + 1])
                assert lap[y, x] == pytest.approx(want, abs=1e-12)

    def test_too_small_rejected(self):
        with pytest.raises(InvalidInput):
            laplacian_map(np.zeros((2, 5)))


class TestBoundaryBand:
    def _half_mask(self, h, w):
        m = np.zeros((h, w), np.float32)
        m[:, w // 2:] = 1.0
        return MaskSet((m,))

    def test_step_image_band_dominates(self):
        img = np.zeros((16, 16))
        img[:, 8:] = 1.0
        report = boundary_band_stats(laplacian_map(img), self._half_mask(16, 16), 2)
        assert report.boundary_band_mean > 10 * max(report.interior_mean, 1e-12)

    def test_zero_map(self):
        report = boundary_band_stats(np.zeros((8, 8)), self._half_mask(8, 8), 2)
        assert report.boundary_band_mean == 0.0
        assert report.interior_mean == 0.0

    def test_no_boundary_raises(self):
        ms = MaskSet((np.zeros((8, 8), np.float32),))
        with pytest.raises(EmptyBand):
            boundary_band_stats(np.zeros((8, 8)), ms, 2)

    def test_band_width_grows_with_band_px(self):
        ms = self._half_mask(12, 12)
        small = boundary_band_stats(np.ones((12, 12)), ms, 1)
        large = boundary_band_stats(np.ones((12, 12)), ms, 4)
        assert large.band_pixels > small.band_pixels


class TestEntropyProfile:
    def test_uniform_rows(self):
        t = 10
        profile = attention_entropy_profile(np.full((4, t), 1.0 / t))
        assert profile.mean_entropy == pytest.approx(math.log(t), abs=1e-12)
        assert profile.mean_log_p_max == pytest.approx(-math.log(t), abs=1e-12)

    def test_one_hot_rows(self):
        rows = np.eye(5)
        profile = attention_entropy_profile(rows)
        assert profile.mean_entropy == 0.0
        assert profile.quantiles == (0.0, 0.0, 0.0)

    def test_sharper_temperature_lowers_entropy(self):
        logits = _rng(1).standard_normal((32, 20))
        p1 = attention_entropy_profile(row_softmax(logits))
        p2 = attention_entropy_profile(row_softmax(2.0 * logits))
        assert p2.mean_entropy < p1.mean_entropy

    def test_matches_direct_entropy(self):
        rows = row_softmax(_rng(2).standard_normal((6, 9)))
        profile = attention_entropy_profile(rows)
        want = np.mean([oracles.direct_entropy(r) for r in rows])
        assert profile.mean_entropy == pytest.approx(want, abs=1e-9)

    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidInput):
            attention_entropy_profile(np.full((2, 4), 0.3))


class TestPairedComposite:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_smooth_blend_lowers_boundary_response(self, seed):
        res = paired_composite_experiment(seed)
        assert res.smooth.boundary_band_mean < res.hard.boundary_band_mean

    def test_interiors_comparable(self):
        res = paired_composite_experiment(5)
        assert res.smooth.interior_mean == pytest.approx(res.hard.interior_mean,
                                                         rel=0.5)


class TestPgmOutput:
    def test_roundtrip_and_sidecar(self, tmp_path):
        arr = _rng(3).standard_normal((6, 8))
        path = tmp_path / "map.pgm"
        write_pgm(path, arr)
        back, maxval = read_pgm(path)
        assert maxval == 255
        assert back.shape == (6, 8)
        sidecar = (tmp_path / "map.pgm.json").read_text()
        assert '"min"' in sidecar and '"max"' in sidecar

    def test_constant_array(self, tmp_path):
        path = tmp_path / "flat.pgm"
        write_pgm(path, np.full((4, 4), 2.0))
        back, _ = read_pgm(path)
        assert back.max() == 0
