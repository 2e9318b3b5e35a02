import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mast.errors import FormatError, InfeasibleMasks, InvalidInput
from mast.masks import (MaskSet, load_mask, resample_to_tokens, smooth_mask,
                        validate_feasibility)
from mast.tensorio import write_tensor

import oracles


def _write_pgm(path, arr, maxval=255, comment=False):
    h, w = arr.shape
    note = "# fixture\n" if comment else ""
    header = f"P5\n{note}{w} {h}\n{maxval}\n"
    path.write_bytes(header.encode("ascii") + arr.astype(np.uint8).tobytes())


class TestLoadMask:
    def test_all_white(self, tmp_path):
        p = tmp_path / "m.pgm"
        _write_pgm(p, np.full((3, 4), 255))
        np.testing.assert_array_equal(load_mask(p), np.ones((3, 4), np.float32))

    def test_all_black(self, tmp_path):
        p = tmp_path / "m.pgm"
        _write_pgm(p, np.zeros((3, 4)))
        np.testing.assert_array_equal(load_mask(p), np.zeros((3, 4), np.float32))

    def test_checkerboard(self, tmp_path):
        board = (np.indices((4, 4)).sum(axis=0) % 2) * 255
        p = tmp_path / "m.pgm"
        _write_pgm(p, board, comment=True)
        np.testing.assert_array_equal(load_mask(p),
                                      (board / 255).astype(np.float32))

    def test_scaled_by_maxval(self, tmp_path):
        p = tmp_path / "m.pgm"
        _write_pgm(p, np.full((2, 2), 64), maxval=128)
        np.testing.assert_allclose(load_mask(p), 0.5, atol=1e-7)

    def test_wide_maxval_rejected(self, tmp_path):
        p = tmp_path / "m.pgm"
        p.write_bytes(b"P5\n2 2\n65535\n" + b"\x00" * 8)
        with pytest.raises(FormatError):
            load_mask(p)

    def test_ascii_pgm_rejected(self, tmp_path):
        p = tmp_path / "m.pgm"
        p.write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
        with pytest.raises(FormatError):
            load_mask(p)

    def test_short_payload_rejected(self, tmp_path):
        p = tmp_path / "m.pgm"
        p.write_bytes(b"P5\n4 4\n255\n" + b"\x00" * 3)
        with pytest.raises(FormatError):
            load_mask(p)

    def test_tensor_file_mask(self, tmp_path):
        p = tmp_path / "m.mstt"
        write_tensor(p, np.full((5, 6), 0.25, dtype=np.float32))
        np.testing.assert_allclose(load_mask(p), 0.25)

    def test_tensor_rank_rejected(self, tmp_path):
        p = tmp_path / "m.mstt"
        write_tensor(p, np.zeros((2, 2, 2), dtype=np.float32))
        with pytest.raises(FormatError):
            load_mask(p)

    def test_tensor_range_rejected(self, tmp_path):
        p = tmp_path / "m.mstt"
        write_tensor(p, np.full((2, 2), 3.0, dtype=np.float32))
        with pytest.raises(InvalidInput):
            load_mask(p)

    def test_junk_rejected(self, tmp_path):
        p = tmp_path / "m.bin"
        p.write_bytes(b"\x01\x02\x03\x04junk")
        with pytest.raises(FormatError):
            load_mask(p)


class TestSmoothMask:
    def test_sigma_zero_identity(self):
        m = np.random.default_rng(0).uniform(size=(6, 7)).astype(np.float32)
        np.testing.assert_array_equal(smooth_mask(m, 0.0), m)

    @pytest.mark.parametrize("sigma", [0.5, 2.0, 5.0])
    def test_constant_unchanged(self, sigma):
        m = np.full((8, 8), 0.4, dtype=np.float32)
        np.testing.assert_allclose(smooth_mask(m, sigma), 0.4, atol=1e-6)

    def test_step_matches_dense_oracle(self):
        m = np.zeros((5, 24))
        m[:, 12:] = 1.0
        got = smooth_mask(m, 2.0)
        want = oracles.dense_gaussian_blur(m, 2.0)
        np.testing.assert_allclose(got, want, atol=1e-6)
        # the two columns flanking the step bracket 0.5 and average to it
        mid = 0.5 * (got[2, 11] + got[2, 12])
        assert mid == pytest.approx(0.5, abs=0.02)
        assert got[2, 11] < 0.5 < got[2, 12]

    def test_negative_sigma_rejected(self):
        with pytest.raises(InvalidInput):
            smooth_mask(np.zeros((3, 3)), -1.0)

    @given(st.floats(0.0, 4.0), st.integers(1, 12), st.integers(1, 12),
           st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_smooth_then_resample_stays_in_unit_interval(self, sigma, ht, wt, seed):
        rng = np.random.Generator(np.random.Philox(seed=seed))
        m = rng.uniform(size=(9, 11))
        out = resample_to_tokens(smooth_mask(m, sigma), ht, wt)
        assert out.min() >= 0.0 and out.max() <= 1.0


class TestResample:
    def test_identity_same_size(self):
        m = np.random.default_rng(1).uniform(size=(5, 6))
        np.testing.assert_allclose(resample_to_tokens(m, 5, 6), m, atol=1e-7)

    def test_constant(self):
        m = np.full((4, 4), 0.7)
        np.testing.assert_allclose(resample_to_tokens(m, 9, 3), 0.7, atol=1e-7)

    def test_corner_aligned_ramp(self):
        m = np.array([[0.0, 1.0], [0.0, 1.0]])
        out = resample_to_tokens(m, 2, 4)
        np.testing.assert_allclose(out, [[0, 1 / 3, 2 / 3, 1.0]] * 2, atol=1e-7)

    def test_reproduces_affine(self):
        h, w = 6, 9
        yy, xx = np.mgrid[0:h, 0:w]
        m = (2 * yy + 3 * xx) / (2 * (h - 1) + 3 * (w - 1))
        ht, wt = 11, 5
        out = resample_to_tokens(m, ht, wt)
        ys = np.arange(ht) * (h - 1) / (ht - 1)
        xs = np.arange(wt) * (w - 1) / (wt - 1)
        want = (2 * ys[:, None] + 3 * xs[None, :]) / (2 * (h - 1) + 3 * (w - 1))
        np.testing.assert_allclose(out, want, atol=1e-6)

    def test_matches_reference_sampler(self):
        m = np.random.default_rng(2).uniform(size=(7, 5))
        out = resample_to_tokens(m, 4, 9)
        ys = np.arange(4) * 6 / 3
        xs = np.arange(9) * 4 / 8
        for i, y in enumerate(ys):
            for j, x in enumerate(xs):
                assert out[i, j] == pytest.approx(oracles.bilinear_sample(m, y, x),
                                                  abs=1e-6)


class TestMaskSet:
    def test_range_validation(self):
        with pytest.raises(InvalidInput):
            MaskSet((np.full((2, 2), 1.5, dtype=np.float32),))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInput):
            MaskSet((np.zeros((2, 2), np.float32), np.zeros((3, 2), np.float32)))

    def test_empty_rejected(self):
        with pytest.raises(InvalidInput):
            MaskSet(())


class TestFeasibility:
    def test_disjoint_binary_ok(self):
        left = np.zeros((4, 4), np.float32)
        left[:, :2] = 1.0
        right = 1.0 - left
        ms = MaskSet((left, right))
        assert validate_feasibility(ms, 0.9) is ms

    def test_double_full_masks_rejected(self):
        ms = MaskSet((np.ones((2, 2), np.float32), np.ones((2, 2), np.float32)))
        with pytest.raises(InfeasibleMasks) as exc:
            validate_feasibility(ms, 0.9)
        assert exc.value.allocation == pytest.approx(1.8, abs=1e-6)
        assert exc.value.token_index == 0

    def test_two_half_masks_ok(self):
        ms = MaskSet((np.full((2, 2), 0.5, np.float32),
                      np.full((2, 2), 0.5, np.float32)))
        validate_feasibility(ms, 0.9)

    def test_renormalize_divides_by_sum(self):
        ms = MaskSet((np.ones((2, 2), np.float32), np.ones((2, 2), np.float32)))
        fixed = validate_feasibility(ms, 0.9, renormalize=True)
        np.testing.assert_allclose(fixed.masks[0], 0.5, atol=1e-6)
        np.testing.assert_allclose(fixed.masks[1], 0.5, atol=1e-6)

    def test_renormalize_leaves_feasible_regions_alone(self):
        a = np.full((2, 2), 0.25, np.float32)
        fixed = validate_feasibility(MaskSet((a, a)), 0.9, renormalize=True)
        np.testing.assert_allclose(fixed.masks[0], 0.25, atol=1e-6)

    def test_bad_pi_star(self):
        ms = MaskSet((np.zeros((2, 2), np.float32),))
        with pytest.raises(InvalidInput):
            validate_feasibility(ms, 0.0)

    @given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1),
           st.floats(0.05, 1.0))
    @settings(max_examples=40, deadline=None)
    def test_accepts_pointwise_sum_below_one(self, n, seed, pi_star):
        rng = np.random.Generator(np.random.Philox(seed=seed))
        raw = rng.uniform(size=(n, 4, 4))
        total = raw.sum(axis=0)
        scale = np.maximum(total, 1.0)
        ms = MaskSet(tuple((raw[i] / scale).astype(np.float32) for i in range(n)))
        validate_feasibility(ms, pi_star)
