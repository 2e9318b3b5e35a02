import math

import numpy as np
import pytest

from mast.detail import (HighPassSpec, ResidualFeatures, discrepancy_weight,
                         extract_high_freq, gaussian_highpass_mask, inject_details)
from mast.errors import InvalidInput


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed=seed))


class TestHighpassMask:
    def test_dc_is_exactly_zero(self):
        mask = gaussian_highpass_mask(8, 8, HighPassSpec(r=0.3))
        assert mask[4, 4] == 0.0
        mask = gaussian_highpass_mask(7, 9, HighPassSpec(r=0.3))
        assert mask[3, 4] == 0.0

    def test_value_at_r_times_sqrt2(self):
        # bin offset (2/8, 2/8) sits at D = 0.25 * sqrt(2); choose r = 0.25
        spec = HighPassSpec(r=0.25)
        mask = gaussian_highpass_mask(8, 8, spec)
        assert mask[4 + 2, 4 + 2] == pytest.approx(1.0 - math.exp(-1.0), abs=1e-6)

    def test_tiny_radius_passes_everything_but_dc(self):
        mask = gaussian_highpass_mask(8, 8, HighPassSpec(r=1e-6, epsilon=1e-16))
        assert mask[4, 4] == 0.0
        off_dc = mask[np.abs(mask) > 0]
        assert off_dc.min() > 1.0 - 1e-9

    def test_values_in_unit_interval(self):
        mask = gaussian_highpass_mask(16, 12, HighPassSpec(r=0.3))
        assert mask.min() >= 0.0 and mask.max() < 1.0

    def test_spec_validation(self):
        with pytest.raises(InvalidInput):
            HighPassSpec(r=0.0)
        with pytest.raises(InvalidInput):
            HighPassSpec(r=0.3, epsilon=0.0)


class TestExtractHighFreq:
    def test_constant_channel_vanishes(self):
        x = np.full((2, 8, 8), 3.0, dtype=np.float32)
        out = extract_high_freq(x, HighPassSpec())
        assert np.abs(out).max() < 1e-4

    def test_nyquist_checkerboard_passes(self):
        h = w = 8
        checker = ((-1.0) ** (np.add.outer(np.arange(h), np.arange(w)))).astype(
            np.float32)[None]
        spec = HighPassSpec(r=0.3)
        out = extract_high_freq(checker, spec)
        # the checkerboard is the pure Nyquist mode at D^2 = 0.5
        gain = 1.0 - math.exp(-0.5 / (2 * 0.3 ** 2 + spec.epsilon))
        np.testing.assert_allclose(out, gain * checker, atol=1e-5)

    def test_linearity(self):
        x = _rng(0).standard_normal((3, 10, 6)).astype(np.float32)
        spec = HighPassSpec()
        np.testing.assert_allclose(extract_high_freq(2.5 * x, spec),
                                   2.5 * extract_high_freq(x, spec), atol=1e-5)

    def test_double_application_equals_squared_mask(self):
        x = _rng(1).standard_normal((2, 12, 12)).astype(np.float32)
        spec = HighPassSpec()
        twice = extract_high_freq(extract_high_freq(x, spec), spec)
        fy = np.fft.fftfreq(12)
        mask = 1.0 - np.exp(-(fy[:, None] ** 2 + fy[None, :] ** 2)
                            / (2 * spec.r ** 2 + spec.epsilon))
        want = np.fft.ifft2(np.fft.fft2(x.astype(np.float64), axes=(-2, -1))
                            * mask ** 2, axes=(-2, -1)).real
        np.testing.assert_allclose(twice, want, atol=1e-5)

    def test_dc_removed(self):
        x = (_rng(2).standard_normal((4, 16, 16)) + 7.0).astype(np.float32)
        out = extract_high_freq(x, HighPassSpec())
        for c in range(4):
            assert abs(out[c].mean()) <= 1e-4 * np.abs(x[c]).max()


class TestDiscrepancyWeight:
    def test_identical_features(self):
        x = _rng(3).standard_normal((2, 4, 4))
        assert discrepancy_weight(x, x) == pytest.approx(0.0, abs=1e-12)

    def test_negated_features(self):
        x = _rng(4).standard_normal((2, 4, 4))
        assert discrepancy_weight(-x, x) == pytest.approx(2.0, abs=1e-12)

    def test_orthogonal_features(self):
        a = np.zeros((1, 2, 2))
        b = np.zeros((1, 2, 2))
        a[0, 0, 0] = 1.0
        b[0, 0, 1] = 1.0
        assert discrepancy_weight(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_zero_norm_neutral_fallback(self):
        assert discrepancy_weight(np.zeros((1, 2, 2)), np.ones((1, 2, 2))) == 1.0

    def test_monotone_under_rotation(self):
        base = np.zeros(16)
        base[0] = 1.0
        ortho = np.zeros(16)
        ortho[1] = 1.0
        last = -1.0
        for theta in np.linspace(0.0, math.pi, 25):
            rotated = math.cos(theta) * base + math.sin(theta) * ortho
            w = discrepancy_weight(rotated.reshape(1, 4, 4), base.reshape(1, 4, 4))
            assert w > last
            last = w


class TestInjectDetails:
    def test_identical_paths_add_nothing(self):
        rng = _rng(5)
        phi = rng.standard_normal((2, 8, 8)).astype(np.float32)
        delta = rng.standard_normal((2, 8, 8)).astype(np.float32)
        out = inject_details(ResidualFeatures(phi, phi, delta), HighPassSpec())
        np.testing.assert_allclose(out, phi + delta, atol=1e-5)

    def test_constant_content_adds_nothing(self):
        rng = _rng(6)
        phi_c = np.full((2, 8, 8), 4.0, dtype=np.float32)
        phi_cs = rng.standard_normal((2, 8, 8)).astype(np.float32)
        delta = rng.standard_normal((2, 8, 8)).astype(np.float32)
        out = inject_details(ResidualFeatures(phi_c, phi_cs, delta), HighPassSpec())
        np.testing.assert_allclose(out, phi_cs + delta, atol=1e-4)

    def test_matches_composed_suboperations(self):
        rng = _rng(7)
        f = ResidualFeatures(rng.standard_normal((3, 12, 10)).astype(np.float32),
                             rng.standard_normal((3, 12, 10)).astype(np.float32),
                             rng.standard_normal((3, 12, 10)).astype(np.float32))
        spec = HighPassSpec()
        omega = discrepancy_weight(f.phi_cs, f.phi_c)
        want = (f.phi_cs.astype(np.float64) + f.delta_phi_cs
                + omega * extract_high_freq(f.phi_c, spec))
        np.testing.assert_allclose(inject_details(f, spec), want, atol=1e-5)

    def test_linear_in_omega(self):
        rng = _rng(8)
        f = ResidualFeatures(rng.standard_normal((2, 8, 8)).astype(np.float32),
                             rng.standard_normal((2, 8, 8)).astype(np.float32),
                             rng.standard_normal((2, 8, 8)).astype(np.float32))
        spec = HighPassSpec()
        w = 0.37
        high = extract_high_freq(f.phi_c, spec)
        diff = (inject_details(f, spec, omega=2 * w).astype(np.float64)
                - inject_details(f, spec, omega=w))
        np.testing.assert_allclose(diff, w * high, atol=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInput):
            ResidualFeatures(np.zeros((1, 2, 2)), np.zeros((1, 2, 3)),
                             np.zeros((1, 2, 2)))
