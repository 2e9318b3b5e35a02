import numpy as np
import pytest

from mast.adain import adain, region_adain_init
from mast.errors import InvalidInput
from mast.masks import MaskSet
from mast.numerics import channel_stats


def _rng(seed=0):
    return np.random.Generator(np.random.Philox(seed=seed))


class TestAdain:
    def test_identity_on_same_input(self):
        x = _rng(1).standard_normal((3, 6, 6)).astype(np.float32)
        np.testing.assert_allclose(adain(x, x), x, atol=1e-4)

    def test_transfers_style_stats(self):
        rng = _rng(2)
        content = rng.standard_normal((2, 16, 16)).astype(np.float32)
        style = (rng.standard_normal((2, 16, 16)) * 3.0 + 5.0).astype(np.float32)
        out = adain(content, style)
        mu_out, sd_out = channel_stats(out)
        mu_s, sd_s = channel_stats(style)
        np.testing.assert_allclose(mu_out, mu_s, atol=1e-4)
        np.testing.assert_allclose(sd_out, sd_s, atol=1e-3)

    def test_constant_content_maps_to_style_mean(self):
        content = np.full((1, 4, 4), 2.0, dtype=np.float32)
        style = _rng(3).standard_normal((1, 4, 4)).astype(np.float32)
        mu_s, _ = channel_stats(style)
        np.testing.assert_allclose(adain(content, style), mu_s[0], atol=1e-5)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInput):
            adain(np.zeros((1, 2, 2)), np.zeros((1, 2, 3)))

    def test_stats_idempotent(self):
        rng = _rng(4)
        c = rng.standard_normal((2, 12, 12)).astype(np.float32)
        s = (rng.standard_normal((2, 12, 12)) * 2 - 1).astype(np.float32)
        once = adain(c, s)
        twice = adain(once, s)
        m1, s1 = channel_stats(once)
        m2, s2 = channel_stats(twice)
        np.testing.assert_allclose(m1, m2, atol=1e-4)
        np.testing.assert_allclose(s1, s2, atol=1e-4)


class TestRegionInit:
    def test_zero_masks_copy_content_bitwise(self):
        rng = _rng(5)
        z_c = rng.standard_normal((3, 4, 4)).astype(np.float32)
        z_s = [rng.standard_normal((3, 4, 4)).astype(np.float32)]
        ms = MaskSet((np.zeros((4, 4), np.float32),))
        out = region_adain_init(z_c, z_s, ms)
        assert out.tobytes() == z_c.tobytes()

    def test_full_mask_equals_plain_adain(self):
        rng = _rng(6)
        z_c = rng.standard_normal((2, 5, 5)).astype(np.float32)
        z_s = [rng.standard_normal((2, 5, 5)).astype(np.float32)]
        ms = MaskSet((np.ones((5, 5), np.float32),))
        np.testing.assert_allclose(region_adain_init(z_c, z_s, ms),
                                   adain(z_c, z_s[0]), atol=1e-6)

    def test_complementary_half_masks(self):
        rng = _rng(7)
        z_c = rng.standard_normal((2, 4, 6)).astype(np.float32)
        z_s = [rng.standard_normal((2, 4, 6)).astype(np.float32) for _ in range(2)]
        left = np.zeros((4, 6), np.float32)
        left[:, :3] = 1.0
        ms = MaskSet((left, 1.0 - left))
        out = region_adain_init(z_c, z_s, ms)
        np.testing.assert_allclose(out[:, :, :3], adain(z_c, z_s[0])[:, :, :3],
                                   atol=1e-6)
        np.testing.assert_allclose(out[:, :, 3:], adain(z_c, z_s[1])[:, :, 3:],
                                   atol=1e-6)

    def test_pointwise_convex_hull(self):
        rng = _rng(8)
        z_c = rng.standard_normal((1, 6, 6)).astype(np.float32)
        z_s = [rng.standard_normal((1, 6, 6)).astype(np.float32) for _ in range(2)]
        raw = rng.uniform(size=(2, 6, 6))
        total = np.maximum(raw.sum(axis=0), 1.0)
        ms = MaskSet(tuple((raw[i] / total).astype(np.float32) for i in range(2)))
        out = region_adain_init(z_c, z_s, ms)
        stack = np.stack([adain(z_c, z)[0] for z in z_s] + [z_c[0]])
        lo = stack.min(axis=0) - 1e-5
        hi = stack.max(axis=0) + 1e-5
        assert np.all(out[0] >= lo) and np.all(out[0] <= hi)

    def test_count_mismatch(self):
        ms = MaskSet((np.ones((2, 2), np.float32),))
        with pytest.raises(InvalidInput):
            region_adain_init(np.zeros((1, 2, 2)), [], ms)
