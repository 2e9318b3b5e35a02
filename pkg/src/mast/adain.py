"""Region-wise adaptive instance normalization for latent initialization."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InvalidInput
from .masks import MaskSet
from .numerics import channel_stats

ADAIN_EPS = 1e-5

__all__ = ["ADAIN_EPS", "adain", "region_adain_init"]


def adain(content, style) -> np.ndarray:
    """Renormalize each content channel to the style channel's statistics.

    out_c = (content_c - mean_c) / (std_c + eps) * std_style_c + mean_style_c
    with population statistics over the full channel.
    """
    c = np.asarray(content, dtype=np.float64)
    s = np.asarray(style, dtype=np.float64)
    if c.shape != s.shape or c.ndim != 3:
        raise InvalidInput(
            f"adain: need matching C x H x W tensors, got {c.shape} vs {s.shape}")
    mu_c, sd_c = channel_stats(c)
    mu_s, sd_s = channel_stats(s)
    out = ((c - mu_c[:, None, None]) / (sd_c + ADAIN_EPS)[:, None, None]
           * sd_s[:, None, None] + mu_s[:, None, None])
    return out.astype(np.float32)


def region_adain_init(z_c, z_s: Sequence[np.ndarray], ms: MaskSet) -> np.ndarray:
    """Initialize the stylization latent by mask-blending per-style AdaIN outputs.

    out = sum_i M_i * adain(z_c, z_s_i) + (1 - sum_i M_i) * z_c, with masks
    broadcast over channels. Where every mask is zero the content latent is
    copied through bitwise.
    """
    zc = np.asarray(z_c, dtype=np.float32)
    if zc.ndim != 3:
        raise InvalidInput(f"region_adain_init: latent must be C x H x W, got {zc.shape}")
    if len(z_s) != ms.n_styles:
        raise InvalidInput(
            f"region_adain_init: {len(z_s)} style latents for {ms.n_styles} masks")
    if ms.shape != zc.shape[1:]:
        raise InvalidInput(
            f"region_adain_init: mask shape {ms.shape} does not match latent "
            f"spatial shape {zc.shape[1:]}")
    total = ms.total()
    acc = (1.0 - total)[None, :, :] * zc.astype(np.float64)
    for m_i, zs_i in zip(ms.masks, z_s):
        zs = np.asarray(zs_i, dtype=np.float32)
        if zs.shape != zc.shape:
            raise InvalidInput(
                f"region_adain_init: style latent shape {zs.shape} != {zc.shape}")
        acc += m_i.astype(np.float64)[None, :, :] * adain(zc, zs).astype(np.float64)
    out = acc.astype(np.float32)
    untouched = total == 0.0
    out[:, untouched] = zc[:, untouched]
    return out
