"""Discrepancy-aware detail injection.

High-frequency content features are isolated with a Gaussian high-pass filter
in the frequency domain and added back to the stylized features, weighted by
how far the stylized features have rotated away from the content features
(one minus their cosine). Frequencies are measured in normalized units
(bin offset divided by the extent), so the filter radius is
resolution-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InvalidInput
from .numerics import cosine_similarity

DEFAULT_RADIUS = 0.3
DEFAULT_EPSILON = 1e-8

__all__ = [
    "DEFAULT_RADIUS",
    "DEFAULT_EPSILON",
    "HighPassSpec",
    "ResidualFeatures",
    "gaussian_highpass_mask",
    "extract_high_freq",
    "discrepancy_weight",
    "inject_details",
]


@dataclass(frozen=True)
class HighPassSpec:
    """Gaussian high-pass parameters: radius in normalized frequency, epsilon guard."""

    r: float = DEFAULT_RADIUS
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not (np.isfinite(self.r) and self.r > 0):
            raise InvalidInput(f"HighPassSpec: r must be > 0, got {self.r}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidInput(f"HighPassSpec: epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class ResidualFeatures:
    """Content features, stylized features and the stylized-path skip term."""

    phi_c: np.ndarray
    phi_cs: np.ndarray
    delta_phi_cs: np.ndarray

    def __post_init__(self):
        shapes = {np.asarray(t).shape for t in
                  (self.phi_c, self.phi_cs, self.delta_phi_cs)}
        if len(shapes) != 1:
            raise InvalidInput(f"ResidualFeatures: shapes differ: {shapes}")
        if np.asarray(self.phi_c).ndim != 3:
            raise InvalidInput("ResidualFeatures: features must be C x H x W")


def _freq_dist_sq(h: int, w: int, shifted: bool) -> np.ndarray:
    fy = np.fft.fftfreq(h)
    fx = np.fft.fftfreq(w)
    if shifted:
        fy = np.fft.fftshift(fy)
        fx = np.fft.fftshift(fx)
    return fy[:, None] ** 2 + fx[None, :] ** 2


def gaussian_highpass_mask(h: int, w: int, spec: HighPassSpec) -> np.ndarray:
    """Centered high-pass mask 1 - exp(-D^2 / (2 r^2 + eps)) over an H x W spectrum.

    D is the distance from the spectrum center (DC sits at (h//2, w//2)) in
    normalized frequency units, so D ranges over [0, sqrt(2)/2]. The DC entry
    is exactly 0.
    """
    if h < 1 or w < 1:
        raise InvalidInput(f"gaussian_highpass_mask: extents must be >= 1, got {h}x{w}")
    d2 = _freq_dist_sq(h, w, shifted=True)
    return 1.0 - np.exp(-d2 / (2.0 * spec.r ** 2 + spec.epsilon))


def extract_high_freq(phi_c, spec: HighPassSpec) -> np.ndarray:
    """Per-channel FFT -> high-pass mask -> inverse FFT of a C x H x W tensor.

    The mask is symmetric under frequency negation, so the imaginary residue
    of the inverse transform is rounding noise and is discarded. Removing DC
    leaves each output channel with (near-)zero spatial mean.
    """
    arr = np.asarray(phi_c, dtype=np.float64)
    if arr.ndim != 3:
        raise InvalidInput(f"extract_high_freq: expected C x H x W, got {arr.shape}")
    _, h, w = arr.shape
    d2 = _freq_dist_sq(h, w, shifted=False)
    mask = 1.0 - np.exp(-d2 / (2.0 * spec.r ** 2 + spec.epsilon))
    spectrum = np.fft.fft2(arr, axes=(-2, -1))
    out = np.fft.ifft2(spectrum * mask, axes=(-2, -1)).real
    return out.astype(np.float32)


def discrepancy_weight(phi_cs, phi_c) -> float:
    """omega = 1 - cos(phi_cs, phi_c) over flattened tensors, in [0, 2].

    Zero-norm operands make the cosine undefined; the neutral midpoint 1.0
    is returned in that case.
    """
    a = np.asarray(phi_cs)
    b = np.asarray(phi_c)
    if a.shape != b.shape:
        raise InvalidInput(f"discrepancy_weight: shape mismatch {a.shape} vs {b.shape}")
    try:
        cos = cosine_similarity(a, b)
    except DegenerateInput:
        return 1.0
    return float(np.clip(1.0 - cos, 0.0, 2.0))


def inject_details(features: ResidualFeatures, spec: HighPassSpec,
                   omega: float | None = None) -> np.ndarray:
    """phi_cs + delta_phi_cs + omega * highpass(phi_c).

    ``omega`` defaults to the discrepancy weight between the stylized and
    content features; passing a value overrides it (used to switch the stage
    off with omega = 0).
    """
    if omega is None:
        omega = discrepancy_weight(features.phi_cs, features.phi_c)
    high = extract_high_freq(features.phi_c, spec).astype(np.float64)
    out = (np.asarray(features.phi_cs, dtype=np.float64)
           + np.asarray(features.delta_phi_cs, dtype=np.float64)
           + omega * high)
    return out.astype(np.float32)
