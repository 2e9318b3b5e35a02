"""Spatial mask loading, smoothing, resampling and feasibility validation.

Masks are continuous fields in [0, 1] at attention-token resolution. The
feasibility gate guarantees a strictly positive content mass at every token,
which the closed-form bias in :mod:`mast.allocation` requires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InfeasibleMasks, InvalidInput
from . import tensorio

FEASIBILITY_TOL = 1e-6

__all__ = [
    "MaskSet",
    "load_mask",
    "read_pgm",
    "smooth_mask",
    "gaussian_blur",
    "resample_to_tokens",
    "validate_feasibility",
]


@dataclass(frozen=True)
class MaskSet:
    """N spatial masks sharing one shape, entries in [0, 1].

    The per-token allocation bound (sum of masks scaled by the target style
    ratio staying <= 1) is checked by :func:`validate_feasibility`, not here,
    so that infeasible sets can be constructed, reported and optionally
    renormalized.
    """

    masks: tuple[np.ndarray, ...]
    source_resolution: tuple[int, int] = field(default=(0, 0))

    def __post_init__(self):
        if len(self.masks) < 1:
            raise InvalidInput("MaskSet needs at least one mask")
        shape = self.masks[0].shape
        for i, m in enumerate(self.masks):
            if m.ndim != 2:
                raise InvalidInput(f"mask {i} is not 2-D (shape {m.shape})")
            if m.shape != shape:
                raise InvalidInput(
                    f"mask {i} shape {m.shape} differs from mask 0 shape {shape}")
            if m.size and (float(m.min()) < -1e-6 or float(m.max()) > 1.0 + 1e-6):
                raise InvalidInput(
                    f"mask {i} has entries outside [0, 1]: "
                    f"min {float(m.min())}, max {float(m.max())}")
        clipped = tuple(np.clip(np.asarray(m, dtype=np.float32), 0.0, 1.0)
                        for m in self.masks)
        object.__setattr__(self, "masks", clipped)
        if self.source_resolution == (0, 0):
            object.__setattr__(self, "source_resolution", shape)

    @property
    def n_styles(self) -> int:
        return len(self.masks)

    @property
    def shape(self) -> tuple[int, int]:
        return self.masks[0].shape

    def total(self) -> np.ndarray:
        """Pointwise sum of all masks, in float64."""
        return np.sum([m.astype(np.float64) for m in self.masks], axis=0)

    def flattened(self) -> tuple[np.ndarray, ...]:
        """Row-major flattening of each mask (token order used by the pipeline)."""
        return tuple(m.astype(np.float64).ravel() for m in self.masks)


def _pgm_tokens(data: bytes, n: int) -> tuple[list[bytes], int]:
    """First n whitespace-separated header tokens, skipping # comments."""
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < n:
        if i >= len(data):
            raise FormatError("PGM header ended prematurely")
        c = data[i:i + 1]
        if c in b" \t\r\n":
            i += 1
        elif c == b"#":
            while i < len(data) and data[i:i + 1] not in b"\r\n":
                i += 1
        else:
            j = i
            while j < len(data) and data[j:j + 1] not in b" \t\r\n":
                j += 1
            tokens.append(data[i:j])
            i = j
    return tokens, i


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a binary (P5) PGM; returns (uint8 H x W array, maxval)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {data[:2]!r})")
    tokens, pos = _pgm_tokens(data, 4)
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric PGM header field") from exc
    if width < 1 or height < 1:
        raise FormatError(f"{path}: bad PGM dimensions {width}x{height}")
    if not 1 <= maxval <= 255:
        raise FormatError(f"{path}: unsupported PGM maxval {maxval}")
    payload = data[pos + 1:]
    if len(payload) != width * height:
        raise FormatError(
            f"{path}: PGM payload is {len(payload)} bytes, expected {width * height}")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return arr.copy(), maxval


def load_mask(path) -> np.ndarray:
    """Load one mask from a P5 PGM or a rank-2 tensor file, scaled to [0, 1]."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head[:2] == b"P5":
        arr, maxval = read_pgm(path)
        return (arr.astype(np.float32) / np.float32(maxval)).astype(np.float32)
    if head == tensorio.MAGIC:
        arr = tensorio.read_tensor(path)
        if arr.ndim != 2:
            raise FormatError(f"{path}: mask tensor must be rank 2, got rank {arr.ndim}")
        if arr.size and (float(arr.min()) < -1e-6 or float(arr.max()) > 1 + 1e-6):
            raise InvalidInput(f"{path}: mask values outside [0, 1]")
        return np.clip(arr, 0.0, 1.0).astype(np.float32)
    raise FormatError(f"{path}: neither a P5 PGM nor a tensor file")


def _gauss_taps(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    # tiny sigmas underflow every off-center tap; the kernel degrades to a delta
    with np.errstate(over="ignore"):
        w = np.exp(-0.5 * np.square(t / sigma))
    return w / w.sum()


def _conv_axis_replicate(arr: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    radius = len(taps) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(arr, pad, mode="edge")
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    for k, w in enumerate(taps):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(k, k + n)
        out += w * padded[tuple(sl)]
    return out


def gaussian_blur(arr, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, kernel truncated at 3 sigma, replicate borders."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidInput(f"gaussian_blur: expected 2-D array, got shape {a.shape}")
    if sigma < 0:
        raise InvalidInput(f"gaussian_blur: sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return a.copy()
    taps = _gauss_taps(sigma)
    return _conv_axis_replicate(_conv_axis_replicate(a, taps, 0), taps, 1)


def smooth_mask(m, sigma: float) -> np.ndarray:
    """Gaussian-blur a mask; sigma = 0 is the identity. Output clipped to [0, 1]."""
    out = gaussian_blur(m, sigma)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def _axis_coords(n_out: int, n_in: int) -> np.ndarray:
    # corner-aligned sampling; a single output sample maps to the source center
    if n_out == 1:
        return np.array([(n_in - 1) / 2.0])
    return np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)


def resample_to_tokens(m, h_t: int, w_t: int) -> np.ndarray:
    """Corner-aligned bilinear resample of a mask to token resolution."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidInput(f"resample_to_tokens: expected 2-D mask, got {a.shape}")
    if h_t < 1 or w_t < 1:
        raise InvalidInput(f"resample_to_tokens: target extents must be >= 1")
    h, w = a.shape
    ys = _axis_coords(h_t, h)
    xs = _axis_coords(w_t, w)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    out = ((1 - fy) * (1 - fx) * a[np.ix_(y0, x0)]
           + (1 - fy) * fx * a[np.ix_(y0, x1)]
           + fy * (1 - fx) * a[np.ix_(y1, x0)]
           + fy * fx * a[np.ix_(y1, x1)])
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def validate_feasibility(ms: MaskSet, pi_star: float,
                         renormalize: bool = False) -> MaskSet:
    """Check that pi_star * sum_i(mask_i) <= 1 at every token.

    Raises :class:`InfeasibleMasks` naming the worst offending token unless
    ``renormalize`` is set, in which case overlapping masks are divided by
    their pointwise sum wherever that sum exceeds 1.
    """
    if not 0.0 < pi_star <= 1.0:
        raise InvalidInput(f"pi_star must be in (0, 1], got {pi_star}")
    if renormalize:
        total = ms.total()
        scale = np.where(total > 1.0, total, 1.0)
        ms = MaskSet(tuple(m / scale for m in ms.masks),
                     source_resolution=ms.source_resolution)
    alloc = pi_star * ms.total()
    flat_idx = int(np.argmax(alloc.ravel()))
    worst_val = float(alloc.ravel()[flat_idx])
    if worst_val > 1.0 + FEASIBILITY_TOL:
        raise InfeasibleMasks(
            f"style allocation {worst_val:.6f} > 1 at token {flat_idx} "
            f"(pi_star={pi_star}); pass renormalize to divide overlapping "
            f"masks by their sum",
            token_index=flat_idx, allocation=worst_val)
    return ms
