"""Numerically stable primitives used by every other module.

Storage dtype throughout the package is float32, but every reduction here
runs in float64 so probability-mass checks hold at the 1e-9 level. Public
entry points validate finiteness; the ``row_*`` helpers tolerate ``-inf``
entries, which downstream code uses to mask out excluded key columns.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInput, InvalidInput

__all__ = [
    "logsumexp",
    "softmax",
    "log_p_max",
    "cosine_similarity",
    "fft2",
    "ifft2",
    "channel_stats",
    "row_logsumexp",
    "row_softmax",
    "row_log_p_max",
    "row_entropy",
]


def _as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _check_vector(name: str, v: np.ndarray) -> None:
    if v.size == 0:
        raise InvalidInput(f"{name}: empty vector")
    if not np.all(np.isfinite(v)):
        raise InvalidInput(f"{name}: entries must be finite")


def _check_temperature(temperature: float) -> float:
    t = float(temperature)
    if not np.isfinite(t) or t <= 0.0:
        raise InvalidInput(f"temperature must be finite and > 0, got {temperature}")
    return t


def row_logsumexp(rows: np.ndarray) -> np.ndarray:
    """Row-wise log(sum(exp(.))) via max-shift; tolerates -inf entries.

    Callers guarantee at least one finite entry per row.
    """
    rows = _as_f64(rows)
    m = np.max(rows, axis=-1, keepdims=True)
    return m[..., 0] + np.log(np.sum(np.exp(rows - m), axis=-1))


def row_softmax(rows: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax; -inf entries get exactly zero probability."""
    rows = _as_f64(rows)
    m = np.max(rows, axis=-1, keepdims=True)
    e = np.exp(rows - m)
    return e / np.sum(e, axis=-1, keepdims=True)


def row_log_p_max(rows: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Row-wise log of the maximum softmax probability at the given temperature.

    Never positive: the shifted partition sum is >= 1 by construction.
    """
    scaled = _as_f64(rows) * temperature
    return np.max(scaled, axis=-1) - row_logsumexp(scaled)


def row_entropy(probs: np.ndarray) -> np.ndarray:
    """Shannon entropy in nats per row; 0*log(0) taken as 0."""
    p = _as_f64(probs)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    return -np.sum(terms, axis=-1)


def logsumexp(v) -> float:
    """log(sum(exp(v))) of a finite vector; safe for magnitudes up to ~1e3."""
    arr = _as_f64(v).ravel()
    _check_vector("logsumexp", arr)
    return float(row_logsumexp(arr[None, :])[0])


def softmax(v, temperature: float = 1.0) -> np.ndarray:
    """Softmax of temperature * v.

    The temperature multiplies the logits, so larger values sharpen the
    distribution. Output is float64, sums to 1 within 1e-9 and preserves
    the argsort of the input.
    """
    arr = _as_f64(v).ravel()
    _check_vector("softmax", arr)
    t = _check_temperature(temperature)
    return row_softmax(arr[None, :] * t)[0]


def log_p_max(v, temperature: float = 1.0) -> float:
    """log of the maximum softmax probability of temperature * v."""
    arr = _as_f64(v).ravel()
    _check_vector("log_p_max", arr)
    t = _check_temperature(temperature)
    return float(row_log_p_max(arr[None, :], t)[0])


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two tensors, flattened, in float64."""
    x = _as_f64(a)
    y = _as_f64(b)
    if x.shape != y.shape:
        raise InvalidInput(f"cosine_similarity: shape mismatch {x.shape} vs {y.shape}")
    x = x.ravel()
    y = y.ravel()
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise DegenerateInput("cosine_similarity: zero-norm operand")
    return float(np.clip(np.dot(x, y) / (nx * ny), -1.0, 1.0))


def _check_2d(name: str, arr: np.ndarray) -> None:
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInput(f"{name}: expected a 2-D array, got shape {arr.shape}")


def fft2(x) -> np.ndarray:
    """2-D FFT of a real H x W array; returns a complex128 spectrum.

    The DC coefficient equals the sum of the input. Arbitrary extents are
    supported (mixed-radix transform), so input and output sizes match.
    """
    arr = _as_f64(x)
    _check_2d("fft2", arr)
    return np.fft.fft2(arr)


def ifft2(spectrum) -> np.ndarray:
    """Inverse 2-D FFT; the imaginary residue is discarded, output is float32."""
    arr = np.asarray(spectrum)
    _check_2d("ifft2", arr)
    return np.real(np.fft.ifft2(arr)).astype(np.float32)


def channel_stats(x) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel mean and population standard deviation of a C x H x W tensor."""
    arr = _as_f64(x)
    if arr.ndim != 3:
        raise InvalidInput(f"channel_stats: expected C x H x W, got shape {arr.shape}")
    mean = arr.mean(axis=(1, 2))
    std = arr.std(axis=(1, 2))
    return mean, std
