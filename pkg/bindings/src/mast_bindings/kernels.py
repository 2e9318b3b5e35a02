"""The five attention-control kernels on flat float32 buffers.

Each kernel takes (buffer, BufferView) pairs, does its arithmetic in float64,
writes float32 into the designated output view, and returns a
:class:`~mast_bindings.abi.BindError` (or None) instead of raising. Inputs
are never written through. The math mirrors the native toolkit exactly so
outputs agree element-wise on shared fixtures.
"""

from __future__ import annotations

import numpy as np

from .abi import BindError, BufferView, view_array

MASS_EPSILON = 1e-8
PI_STAR_CEILING = 1.0 - 1e-4
DEFAULT_COEFFS = (0.08395, 0.43705, 1.00998)

__all__ = ["MASS_EPSILON", "PI_STAR_CEILING", "DEFAULT_COEFFS",
           "bind_anchor_queries", "bind_apply_lama",
           "bind_sharpness_and_temperature", "bind_apply_sts",
           "bind_inject_details"]


def _row_logsumexp(rows: np.ndarray) -> np.ndarray:
    m = np.max(rows, axis=-1, keepdims=True)
    return m[..., 0] + np.log(np.sum(np.exp(rows - m), axis=-1))


def _row_softmax(rows: np.ndarray) -> np.ndarray:
    m = np.max(rows, axis=-1, keepdims=True)
    e = np.exp(rows - m)
    return e / np.sum(e, axis=-1, keepdims=True)


def _mean_log_p_max(rows: np.ndarray, tau: float = 1.0) -> float:
    scaled = rows * tau
    return float(np.mean(np.max(scaled, axis=-1) - _row_logsumexp(scaled)))


def _gather(pairs, writable=False):
    arrays = []
    for buffer, view in pairs:
        arr, err = view_array(buffer, view, writable=writable)
        if err is not None:
            return None, err
        arrays.append(arr)
    return arrays, None


def bind_anchor_queries(q_c, q_cs, lam: float, out):
    """out = lam * q_c + (1 - lam) * q_cs over [t, d] views."""
    arrays, err = _gather([q_c, q_cs])
    if err is not None:
        return err
    a_c, a_cs = arrays
    if a_c.shape != a_cs.shape:
        return BindError("shape-mismatch", "query shapes differ",
                         (a_c.shape, a_cs.shape))
    if not 0.0 <= lam <= 1.0:
        return BindError("bad-argument", f"lam must be in [0, 1], got {lam}")
    dst, err = view_array(out[0], out[1], writable=True)
    if err is not None:
        return err
    if dst.shape != a_c.shape:
        return BindError("shape-mismatch", "output shape differs",
                         (dst.shape, a_c.shape))
    if lam == 0.0:
        dst[...] = a_cs
    elif lam == 1.0:
        dst[...] = a_c
    else:
        dst[...] = (lam * a_c.astype(np.float64)
                    + (1.0 - lam) * a_cs.astype(np.float64)).astype(np.float32)
    return None


def bind_apply_lama(style_logits, content_logits, masks, pi_star: float, out):
    """Biased concatenation [styles..., content] with exact per-group masses.

    ``style_logits`` and ``masks`` are sequences of (buffer, view) pairs; the
    masks are flattened row-major to the query axis. A target mass below
    ``MASS_EPSILON`` writes -inf over that style's columns for the query.
    """
    styles, err = _gather(style_logits)
    if err is not None:
        return err
    content_arr, err = view_array(content_logits[0], content_logits[1])
    if err is not None:
        return err
    mask_arrs, err = _gather(masks)
    if err is not None:
        return err
    if len(styles) != len(mask_arrs) or not styles:
        return BindError("bad-argument",
                         f"{len(styles)} style groups vs {len(mask_arrs)} masks")
    t_q = content_arr.shape[0]
    for s in styles:
        if s.ndim != 2 or s.shape[0] != t_q:
            return BindError("shape-mismatch",
                             "style group does not share query rows",
                             (s.shape, content_arr.shape))
    for m in mask_arrs:
        if m.size != t_q:
            return BindError("shape-mismatch",
                             "mask token count does not match query rows",
                             (m.shape, (t_q,)))
    if not 0.0 < pi_star <= 1.0:
        return BindError("bad-argument", f"pi_star must be in (0, 1], got {pi_star}")

    eff = min(float(pi_star), PI_STAR_CEILING)
    style_mass = tuple(eff * m.astype(np.float64).ravel() for m in mask_arrs)
    content_mass = 1.0 - np.sum(style_mass, axis=0)
    if np.any(content_mass <= 0.0):
        q = int(np.argmin(content_mass))
        return BindError("infeasible-masks",
                         f"content mass {float(content_mass[q]):.6g} <= 0 at "
                         f"token {q}")

    content64 = content_arr.astype(np.float64)
    log_z_content = _row_logsumexp(content64)
    blocks = []
    for s, pi_i in zip(styles, style_mass):
        s64 = s.astype(np.float64)
        log_z_i = _row_logsumexp(s64)
        include = pi_i >= MASS_EPSILON
        bias = np.full(pi_i.shape, -np.inf)
        bias[include] = (np.log(pi_i[include] / content_mass[include])
                         + log_z_content[include] - log_z_i[include])
        blocks.append(s64 + bias[:, None])
    blocks.append(content64)
    concat = np.concatenate(blocks, axis=1)

    dst, err = view_array(out[0], out[1], writable=True)
    if err is not None:
        return err
    if dst.shape != concat.shape:
        return BindError("shape-mismatch", "output shape differs",
                         (dst.shape, concat.shape))
    dst[...] = concat.astype(np.float32)
    return None


def bind_sharpness_and_temperature(content_logits, concat_logits,
                                   coefficients=DEFAULT_COEFFS,
                                   clamp_min: float = 1.0):
    """Sharpness gap and predicted temperature; returns ((delta, tau), error)."""
    content_arr, err = view_array(content_logits[0], content_logits[1])
    if err is not None:
        return None, err
    concat_arr, err = view_array(concat_logits[0], concat_logits[1])
    if err is not None:
        return None, err
    if content_arr.ndim != 2 or concat_arr.ndim != 2 \
            or content_arr.shape[0] != concat_arr.shape[0]:
        return None, BindError("shape-mismatch",
                               "content and concat must share query rows",
                               (content_arr.shape, concat_arr.shape))
    delta = (_mean_log_p_max(content_arr.astype(np.float64))
             - _mean_log_p_max(concat_arr.astype(np.float64)))
    raw = 0.0
    for c in coefficients:  # Horner, highest degree first
        raw = raw * delta + float(c)
    return (delta, max(raw, clamp_min)), None


def bind_apply_sts(concat_logits, tau: float, out):
    """Row softmax of tau * logits into the output view."""
    rows, err = view_array(concat_logits[0], concat_logits[1])
    if err is not None:
        return err
    if rows.ndim != 2:
        return BindError("shape-mismatch", "logits must be 2-D", (rows.shape,))
    if not np.isfinite(tau) or tau <= 0.0:
        return BindError("bad-argument", f"tau must be > 0, got {tau}")
    dst, err = view_array(out[0], out[1], writable=True)
    if err is not None:
        return err
    if dst.shape != rows.shape:
        return BindError("shape-mismatch", "output shape differs",
                         (dst.shape, rows.shape))
    dst[...] = _row_softmax(rows.astype(np.float64) * tau).astype(np.float32)
    return None


def bind_inject_details(phi_c, phi_cs, delta_phi, r: float, epsilon: float, out):
    """phi_cs + delta_phi + omega * highpass(phi_c) over [c, h, w] views.

    Returns (omega, None) on success or (None, BindError) on failure.
    """
    arrays, err = _gather([phi_c, phi_cs, delta_phi])
    if err is not None:
        return None, err
    a_c, a_cs, a_d = arrays
    if not (a_c.shape == a_cs.shape == a_d.shape) or a_c.ndim != 3:
        return None, BindError("shape-mismatch", "features must share a CxHxW shape",
                               (a_c.shape, a_cs.shape, a_d.shape))
    if r <= 0.0 or epsilon <= 0.0:
        return None, BindError("bad-argument",
                               f"need r > 0 and epsilon > 0, got r={r} eps={epsilon}")
    dst, err = view_array(out[0], out[1], writable=True)
    if err is not None:
        return None, err
    if dst.shape != a_c.shape:
        return None, BindError("shape-mismatch", "output shape differs",
                               (dst.shape, a_c.shape))

    c64 = a_c.astype(np.float64)
    cs64 = a_cs.astype(np.float64)
    norm_c = float(np.linalg.norm(c64.ravel()))
    norm_cs = float(np.linalg.norm(cs64.ravel()))
    if norm_c == 0.0 or norm_cs == 0.0:
        omega = 1.0  # neutral fallback for degenerate features
    else:
        cos = float(np.clip(np.dot(cs64.ravel(), c64.ravel())
                            / (norm_cs * norm_c), -1.0, 1.0))
        omega = float(np.clip(1.0 - cos, 0.0, 2.0))

    _, h, w = a_c.shape
    fy = np.fft.fftfreq(h)
    fx = np.fft.fftfreq(w)
    mask = 1.0 - np.exp(-(fy[:, None] ** 2 + fx[None, :] ** 2)
                        / (2.0 * r ** 2 + epsilon))
    high = np.fft.ifft2(np.fft.fft2(c64, axes=(-2, -1)) * mask,
                        axes=(-2, -1)).real.astype(np.float32)
    dst[...] = (cs64 + a_d.astype(np.float64)
                + omega * high.astype(np.float64)).astype(np.float32)
    return omega, None
