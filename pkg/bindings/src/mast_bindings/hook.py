"""Demonstration of the call sequence a diffusion self-attention hook makes.

The demo runs entirely against recorded fixtures (flat tensors dumped by the
native CLI): read Q/K/V buffers, anchor the queries, form the logit groups,
allocate attention mass, measure the sharpness gap, pick a temperature,
apply it, and produce the attention output plus the detail-injection result.
It emits a report with the same schema as the native step report.
``docs/hook_contract.md`` documents where each call attaches in a real U-Net.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .abi import BufferView
from .kernels import (DEFAULT_COEFFS, PI_STAR_CEILING, _mean_log_p_max,
                      bind_anchor_queries, bind_apply_lama, bind_apply_sts,
                      bind_inject_details, bind_sharpness_and_temperature)
from . import tensorfile

__all__ = ["HookError", "hook_demo", "buffer_pair"]


class HookError(RuntimeError):
    """A kernel reported a structured error during the demo sequence."""


def buffer_pair(array):
    """(buffer, view) pair over a contiguous float32 copy of the array."""
    buf = np.ascontiguousarray(array, dtype="<f4")
    return buf, BufferView(0, buf.shape)


def _out_pair(shape):
    return np.empty(shape, dtype="<f4"), BufferView(0, tuple(shape))


def _check(err, stage):
    if err is not None:
        raise HookError(f"{stage}: {err}")


def _digest(arr) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype="<f4").tobytes()
                          ).hexdigest()


def _load_scene(fixture_dir: Path, n_styles: int) -> dict:
    names = ["q_c", "q_cs", "k_c", "v_c", "phi_c", "phi_cs", "delta_phi_cs",
             "masks"]
    names += [f"k_s_{i}" for i in range(n_styles)]
    names += [f"v_s_{i}" for i in range(n_styles)]
    return {n: tensorfile.load(fixture_dir / f"scene_{n}.mstt") for n in names}


def _form_logits(anchored, keys, d: int) -> np.ndarray:
    # host-side preprocessing: scaled dot products, stored back as f32 buffers
    scale = 1.0 / np.sqrt(float(d))
    logits = anchored.astype(np.float64) @ keys.astype(np.float64).T * scale
    return logits.astype(np.float32)


def _tau_coefficients(tau_mode: str):
    """(fixed tau or None, polynomial coefficients or None) for the demo modes."""
    if tau_mode == "paper-poly":
        return None, DEFAULT_COEFFS
    if tau_mode.startswith("fixed:"):
        return float(tau_mode.split(":", 1)[1]), None
    raise HookError(f"hook demo supports paper-poly and fixed:<v>, got {tau_mode}")


def hook_demo(fixture_dir) -> dict:
    """Run the full hook call sequence on one recorded fixture directory."""
    fixture_dir = Path(fixture_dir)
    native = json.loads((fixture_dir / "report.json").read_text())
    cfg = native["config"]
    n_styles = cfg["n_styles"]
    d = cfg["d"]
    scene = _load_scene(fixture_dir, n_styles)
    masks = scene["masks"]
    mask_pairs = [buffer_pair(masks[i]) for i in range(n_styles)]
    fixed_tau, coeffs = _tau_coefficients(cfg["tau_mode"])
    eff_pi = min(float(cfg["pi_star"]), PI_STAR_CEILING)
    targets = [eff_pi * masks[i].astype(np.float64).ravel()
               for i in range(n_styles)]
    targets.append(1.0 - np.sum(targets, axis=0))

    heads = []
    anchored_all, biased_all, weights_all, outputs_all = [], [], [], []
    content_logits_all = []
    style_logits_all: list[list[np.ndarray]] = [[] for _ in range(n_styles)]
    t_q = scene["q_c"].shape[1]
    for h in range(cfg["n_heads"]):
        anchored_buf, anchored_view = _out_pair(scene["q_c"][h].shape)
        _check(bind_anchor_queries(buffer_pair(scene["q_c"][h]),
                                   buffer_pair(scene["q_cs"][h]),
                                   cfg["lambda"],
                                   (anchored_buf, anchored_view)), "anchor")

        style_logits = [_form_logits(anchored_buf, scene[f"k_s_{i}"][h], d)
                        for i in range(n_styles)]
        content_logits = _form_logits(anchored_buf, scene["k_c"][h], d)
        cols = sum(s.shape[1] for s in style_logits) + content_logits.shape[1]
        concat_buf, concat_view = _out_pair((t_q, cols))
        _check(bind_apply_lama([buffer_pair(s) for s in style_logits],
                               buffer_pair(content_logits), mask_pairs,
                               cfg["pi_star"], (concat_buf, concat_view)),
               "mass allocation")

        # achieved masses at unit temperature
        w1_buf, w1_view = _out_pair((t_q, cols))
        _check(bind_apply_sts((concat_buf, concat_view), 1.0,
                              (w1_buf, w1_view)), "unit-temperature softmax")
        bounds = np.cumsum([0] + [s.shape[1] for s in style_logits]
                           + [content_logits.shape[1]])
        achieved = np.stack([w1_buf[:, bounds[g]:bounds[g + 1]].sum(axis=1)
                             for g in range(len(bounds) - 1)], axis=1)
        wanted = np.stack(targets, axis=1)
        mass_err = float(np.abs(achieved.astype(np.float64) - wanted).max())

        (delta, tau_pred), err = bind_sharpness_and_temperature(
            buffer_pair(content_logits), (concat_buf, concat_view),
            coefficients=coeffs or DEFAULT_COEFFS)
        _check(err, "sharpness")
        tau = fixed_tau if fixed_tau is not None else tau_pred

        weights_buf, weights_view = _out_pair((t_q, cols))
        _check(bind_apply_sts((concat_buf, concat_view), tau,
                              (weights_buf, weights_view)), "temperature scaling")

        v_concat = np.concatenate([scene[f"v_s_{i}"][h] for i in range(n_styles)]
                                  + [scene["v_c"][h]], axis=0)
        out = (weights_buf.astype(np.float64)
               @ v_concat.astype(np.float64)).astype(np.float32)

        content64 = content_logits.astype(np.float64)
        concat64 = concat_buf.astype(np.float64)
        heads.append({
            "head": h,
            "delta": delta,
            "content_sharpness": _mean_log_p_max(content64),
            "concat_sharpness": _mean_log_p_max(concat64),
            "post_sts_sharpness": _mean_log_p_max(concat64, tau),
            "target_mass_mean": [float(t.mean()) for t in targets],
            "achieved_mass_mean": [float(m) for m in
                                   achieved.astype(np.float64).mean(axis=0)],
            "mass_max_abs_error": mass_err,
            "tau_raw": tau,
            "tau_applied": tau,
            "tau_residual": None,
            "tau_on_boundary": None,
        })
        anchored_all.append(anchored_buf.copy())
        biased_all.append(concat_buf.copy())
        weights_all.append(weights_buf.copy())
        outputs_all.append(out)
        content_logits_all.append(content_logits)
        for i, s in enumerate(style_logits):
            style_logits_all[i].append(s)

    ddi_buf, ddi_view = _out_pair(scene["phi_c"].shape)
    omega, err = bind_inject_details(buffer_pair(scene["phi_c"]),
                                     buffer_pair(scene["phi_cs"]),
                                     buffer_pair(scene["delta_phi_cs"]),
                                     cfg["r"], cfg["epsilon_hp"],
                                     (ddi_buf, ddi_view))
    _check(err, "detail injection")

    tensors = {
        "anchored_queries": np.stack(anchored_all),
        "biased_logits": np.stack(biased_all),
        "attention_weights": np.stack(weights_all),
        "attention_output": np.stack(outputs_all),
        "content_logits": np.stack(content_logits_all),
        "ddi_output": ddi_buf,
        "masks": masks,
    }
    for i, per_head in enumerate(style_logits_all):
        tensors[f"style_logits_{i}"] = np.stack(per_head)
    return {
        "config": cfg,
        "pi_star_effective": eff_pi,
        "omega": omega,
        "heads": heads,
        "checksums": {name: _digest(arr) for name, arr in sorted(tensors.items())},
        "tensors": tensors,
    }
