"""End-to-end attention-control step on synthetic fixtures.

One step chains query anchoring, logit formation, mass allocation,
temperature scaling, the attention product and detail injection, and reports
per-head diagnostics plus content digests of every stage. Features are drawn
from a Philox counter-based generator, so a (seed, config) pair fixes the
scene bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adain import region_adain_init
from .allocation import (LogitGroups, MassTargets, apply_lama, effective_pi_star,
                         group_masses, group_slices, logit_groups_from_features,
                         targets_from_masks)
from .anchoring import QueryPair, anchor_queries
from .config import PipelineConfig, config_to_dict, parse_tau_mode
from .detail import HighPassSpec, ResidualFeatures, discrepancy_weight, inject_details
from .errors import ConfigError, InvalidInput, MastError
from .masks import MaskSet, smooth_mask, validate_feasibility
from .numerics import row_entropy, row_softmax
from .temperature import (TemperatureModel, default_temperature_model,
                          mean_log_p_max, predict_temperature, sharpness_gap,
                          solve_temperature, apply_sts)
from .tensorio import tensor_digest

__all__ = ["SyntheticScene", "StepReport", "SweepRow", "generate_fixture",
           "run_step", "sweep_pi_star"]


@dataclass(frozen=True)
class SyntheticScene:
    """Per-head query/key/value features, residual features and masks."""

    q_c: np.ndarray                      # [heads, T, d]
    q_cs: np.ndarray                     # [heads, T, d]
    k_c: np.ndarray                      # [heads, T_c, d]
    v_c: np.ndarray                      # [heads, T_c, d_v]
    style_keys: tuple[np.ndarray, ...]   # N x [heads, T_s, d]
    style_values: tuple[np.ndarray, ...]  # N x [heads, T_s, d_v]
    phi_c: np.ndarray                    # [C, H_t, W_t]
    phi_cs: np.ndarray
    delta_phi_cs: np.ndarray
    masks: MaskSet

    def buffers(self) -> dict[str, np.ndarray]:
        """Named tensors in a stable order (used for digests and dumps)."""
        out = {"q_c": self.q_c, "q_cs": self.q_cs, "k_c": self.k_c, "v_c": self.v_c}
        for i, (k, v) in enumerate(zip(self.style_keys, self.style_values)):
            out[f"k_s_{i}"] = k
            out[f"v_s_{i}"] = v
        out["phi_c"] = self.phi_c
        out["phi_cs"] = self.phi_cs
        out["delta_phi_cs"] = self.delta_phi_cs
        out["masks"] = np.stack(self.masks.masks)
        return out


@dataclass(frozen=True)
class StepReport:
    """Everything one step produced: scalars for JSON, tensors for files."""

    config: dict
    pi_star_effective: float
    omega: float
    heads: tuple[dict, ...]
    checksums: dict[str, str]
    tensors: dict[str, np.ndarray] = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "pi_star_effective": self.pi_star_effective,
            "omega": self.omega,
            "heads": list(self.heads),
            "checksums": dict(self.checksums),
        }


@dataclass(frozen=True)
class SweepRow:
    """One target-ratio setting and its achieved masses at temperature 1."""

    requested: float
    effective: float
    mean_style_mass: float
    per_style_mean: tuple[float, ...]
    mean_entropy: float


def _style_bands(n_styles: int, h_t: int, w_t: int) -> list[np.ndarray]:
    # disjoint vertical bands covering the grid; width floor-partitioned
    bands = []
    for i in range(n_styles):
        lo = i * w_t // n_styles
        hi = (i + 1) * w_t // n_styles
        m = np.zeros((h_t, w_t), dtype=np.float32)
        m[:, lo:hi] = 1.0
        bands.append(m)
    return bands


def generate_fixture(cfg: PipelineConfig) -> SyntheticScene:
    """Deterministic synthetic scene from a Philox stream keyed by cfg.seed.

    Draw order: q_c, q_cs, k_c, v_c, then per style (keys, values), then
    phi_c, phi_cs, delta_phi_cs. Masks are disjoint vertical bands smoothed
    with cfg.mask_sigma and validated against the effective style ratio.
    """
    rng = np.random.Generator(np.random.Philox(seed=cfg.seed))
    h_t, w_t = cfg.token_grid
    t = cfg.n_tokens

    def draw(*shape: int) -> np.ndarray:
        return rng.standard_normal(shape).astype(np.float32)

    q_c = draw(cfg.n_heads, t, cfg.d)
    q_cs = draw(cfg.n_heads, t, cfg.d)
    k_c = draw(cfg.n_heads, t, cfg.d)
    v_c = draw(cfg.n_heads, t, cfg.d_v)
    style_keys = []
    style_values = []
    for _ in range(cfg.n_styles):
        style_keys.append(draw(cfg.n_heads, t, cfg.d))
        style_values.append(draw(cfg.n_heads, t, cfg.d_v))
    phi_c = draw(cfg.feature_channels, h_t, w_t)
    phi_cs = draw(cfg.feature_channels, h_t, w_t)
    delta_phi_cs = draw(cfg.feature_channels, h_t, w_t)

    bands = [smooth_mask(b, cfg.mask_sigma) for b in
             _style_bands(cfg.n_styles, h_t, w_t)]
    ms = MaskSet(tuple(bands), source_resolution=(h_t, w_t))
    ms = validate_feasibility(ms, effective_pi_star(cfg.pi_star, warn=False))
    return SyntheticScene(q_c, q_cs, k_c, v_c, tuple(style_keys),
                          tuple(style_values), phi_c, phi_cs, delta_phi_cs, ms)


def initial_latent(scene: SyntheticScene, style_latents=None) -> np.ndarray:
    """Region-wise AdaIN initialization using phi_cs-shaped latents.

    The content residual features stand in for the content latent; style
    latents default to per-style shifts of the stylized features.
    """
    if style_latents is None:
        style_latents = [scene.phi_cs + np.float32(i + 1)
                         for i in range(scene.masks.n_styles)]
    return region_adain_init(scene.phi_c, style_latents, scene.masks)


def _head_groups(scene: SyntheticScene, cfg: PipelineConfig,
                 head: int) -> tuple[np.ndarray, LogitGroups]:
    pair = QueryPair(scene.q_c[head], scene.q_cs[head], cfg.lam)
    anchored = anchor_queries(pair)
    return anchored, logit_groups_from_features(
        anchored, [k[head] for k in scene.style_keys], scene.k_c[head], cfg.d)


def _target_columns(targets: MassTargets) -> np.ndarray:
    return np.stack(list(targets.style_mass) + [targets.content_mass], axis=1)


def _choose_tau(mode: str, fixed_v: float | None, model: TemperatureModel | None,
                biased: np.ndarray, gap) -> dict:
    if mode == "fixed":
        return {"tau_raw": fixed_v, "tau_applied": fixed_v,
                "tau_residual": None, "tau_on_boundary": None}
    if mode == "oracle":
        sol = solve_temperature(biased, gap.content_sharpness)
        applied = max(sol.tau, 1.0)
        achieved = mean_log_p_max(biased, applied)
        return {"tau_raw": sol.tau, "tau_applied": applied,
                "tau_residual": achieved - gap.content_sharpness,
                "tau_on_boundary": bool(sol.on_boundary or applied != sol.tau)}
    tau = predict_temperature(model, gap.delta)
    return {"tau_raw": tau, "tau_applied": tau,
            "tau_residual": None, "tau_on_boundary": None}


def run_step(scene: SyntheticScene, cfg: PipelineConfig,
             omega_override: float | None = None,
             tau_model: TemperatureModel | None = None) -> StepReport:
    """Run one full attention-control step and assemble the report.

    Achieved per-group masses are measured at temperature 1 (temperature
    scaling re-weights the groups; the allocation contract holds pre-scaling)
    and are checked against the targets at 1e-6 before the report is built.
    """
    eff_pi = effective_pi_star(cfg.pi_star)
    ms = validate_feasibility(scene.masks, eff_pi)
    targets = targets_from_masks(ms, eff_pi)
    target_cols = _target_columns(targets)

    mode, fixed_v = parse_tau_mode(cfg.tau_mode)
    model: TemperatureModel | None = None
    if mode == "paper-poly":
        model = default_temperature_model()
    elif mode == "fit":
        if tau_model is None:
            raise ConfigError("tau_mode 'fit' needs a fitted coefficient file")
        model = tau_model

    heads = []
    anchored_all = []
    biased_all = []
    weights_all = []
    outputs_all = []
    content_logits_all = []
    style_logits_all: list[list[np.ndarray]] = [[] for _ in range(cfg.n_styles)]

    for h in range(cfg.n_heads):
        anchored, groups = _head_groups(scene, cfg, h)
        slices = group_slices(groups)
        biased = apply_lama(groups, targets)
        weights_t1 = row_softmax(biased)
        masses_t1 = group_masses(weights_t1, slices)
        mass_err = float(np.abs(masses_t1 - target_cols).max())
        if mass_err > 1e-6:
            raise MastError(f"mass allocation failed: max error {mass_err}")
        row_sums = weights_t1.sum(axis=1)
        if float(np.abs(row_sums - 1.0).max()) > 1e-9:
            raise MastError("attention rows do not sum to 1 within 1e-9")

        gap = sharpness_gap(groups, biased)
        tau_info = _choose_tau(mode, fixed_v, model, biased, gap)
        weights = apply_sts(biased, tau_info["tau_applied"])
        v_concat = np.concatenate(
            [v[h] for v in scene.style_values] + [scene.v_c[h]], axis=0)
        out = weights @ np.asarray(v_concat, dtype=np.float64)

        heads.append({
            "head": h,
            "delta": gap.delta,
            "content_sharpness": gap.content_sharpness,
            "concat_sharpness": gap.concat_sharpness,
            "post_sts_sharpness": mean_log_p_max(biased, tau_info["tau_applied"]),
            "target_mass_mean": [float(m) for m in target_cols.mean(axis=0)],
            "achieved_mass_mean": [float(m) for m in masses_t1.mean(axis=0)],
            "mass_max_abs_error": mass_err,
            **tau_info,
        })
        anchored_all.append(np.asarray(anchored, dtype=np.float32))
        biased_all.append(biased.astype(np.float32))
        weights_all.append(weights.astype(np.float32))
        outputs_all.append(out.astype(np.float32))
        content_logits_all.append(groups.content_logits.astype(np.float32))
        for i, s in enumerate(groups.style_logits):
            style_logits_all[i].append(s.astype(np.float32))

    omega = (discrepancy_weight(scene.phi_cs, scene.phi_c)
             if omega_override is None else float(omega_override))
    hp = HighPassSpec(cfg.r, cfg.epsilon_hp)
    features = ResidualFeatures(scene.phi_c, scene.phi_cs, scene.delta_phi_cs)
    ddi_out = inject_details(features, hp, omega=omega)

    tensors = {
        "anchored_queries": np.stack(anchored_all),
        "biased_logits": np.stack(biased_all),
        "attention_weights": np.stack(weights_all),
        "attention_output": np.stack(outputs_all),
        "content_logits": np.stack(content_logits_all),
        "ddi_output": ddi_out,
        "masks": np.stack(ms.masks),
    }
    for i, per_head in enumerate(style_logits_all):
        tensors[f"style_logits_{i}"] = np.stack(per_head)
    checksums = {name: tensor_digest(arr) for name, arr in sorted(tensors.items())}

    return StepReport(config=config_to_dict(cfg), pi_star_effective=eff_pi,
                      omega=omega, heads=tuple(heads), checksums=checksums,
                      tensors=tensors)


def sweep_pi_star(scene: SyntheticScene, cfg: PipelineConfig,
                  values) -> list[SweepRow]:
    """Achieved style mass and attention entropy at temperature 1 per target ratio.

    Values at or above the representable ceiling are clamped (with a warning);
    the achieved-mass column is exact against the effective ratio and strictly
    increasing in it.
    """
    values = [float(v) for v in values]
    if not values:
        raise InvalidInput("sweep_pi_star: empty value list")
    per_head = [_head_groups(scene, cfg, h)[1] for h in range(cfg.n_heads)]
    slices = group_slices(per_head[0])
    rows = []
    for v in values:
        eff = effective_pi_star(v)
        targets = targets_from_masks(scene.masks, eff)
        style_means = np.zeros(cfg.n_styles)
        totals = []
        entropies = []
        for groups in per_head:
            biased = apply_lama(groups, targets)
            weights = row_softmax(biased)
            masses = group_masses(weights, slices)
            style_means += masses[:, :-1].mean(axis=0) / cfg.n_heads
            totals.append(masses[:, :-1].sum(axis=1).mean())
            entropies.append(row_entropy(weights).mean())
        rows.append(SweepRow(
            requested=v, effective=eff,
            mean_style_mass=float(np.mean(totals)),
            per_style_mean=tuple(float(m) for m in style_means),
            mean_entropy=float(np.mean(entropies))))
    return rows
