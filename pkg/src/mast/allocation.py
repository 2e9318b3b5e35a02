"""Logit-level attention mass allocation.

Given per-query logits split into N style groups and one content group, a
per-group scalar bias is added so that a single softmax over the concatenated
row assigns exactly the requested probability mass to each group:

    b_i(q) = log(pi_i(q) / pi_c(q)) + log Z_c(q) - log Z_i(q)

where Z_g(q) is the partition sum of group g's row. Adding a constant within
a group cannot change the ordering inside that group, so relative rankings
are preserved while the group-level masses become exact. A target mass below
``MASS_EPSILON`` excludes the group's key columns for that query outright
(bias -inf), which is the exact limit of the formula and avoids log(0).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleMasks, InvalidInput
from .masks import MaskSet
from .numerics import row_logsumexp, row_softmax

MASS_EPSILON = 1e-8
DEFAULT_PI_STAR = 0.9
PI_STAR_CEILING = 1.0 - 1e-4

__all__ = [
    "MASS_EPSILON",
    "DEFAULT_PI_STAR",
    "PI_STAR_CEILING",
    "LogitGroups",
    "MassTargets",
    "effective_pi_star",
    "targets_from_masks",
    "logit_groups_from_features",
    "partition_log_z",
    "compute_bias_single",
    "compute_bias",
    "apply_lama",
    "group_slices",
    "group_masses",
    "attention_output",
]


@dataclass(frozen=True)
class LogitGroups:
    """Per-query logits partitioned into N style groups plus one content group."""

    style_logits: tuple[np.ndarray, ...]
    content_logits: np.ndarray
    d: int

    def __post_init__(self):
        if len(self.style_logits) < 1:
            raise InvalidInput("LogitGroups: need at least one style group")
        if self.d < 1:
            raise InvalidInput(f"LogitGroups: key dimension must be >= 1, got {self.d}")
        content = np.asarray(self.content_logits, dtype=np.float64)
        if content.ndim != 2:
            raise InvalidInput("LogitGroups: content logits must be 2-D")
        t_q = content.shape[0]
        styles = []
        for i, s in enumerate(self.style_logits):
            arr = np.asarray(s, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[0] != t_q:
                raise InvalidInput(
                    f"LogitGroups: style group {i} shape {arr.shape} does not share "
                    f"{t_q} query rows")
            if not np.all(np.isfinite(arr)):
                raise InvalidInput(f"LogitGroups: style group {i} has non-finite entries")
            styles.append(arr)
        if not np.all(np.isfinite(content)):
            raise InvalidInput("LogitGroups: content logits have non-finite entries")
        object.__setattr__(self, "style_logits", tuple(styles))
        object.__setattr__(self, "content_logits", content)

    @property
    def n_styles(self) -> int:
        return len(self.style_logits)

    @property
    def n_queries(self) -> int:
        return self.content_logits.shape[0]


@dataclass(frozen=True)
class MassTargets:
    """Per-query target probability mass for each style group and for content.

    Per query the style masses plus the content mass sum to exactly 1.
    """

    style_mass: tuple[np.ndarray, ...]
    content_mass: np.ndarray

    def __post_init__(self):
        content = np.asarray(self.content_mass, dtype=np.float64).ravel()
        styles = tuple(np.asarray(s, dtype=np.float64).ravel() for s in self.style_mass)
        for arr, name in [(content, "content")] + [
                (s, f"style {i}") for i, s in enumerate(styles)]:
            if arr.shape != content.shape:
                raise InvalidInput(f"MassTargets: {name} mass length mismatch")
            if np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12):
                raise InvalidInput(f"MassTargets: {name} mass outside [0, 1]")
        total = content + np.sum(styles, axis=0)
        if np.any(np.abs(total - 1.0) > 1e-9):
            raise InvalidInput("MassTargets: per-query masses must sum to 1 within 1e-9")
        object.__setattr__(self, "style_mass", styles)
        object.__setattr__(self, "content_mass", content)

    @property
    def n_styles(self) -> int:
        return len(self.style_mass)


def effective_pi_star(pi_star: float, warn: bool = True) -> float:
    """Clamp the target style ratio below 1 so the content mass stays positive.

    The closed form cannot represent a zero content mass (the bias would be
    infinite), so ratios above ``PI_STAR_CEILING`` are clamped to it.
    """
    if not np.isfinite(pi_star) or pi_star <= 0.0:
        raise InvalidInput(f"pi_star must be > 0, got {pi_star}")
    if pi_star > PI_STAR_CEILING:
        if warn:
            warnings.warn(
                f"pi_star {pi_star} clamped to {PI_STAR_CEILING} (a zero content "
                f"mass is not representable)", stacklevel=2)
        return PI_STAR_CEILING
    return float(pi_star)


def targets_from_masks(ms: MaskSet, pi_star: float) -> MassTargets:
    """Build per-query targets pi_i(q) = pi_star * M_i(q) from token-resolution masks."""
    pi = effective_pi_star(pi_star)
    flat = ms.flattened()
    style = tuple(pi * m for m in flat)
    content = 1.0 - np.sum(style, axis=0)
    if np.any(content <= 0.0):
        q = int(np.argmin(content))
        raise InfeasibleMasks(
            f"content mass {float(content[q]):.6g} <= 0 at token {q}; run "
            f"feasibility validation first", token_index=q,
            allocation=float(1.0 - content[q]))
    return MassTargets(style, content)


def logit_groups_from_features(queries, style_keys, content_keys, d: int) -> LogitGroups:
    """Scaled dot-product logits q @ k.T / sqrt(d) for each key group."""
    q = np.asarray(queries, dtype=np.float64)
    scale = 1.0 / np.sqrt(float(d))
    style = tuple(q @ np.asarray(k, dtype=np.float64).T * scale for k in style_keys)
    content = q @ np.asarray(content_keys, dtype=np.float64).T * scale
    return LogitGroups(style, content, d)


def partition_log_z(groups: LogitGroups) -> tuple[list[np.ndarray], np.ndarray]:
    """Per-query log partition sum of each style group and of the content group."""
    log_z_style = [row_logsumexp(s) for s in groups.style_logits]
    log_z_content = row_logsumexp(groups.content_logits)
    return log_z_style, log_z_content


def _check_content_mass(content_mass: np.ndarray) -> None:
    if np.any(content_mass <= 0.0):
        q = int(np.argmin(content_mass))
        raise InfeasibleMasks(
            f"content mass {float(content_mass[q]):.6g} <= 0 at query {q}",
            token_index=q, allocation=float(1.0 - content_mass[q]))


def compute_bias_single(style_logits, content_logits, style_mass, content_mass,
                        ) -> np.ndarray:
    """Single-style closed-form bias per query.

    Queries whose target style mass is below ``MASS_EPSILON`` get -inf,
    meaning the style's key columns are excluded for that query.
    """
    log_z_s = row_logsumexp(np.asarray(style_logits, dtype=np.float64))
    log_z_c = row_logsumexp(np.asarray(content_logits, dtype=np.float64))
    pi_s = np.asarray(style_mass, dtype=np.float64).ravel()
    pi_c = np.asarray(content_mass, dtype=np.float64).ravel()
    _check_content_mass(pi_c)
    include = pi_s >= MASS_EPSILON
    bias = np.full(pi_s.shape, -np.inf)
    bias[include] = (np.log(pi_s[include] / pi_c[include])
                     + log_z_c[include] - log_z_s[include])
    return bias


def compute_bias(groups: LogitGroups, targets: MassTargets) -> list[np.ndarray]:
    """N-way closed-form biases, one per style group, each per query.

    With a single style this reproduces :func:`compute_bias_single` bitwise:
    the content partition acts as the common anchor for every group.
    """
    if targets.n_styles != groups.n_styles:
        raise InvalidInput(
            f"compute_bias: {targets.n_styles} targets for {groups.n_styles} groups")
    log_z_style, log_z_content = partition_log_z(groups)
    pi_c = targets.content_mass
    _check_content_mass(pi_c)
    biases = []
    for pi_i, log_z_i in zip(targets.style_mass, log_z_style):
        include = pi_i >= MASS_EPSILON
        b = np.full(pi_i.shape, -np.inf)
        b[include] = (np.log(pi_i[include] / pi_c[include])
                      + log_z_content[include] - log_z_i[include])
        biases.append(b)
    return biases


def apply_lama(groups: LogitGroups, targets: MassTargets) -> np.ndarray:
    """Concatenate style-group logits plus their biases with the content logits.

    Column order is style groups in index order, then content. A softmax of
    each output row reproduces the target per-group masses; -inf columns
    (excluded styles) receive exactly zero probability.
    """
    biases = compute_bias(groups, targets)
    blocks = [s + b[:, None] for s, b in zip(groups.style_logits, biases)]
    blocks.append(groups.content_logits)
    return np.concatenate(blocks, axis=1)


def group_slices(groups: LogitGroups) -> list[slice]:
    """Column slices of each style group and the content group in concat order."""
    slices = []
    start = 0
    for s in groups.style_logits:
        slices.append(slice(start, start + s.shape[1]))
        start += s.shape[1]
    slices.append(slice(start, start + groups.content_logits.shape[1]))
    return slices


def group_masses(weights: np.ndarray, slices: list[slice]) -> np.ndarray:
    """Per-query mass of each group given row-stochastic attention weights."""
    return np.stack([weights[:, sl].sum(axis=1) for sl in slices], axis=1)


def attention_output(biased_logits, v_concat, temperature: float = 1.0) -> np.ndarray:
    """Softmax(temperature * logits) @ values over the concatenated key axis."""
    logits = np.asarray(biased_logits, dtype=np.float64)
    values = np.asarray(v_concat, dtype=np.float64)
    if logits.ndim != 2 or values.ndim != 2 or logits.shape[1] != values.shape[0]:
        raise InvalidInput(
            f"attention_output: logits {logits.shape} incompatible with values "
            f"{values.shape}")
    if not (np.isfinite(temperature) and temperature > 0):
        raise InvalidInput(f"attention_output: temperature must be > 0, got {temperature}")
    weights = row_softmax(logits * temperature)
    return weights @ values
