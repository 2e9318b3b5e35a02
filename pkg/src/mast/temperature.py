"""Sharpness-aware temperature scaling.

Sharpness of an attention row is measured as the log of its maximum softmax
probability; scaling logits by a temperature t >= 1 can only increase it
(the derivative is max-logit minus the expected logit, which is nonnegative).
The gap between content sharpness and concatenated-path sharpness drives a
fitted polynomial that predicts the restoring temperature, with a direct
monotone solver available as the oracle.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .allocation import LogitGroups
from .errors import DegenerateLogits, FormatError, InvalidInput, SingularFit
from .numerics import row_log_p_max, row_softmax

GRID_MIN = 0.5
GRID_MAX = 8.0
GRID_STEP = 0.01
BISECT_TOL = 1e-4

# Shipped default quadratic mapping gap -> temperature (highest degree first).
DEFAULT_POLY_COEFFS = (0.08395, 0.43705, 1.00998)

__all__ = [
    "GRID_MIN",
    "GRID_MAX",
    "GRID_STEP",
    "DEFAULT_POLY_COEFFS",
    "SharpnessGap",
    "TemperatureModel",
    "TemperatureSolution",
    "CalibrationDataset",
    "sharpness_gap",
    "mean_log_p_max",
    "solve_temperature",
    "fit_temperature_model",
    "r_squared",
    "predict_temperature",
    "apply_sts",
    "default_temperature_model",
    "save_temperature_model",
    "load_temperature_model",
    "synthesize_calibration",
]


@dataclass(frozen=True)
class SharpnessGap:
    """Mean per-query log p_max of the content rows, the concat rows, and their gap."""

    delta: float
    content_sharpness: float
    concat_sharpness: float

    def __post_init__(self):
        if abs(self.delta - (self.content_sharpness - self.concat_sharpness)) > 1e-12:
            raise InvalidInput("SharpnessGap: delta must equal content - concat")


@dataclass(frozen=True)
class TemperatureModel:
    """Polynomial gap -> temperature mapping with a lower clamp."""

    coefficients: tuple[float, ...]  # highest degree first
    clamp_min: float = 1.0

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def predict(self, delta: float) -> float:
        return predict_temperature(self, delta)


@dataclass(frozen=True)
class TemperatureSolution:
    """Solver result: temperature, achieved sharpness and residual vs the target."""

    tau: float
    achieved: float
    residual: float
    on_boundary: bool = False


@dataclass(frozen=True)
class CalibrationDataset:
    """(gap, solved temperature) samples plus a provenance descriptor."""

    deltas: np.ndarray
    tau_stars: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=np.float64).ravel()
        t = np.asarray(self.tau_stars, dtype=np.float64).ravel()
        if d.shape != t.shape:
            raise InvalidInput("CalibrationDataset: deltas and tau_stars length mismatch")
        if t.size and float(t.min()) < GRID_MIN - 1e-12:
            raise InvalidInput(
                f"CalibrationDataset: tau_star below grid lower bound {GRID_MIN}")
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "tau_stars", t)

    def __len__(self) -> int:
        return self.deltas.size


def mean_log_p_max(rows, temperature: float = 1.0) -> float:
    """Mean over query rows of the log maximum softmax probability."""
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInput(f"mean_log_p_max: expected non-empty 2-D logits, got {arr.shape}")
    return float(np.mean(row_log_p_max(arr, temperature)))


def sharpness_gap(groups: LogitGroups, biased_concat) -> SharpnessGap:
    """Gap between content-group sharpness and concatenated-row sharpness."""
    content = mean_log_p_max(groups.content_logits)
    concat = mean_log_p_max(biased_concat)
    return SharpnessGap(content - concat, content, concat)


def _rows_all_constant(rows: np.ndarray) -> bool:
    # a row is "constant" when all its finite entries are equal; such rows have
    # temperature-independent sharpness
    finite = np.isfinite(rows)
    hi = np.where(finite, rows, -np.inf).max(axis=1)
    lo = np.where(finite, rows, np.inf).min(axis=1)
    return bool(np.all(hi == lo))


def solve_temperature(concat_logits, target_sharpness: float) -> TemperatureSolution:
    """Find the temperature whose mean log p_max best matches the target.

    Sharpness is monotone in the temperature, so the search bisects the
    [GRID_MIN, GRID_MAX] interval down to ``BISECT_TOL``. Targets outside the
    achievable range return the boundary with the residual flagged.
    """
    rows = np.asarray(concat_logits, dtype=np.float64)
    if rows.ndim != 2 or rows.size == 0:
        raise InvalidInput("solve_temperature: expected non-empty 2-D logits")
    if not np.isfinite(target_sharpness) or target_sharpness > 0.0:
        raise InvalidInput(
            f"solve_temperature: target sharpness must be a log-probability <= 0, "
            f"got {target_sharpness}")
    if _rows_all_constant(rows):
        raise DegenerateLogits(
            "solve_temperature: all rows constant, sharpness does not depend on "
            "temperature")

    def g(t: float) -> float:
        return float(np.mean(row_log_p_max(rows, t)))

    lo, hi = GRID_MIN, GRID_MAX
    g_lo, g_hi = g(lo), g(hi)
    if g_lo >= target_sharpness:
        return TemperatureSolution(lo, g_lo, g_lo - target_sharpness,
                                   on_boundary=g_lo > target_sharpness)
    if g_hi <= target_sharpness:
        return TemperatureSolution(hi, g_hi, g_hi - target_sharpness,
                                   on_boundary=g_hi < target_sharpness)
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if g(mid) < target_sharpness:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    achieved = g(tau)
    return TemperatureSolution(tau, achieved, achieved - target_sharpness)


def r_squared(model: TemperatureModel, deltas, tau_stars) -> float:
    """Coefficient of determination of the model on the given samples."""
    d = np.asarray(deltas, dtype=np.float64).ravel()
    t = np.asarray(tau_stars, dtype=np.float64).ravel()
    pred = np.polyval(model.coefficients, d)
    ss_res = float(np.sum((t - pred) ** 2))
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0.0:
        warnings.warn("r_squared: constant targets, reporting 1.0 by convention",
                      stacklevel=2)
        return 1.0
    return 1.0 - ss_res / ss_tot


def fit_temperature_model(data: CalibrationDataset, degree: int,
                          ) -> tuple[TemperatureModel, float]:
    """Ordinary least-squares polynomial fit of temperature against the gap."""
    if not 1 <= degree <= 4:
        raise InvalidInput(f"fit_temperature_model: degree must be in 1..4, got {degree}")
    n_distinct = np.unique(data.deltas).size
    if n_distinct < degree + 1:
        raise SingularFit(
            f"fit_temperature_model: {n_distinct} distinct gap values cannot "
            f"determine a degree-{degree} polynomial")
    coeffs = np.polyfit(data.deltas, data.tau_stars, degree)
    model = TemperatureModel(tuple(float(c) for c in coeffs))
    return model, r_squared(model, data.deltas, data.tau_stars)


def predict_temperature(model: TemperatureModel, delta: float) -> float:
    """Evaluate the polynomial at the gap and clamp below at ``clamp_min``."""
    if not np.isfinite(delta):
        raise InvalidInput(f"predict_temperature: delta must be finite, got {delta}")
    raw = float(np.polyval(model.coefficients, float(delta)))
    return max(raw, model.clamp_min)


def apply_sts(biased_concat, tau: float, clamp_min: float = 1.0) -> np.ndarray:
    """Row-wise softmax of tau * logits; tau must respect the lower clamp."""
    rows = np.asarray(biased_concat, dtype=np.float64)
    if rows.ndim != 2 or rows.size == 0:
        raise InvalidInput("apply_sts: expected non-empty 2-D logits")
    if not (np.isfinite(tau) and tau >= clamp_min):
        raise InvalidInput(f"apply_sts: tau must be >= {clamp_min}, got {tau}")
    return row_softmax(rows * tau)


def default_temperature_model() -> TemperatureModel:
    """The shipped quadratic model."""
    return TemperatureModel(DEFAULT_POLY_COEFFS, clamp_min=1.0)


def save_temperature_model(path, model: TemperatureModel, r2: float,
                           extra: dict | None = None) -> None:
    """Write the coefficient JSON: degree, coefficients, clamp_min, r_squared."""
    payload = {
        "degree": model.degree,
        "coefficients": list(model.coefficients),
        "clamp_min": model.clamp_min,
        "r_squared": r2,
    }
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_temperature_model(path) -> tuple[TemperatureModel, float]:
    """Read a coefficient JSON; returns (model, stored r_squared)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid coefficient JSON: {exc}") from exc
    try:
        coeffs = tuple(float(c) for c in payload["coefficients"])
        degree = int(payload["degree"])
        clamp_min = float(payload["clamp_min"])
        r2 = float(payload["r_squared"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: coefficient JSON missing or malformed field: {exc}"
                          ) from exc
    if degree != len(coeffs) - 1:
        raise FormatError(
            f"{path}: degree {degree} inconsistent with {len(coeffs)} coefficients")
    return TemperatureModel(coeffs, clamp_min=clamp_min), r2


def _calibration_sample(seed: int, index: int) -> tuple[float, float]:
    """One (gap, solved temperature) observation from a synthetic logit fixture.

    Content rows get unit-scale Gaussian logits times a sharpness scale; the
    concatenated rows span more tokens at a flattened scale, mimicking the
    sharpness loss that query mixing and token-count growth produce.
    """
    rng = np.random.Generator(np.random.Philox(seed=[seed, index]))
    rows = 16
    t_content = int(rng.integers(96, 257))
    t_style = int(rng.integers(96, 257))
    scale = float(rng.uniform(1.1, 1.6))
    flatten = float(rng.uniform(1.0, 3.2))
    content = rng.standard_normal((rows, t_content)) * scale
    concat = rng.standard_normal((rows, t_content + t_style)) * (scale / flatten)
    target = mean_log_p_max(content)
    delta = target - mean_log_p_max(concat)
    sol = solve_temperature(concat, target)
    return delta, sol.tau


def synthesize_calibration(n_samples: int, seed: int,
                           max_workers: int | None = None) -> CalibrationDataset:
    """Generate a calibration dataset from varied synthetic fixtures.

    Fixtures are independent (counter-based RNG keyed on the sample index),
    so the dataset is identical regardless of the worker count.
    """
    if n_samples < 1:
        raise InvalidInput(f"synthesize_calibration: n_samples must be >= 1")
    indices = range(n_samples)
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            pairs = list(pool.map(lambda k: _calibration_sample(seed, k), indices))
    else:
        pairs = [_calibration_sample(seed, k) for k in indices]
    deltas = np.array([p[0] for p in pairs])
    taus = np.array([p[1] for p in pairs])
    provenance = {"seed": seed, "samples": n_samples, "rows": 16,
                  "content_tokens": [96, 256], "style_tokens": [96, 256],
                  "generator": "philox4x64"}
    return CalibrationDataset(deltas, taus, provenance)
