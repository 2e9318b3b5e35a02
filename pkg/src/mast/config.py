"""Pipeline configuration: one dataclass, loaded from strict-keyed JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

TAU_MODES = ("paper-poly", "fit", "oracle")
_FIXED_PREFIX = "fixed:"

# dataclass field -> JSON key (lambda is a Python keyword)
_KEY_MAP = {"lam": "lambda"}
_FIELDS = ("lam", "pi_star", "r", "epsilon_hp", "mask_sigma", "tau_mode", "seed",
           "token_grid", "d", "d_v", "n_heads", "n_styles", "feature_channels")

__all__ = ["PipelineConfig", "parse_tau_mode", "load_config", "config_to_dict",
           "config_from_dict", "replace"]


def parse_tau_mode(mode: str) -> tuple[str, float | None]:
    """Split a tau mode string into (kind, fixed value or None)."""
    if mode in TAU_MODES:
        return mode, None
    if mode.startswith(_FIXED_PREFIX):
        try:
            value = float(mode[len(_FIXED_PREFIX):])
        except ValueError:
            raise ConfigError(f"bad fixed tau value in {mode!r}") from None
        if not (np.isfinite(value) and value >= 1.0):
            raise ConfigError(f"fixed tau must be >= 1, got {value}")
        return "fixed", value
    raise ConfigError(
        f"unknown tau_mode {mode!r}; expected one of {TAU_MODES} or fixed:<v>")


@dataclass(frozen=True)
class PipelineConfig:
    """All tunables of one attention-control run."""

    lam: float = 0.2
    pi_star: float = 0.9
    r: float = 0.3
    epsilon_hp: float = 1e-8
    mask_sigma: float = 2.0
    tau_mode: str = "paper-poly"
    seed: int = 0
    token_grid: tuple[int, int] = (8, 8)
    d: int = 32
    d_v: int = 16
    n_heads: int = 2
    n_styles: int = 2
    feature_channels: int = 4

    def __post_init__(self):
        object.__setattr__(self, "token_grid", tuple(int(v) for v in self.token_grid))
        if not (0.0 <= self.lam <= 1.0):
            raise ConfigError(f"lambda must be in [0, 1], got {self.lam}")
        if not (0.0 < self.pi_star <= 1.0):
            raise ConfigError(f"pi_star must be in (0, 1], got {self.pi_star}")
        if self.r <= 0:
            raise ConfigError(f"r must be > 0, got {self.r}")
        if self.epsilon_hp <= 0:
            raise ConfigError(f"epsilon_hp must be > 0, got {self.epsilon_hp}")
        if self.mask_sigma < 0:
            raise ConfigError(f"mask_sigma must be >= 0, got {self.mask_sigma}")
        parse_tau_mode(self.tau_mode)
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64):
            raise ConfigError(f"seed must be a u64, got {self.seed}")
        if len(self.token_grid) != 2 or any(v < 1 for v in self.token_grid):
            raise ConfigError(f"token_grid must be two extents >= 1, got {self.token_grid}")
        for name in ("d", "d_v", "n_heads", "n_styles", "feature_channels"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.n_styles > self.token_grid[1]:
            raise ConfigError(
                f"token grid width {self.token_grid[1]} too narrow for "
                f"{self.n_styles} style bands")

    @property
    def tau_mode_kind(self) -> str:
        return parse_tau_mode(self.tau_mode)[0]

    @property
    def fixed_tau(self) -> float | None:
        return parse_tau_mode(self.tau_mode)[1]

    @property
    def n_tokens(self) -> int:
        return self.token_grid[0] * self.token_grid[1]


def config_to_dict(cfg: PipelineConfig) -> dict:
    """JSON-ready snapshot with the canonical key names."""
    out = {}
    for name in _FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            value = list(value)
        out[_KEY_MAP.get(name, name)] = value
    return out


def config_from_dict(data: dict) -> PipelineConfig:
    """Build a config from a JSON dict; unknown keys are an error."""
    allowed = {_KEY_MAP.get(name, name): name for name in _FIELDS}
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {allowed[k]: v for k, v in data.items()}
    if "token_grid" in kwargs:
        kwargs["token_grid"] = tuple(kwargs["token_grid"])
    try:
        return PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def load_config(path) -> PipelineConfig:
    """Read a JSON config file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(data)
