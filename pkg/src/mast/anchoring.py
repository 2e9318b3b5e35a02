"""Layout-preserving query anchoring: affine blend of content and stylization queries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

DEFAULT_LAMBDA = 0.2

__all__ = ["DEFAULT_LAMBDA", "QueryPair", "anchor_queries"]


@dataclass(frozen=True)
class QueryPair:
    """Content and stylization query matrices plus the blend weight."""

    q_c: np.ndarray
    q_cs: np.ndarray
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        qc = np.asarray(self.q_c)
        qcs = np.asarray(self.q_cs)
        if qc.shape != qcs.shape:
            raise InvalidInput(
                f"QueryPair: shape mismatch {qc.shape} vs {qcs.shape}")
        if not (np.isfinite(self.lam) and 0.0 <= self.lam <= 1.0):
            raise InvalidInput(f"QueryPair: lambda must be in [0, 1], got {self.lam}")


def anchor_queries(pair: QueryPair) -> np.ndarray:
    """Blend lam * q_c + (1 - lam) * q_cs.

    The endpoints return bitwise copies of the respective input.
    """
    if pair.lam == 0.0:
        return np.array(pair.q_cs, copy=True)
    if pair.lam == 1.0:
        return np.array(pair.q_c, copy=True)
    qc = np.asarray(pair.q_c, dtype=np.float64)
    qcs = np.asarray(pair.q_cs, dtype=np.float64)
    out = pair.lam * qc + (1.0 - pair.lam) * qcs
    return out.astype(np.result_type(pair.q_c, pair.q_cs))
