"""Power-mean combination operators for merging dissimilarity matrices.

The operator is parameterized by an exponent beta: beta = -inf is the
elementwise minimum, beta = 1 the arithmetic mean, beta = +inf the maximum,
and any other finite nonzero beta the generalized power mean
((1/m) * sum(d_k^beta))^(1/beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CombineOperator:
    """Elementwise combination rule identified by its exponent."""

    beta: float

    def __post_init__(self):
        if self.beta == 0.0 or math.isnan(self.beta):
            raise ValueError(f"combiner exponent must be nonzero and not NaN, got {self.beta}")

    @classmethod
    def parse(cls, spec: str | float) -> "CombineOperator":
        """Build from a name ("min", "average", "max") or a numeric exponent."""
        if isinstance(spec, (int, float)):
            return cls(float(spec))
        name = spec.strip().lower()
        if name == "min":
            return cls(float("-inf"))
        if name == "average":
            return cls(1.0)
        if name == "max":
            return cls(float("inf"))
        try:
            return cls(float(name))
        except ValueError:
            raise ValueError(
                f"combiner must be min, average, max, or a finite nonzero exponent, got {spec!r}"
            ) from None

    @property
    def name(self) -> str:
        if self.beta == float("-inf"):
            return "min"
        if self.beta == 1.0:
            return "average"
        if self.beta == float("inf"):
            return "max"
        return f"beta={self.beta:g}"


MIN = CombineOperator(float("-inf"))
AVERAGE = CombineOperator(1.0)
MAX = CombineOperator(float("inf"))


def power_mean(values, beta: float) -> float:
    """Power mean of a nonempty multiset of nonnegative values.

    beta = -inf, 1, +inf give the minimum, arithmetic mean, and maximum; other
    finite nonzero beta use ((1/m) * sum(v^beta))^(1/beta), evaluated in a
    scale-factored form that is stable for large |beta|. For beta < 0 a zero
    value forces the result to 0 (the limiting harmonic-family behaviour).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("power_mean needs a nonempty 1-D value multiset")
    if (v < 0).any():
        raise ValueError("power_mean is defined for nonnegative values only")
    if beta == float("-inf"):
        return float(v.min())
    if beta == float("inf"):
        return float(v.max())
    if beta == 1.0:
        return float(v.mean())
    if beta == 0.0 or math.isnan(beta):
        raise ValueError(f"unsupported exponent {beta}")
    if beta > 0:
        scale = float(v.max())
        if scale == 0.0:
            return 0.0
    else:
        if (v == 0.0).any():
            return 0.0
        scale = float(v.min())
    return float(scale * np.mean((v / scale) ** beta) ** (1.0 / beta))
