"""Highest posterior density intervals from draws."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_MASS = 0.89


@dataclass(frozen=True)
class Hpdi:
    lower: float
    upper: float
    mass: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        return self.lower <= x <= self.upper

    def overlaps(self, other: "Hpdi") -> bool:
        return self.lower <= other.upper and other.lower <= self.upper


def window_size(n: int, mass: float) -> int:
    if not 0 < mass < 1:
        raise ValueError(f"mass must lie in (0, 1), got {mass}")
    # round first so 0.89 * 100 is 89, not 90
    return max(1, min(n, math.ceil(round(mass * n, 9))))


def hpdi(samples, mass: float = DEFAULT_MASS) -> Hpdi:
    """Narrowest window of ceil(mass * n) sorted draws; the first one wins ties."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if x.size == 0:
        raise ValueError("no samples")
    m = window_size(x.size, mass)
    widths = x[m - 1:] - x[:x.size - m + 1]
    i = int(np.argmin(widths))
    return Hpdi(float(x[i]), float(x[i + m - 1]), mass)


def hpdi_rows(samples, mass: float = DEFAULT_MASS) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`hpdi` for a 2-d array; returns (lower, upper) arrays."""
    x = np.sort(np.asarray(samples, dtype=np.float64), axis=1)
    n = x.shape[1]
    if n == 0:
        raise ValueError("no samples")
    m = window_size(n, mass)
    widths = x[:, m - 1:] - x[:, :n - m + 1]
    i = np.argmin(widths, axis=1)
    rows = np.arange(x.shape[0])
    return x[rows, i], x[rows, i + m - 1]
