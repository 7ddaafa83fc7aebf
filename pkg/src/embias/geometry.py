"""Cosine arithmetic, the principal bias direction and projection-based direct bias."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

POWER_TOL = 1e-10
POWER_MAX_ITER = 1000
TIE_RTOL = 1e-6


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Direction:
    unit: np.ndarray
    eigenvalue: float = float("nan")
    # top eigenvalue of the difference Gram matrix is (numerically) repeated
    degenerate: bool = False
    iterations: int = 0

    def __post_init__(self):
        unit = np.asarray(self.unit, dtype=np.float64)
        n = np.linalg.norm(unit)
        if not abs(n - 1.0) <= 1e-12:
            raise ValueError(f"direction must have unit norm, got {n!r}")
        unit = unit.copy()
        unit.setflags(write=False)
        object.__setattr__(self, "unit", unit)


def _as_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def cosine_similarity(a, b) -> float:
    a, b = _as_pair(a, b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity undefined for a zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def cosine_distance(a, b) -> float:
    return 1.0 - cosine_similarity(a, b)


def cosine_matrix(rows, cols) -> np.ndarray:
    """Pairwise cosine similarities between the rows of two 2-d arrays."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    cols = np.atleast_2d(np.asarray(cols, dtype=np.float64))
    if rows.shape[1] != cols.shape[1]:
        raise ValueError(f"length mismatch: {rows.shape[1]} vs {cols.shape[1]}")
    nr = np.linalg.norm(rows, axis=1)
    nc = np.linalg.norm(cols, axis=1)
    if (nr == 0).any() or (nc == 0).any():
        raise ValueError("cosine similarity undefined for a zero-norm vector")
    sims = (rows / nr[:, None]) @ (cols / nc[:, None]).T
    return np.clip(sims, -1.0, 1.0)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-15)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def principal_direction(pairs: Sequence[tuple], tol: float = POWER_TOL,
                        max_iter: int = POWER_MAX_ITER) -> Direction:
    """Dominant eigenvector of DᵀD, D stacking the uncentered pair differences.

    Power iteration from the all-ones start vector. When the top eigenvalue is
    tied the returned direction is an arbitrary member of the top eigenspace
    and ``degenerate`` is set.
    """
    if len(pairs) == 0:
        raise ValueError("at least one pair is required")
    D = np.array([np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
                  for a, b in pairs])
    if D.ndim != 2:
        raise ValueError("pair vectors must share one length")
    if not np.any(D):
        raise ValueError("all difference vectors are zero")
    dim = D.shape[1]

    def apply(v):
        return D.T @ (D @ v)

    starts = [np.full(dim, 1.0 / np.sqrt(dim))] + list(np.eye(dim))
    scale = np.linalg.norm(D) ** 2
    for start in starts:
        v = apply(start)
        if np.linalg.norm(v) > 1e-12 * scale:
            break
    v = v / np.linalg.norm(v)
    for it in range(1, max_iter + 1):
        w = apply(v)
        w = w / np.linalg.norm(w)
        # angular change, robust near 0
        change = 2.0 * np.arcsin(min(1.0, np.linalg.norm(w - v) / 2.0))
        v = w
        if change < tol:
            break
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")

    v = _fix_sign(v)
    lam = float(v @ apply(v))
    # tie check on the small k×k Gram matrix
    ev = np.linalg.eigvalsh(D @ D.T)
    degenerate = ev.size >= 2 and (ev[-1] - ev[-2]) <= TIE_RTOL * ev[-1]
    return Direction(v / np.linalg.norm(v), lam, bool(degenerate), it)


def direct_bias(neutral_words, direction: Direction, c: float = 1.0) -> float:
    """Mean of |cos(w, direction)|**c over the neutral words."""
    W = np.asarray(neutral_words, dtype=np.float64)
    if W.ndim == 1:
        W = W[None, :]
    if W.shape[0] == 0 or W.size == 0:
        raise ValueError("neutral word list is empty")
    if c <= 0:
        raise ValueError("c must be positive")
    cos = cosine_matrix(W, direction.unit[None, :])[:, 0]
    return float(np.mean(np.abs(cos) ** c))
