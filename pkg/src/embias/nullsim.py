"""Null-model simulations: how often WEAT-style statistics look impressive when no bias exists.

Each simulated sample is a (2n) x (2m) matrix of association scores drawn
i.i.d. from Normal(mu, sigma): rows are protected items (first n form X),
the first m columns are scores against attribute set A, the rest against B.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .metrics import (effect_size_from_s, partition_index, partition_s_statistics,
                      permutation_p_value, s_statistic, weat_s_values)


@dataclass(frozen=True)
class NullConfig:
    n_per_group: int = 8
    n_attrs_per_set: int = 8
    mu: float = 0.0
    sigma: float = 0.08
    n_sims: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.n_per_group < 2:
            raise ValueError("n_per_group must be >= 2")
        if self.n_attrs_per_set < 1:
            raise ValueError("n_attrs_per_set must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.n_sims < 1:
            raise ValueError("n_sims must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class NullSample:
    scores: np.ndarray
    n_per_group: int
    n_attrs_per_set: int

    @property
    def to_a(self) -> np.ndarray:
        return self.scores[:, :self.n_attrs_per_set]

    @property
    def to_b(self) -> np.ndarray:
        return self.scores[:, self.n_attrs_per_set:]

    def s_values(self) -> np.ndarray:
        return weat_s_values(self.to_a, self.to_b)


@dataclass
class SimulationSummary:
    config: NullConfig
    effect_sizes: np.ndarray
    s_statistics: np.ndarray
    p_values: np.ndarray | None = None

    def tail(self, threshold: float, sidedness: str = "two") -> float:
        return tail_fraction(self.effect_sizes, threshold, sidedness)


def stream_rng(seed: int, stream_index: int) -> np.random.Generator:
    """Independent generator for one simulation, keyed by (seed, stream_index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream_index,)))


def draw_null_sample(cfg: NullConfig, stream_index: int) -> NullSample:
    rng = stream_rng(cfg.seed, stream_index)
    shape = (2 * cfg.n_per_group, 2 * cfg.n_attrs_per_set)
    return NullSample(rng.normal(cfg.mu, cfg.sigma, size=shape), cfg.n_per_group, cfg.n_attrs_per_set)


def bootstrap_partitions(sample: NullSample) -> tuple[np.ndarray, np.ndarray]:
    """s statistic and effect size for every equal split of the protected items."""
    n = sample.n_per_group
    s = sample.s_values()
    index = partition_index(2 * n, n)
    s_dist = partition_s_statistics(s, n, index)
    sd = s.std()
    if sd == 0:
        return s_dist, np.full_like(s_dist, np.nan)
    # mean(X_i) - mean(Y_i) = s_i / n and the pooled sd is the same for every split
    return s_dist, s_dist / (n * sd)


def _reduce(cfg: NullConfig, start: int, stop: int, with_p: bool,
            index: np.ndarray | None):
    n = cfg.n_per_group
    eff = np.empty(stop - start)
    sst = np.empty(stop - start)
    pv = np.empty(stop - start) if with_p else None
    for k, i in enumerate(range(start, stop)):
        s = draw_null_sample(cfg, i).s_values()
        sst[k] = s_statistic(s, n)
        eff[k] = effect_size_from_s(s, n)
        if with_p:
            pv[k] = permutation_p_value(s, n, "exact", index=index)[0]
    return eff, sst, pv


def worker_count() -> int:
    env = os.environ.get("EMBIAS_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_null_study(cfg: NullConfig, with_p_values: bool = False,
                   workers: int | None = None) -> SimulationSummary:
    """Draw ``cfg.n_sims`` null samples and reduce each to its observed WEAT statistics.

    With ``with_p_values`` each sample also gets the exact strict-'>'
    permutation p-value over all equal splits.
    """
    index = partition_index(2 * cfg.n_per_group, cfg.n_per_group) if with_p_values else None
    workers = workers or worker_count()
    chunk = max(1, math.ceil(cfg.n_sims / (4 * workers)))
    bounds = [(a, min(a + chunk, cfg.n_sims)) for a in range(0, cfg.n_sims, chunk)]
    if workers == 1 or len(bounds) == 1:
        parts = [_reduce(cfg, a, b, with_p_values, index) for a, b in bounds]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda ab: _reduce(cfg, *ab, with_p_values, index), bounds))
    eff = np.concatenate([p[0] for p in parts])
    sst = np.concatenate([p[1] for p in parts])
    pv = np.concatenate([p[2] for p in parts]) if with_p_values else None
    return SimulationSummary(cfg, eff, sst, pv)


def tail_fraction(values, threshold: float, sidedness: str = "two") -> float:
    """Fraction of values at least as extreme as ``threshold``.

    one-sided: v >= threshold; two-sided: |v| >= |threshold|.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("values list is empty")
    if sidedness == "one":
        return float(np.count_nonzero(v >= threshold) / v.size)
    if sidedness == "two":
        return float(np.count_nonzero(np.abs(v) >= abs(threshold)) / v.size)
    raise ValueError(f"sidedness must be 'one' or 'two', got {sidedness!r}")


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p: float
    ci95: tuple[float, float]
    mean_diff: float


def welch_t_test(group_a, group_b) -> WelchResult:
    """Two-sided Welch unequal-variance t-test of mean(a) - mean(b)."""
    a = np.asarray(group_a, dtype=np.float64).ravel()
    b = np.asarray(group_b, dtype=np.float64).ravel()
    if a.size < 2 or b.size < 2:
        raise ValueError("each group needs at least 2 observations")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    se2 = va + vb
    if not se2 > 0:
        raise ValueError("degenerate variance: both groups are constant")
    se = math.sqrt(se2)
    diff = a.mean() - b.mean()
    df = se2 ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    t = diff / se
    p = float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))
    half = stats.t.ppf(0.975, df) * se
    return WelchResult(float(t), float(df), p, (float(diff - half), float(diff + half)), float(diff))


def raw_t_tests(sample: NullSample) -> dict[str, WelchResult]:
    """Welch tests on raw scores, X rows vs Y rows, separately for A and for B."""
    n = sample.n_per_group
    return {
        "A": welch_t_test(sample.to_a[:n], sample.to_a[n:]),
        "B": welch_t_test(sample.to_b[:n], sample.to_b[n:]),
    }
