"""Hierarchical normal model of cosine distances.

For protected word ``w`` and association category ``c``::

    distance ~ Normal(coef[w, c], sigma[c])
    coef[w, c] ~ Normal(bar[c], sd[c])
    bar[c] ~ Normal(hyper_mean, hyper_sd)
    sd[c], sigma[c] ~ Exponential(sd_rate)

With ``shared_sigma`` a single observation noise is used for every category.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..datasets import CATEGORIES, Category, LongTable

SHORT = {Category.ASSOCIATED: "a", Category.DIFFERENT: "d",
         Category.HUMAN: "h", Category.NEUTRAL: "n"}
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ModelSpec:
    hyper_mean: float = 1.0
    hyper_sd: float = 0.3
    sd_rate: float = 2.0
    shared_sigma: bool = False

    def __post_init__(self):
        if not self.hyper_sd > 0:
            raise ValueError("hyper_sd must be positive")
        if not self.sd_rate > 0:
            raise ValueError("sd_rate must be positive")


def parameter_names(words, categories, shared_sigma: bool = False) -> list[str]:
    """Globals first (bars, spreads, noise), then one block of coefficients per word."""
    cats = [Category(c) for c in categories]
    short = [SHORT[c] for c in cats]
    names = [f"{s}_bar" for s in short] + [f"{s}_sd" for s in short]
    names += ["sigma"] if shared_sigma else [f"sigma_{c.value}" for c in cats]
    for w in words:
        names += [f"{s}[{w}]" for s in short]
    return names


def n_global(n_categories: int, shared_sigma: bool) -> int:
    return 2 * n_categories + (1 if shared_sigma else n_categories)


@dataclass
class ParameterVector:
    words: tuple[str, ...]
    categories: tuple[Category, ...]
    coef: np.ndarray
    bar: np.ndarray
    sd: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.words = tuple(self.words)
        self.categories = tuple(Category(c) for c in self.categories)
        nw, nc = len(self.words), len(self.categories)
        self.coef = np.asarray(self.coef, dtype=np.float64).reshape(nw, nc)
        self.bar = np.asarray(self.bar, dtype=np.float64).reshape(nc)
        self.sd = np.asarray(self.sd, dtype=np.float64).reshape(nc)
        self.sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        if self.sigma.size not in (1, nc):
            raise ValueError(f"sigma must have 1 or {nc} entries, got {self.sigma.size}")

    @property
    def shared_sigma(self) -> bool:
        return self.sigma.size == 1 and len(self.categories) != 1

    @property
    def names(self) -> list[str]:
        return parameter_names(self.words, self.categories, self.shared_sigma)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.bar, self.sd, self.sigma, self.coef.ravel()])

    @classmethod
    def from_flat(cls, flat, words, categories, shared_sigma: bool = False) -> "ParameterVector":
        flat = np.asarray(flat, dtype=np.float64)
        nc = len(categories)
        ns = 1 if shared_sigma else nc
        expected = 2 * nc + ns + len(words) * nc
        if flat.size != expected:
            raise ValueError(f"expected {expected} values, got {flat.size}")
        return cls(words, categories, flat[2 * nc + ns:], flat[:nc], flat[nc:2 * nc],
                   flat[2 * nc:2 * nc + ns])


@dataclass
class CellStats:
    """Sufficient statistics of a LongTable per (word, category) cell."""

    words: tuple[str, ...]
    categories: tuple[Category, ...]
    word_idx: np.ndarray
    cat_idx: np.ndarray
    y: np.ndarray
    n: np.ndarray = field(init=False)
    sum_y: np.ndarray = field(init=False)
    sum_y2: np.ndarray = field(init=False)

    def __post_init__(self):
        shape = (len(self.words), len(self.categories))
        self.n = np.zeros(shape)
        self.sum_y = np.zeros(shape)
        self.sum_y2 = np.zeros(shape)
        np.add.at(self.n, (self.word_idx, self.cat_idx), 1.0)
        np.add.at(self.sum_y, (self.word_idx, self.cat_idx), self.y)
        np.add.at(self.sum_y2, (self.word_idx, self.cat_idx), self.y ** 2)

    @classmethod
    def from_table(cls, table: LongTable, words=None, categories=None) -> "CellStats":
        words = tuple(table.words if words is None else words)
        categories = tuple(table.categories if categories is None else categories)
        wpos = {w: i for i, w in enumerate(words)}
        cpos = {c: i for i, c in enumerate(categories)}
        bad_w = sorted(set(table.protected) - wpos.keys())
        bad_c = sorted({c.value for c in table.category if c not in cpos})
        if bad_w or bad_c:
            raise ValueError(f"dimension mismatch: table has words {bad_w} / categories {bad_c} "
                             f"without parameters")
        wi = np.array([wpos[w] for w in table.protected], dtype=np.intp)
        ci = np.array([cpos[c] for c in table.category], dtype=np.intp)
        return cls(words, categories, wi, ci, np.asarray(table.distance, dtype=np.float64))

    def residual_ss(self, coef: np.ndarray) -> np.ndarray:
        """Sum of squared residuals per category for cell means ``coef``."""
        return (self.sum_y2 - 2.0 * coef * self.sum_y + self.n * coef ** 2).sum(axis=0)


def _norm_logpdf(x, mean, sd):
    z = (x - mean) / sd
    return -0.5 * z * z - np.log(sd) - 0.5 * LOG_2PI


def _expon_logpdf(x, rate):
    return math.log(rate) - rate * x


def log_prior(theta: ParameterVector, spec: ModelSpec) -> float:
    if (theta.sd <= 0).any() or (theta.sigma <= 0).any():
        return -math.inf
    lp = _norm_logpdf(theta.coef, theta.bar[None, :], theta.sd[None, :]).sum()
    lp += _norm_logpdf(theta.bar, spec.hyper_mean, spec.hyper_sd).sum()
    lp += _expon_logpdf(theta.sd, spec.sd_rate).sum()
    lp += _expon_logpdf(theta.sigma, spec.sd_rate).sum()
    return float(lp)


def log_likelihood(theta: ParameterVector, table: LongTable) -> float:
    if (theta.sigma <= 0).any():
        return -math.inf
    if len(table) == 0:
        return 0.0
    cs = CellStats.from_table(table, theta.words, theta.categories)
    sig = theta.sigma[cs.cat_idx] if theta.sigma.size > 1 else theta.sigma[0]
    return float(_norm_logpdf(cs.y, theta.coef[cs.word_idx, cs.cat_idx], sig).sum())


def log_posterior(theta: ParameterVector, table: LongTable, spec: ModelSpec) -> float:
    """Unnormalised log posterior density; -inf outside the support."""
    # validate dimensions before the support check so mismatches always raise
    if len(table):
        CellStats.from_table(table, theta.words, theta.categories)
    lp = log_prior(theta, spec)
    if lp == -math.inf:
        return lp
    return lp + log_likelihood(theta, table)


# -- closed-form full conditionals of the location parameters ---------------

def coef_conditional(n, sum_y, sigma, bar, sd) -> tuple[np.ndarray, np.ndarray]:
    """Mean and sd of coef[w, c] given its cell data, noise sigma and the group prior."""
    prec = n / sigma ** 2 + 1.0 / sd ** 2
    mean = (sum_y / sigma ** 2 + bar / sd ** 2) / prec
    return mean, 1.0 / np.sqrt(prec)


def bar_conditional(coef_sum, n_words, sd, hyper_mean, hyper_sd) -> tuple[np.ndarray, np.ndarray]:
    """Mean and sd of bar[c] given the per-word coefficients."""
    prec = n_words / sd ** 2 + 1.0 / hyper_sd ** 2
    mean = (coef_sum / sd ** 2 + hyper_mean / hyper_sd ** 2) / prec
    return mean, 1.0 / np.sqrt(prec)
