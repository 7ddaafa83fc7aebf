"""WEAT, MAC and band-fraction diagnostics.

The array-level functions (``weat_s_values``, ``effect_size_from_s``,
``permutation_p_value``) take precomputed similarities so they can be driven
by synthetic data as well as by an :class:`~embias.embedding_io.Embedding`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .embedding_io import Embedding
from .geometry import cosine_matrix

MAX_EXACT_PARTITIONS = 2_000_000
MIN_SAMPLED = 100


class MissingTokenError(KeyError):
    def __init__(self, tokens):
        self.tokens = list(tokens)
        super().__init__(f"tokens not in embedding: {', '.join(map(repr, self.tokens))}")


class UndefinedEffectError(ValueError):
    pass


def resolve(tokens: Sequence[str], emb: Embedding, skip_missing: bool = False,
            what: str = "token set") -> tuple[list[str], list[str]]:
    """Split ``tokens`` into (present, missing); raise unless ``skip_missing``."""
    present = [t for t in tokens if t in emb]
    missing = [t for t in tokens if t not in emb]
    if missing and not skip_missing:
        raise MissingTokenError(missing)
    if not present:
        raise ValueError(f"{what} is empty after dropping missing tokens {missing}")
    return present, missing


# -- WEAT ------------------------------------------------------------------

@dataclass
class WeatInput:
    X: list[str]
    Y: list[str]
    A: list[str]
    B: list[str]
    embedding: Embedding
    skip_missing: bool = False
    skipped: list[str] = field(default_factory=list)

    def __post_init__(self):
        emb = self.embedding
        for name in "XYAB":
            present, missing = resolve(list(getattr(self, name)), emb, self.skip_missing, name)
            setattr(self, name, present)
            self.skipped.extend(missing)
        if len(self.X) != len(self.Y):
            raise ValueError(f"|X| = {len(self.X)} differs from |Y| = {len(self.Y)}")

    def similarities(self) -> tuple[np.ndarray, np.ndarray]:
        """Cosine similarities of X∪Y (rows, X first) to A and to B."""
        T = self.embedding.vectors(self.X + self.Y)
        return (cosine_matrix(T, self.embedding.vectors(self.A)),
                cosine_matrix(T, self.embedding.vectors(self.B)))

    def s_values(self) -> np.ndarray:
        sim_a, sim_b = self.similarities()
        return weat_s_values(sim_a, sim_b)


@dataclass
class WeatReport:
    s_per_word: dict[str, float]
    s_statistic: float
    effect_size: float
    p_value: float
    p_mode: str
    n_partitions_evaluated: int
    conservative: bool = False
    skipped: list[str] = field(default_factory=list)


def weat_s_values(sim_a, sim_b) -> np.ndarray:
    """Per-word association differences: row means of ``sim_a`` minus row means of ``sim_b``."""
    sim_a = np.atleast_2d(np.asarray(sim_a, dtype=np.float64))
    sim_b = np.atleast_2d(np.asarray(sim_b, dtype=np.float64))
    if sim_a.shape[1] == 0 or sim_b.shape[1] == 0:
        raise ValueError("attribute sets must be nonempty")
    return sim_a.mean(axis=1) - sim_b.mean(axis=1)


def weat_s_word(t: str, A: Sequence[str], B: Sequence[str], emb: Embedding) -> float:
    missing = [w for w in [t, *A, *B] if w not in emb]
    if missing:
        raise MissingTokenError(missing)
    v = emb.vectors([t])
    return float(weat_s_values(cosine_matrix(v, emb.vectors(A)),
                               cosine_matrix(v, emb.vectors(B)))[0])


def s_statistic(s_values, n_x: int) -> float:
    s = np.asarray(s_values, dtype=np.float64)
    return float(s[:n_x].sum() - s[n_x:].sum())


def effect_size_from_s(s_values, n_x: int) -> float:
    """Standardised mean difference; the denominator is the population sd over X∪Y."""
    s = np.asarray(s_values, dtype=np.float64)
    sd = s.std()
    if not sd > 1e-15 * max(1.0, np.abs(s).max()):
        raise UndefinedEffectError("all s-values are equal; effect size is undefined")
    return float((s[:n_x].mean() - s[n_x:].mean()) / sd)


def weat_effect_size(inp: WeatInput) -> float:
    return effect_size_from_s(inp.s_values(), len(inp.X))


def partition_index(n_total: int, n_x: int) -> np.ndarray:
    """All ``C(n_total, n_x)`` index sets for X_i, lexicographic, as an int array."""
    count = math.comb(n_total, n_x)
    if count > MAX_EXACT_PARTITIONS:
        raise OverflowError(
            f"C({n_total}, {n_x}) = {count} partitions exceeds the exact-mode limit "
            f"{MAX_EXACT_PARTITIONS}; use sampled mode")
    flat = np.fromiter((i for c in combinations(range(n_total), n_x) for i in c),
                       dtype=np.int32, count=count * n_x)
    return flat.reshape(count, n_x)


def partition_s_statistics(s_values, n_x: int, index: np.ndarray) -> np.ndarray:
    s = np.asarray(s_values, dtype=np.float64)
    return 2.0 * s[index].sum(axis=1) - s.sum()


def permutation_p_value(s_values, n_x: int, mode: str = "exact", n_samples: int = 10_000,
                        seed: int = 0, conservative: bool = False,
                        index: np.ndarray | None = None) -> tuple[float, int]:
    """Fraction of equal-size relabelings whose s statistic exceeds the observed one.

    Default is strict ``>`` over all evaluated relabelings (the observed one
    included in exact mode), which can return 0. ``conservative=True`` counts
    ``>=`` and always includes the observed labeling, so p >= 1/n_evaluated.
    """
    s = np.asarray(s_values, dtype=np.float64)
    n_total = s.size
    observed = s_statistic(s, n_x)
    if mode == "exact":
        if index is None:
            index = partition_index(n_total, n_x)
        stats = partition_s_statistics(s, n_x, index)
    elif mode == "sampled":
        if n_samples < MIN_SAMPLED:
            raise ValueError(f"sampled mode needs n_samples >= {MIN_SAMPLED}")
        rng = np.random.default_rng(seed)
        keys = rng.random((n_samples, n_total))
        idx = np.argsort(keys, axis=1)[:, :n_x]
        stats = partition_s_statistics(s, n_x, idx)
        if conservative:
            stats = np.append(stats, observed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    # relabelings that equal the observed value only through rounding count as ties
    tol = 1e-12 * max(1.0, abs(observed))
    if conservative:
        hits = np.count_nonzero(stats >= observed - tol)
    else:
        hits = np.count_nonzero(stats > observed + tol)
    return hits / stats.size, int(stats.size)


def weat_p_value(inp: WeatInput, mode: str = "exact", n_samples: int = 10_000, seed: int = 0,
                 conservative: bool = False) -> tuple[float, int]:
    return permutation_p_value(inp.s_values(), len(inp.X), mode, n_samples, seed, conservative)


def choose_p_mode(n_x: int, n_y: int) -> str:
    return "exact" if math.comb(n_x + n_y, n_x) <= MAX_EXACT_PARTITIONS else "sampled"


def weat(inp: WeatInput, mode: str | None = None, n_samples: int = 10_000, seed: int = 0,
         conservative: bool = False) -> WeatReport:
    s = inp.s_values()
    n_x = len(inp.X)
    mode = mode or choose_p_mode(n_x, len(inp.Y))
    p, n_eval = permutation_p_value(s, n_x, mode, n_samples, seed, conservative)
    return WeatReport(
        s_per_word=dict(zip(inp.X + inp.Y, map(float, s))),
        s_statistic=s_statistic(s, n_x),
        effect_size=effect_size_from_s(s, n_x),
        p_value=p,
        p_mode=mode,
        n_partitions_evaluated=n_eval,
        conservative=conservative,
        skipped=list(inp.skipped),
    )


# -- MAC -------------------------------------------------------------------

@dataclass
class MacReport:
    s_per_pair: dict[tuple[str, str], float]
    mac: float
    band: float = float("nan")
    band_fractions: dict[str, float] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)


def mac_s(t: str, Aj: Sequence[str], emb: Embedding) -> float:
    """Mean cosine distance from ``t`` to the members of ``Aj``."""
    if len(Aj) == 0:
        raise ValueError("attribute set is empty")
    missing = [w for w in [t, *Aj] if w not in emb]
    if missing:
        raise MissingTokenError(missing)
    return float(np.mean(1.0 - cosine_matrix(emb.vectors([t]), emb.vectors(Aj))))


def mac_from_distances(blocks: Mapping[str, np.ndarray], protected: Sequence[str]) -> MacReport:
    """MAC from per-set distance blocks of shape (len(protected), |A_j|)."""
    if not protected:
        raise ValueError("protected word list is empty")
    pairs = {}
    for set_id, block in blocks.items():
        block = np.asarray(block, dtype=np.float64)
        if block.shape[1] == 0:
            raise ValueError(f"attribute set {set_id!r} is empty")
        for t, val in zip(protected, block.mean(axis=1)):
            pairs[(t, set_id)] = float(val)
    return MacReport(pairs, float(np.mean(list(pairs.values()))))


def mac(T: Sequence[str], A_sets, emb: Embedding, skip_missing: bool = False) -> MacReport:
    """Mean over (protected word, attribute set) of the mean cosine distance.

    ``A_sets`` is a mapping set-id -> tokens, or a plain sequence of token
    lists (ids become "A1", "A2", ...).
    """
    if not isinstance(A_sets, Mapping):
        A_sets = {f"A{j + 1}": list(a) for j, a in enumerate(A_sets)}
    if len(T) == 0:
        raise ValueError("protected word list is empty")
    T, skipped = resolve(list(T), emb, skip_missing, "protected words")
    TV = emb.vectors(T)
    blocks = {}
    for set_id, tokens in A_sets.items():
        if len(tokens) == 0:
            raise ValueError(f"attribute set {set_id!r} is empty")
        present, miss = resolve(list(tokens), emb, skip_missing, f"attribute set {set_id!r}")
        skipped += miss
        blocks[set_id] = 1.0 - cosine_matrix(TV, emb.vectors(present))
    report = mac_from_distances(blocks, T)
    report.skipped = skipped
    return report


def band_fraction(similarities, band: float) -> float:
    """Fraction of similarities within ``[-band, band]``."""
    v = np.asarray(similarities, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("similarity list is empty")
    if not band > 0:
        raise ValueError("band must be positive")
    return float(np.count_nonzero(np.abs(v) <= band) / v.size)
