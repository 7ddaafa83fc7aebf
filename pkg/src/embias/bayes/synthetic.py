"""Synthetic long tables drawn from a known parameter vector."""
from __future__ import annotations

import numpy as np

from ..datasets import CATEGORIES, Category, LongTable
from .model import ParameterVector


def draw_truth(n_words: int, rng: np.random.Generator,
               bar=(0.80, 0.86, 0.90, 0.98), sd=(0.08, 0.06, 0.05, 0.04),
               sigma=(0.12, 0.11, 0.09, 0.08), categories=CATEGORIES) -> ParameterVector:
    """A ground-truth parameter vector with coefficients drawn from their group distributions."""
    bar, sd = np.asarray(bar, float), np.asarray(sd, float)
    coef = bar[None, :] + sd[None, :] * rng.standard_normal((n_words, len(categories)))
    words = tuple(f"w{i:02d}" for i in range(n_words))
    return ParameterVector(words, categories, coef, bar, sd, np.asarray(sigma, float))


def simulate_table(theta: ParameterVector, rows_per_cell: int,
                   rng: np.random.Generator) -> LongTable:
    """``rows_per_cell`` distances for every (word, category) cell of ``theta``."""
    prot, attr, cat, dist = [], [], [], []
    for i, w in enumerate(theta.words):
        for j, c in enumerate(theta.categories):
            s = theta.sigma[0] if theta.sigma.size == 1 else theta.sigma[j]
            y = theta.coef[i, j] + s * rng.standard_normal(rows_per_cell)
            prot += [w] * rows_per_cell
            attr += [f"{Category(c).value[0]}{k:03d}" for k in range(rows_per_cell)]
            cat += [Category(c)] * rows_per_cell
            dist.append(y)
    return LongTable(tuple(prot), tuple(attr), tuple(cat), np.concatenate(dist))
