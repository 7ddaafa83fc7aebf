"""Posterior draws with diagnostics, summaries and CSV/JSON persistence."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..datasets import Category
from . import diagnostics as diag
from .hpdi import DEFAULT_MASS, hpdi
from .model import ModelSpec, ParameterVector, n_global, parameter_names


@dataclass
class Posterior:
    """MCMC draws of shape (chains, draws, parameters)."""

    draws: np.ndarray
    words: tuple[str, ...]
    categories: tuple[Category, ...]
    spec: ModelSpec = field(default_factory=ModelSpec)
    warmup: int = 0
    seed: int = 0
    acceptance: dict[str, float] = field(default_factory=dict)
    names: list[str] = field(init=False)
    rhat: np.ndarray = field(init=False, repr=False)
    ess: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.words = tuple(self.words)
        self.categories = tuple(Category(c) for c in self.categories)
        self.draws = np.asarray(self.draws, dtype=np.float64)
        self.names = parameter_names(self.words, self.categories, self.spec.shared_sigma)
        if self.draws.ndim != 3 or self.draws.shape[2] != len(self.names):
            raise ValueError(f"draws must be (chains, draws, {len(self.names)}), got {self.draws.shape}")
        if self.draws.shape[0] < 2 or self.draws.shape[1] < 1:
            raise ValueError("need at least 2 chains and 1 draw")
        self.rhat = np.array([diag.split_rhat(self.draws[:, :, j]) for j in range(self.n_params)])
        self.ess = np.array([diag.ess_bulk(self.draws[:, :, j]) for j in range(self.n_params)])

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_draws(self) -> int:
        return self.draws.shape[1]

    @property
    def n_params(self) -> int:
        return len(self.names)

    @property
    def n_global(self) -> int:
        return n_global(len(self.categories), self.spec.shared_sigma)

    @property
    def global_names(self) -> list[str]:
        return self.names[:self.n_global]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def samples(self, name: str) -> np.ndarray:
        """All draws of one parameter, chains concatenated."""
        return self.draws[:, :, self.index(name)].ravel()

    def flat_draws(self) -> np.ndarray:
        return self.draws.reshape(-1, self.n_params)

    def parameter_vector(self, k: int) -> ParameterVector:
        return ParameterVector.from_flat(self.flat_draws()[k], self.words, self.categories,
                                         self.spec.shared_sigma)

    def flagged(self) -> list[str]:
        """Parameters with R-hat above 1.05 or ESS below 100 (NaN diagnostics are not flagged)."""
        out = []
        for name, r, e in zip(self.names, self.rhat, self.ess):
            if (np.isfinite(r) and r > diag.RHAT_MAX) or (np.isfinite(e) and e < diag.ESS_MIN):
                out.append(name)
        return out

    @property
    def converged(self) -> bool:
        g = self.n_global
        ess_g = self.ess[:g]
        return not self.flagged() and not (np.isfinite(ess_g) & (ess_g <= diag.ESS_GLOBAL_MIN)).any()

    # -- persistence ------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["chain", "draw"] + self.names)
        for c in range(self.n_chains):
            for d in range(self.n_draws):
                w.writerow([c, d] + [f"{v:.9g}" for v in self.draws[c, d]])
        return buf.getvalue()

    def diagnostics_json(self) -> dict:
        return {
            "words": list(self.words),
            "categories": [c.value for c in self.categories],
            "spec": {"hyper_mean": self.spec.hyper_mean, "hyper_sd": self.spec.hyper_sd,
                     "sd_rate": self.spec.sd_rate, "shared_sigma": self.spec.shared_sigma},
            "chains": self.n_chains,
            "draws": self.n_draws,
            "warmup": self.warmup,
            "seed": self.seed,
            "converged": self.converged,
            "flagged": self.flagged(),
            "acceptance": self.acceptance,
            "parameters": {n: {"rhat": _num(r), "ess": _num(e)}
                           for n, r, e in zip(self.names, self.rhat, self.ess)},
        }

    @classmethod
    def from_files(cls, draws_csv: str, diagnostics: dict) -> "Posterior":
        rows = list(csv.reader(io.StringIO(draws_csv)))
        header, body = rows[0], rows[1:]
        chains = int(diagnostics["chains"])
        n = int(diagnostics["draws"])
        values = np.array([[float(v) for v in r[2:]] for r in body]).reshape(chains, n, len(header) - 2)
        s = diagnostics["spec"]
        post = cls(values, tuple(diagnostics["words"]), tuple(diagnostics["categories"]),
                   ModelSpec(s["hyper_mean"], s["hyper_sd"], s["sd_rate"], s["shared_sigma"]),
                   diagnostics.get("warmup", 0), diagnostics.get("seed", 0),
                   diagnostics.get("acceptance", {}))
        if post.names != header[2:]:
            raise ValueError("CSV columns do not match the diagnostics sidecar")
        return post


def _num(x):
    return None if not np.isfinite(x) else float(x)


def summarize(post: Posterior, mass: float = DEFAULT_MASS) -> dict[str, dict]:
    """Per-parameter mean, HPDI, R-hat and ESS; globals first, then per-word blocks."""
    out = {}
    for j, name in enumerate(post.names):
        x = post.draws[:, :, j].ravel()
        h = hpdi(x, mass)
        out[name] = {"mean": math.fsum(x) / x.size, "hpdi": (h.lower, h.upper),
                     "rhat": float(post.rhat[j]), "ess": float(post.ess[j])}
    return out
