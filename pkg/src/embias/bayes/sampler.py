"""Metropolis-within-Gibbs sampler for the hierarchical distance model.

Location parameters (per-word coefficients and group means) are drawn from
their normal full conditionals. Spreads and observation noise get adaptive
random-walk Metropolis updates on the log scale; step sizes are tuned toward
an acceptance rate of 0.44 during warmup and frozen afterwards.

Two group moves per category help the centred hierarchy. One translates the
group mean and all its coefficients together, drawn exactly from the normal
conditional of the shift. The other rescales the spread together with the word
deviations from the group mean. Without them the chain mixes badly when the
between-word spread is small relative to the noise.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..datasets import LongTable
from .model import CellStats, ModelSpec, bar_conditional, coef_conditional
from .posterior import Posterior

TARGET_ACCEPT = 0.44
INIT_JITTER = 0.05
SPREAD_ROUNDS = 3


@dataclass(frozen=True)
class McmcConfig:
    chains: int = 4
    warmup: int = 1000
    draws: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.chains < 2:
            raise ValueError("at least 2 chains are required")
        if self.draws < 1 or self.warmup < 0:
            raise ValueError("draws must be >= 1 and warmup >= 0")


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chain,)))


class _LogScaleRW:
    """Vectorised adaptive random walk on log(x) for independent positive scalars."""

    def __init__(self, shape, step: float):
        self.log_step = np.full(shape, math.log(step))
        self.accepted = np.zeros(shape)
        self.tries = 0
        self.last_accept = np.zeros(shape, dtype=bool)

    def update(self, rng, x, logp, adapt_iter: int | None):
        # logp evaluates the conditional log density (up to a constant) elementwise
        prop = x * np.exp(np.exp(self.log_step) * rng.standard_normal(x.shape))
        # + log x is the Jacobian of the log transform
        log_ratio = (logp(prop) + np.log(prop)) - (logp(x) + np.log(x))
        accept_prob = np.exp(np.minimum(0.0, log_ratio))
        accept = rng.random(x.shape) < accept_prob
        self.last_accept = accept
        if adapt_iter is None:
            self.accepted += accept
            self.tries += 1
        else:
            self.log_step += (accept_prob - TARGET_ACCEPT) / (adapt_iter + 1) ** 0.6
        return np.where(accept, prop, x)


def draw_coef(cs: CellStats, sigma: np.ndarray, bar: np.ndarray, sd: np.ndarray,
              rng: np.random.Generator) -> np.ndarray:
    """Gibbs step: every coef[w, c] from its normal full conditional (sigma per category)."""
    mean, sdev = coef_conditional(cs.n, cs.sum_y, sigma[None, :], bar[None, :], sd[None, :])
    return mean + sdev * rng.standard_normal(mean.shape)


def draw_bar(coef: np.ndarray, sd: np.ndarray, spec: ModelSpec,
             rng: np.random.Generator) -> np.ndarray:
    """Gibbs step: every group mean bar[c] given the per-word coefficients."""
    mean, sdev = bar_conditional(coef.sum(axis=0), coef.shape[0], sd, spec.hyper_mean, spec.hyper_sd)
    return mean + sdev * rng.standard_normal(coef.shape[1])


def draw_shift(cs: CellStats, sigma: np.ndarray, coef: np.ndarray, bar: np.ndarray,
               spec: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    """Common shift for bar[c] and coef[:, c]; normal because only the hyperprior and
    likelihood depend on it (translation has unit Jacobian)."""
    resid = cs.sum_y.sum(axis=0) - (cs.n * coef).sum(axis=0)
    prec = 1.0 / spec.hyper_sd ** 2 + cs.n.sum(axis=0) / sigma ** 2
    mean = ((spec.hyper_mean - bar) / spec.hyper_sd ** 2 + resid / sigma ** 2) / prec
    return mean + rng.standard_normal(bar.shape) / np.sqrt(prec)


def initial_state(cs: CellStats, rng: np.random.Generator, shared_sigma: bool):
    n = cs.n
    with np.errstate(invalid="ignore", divide="ignore"):
        cell_mean = cs.sum_y / n
    cat_mean = cs.sum_y.sum(axis=0) / np.maximum(n.sum(axis=0), 1)
    cell_mean = np.where(n > 0, cell_mean, cat_mean[None, :])
    coef = cell_mean + rng.uniform(-INIT_JITTER, INIT_JITTER, size=cell_mean.shape)
    bar = coef.mean(axis=0)
    sd = np.maximum(cell_mean.std(axis=0), 0.02)
    ss = cs.residual_ss(cell_mean)
    n_cat = n.sum(axis=0)
    if shared_sigma:
        sigma = np.array([math.sqrt(ss.sum() / max(n_cat.sum(), 1))])
    else:
        sigma = np.sqrt(ss / np.maximum(n_cat, 1))
    sigma = np.maximum(sigma, 0.01)
    return coef, bar, sd, sigma


def run_chain(cs: CellStats, spec: ModelSpec, warmup: int, draws: int,
              rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One chain; returns (draws × params array, spread acceptance, noise acceptance)."""
    n_words, n_cat = cs.n.shape
    shared = spec.shared_sigma
    coef, bar, sd, sigma = initial_state(cs, rng, shared)
    n_obs_cat = cs.n.sum(axis=0)
    rate = spec.sd_rate

    sd_rw = _LogScaleRW(sd.shape, 0.3)
    scale_rw = _LogScaleRW(sd.shape, 0.3)
    sig_rw = _LogScaleRW(sigma.shape, 0.05)
    n_sig = 1 if shared else n_cat
    out = np.empty((draws, 2 * n_cat + n_sig + n_words * n_cat))

    for it in range(warmup + draws):
        adapt = it if it < warmup else None
        sig_c = np.broadcast_to(sigma, (n_cat,))

        coef = draw_coef(cs, sig_c, bar, sd, rng)
        bar = draw_bar(coef, sd, spec, rng)
        delta = draw_shift(cs, sig_c, coef, bar, spec, rng)
        bar, coef = bar + delta, coef + delta[None, :]

        # scale parameters are cheap to update, so they get a few Metropolis rounds per sweep
        for _ in range(SPREAD_ROUNDS):
            dev2 = ((coef - bar[None, :]) ** 2).sum(axis=0)
            sd = sd_rw.update(rng, sd, lambda s: -n_words * np.log(s) - dev2 / (2 * s * s) - rate * s, adapt)

            # joint move: sd -> s, coef - bar -> (coef - bar) * s / sd. The prior's
            # -K log s cancels the Jacobian of the deviations, leaving these terms.
            def rescaled(s, sd=sd, coef=coef, bar=bar):
                return bar[None, :] + (coef - bar[None, :]) * (s / sd)[None, :]

            sig2 = 2 * np.broadcast_to(sigma, (n_cat,)) ** 2
            sd_new = scale_rw.update(rng, sd, lambda s: -rate * s - cs.residual_ss(rescaled(s)) / sig2, adapt)
            coef = np.where(scale_rw.last_accept[None, :], rescaled(sd_new), coef)
            sd = sd_new

        ss = cs.residual_ss(coef)
        if shared:
            ss, n_obs = np.array([ss.sum()]), np.array([n_obs_cat.sum()])
        else:
            n_obs = n_obs_cat
        for _ in range(SPREAD_ROUNDS):
            sigma = sig_rw.update(rng, sigma, lambda s: -n_obs * np.log(s) - ss / (2 * s * s) - rate * s, adapt)

        if it >= warmup:
            k = it - warmup
            out[k, :n_cat] = bar
            out[k, n_cat:2 * n_cat] = sd
            out[k, 2 * n_cat:2 * n_cat + n_sig] = sigma
            out[k, 2 * n_cat + n_sig:] = coef.ravel()

    return out, sd_rw.accepted / max(sd_rw.tries, 1), sig_rw.accepted / max(sig_rw.tries, 1)


def _workers(chains: int) -> int:
    env = os.environ.get("EMBIAS_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(chains, cap))


def fit(table: LongTable, spec: ModelSpec | None = None,
        mcmc: McmcConfig | None = None) -> Posterior:
    """Sample the posterior of the hierarchical model given a long table.

    Each chain owns a generator derived from (seed, chain index), so results do
    not depend on thread scheduling. Check ``Posterior.flagged()`` or
    ``Posterior.converged`` before trusting the draws.
    """
    spec = spec or ModelSpec()
    mcmc = mcmc or McmcConfig()
    if len(table) == 0:
        raise ValueError("cannot fit an empty table")
    cs = CellStats.from_table(table)
    empty = np.argwhere(cs.n == 0)
    if empty.size:
        w, c = empty[0]
        raise ValueError(f"protected word {cs.words[w]!r} has no rows in category "
                         f"{cs.categories[c].value!r}")

    def one(chain):
        return run_chain(cs, spec, mcmc.warmup, mcmc.draws, chain_rng(mcmc.seed, chain))

    workers = _workers(mcmc.chains)
    if workers == 1:
        results = [one(c) for c in range(mcmc.chains)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, range(mcmc.chains)))

    draws = np.stack([r[0] for r in results])
    sd_acc = np.mean([r[1] for r in results], axis=0)
    sig_acc = np.mean([r[2] for r in results], axis=0)
    post = Posterior(draws, cs.words, cs.categories, spec, mcmc.warmup, mcmc.seed)
    g = post.global_names
    nc = len(cs.categories)
    post.acceptance = {name: float(a) for name, a in
                       zip(g[nc:2 * nc] + g[2 * nc:], list(sd_acc) + list(sig_acc))}
    return post
