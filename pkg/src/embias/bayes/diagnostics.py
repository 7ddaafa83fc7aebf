"""Rank-normalised split R-hat and bulk effective sample size.

Follows the definitions of Vehtari, Gelman, Simpson, Carpenter and Bürkner
(2021). Inputs are ``(chains, draws)`` arrays.
"""
from __future__ import annotations

import numpy as np
from scipy import stats

RHAT_MAX = 1.05
ESS_MIN = 100
ESS_GLOBAL_MIN = 400


def _split(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a (chains, draws) array")
    half = x.shape[1] // 2
    if half < 1:
        return x
    return np.concatenate([x[:, :half], x[:, x.shape[1] - half:]], axis=0)


def _rank_normalize(x: np.ndarray) -> np.ndarray:
    r = stats.rankdata(x, method="average").reshape(x.shape)
    return stats.norm.ppf((r - 0.375) / (x.size + 0.25))


def _rhat(x: np.ndarray) -> float:
    m, n = x.shape
    if m < 2 or n < 2:
        return float("nan")
    w = x.var(axis=1, ddof=1).mean()
    b = n * x.mean(axis=1).var(ddof=1)
    if w == 0:
        return float("nan")
    var_plus = (n - 1) / n * w + b / n
    return float(np.sqrt(var_plus / w))


def split_rhat(x) -> float:
    """max of bulk and folded rank-normalised split R-hat."""
    s = _split(x)
    if np.ptp(s) == 0:
        return float("nan")
    bulk = _rhat(_rank_normalize(s))
    folded = np.abs(s - np.median(s))
    tail = _rhat(_rank_normalize(folded)) if np.ptp(folded) > 0 else bulk
    return max(bulk, tail)


def _autocov(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance along axis 1 via FFT."""
    n = x.shape[1]
    xc = x - x.mean(axis=1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, n=size, axis=1)
    return np.fft.irfft(f * np.conj(f), n=size, axis=1)[:, :n] / n


def _ess(x: np.ndarray) -> float:
    m, n = x.shape
    if n < 4:
        return float("nan")
    acov = _autocov(x)
    mean_var = acov[:, 0].mean() * n / (n - 1)
    var_plus = mean_var * (n - 1) / n
    if m > 1:
        var_plus += x.mean(axis=1).var(ddof=1)
    if var_plus == 0:
        return float("nan")
    rho = 1.0 - (mean_var - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0

    # Geyer's initial positive sequence over pairs (rho[2k], rho[2k+1])
    t = 0
    kept = []
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        kept.append(pair)
        t += 2
    # initial monotone sequence
    pairs = np.minimum.accumulate(np.asarray(kept)) if kept else np.zeros(1)
    tau = -1.0 + 2.0 * pairs.sum()
    total = m * n
    tau = max(tau, 1.0 / np.log10(total))
    return float(total / tau)


def ess_bulk(x) -> float:
    s = _split(x)
    if np.ptp(s) == 0:
        return float("nan")
    return _ess(_rank_normalize(s))


def ess_basic(x) -> float:
    """ESS of the raw (not rank-normalised) split chains."""
    s = _split(x)
    if np.ptp(s) == 0:
        return float("nan")
    return _ess(s)
