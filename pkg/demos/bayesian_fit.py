"""Hierarchical model on a synthetic table with a known truth.

Draw a parameter vector, simulate distances, fit, and check that the 89%
HPDIs cover the truth and that the posterior predictive check is calibrated.

Run: python demos/bayesian_fit.py
"""
import numpy as np

from embias.bayes import McmcConfig, fit, posterior_predictive_check, summarize
from embias.bayes.synthetic import draw_truth, simulate_table

rng = np.random.default_rng(11)
truth = draw_truth(10, rng)
table = simulate_table(truth, 20, rng)
print(f"{len(table)} rows, {len(truth.words)} protected words")

post = fit(table, mcmc=McmcConfig(chains=4, warmup=1000, draws=2000, seed=0))
print(f"converged: {post.converged}; flagged: {post.flagged() or 'none'}")

summ = summarize(post)
print(f"\n{'parameter':18s} {'truth':>7s} {'mean':>7s}   89% HPDI")
for name, true in zip(post.names, truth.flat()):
    if name not in post.global_names:
        continue
    s = summ[name]
    lo, hi = s["hpdi"]
    mark = "" if lo <= true <= hi else "  <- outside"
    print(f"{name:18s} {true:7.3f} {s['mean']:7.3f}   [{lo:.3f}, {hi:.3f}]{mark}")

inside = [summ[n]["hpdi"][0] <= t <= summ[n]["hpdi"][1] for n, t in zip(post.names, truth.flat())]
print(f"\n89% HPDIs covering the truth: {np.mean(inside):.2f} of {len(inside)} parameters")

ppc = posterior_predictive_check(post, table)
print(f"posterior predictive coverage: {ppc.coverage89:.3f} inside 89% HPDI, "
      f"{ppc.coverage50:.3f} inside 50% HPDI")
