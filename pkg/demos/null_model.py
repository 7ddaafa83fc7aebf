"""How large do WEAT effect sizes get when there is no bias at all?

Every distance is drawn from Normal(0, 0.08), independently of group. We draw
10000 such samples (8 + 8 protected words, 8 attributes per set) and look at
the spread of the effect size, then contrast the pre-averaged statistic with
plain t-tests on the raw distances.

Run: python demos/null_model.py
"""
import numpy as np

from embias.nullsim import (NullConfig, bootstrap_partitions, draw_null_sample, raw_t_tests,
                            run_null_study, tail_fraction)

cfg = NullConfig()
study = run_null_study(cfg)
eff = study.effect_sizes

print(f"{cfg.n_sims} null samples")
print(f"effect size: mean {eff.mean():+.3f}, sd {eff.std():.3f}, "
      f"5-95% [{np.quantile(eff, 0.05):+.3f}, {np.quantile(eff, 0.95):+.3f}]")
for t in (0.5, 1.0, 1.27):
    print(f"  fraction with |effect| >= {t}: {tail_fraction(eff, t):.3f}")

# one sample in detail: the split distribution of s used for the permutation p-value
sample = draw_null_sample(cfg, 0)
s_dist, eff_dist = bootstrap_partitions(sample)
print(f"\nsample 0: {s_dist.size} splits; s sd {s_dist.std():.4f}, "
      f"raw distance sd {sample.scores.std():.4f}")

# raw-data t-tests on the same sample, one per attribute set
for side, r in raw_t_tests(sample).items():
    print(f"  t-test, distances to {side}: t = {r.t:+.2f}, p = {r.p:.3f}, "
          f"95% CI [{r.ci95[0]:+.4f}, {r.ci95[1]:+.4f}]")

# p-values under the null: roughly uniform, so about 5% fall below 0.05
small = run_null_study(NullConfig(n_sims=1000, seed=1), with_p_values=True)
print(f"\nfraction of 1000 null permutation p-values below 0.05: {np.mean(small.p_values < 0.05):.3f}")
