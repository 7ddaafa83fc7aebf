"""Before/after comparison of a toy "hard debiasing" step.

We plant a gender direction in a random embedding, remove the learned
direction from every non-gendered word, and compare MAC, direct bias and the
hierarchical posterior before and after.

Run: python demos/debiasing_comparison.py
"""
import numpy as np

from embias import datasets, metrics
from embias.bayes import McmcConfig, compare, fit
from embias.embedding_io import Embedding
from embias.geometry import direct_bias, principal_direction

ds = datasets.builtin_dataset("gender")
vocab = list(dict.fromkeys(
    [t for t, _ in ds.protected] + [a for s in ds.attribute_sets for a in s.tokens]
    + list(ds.neutral) + list(ds.human)))
dim = 50
rng = np.random.default_rng(5)
M = rng.normal(size=(len(vocab), dim))
g = rng.normal(size=dim)
g /= np.linalg.norm(g)

# plant the bias: gendered words and their stereotyped attributes lean along g
pairs = datasets.gender_pairs(ds)
male_class = ds.classes[0]
row = {w: i for i, w in enumerate(vocab)}
for t, cls in ds.protected:
    M[row[t]] += (3.0 if cls == male_class else -3.0) * g
for s in ds.attribute_sets:
    for a in s.tokens:
        M[row[a]] += (1.5 if s.class_id == male_class else -1.5) * g
before = Embedding(tuple(vocab), M)

direction = principal_direction(list(zip(before.vectors(a for a, _ in pairs),
                                              before.vectors(b for _, b in pairs))))
print(f"learned direction vs planted: |cos| = {abs(direction.unit @ g):.3f}")

# hard debiasing: project the direction out of everything that is not a gendered word
protected = {t for t, _ in ds.protected}
u = direction.unit
M2 = M.copy()
for w, i in row.items():
    if w not in protected:
        M2[i] -= (M2[i] @ u) * u
after = Embedding(tuple(vocab), M2)

T = [t for t, _ in ds.protected]
for label, emb in (("before", before), ("after", after)):
    m = metrics.mac(T, datasets.stereotype_sets(ds), emb).mac
    db = direct_bias(emb.vectors(ds.neutral), direction)
    print(f"{label:6s}: MAC {m:.3f}, direct bias {db:.3f}")

mcmc = McmcConfig(chains=4, warmup=500, draws=1000, seed=1)
post_b = fit(datasets.build_long_table(ds, before), mcmc=mcmc)
post_a = fit(datasets.build_long_table(ds, after), mcmc=mcmc)
rep = compare(post_b, post_a)

print("\ngroup means, before -> after (89% HPDI overlap)")
for name in rep.global_names[:4]:
    p = rep.parameters[name]
    print(f"  {name}: {p.mean_before:.3f} -> {p.mean_after:.3f} "
          f"(shift {p.shift:+.3f}, overlap {p.overlap})")
print(f"associated/different gap change: {rep.gap['change']:+.3f}")
print(f"parameters whose intervals no longer overlap: {len(rep.changed())}")
