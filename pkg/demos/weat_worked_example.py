"""WEAT on a four-word toy embedding, then what the permutation test makes of it.

Run: python demos/weat_worked_example.py
"""
import numpy as np

from embias import metrics
from embias.embedding_io import Embedding

# cosine similarities of each protected word to attributes a1, a2 (set A) and b1, b2 (set B)
sims = {
    "he": (0.6, 0.7, 0.2, 0.1),
    "man": (0.6, 0.4, 0.1, 0.2),
    "woman": (0.1, 0.0, 0.6, 0.7),
    "she": (0.2, 0.1, 0.5, 0.4),
}

# attributes sit on orthonormal axes; a fifth coordinate pads each word to unit norm
rows = [np.eye(5)[i] for i in range(4)]
for s in sims.values():
    s = np.array(s)
    rows.append(np.append(s, np.sqrt(1 - s @ s)))
emb = Embedding(("a1", "a2", "b1", "b2", *sims), np.array(rows))

inp = metrics.WeatInput(X=["he", "man"], Y=["woman", "she"], A=["a1", "a2"], B=["b1", "b2"],
                        embedding=emb)
rep = metrics.weat(inp)

print("s(w, A, B) per word:")
for w, s in rep.s_per_word.items():
    print(f"  {w:6s} {s:+.3f}")
print(f"test statistic s(X, Y, A, B) = {rep.s_statistic:.3f}")
print(f"effect size                  = {rep.effect_size:.3f}")

# With two words per group there are only C(4, 2) = 6 ways to split the words,
# so the smallest attainable p-value is coarse.
print(f"p-value ({rep.p_mode}, {rep.n_partitions_evaluated} splits) = {rep.p_value:.3f}")
cons = metrics.weat(inp, conservative=True)
print(f"conservative p-value (counts ties and the observed split) = {cons.p_value:.3f}")

# The effect size is a ratio of tiny numbers: the same four s-values rounded
# to one decimal already move it in the second decimal place.
print("effect size from rounded s-values:",
      round(metrics.effect_size_from_s([0.5, 0.3, -0.6, -0.3], 2), 4))
