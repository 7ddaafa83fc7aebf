"""Measuring bias in static word embeddings: WEAT/MAC, null-model checks and a hierarchical Bayesian model."""
from .datasets import (BiasDataset, Category, LongTable, build_long_table, builtin_dataset,
                       load_dataset)
from .embedding_io import (Embedding, EmbeddingFormatError, Missing, load_embedding,
                           load_glove_text, load_word2vec_binary, lookup, write_word2vec_binary)
from .geometry import (Direction, cosine_distance, cosine_similarity, direct_bias,
                       principal_direction)
from .metrics import (MacReport, WeatInput, WeatReport, band_fraction, mac, mac_s, weat,
                      weat_effect_size, weat_p_value, weat_s_word)

__version__ = "0.1.0"
