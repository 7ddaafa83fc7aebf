import os
import struct

import numpy as np
import pytest

from embias import datasets
from embias.embedding_io import Embedding, write_word2vec_binary

# Worked two-class example: each protected word's cosine similarities to the
# attributes A = (a1, a2) and B = (b1, b2). s(man) is 0.35 (see README).
WORKED_SIMS = {
    "he": (0.6, 0.7, 0.2, 0.1),
    "man": (0.6, 0.4, 0.1, 0.2),
    "woman": (0.1, 0.0, 0.6, 0.7),
    "she": (0.2, 0.1, 0.5, 0.4),
}


def embedding_from_sims(sims: dict, attrs=("a1", "a2", "b1", "b2")) -> Embedding:
    """Attributes on orthonormal axes; each protected vector has the requested cosines."""
    k = len(attrs)
    rows, words = [], []
    for i, a in enumerate(attrs):
        v = np.zeros(k + 1)
        v[i] = 1.0
        rows.append(v)
        words.append(a)
    for w, s in sims.items():
        s = np.asarray(s, dtype=np.float64)
        rows.append(np.append(s, np.sqrt(1.0 - s @ s)))
        words.append(w)
    return Embedding(tuple(words), np.array(rows, dtype=np.float32))


@pytest.fixture
def worked_embedding():
    return embedding_from_sims(WORKED_SIMS)


def w2v_bytes(records, dim, n=None, trailing_newline=True) -> bytes:
    n = len(records) if n is None else n
    out = f"{n} {dim}\n".encode()
    for tok, vec in records:
        out += tok.encode() + b" " + struct.pack(f"<{len(vec)}f", *vec)
        if trailing_newline:
            out += b"\n"
    return out


def builtin_vocabulary() -> list[str]:
    toks = []
    for name in datasets.BUILTIN:
        ds = datasets.builtin_dataset(name)
        toks += [t for t, _ in ds.protected]
        toks += [a for s in ds.attribute_sets for a in s.tokens]
        toks += list(ds.neutral) + list(ds.human)
    return list(dict.fromkeys(toks))


def random_embedding(seed=1, dim=25, drop=()) -> Embedding:
    toks = [t for t in builtin_vocabulary() if t not in set(drop)]
    rng = np.random.default_rng(seed)
    return Embedding(tuple(toks), rng.normal(size=(len(toks), dim)).astype(np.float32))


@pytest.fixture(scope="session")
def emb_files(tmp_path_factory):
    """Two random word2vec files covering every builtin token."""
    d = tmp_path_factory.mktemp("emb")
    a, b = d / "before.bin", d / "after.bin"
    write_word2vec_binary(random_embedding(1), a)
    write_word2vec_binary(random_embedding(2), b)
    return str(a), str(b)


@pytest.fixture(autouse=True)
def _threads(monkeypatch):
    # keep CI deterministic and light unless the caller overrides it
    if "EMBIAS_THREADS" not in os.environ:
        monkeypatch.setenv("EMBIAS_THREADS", "2")


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
