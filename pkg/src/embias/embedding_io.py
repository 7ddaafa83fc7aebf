"""Reading and writing static word embeddings.

Two on-disk formats are supported: the word2vec binary layout
(``"<n_words> <dim>\\n"`` header followed by ``token<space><dim float32 LE>``
records) and GloVe-style whitespace separated text.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

FORMATS = ("word2vec-bin", "glove-txt")


class EmbeddingFormatError(ValueError):
    """Malformed embedding file. ``offset`` is a byte offset (binary) or line number (text)."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class Missing:
    """Lookup result for a token that is not in the vocabulary."""

    token: str

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True, eq=False)
class Embedding:
    words: tuple[str, ...]
    matrix: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        words = tuple(self.words)
        matrix = np.array(self.matrix, dtype=np.float32, copy=True)
        if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
            raise ValueError(f"matrix must be a non-empty 2-d array, got shape {matrix.shape}")
        if len(words) != matrix.shape[0]:
            raise ValueError(f"{len(words)} words but {matrix.shape[0]} rows")
        if not np.isfinite(matrix).all():
            row = int(np.nonzero(~np.isfinite(matrix).all(axis=1))[0][0])
            raise ValueError(f"non-finite value in row {row} ({words[row]!r})")
        index = {}
        for i, w in enumerate(words):
            if w in index:
                raise ValueError(f"duplicate token {w!r}")
            index[w] = i
        matrix.setflags(write=False)
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __eq__(self, other) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return self.words == other.words and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.words, self.matrix.tobytes()))

    def lookup(self, token: str) -> Union[np.ndarray, Missing]:
        return lookup(self, token)

    def vectors(self, tokens: Iterable[str]) -> np.ndarray:
        """Stack vectors for ``tokens`` as float64; raises KeyError on the first missing one."""
        rows = []
        for t in tokens:
            i = self._index.get(t)
            if i is None:
                raise KeyError(t)
            rows.append(i)
        return self.matrix[rows].astype(np.float64)


def lookup(emb: Embedding, token: str) -> Union[np.ndarray, Missing]:
    """Exact, case-sensitive lookup. Returns a read-only row view or ``Missing(token)``."""
    i = emb._index.get(token)
    if i is None:
        return Missing(token)
    return emb.matrix[i]


def load_word2vec_binary(path: Union[str, os.PathLike]) -> Embedding:
    with open(path, "rb") as fh:
        data = fh.read()
    nl = data.find(b"\n")
    if nl < 0:
        raise EmbeddingFormatError("missing header line", 0)
    header = data[:nl].split()
    try:
        if len(header) != 2:
            raise ValueError
        n_words, dim = int(header[0]), int(header[1])
    except ValueError:
        raise EmbeddingFormatError(f"malformed header {data[:nl][:80]!r}", 0) from None
    if n_words < 1 or dim < 1:
        raise EmbeddingFormatError(f"header declares n_words={n_words}, dim={dim}", 0)

    nbytes = 4 * dim
    words: list[str] = []
    offsets = np.empty(n_words, dtype=np.int64)
    matrix = np.empty((n_words, dim), dtype=np.float32)
    seen: dict[str, int] = {}
    pos = nl + 1
    size = len(data)
    for i in range(n_words):
        # previous record may end in '\n'
        while pos < size and data[pos] == 0x0A:
            pos += 1
        if pos >= size:
            raise EmbeddingFormatError(
                f"truncated payload: header declares {n_words} words, found {i}", pos)
        sp = data.find(b" ", pos)
        if sp < 0:
            raise EmbeddingFormatError(f"truncated payload: record {i} has no token separator", pos)
        raw = data[pos:sp]
        try:
            token = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EmbeddingFormatError(f"invalid UTF-8 in token of record {i}: {exc.reason}",
                                       pos + exc.start) from None
        if not token:
            raise EmbeddingFormatError(f"empty token in record {i}", pos)
        if token in seen:
            raise EmbeddingFormatError(f"duplicate token {token!r} (first seen in record {seen[token]})", pos)
        seen[token] = i
        start = sp + 1
        if start + nbytes > size:
            raise EmbeddingFormatError(
                f"truncated payload: record {i} ({token!r}) needs {nbytes} bytes, {size - start} left", start)
        offsets[i] = start
        matrix[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=start)
        words.append(token)
        pos = start + nbytes

    bad = ~np.isfinite(matrix)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise EmbeddingFormatError(
            f"non-finite float in record {r} ({words[r]!r}), component {c}", int(offsets[r] + 4 * c))
    return Embedding(tuple(words), matrix)


def write_word2vec_binary(emb: Embedding, path: Union[str, os.PathLike]) -> None:
    with open(path, "wb") as fh:
        fh.write(f"{len(emb)} {emb.dim}\n".encode("ascii"))
        for word, row in zip(emb.words, emb.matrix):
            fh.write(word.encode("utf-8"))
            fh.write(b" ")
            fh.write(np.asarray(row, dtype="<f4").tobytes())
            fh.write(b"\n")


def load_glove_text(path: Union[str, os.PathLike]) -> Embedding:
    words: list[str] = []
    rows: list[np.ndarray] = []
    seen: dict[str, int] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split(" ")
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim < 1:
                    raise EmbeddingFormatError(f"line {lineno}: no vector values", lineno)
            elif len(values) != dim:
                raise EmbeddingFormatError(
                    f"line {lineno}: expected {dim} values, found {len(values)}", lineno)
            try:
                vec = np.array(values, dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"line {lineno}: unparsable float", lineno) from None
            if not np.isfinite(vec).all():
                raise EmbeddingFormatError(f"line {lineno}: non-finite value", lineno)
            if token in seen:
                raise EmbeddingFormatError(
                    f"line {lineno}: duplicate token {token!r} (first on line {seen[token]})", lineno)
            seen[token] = lineno
            words.append(token)
            rows.append(vec)
    if not rows:
        raise EmbeddingFormatError(f"{path}: no embedding rows", 0)
    return Embedding(tuple(words), np.vstack(rows))


def load_embedding(path: Union[str, os.PathLike], fmt: str) -> Embedding:
    if fmt == "word2vec-bin":
        return load_word2vec_binary(path)
    if fmt == "glove-txt":
        return load_glove_text(path)
    raise ValueError(f"unknown embedding format {fmt!r}; expected one of {FORMATS}")
