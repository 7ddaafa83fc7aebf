import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embias.embedding_io import (Embedding, EmbeddingFormatError, Missing, load_embedding,
                                 load_glove_text, load_word2vec_binary, lookup,
                                 write_word2vec_binary)

from conftest import w2v_bytes

AB = [("a", (1, 0, 0)), ("b", (0, 1, 0))]


def write(tmp_path, data, name="e.bin"):
    p = tmp_path / name
    p.write_bytes(data if isinstance(data, bytes) else data.encode())
    return p


def test_word2vec_fixture(tmp_path):
    emb = load_word2vec_binary(write(tmp_path, w2v_bytes(AB, 3)))
    assert (len(emb), emb.dim) == (2, 3)
    assert emb.words == ("a", "b")
    np.testing.assert_array_equal(lookup(emb, "a"), [1, 0, 0])


def test_word2vec_without_trailing_newline(tmp_path):
    emb = load_word2vec_binary(write(tmp_path, w2v_bytes(AB, 3, trailing_newline=False)))
    np.testing.assert_array_equal(emb.lookup("b"), [0, 1, 0])


def test_word2vec_duplicate_token(tmp_path):
    data = w2v_bytes([("a", (1, 0, 0)), ("a", (0, 1, 0))], 3)
    with pytest.raises(EmbeddingFormatError, match="duplicate") as exc:
        load_word2vec_binary(write(tmp_path, data))
    # header, "a", separator, 12 float bytes, newline
    assert exc.value.offset == len(b"2 3\n") + 1 + 1 + 12 + 1


def test_word2vec_truncated(tmp_path):
    data = w2v_bytes(AB[:1], 3, n=2)
    with pytest.raises(EmbeddingFormatError, match="truncated") as exc:
        load_word2vec_binary(write(tmp_path, data))
    assert exc.value.offset == len(data)


def test_word2vec_truncated_mid_vector(tmp_path):
    data = w2v_bytes(AB, 3)[:-6]
    with pytest.raises(EmbeddingFormatError, match="truncated"):
        load_word2vec_binary(write(tmp_path, data))


def test_word2vec_non_finite(tmp_path):
    data = w2v_bytes([("a", (1, math.nan, 0))], 3)
    with pytest.raises(EmbeddingFormatError, match="non-finite") as exc:
        load_word2vec_binary(write(tmp_path, data))
    assert exc.value.offset == len(b"1 3\na ") + 4


@pytest.mark.parametrize("header", [b"", b"two 3\n", b"2\n", b"0 3\n", b"2 0\n", b"2 3"])
def test_word2vec_bad_header(tmp_path, header):
    with pytest.raises(EmbeddingFormatError) as exc:
        load_word2vec_binary(write(tmp_path, header))
    assert exc.value.offset == 0


def test_word2vec_invalid_utf8(tmp_path):
    data = b"1 1\n\xff\xfe " + struct.pack("<f", 1.0)
    with pytest.raises(EmbeddingFormatError, match="UTF-8"):
        load_word2vec_binary(write(tmp_path, data))


def test_word2vec_utf8_token(tmp_path):
    emb = load_word2vec_binary(write(tmp_path, w2v_bytes([("café", (1.0,))], 1)))
    assert "café" in emb


def test_glove_fixture(tmp_path):
    emb = load_glove_text(write(tmp_path, "a 1 0 0\nb 0 1 0\n", "g.txt"))
    assert (len(emb), emb.dim) == (2, 3)
    np.testing.assert_array_equal(emb.lookup("b"), [0, 1, 0])


def test_glove_dimension_error_names_line(tmp_path):
    with pytest.raises(EmbeddingFormatError, match="line 2") as exc:
        load_glove_text(write(tmp_path, "a 1 0 0\nb 0 1\n", "g.txt"))
    assert exc.value.offset == 2


def test_glove_empty_file(tmp_path):
    with pytest.raises(EmbeddingFormatError, match="no embedding rows"):
        load_glove_text(write(tmp_path, "", "g.txt"))


def test_glove_bad_float_and_duplicate(tmp_path):
    with pytest.raises(EmbeddingFormatError, match="unparsable"):
        load_glove_text(write(tmp_path, "a 1 x\n", "g.txt"))
    with pytest.raises(EmbeddingFormatError, match="duplicate"):
        load_glove_text(write(tmp_path, "a 1 2\na 3 4\n", "g.txt"))


def test_lookup_missing_and_case_sensitive(tmp_path):
    emb = load_word2vec_binary(write(tmp_path, w2v_bytes(AB, 3)))
    assert lookup(emb, "z") == Missing("z")
    assert lookup(emb, "A") == Missing("A")
    assert not lookup(emb, "A")
    assert lookup(emb, "A").token == "A"


def test_lookup_is_read_only(tmp_path):
    emb = load_word2vec_binary(write(tmp_path, w2v_bytes(AB, 3)))
    v = lookup(emb, "a")
    with pytest.raises(ValueError):
        v[0] = 5.0


def test_load_embedding_dispatch(tmp_path):
    p = write(tmp_path, "a 1 0 0\n", "g.txt")
    assert load_embedding(p, "glove-txt").words == ("a",)
    with pytest.raises(ValueError, match="unknown embedding format"):
        load_embedding(p, "fasttext")


def test_embedding_invariants():
    with pytest.raises(ValueError, match="duplicate"):
        Embedding(("a", "a"), np.eye(2))
    with pytest.raises(ValueError, match="non-finite"):
        Embedding(("a",), np.array([[np.inf]]))
    with pytest.raises(ValueError):
        Embedding((), np.zeros((0, 3)))


def test_load_twice_equal(tmp_path):
    p = write(tmp_path, w2v_bytes(AB, 3))
    assert load_word2vec_binary(p) == load_word2vec_binary(p)


tokens = st.lists(st.text(alphabet=st.characters(blacklist_categories=("Cs", "Zs", "Cc")),
                          min_size=1, max_size=8), min_size=1, max_size=12, unique=True)


@settings(max_examples=40, deadline=None)
@given(tokens, st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_roundtrip_bit_identical(tmp_path_factory, words, dim, seed):
    rng = np.random.default_rng(seed)
    emb = Embedding(tuple(words), rng.normal(size=(len(words), dim)).astype(np.float32))
    p = tmp_path_factory.mktemp("rt") / "x.bin"
    write_word2vec_binary(emb, p)
    back = load_word2vec_binary(p)
    assert back.words == emb.words
    assert back.matrix.tobytes() == emb.matrix.tobytes()
    for i, w in enumerate(words):
        np.testing.assert_array_equal(lookup(back, w), back.matrix[i])
