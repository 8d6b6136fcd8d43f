"""Dataset files, embedding tables, hash embeddings, vocab, checkpoints."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import glyphfuse as gf
from glyphfuse.data import EmbeddingTable, read_checkpoint_arrays
from glyphfuse.errors import ConfigError, DimensionError, FormatError, GradientError
from glyphfuse.tensor import ModelParams

M64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# TSV datasets


def test_read_tsv_basic(tmp_path):
    path = tmp_path / "d.tsv"
    path.write_text("a b\tc d\tentailment\nx\ty\tNEUTRAL\n", encoding="utf-8")
    examples = gf.read_tsv(path)
    assert [e.id for e in examples] == [0, 1]
    assert examples[0].premise == "a b" and examples[0].hypothesis == "c d"
    assert examples[0].label == "entailment" and examples[0].label_index == 0
    assert examples[1].label == "neutral"  # case-insensitive


@pytest.mark.parametrize(
    "line,fragment",
    [
        ("a\tb\n", "column"),
        ("a\tb\tc\td\n", "column"),
        ("a\tb\tmaybe\n", "label"),
        ("\tb\tentailment\n", "premise"),
        ("a\t\tentailment\n", "hypothesis"),
    ],
)
def test_read_tsv_errors_name_line(tmp_path, line, fragment):
    path = tmp_path / "bad.tsv"
    path.write_text("p\th\tneutral\n" + line, encoding="utf-8")
    with pytest.raises(FormatError) as err:
        gf.read_tsv(path)
    assert "bad.tsv:2:" in str(err.value)
    assert fragment in str(err.value).lower()


def test_read_tsv_fixture_labels_cycle():
    examples = gf.read_tsv(gf.fixture_path("glyph_train.tsv"))
    assert len(examples) == 48
    assert all(e.label_index == e.id % 3 for e in examples)


def test_example_validation():
    with pytest.raises(FormatError):
        gf.Example(-1, "a", "b", "neutral")
    with pytest.raises(FormatError):
        gf.Example(0, "a", "b", "unknown")


# ---------------------------------------------------------------------------
# GEMB binary format


def test_gemb_layout_68_bytes(tmp_path):
    table = EmbeddingTable(4)
    table.put(7, np.array([1.0, 2.0, 3.0, 4.0], dtype=np.float32))
    table.put(3, np.array([-1.0, 0.5, 0.25, 0.0], dtype=np.float32))
    path = tmp_path / "e.gemb"
    gf.write_gemb(table, path)
    blob = path.read_bytes()
    assert len(blob) == 20 + 2 * (8 + 16) == 68
    magic, version, dim = struct.unpack_from("<4sII", blob, 0)
    count = struct.unpack_from("<Q", blob, 12)[0]
    assert magic == b"GEMB" and version == 1 and dim == 4 and count == 2
    # ids are sorted on disk
    first_id = struct.unpack_from("<Q", blob, 20)[0]
    second_id = struct.unpack_from("<Q", blob, 20 + 8 + 16)[0]
    assert (first_id, second_id) == (3, 7)
    vec = np.frombuffer(blob, dtype="<f4", count=4, offset=28)
    assert np.array_equal(vec, [-1.0, 0.5, 0.25, 0.0])


def test_gemb_read_write_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    table = EmbeddingTable(5)
    for i in (0, 9, 2):
        table.put(i, rng.normal(size=5).astype(np.float32))
    path = tmp_path / "rt.gemb"
    gf.write_gemb(table, path)
    assert gf.read_gemb(path) == table


@given(
    dim=st.integers(1, 12),
    ids=st.sets(st.integers(0, 2**64 - 1), min_size=0, max_size=8),
    seed=st.integers(0, 2**31),
)
@settings(max_examples=100, deadline=None)
def test_gemb_round_trip_property(tmp_path_factory, dim, ids, seed):
    rng = np.random.default_rng(seed)
    table = EmbeddingTable(dim)
    for i in ids:
        table.put(i, rng.normal(size=dim).astype(np.float32))
    path = tmp_path_factory.mktemp("gemb") / "t.gemb"
    gf.write_gemb(table, path)
    again = gf.read_gemb(path)
    assert again == table
    # second write of the loaded table is byte-identical
    path2 = tmp_path_factory.mktemp("gemb") / "t2.gemb"
    gf.write_gemb(again, path2)
    assert path.read_bytes() == path2.read_bytes()


@pytest.mark.parametrize(
    "mutate,fragment",
    [
        (lambda b: b"XEMB" + b[4:], "magic"),
        (lambda b: b[:4] + struct.pack("<I", 9) + b[8:], "version"),
        (lambda b: b[:-4], "bytes"),
        (lambda b: b + b"\x00" * 4, "bytes"),
    ],
)
def test_gemb_read_rejects_corruption(tmp_path, mutate, fragment):
    table = EmbeddingTable(3)
    table.put(0, np.zeros(3, dtype=np.float32))
    path = tmp_path / "c.gemb"
    gf.write_gemb(table, path)
    (tmp_path / "broken.gemb").write_bytes(mutate(path.read_bytes()))
    with pytest.raises(FormatError) as err:
        gf.read_gemb(tmp_path / "broken.gemb")
    assert fragment in str(err.value).lower()


def test_gemb_read_rejects_duplicate_ids(tmp_path):
    header = b"GEMB" + struct.pack("<II", 1, 2) + struct.pack("<Q", 2)
    record = struct.pack("<Q", 5) + struct.pack("<2f", 1.0, 2.0)
    (tmp_path / "dup.gemb").write_bytes(header + record + record)
    with pytest.raises(FormatError, match="duplicate"):
        gf.read_gemb(tmp_path / "dup.gemb")


def test_embedding_table_get_missing_id():
    table = EmbeddingTable(2)
    with pytest.raises(ConfigError, match="id 5"):
        table.get(5)
    with pytest.raises(DimensionError):
        table.put(0, np.zeros(3, dtype=np.float32))


# ---------------------------------------------------------------------------
# hash embeddings


def oracle_token_vector(token: str, dim: int, seed: int) -> list[float]:
    h = 0xCBF29CE484222325
    for b in token.encode("utf-8") + seed.to_bytes(8, "little"):
        h = ((h ^ b) * 0x100000001B3) & M64
    x = (h + 0x9E3779B97F4A7C15) & M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & M64
    state = x ^ (x >> 31)
    out = []
    for _ in range(dim):
        out.append(((state >> 11) / float(2**53)) * 2.0 - 1.0)
        state = (6364136223846793005 * state + 1442695040888963407) & M64
    return out


def oracle_embedding(example: gf.Example, dim: int, seed: int) -> np.ndarray:
    total = np.zeros(dim, dtype=np.float64)
    for token in example.premise.split() + example.hypothesis.split():
        total += np.array(oracle_token_vector(token, dim, seed))
    norm = np.linalg.norm(total)
    if norm > 0:
        total /= norm
    return total.astype(np.float32)


def test_hash_embeddings_match_scalar_oracle():
    examples = [
        gf.Example(0, "alpha beta", "gamma", "neutral"),
        gf.Example(1, "丟且丆业", "稀丘三", "entailment"),
        gf.Example(2, "alpha alpha", "alpha", "contradiction"),
    ]
    for dim, seed in ((4, 0), (16, 7), (33, 12345)):
        table = gf.gen_hash_embeddings(examples, dim, seed)
        for e in examples:
            assert np.allclose(table.get(e.id), oracle_embedding(e, dim, seed), atol=1e-7), (dim, seed, e.id)


def test_hash_embeddings_frozen_values():
    # pinned outputs guard against accidental constant or byte-order changes
    table = gf.gen_hash_embeddings([gf.Example(0, "ab", "c", "neutral")], 4, 1)
    assert np.allclose(
        table.get(0),
        [0.5079835653, -0.2624576986, 0.8070660830, 0.1473535150],
        atol=1e-7,
    )


def test_hash_embeddings_properties():
    examples = [gf.Example(i, f"tok{i} shared", f"hyp{i}", "neutral") for i in range(40)]
    table = gf.gen_hash_embeddings(examples, 64, 3)
    assert len(table) == 40 and table.dim == 64
    vectors = np.stack([table.get(i) for i in range(40)])
    norms = np.linalg.norm(vectors, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-5)
    # distinct sentences decorrelate: worst off-diagonal cosine stays small
    cos = vectors @ vectors.T
    np.fill_diagonal(cos, 0.0)
    assert np.abs(cos).max() < 0.75  # they share one token, so some correlation
    # same text, different seed: different vector
    other = gf.gen_hash_embeddings(examples, 64, 4)
    assert not np.allclose(table.get(0), other.get(0), atol=1e-3)


def test_hash_embeddings_unrelated_tokens_decorrelate():
    examples = [gf.Example(i, f"w{i}a w{i}b w{i}c", f"w{i}d w{i}e", "neutral") for i in range(30)]
    table = gf.gen_hash_embeddings(examples, 96, 5)
    vectors = np.stack([table.get(i) for i in range(30)])
    cos = np.abs(vectors @ vectors.T)
    np.fill_diagonal(cos, 0.0)
    # random unit vectors in 96 dims: pairwise cosines concentrate near 0
    assert cos.max() < 0.5
    assert cos.mean() < 0.12


def test_hash_embeddings_whitespace_tokenization():
    # spaceless text is a single token: any two spaceless sentences sharing
    # no exact string get independent vectors even if they share characters
    a = gf.Example(0, "丟且丆业丑", "稀丘", "neutral")
    b = gf.Example(1, "丟且丆业丒", "稀丘", "neutral")  # one char differs
    table = gf.gen_hash_embeddings([a, b], 64, 0)
    cos = float(table.get(0) @ table.get(1))
    assert cos < 0.9  # premise tokens unrelated; only the hypothesis is shared


# ---------------------------------------------------------------------------
# vocab and UNK counting


def test_read_vocab_and_membership(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("alpha\n\nbeta\n", encoding="utf-8")
    vocab = gf.read_vocab(path)
    assert "alpha" in vocab and "beta" in vocab and "gamma" not in vocab
    assert len(vocab) == 2


def test_count_unk_matches_manual_scan():
    vocab = gf.Vocab(["a", "b", "cd"])
    seg = gf.Segmenter("word")
    e = gf.Example(0, "a b zz", "cd qq a", "neutral")
    assert gf.count_unk(e, vocab, seg) == 2
    seg_char = gf.Segmenter("char")
    e2 = gf.Example(1, "ab", "cx", "neutral")
    # chars: a,b,c,x -> c and x unknown
    assert gf.count_unk(e2, vocab, seg_char) == 2


def test_count_unk_on_unk_small_fixture():
    examples = gf.read_tsv(gf.fixture_path("unk_small.tsv"))
    vocab = gf.read_vocab(gf.fixture_path("unk_small_vocab.txt"))
    seg = gf.Segmenter("word")
    counts = [gf.count_unk(e, vocab, seg) for e in examples]
    assert counts == [0, 0, 0, 0, 1, 1, 1, 1]


# ---------------------------------------------------------------------------
# GFCK checkpoints


def small_params(seed=0):
    rng = np.random.default_rng(seed)
    p = ModelParams()
    p.add("cnn.fc1.weight", rng.normal(size=(4, 6)).astype(np.float32))
    p.add("cnn.fc1.bias", rng.normal(size=4).astype(np.float32))
    p.add("lstm.wx", rng.normal(size=(8, 2)).astype(np.float32))
    return p


def test_checkpoint_round_trip(tmp_path):
    p = small_params()
    path = tmp_path / "m.gfck"
    gf.save_checkpoint(p, path)
    q = small_params(seed=9)
    gf.load_checkpoint(path, q)
    for name in p.names():
        assert np.array_equal(p[name].data, q[name].data)


def test_checkpoint_header_layout(tmp_path):
    p = ModelParams()
    p.add("w", np.array([[1.0, 2.0]], dtype=np.float32))
    path = tmp_path / "h.gfck"
    gf.save_checkpoint(p, path)
    blob = path.read_bytes()
    magic, version, count = struct.unpack_from("<4sII", blob, 0)
    assert magic == b"GFCK" and version == 1 and count == 1
    name_len = struct.unpack_from("<H", blob, 12)[0]
    assert blob[14 : 14 + name_len] == b"w"
    rank = blob[14 + name_len]
    dims = struct.unpack_from("<2I", blob, 15 + name_len)
    assert rank == 2 and dims == (1, 2)


def test_checkpoint_names_sorted_and_deterministic(tmp_path):
    p = ModelParams()
    p.add("zz", np.ones(1, dtype=np.float32))
    p.add("aa", np.ones(1, dtype=np.float32))
    path1, path2 = tmp_path / "a.gfck", tmp_path / "b.gfck"
    gf.save_checkpoint(p, path1)
    gf.save_checkpoint(p, path2)
    assert path1.read_bytes() == path2.read_bytes()
    arrays = read_checkpoint_arrays(path1)
    assert list(arrays) == ["aa", "zz"]


@given(
    seed=st.integers(0, 2**31),
    n_tensors=st.integers(1, 5),
)
@settings(max_examples=100, deadline=None)
def test_checkpoint_round_trip_property(tmp_path_factory, seed, n_tensors):
    rng = np.random.default_rng(seed)
    p = ModelParams()
    for i in range(n_tensors):
        rank = int(rng.integers(1, 4))
        shape = tuple(int(s) for s in rng.integers(1, 5, size=rank))
        p.add(f"t{i}.x", rng.normal(size=shape).astype(np.float32))
    path = tmp_path_factory.mktemp("gfck") / "p.gfck"
    gf.save_checkpoint(p, path)
    arrays = read_checkpoint_arrays(path)
    assert set(arrays) == set(p.names())
    for name, arr in arrays.items():
        assert np.array_equal(arr, p[name].data)


def test_checkpoint_truncation_detected(tmp_path):
    p = small_params()
    path = tmp_path / "t.gfck"
    gf.save_checkpoint(p, path)
    blob = path.read_bytes()
    (tmp_path / "cut.gfck").write_bytes(blob[:-3])
    with pytest.raises(FormatError):
        read_checkpoint_arrays(tmp_path / "cut.gfck")
    (tmp_path / "pad.gfck").write_bytes(blob + b"\x00")
    with pytest.raises(FormatError, match="trailing"):
        read_checkpoint_arrays(tmp_path / "pad.gfck")


def test_checkpoint_preset_mismatch_names_offending_tensor(tmp_path):
    # a checkpoint from the default geometry cannot load into the square
    # preset: fc1's input extent differs, and the error says which tensor
    rng = np.random.default_rng(0)
    default_params = gf.init_visual_params(rng, gf.CnnConfig.default())
    path = tmp_path / "geom.gfck"
    gf.save_checkpoint(default_params, path)
    square_params = gf.init_visual_params(rng, gf.CnnConfig.square800())
    with pytest.raises(FormatError, match="cnn.fc1.weight"):
        gf.load_checkpoint(path, square_params)


def test_checkpoint_name_set_mismatch_listed(tmp_path):
    p = small_params()
    path = tmp_path / "n.gfck"
    gf.save_checkpoint(p, path)
    q = small_params()
    q.add("extra.tensor", np.zeros(1, dtype=np.float32))
    with pytest.raises(FormatError, match="extra.tensor"):
        gf.load_checkpoint(path, q)
