"""End-to-end exporter tests against a tiny local transformer.

The downstream package (glyphfuse) is imported as the oracle for file
compatibility: everything this exporter writes must load through its
readers with the right shapes and counts.
"""

import numpy as np
import pytest

import glyphfuse as gf
from gfexport import (
    ExportConfig,
    ExportError,
    export_embeddings,
    export_vocab,
    read_pairs,
)
from gfexport.cli import main

HIDDEN = 16
EXAMPLES = 10


def run_export(tiny_model_dir, pairs_tsv, out_dir, **overrides):
    config = ExportConfig(
        model=tiny_model_dir,
        out_embeddings=str(out_dir / overrides.pop("name", "emb.gemb")),
        out_vocab=str(out_dir / "vocab.txt"),
        **overrides,
    )
    count = export_embeddings(pairs_tsv, config)
    return config, count


def test_config_validation(tmp_path):
    with pytest.raises(ExportError, match="pooling"):
        ExportConfig(model="m", pooling="max")
    with pytest.raises(ExportError, match="batch size"):
        ExportConfig(model="m", batch_size=0)
    with pytest.raises(ExportError, match="layer"):
        ExportConfig(model="m", layer=1.5)
    ExportConfig(model="m", pooling="mean", layer=-1, batch_size=3)


def test_read_pairs_errors(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\tentailment\na\tb\n", encoding="utf-8")
    with pytest.raises(ExportError, match=r"bad\.tsv:2: expected 3"):
        read_pairs(bad)
    bad.write_text("a\tb\tmaybe\n", encoding="utf-8")
    with pytest.raises(ExportError, match=r"bad\.tsv:1: unknown label"):
        read_pairs(bad)
    with pytest.raises(ExportError, match="missing.tsv"):
        read_pairs(tmp_path / "missing.tsv")


def test_exported_files_load_downstream(tiny_model_dir, pairs_tsv, tmp_path):
    """Embeddings and vocab must round-trip through the consumer's readers."""
    config, count = run_export(tiny_model_dir, pairs_tsv, tmp_path)
    assert count == EXAMPLES
    export_vocab(config)

    table = gf.read_gemb(config.out_embeddings)
    assert table.dim == HIDDEN
    assert len(table.vectors) == EXAMPLES
    assert sorted(table.vectors) == list(range(EXAMPLES))
    for vector in table.vectors.values():
        assert vector.dtype == np.float32
        assert np.all(np.isfinite(vector))

    vocab = gf.read_vocab(config.out_vocab)
    assert len(vocab) == 14
    lines = open(config.out_vocab, encoding="utf-8").read().split("\n")
    assert lines[-1] == "" and all(lines[:-1])


def test_vocab_marks_unknown_tokens(tiny_model_dir, pairs_tsv, tmp_path):
    """The exported vocab plugs into the consumer's UNK accounting."""
    config, _ = run_export(tiny_model_dir, pairs_tsv, tmp_path)
    export_vocab(config)
    vocab = gf.read_vocab(config.out_vocab)
    segmenter = gf.Segmenter("word")
    examples = gf.read_tsv(pairs_tsv)
    counts = [gf.count_unk(example, vocab, segmenter) for example in examples]
    assert counts[:-1] == [0] * (EXAMPLES - 1)
    assert counts[-1] == 1  # the deliberately out-of-vocab premise word


def test_pooling_modes_differ(tiny_model_dir, pairs_tsv, tmp_path):
    cls_cfg, _ = run_export(tiny_model_dir, pairs_tsv, tmp_path, name="cls.gemb", pooling="cls")
    mean_cfg, _ = run_export(tiny_model_dir, pairs_tsv, tmp_path, name="mean.gemb", pooling="mean")
    cls_table = gf.read_gemb(cls_cfg.out_embeddings)
    mean_table = gf.read_gemb(mean_cfg.out_embeddings)
    for example_id in range(EXAMPLES):
        cls_vec = cls_table.vectors[example_id]
        mean_vec = mean_table.vectors[example_id]
        assert not np.allclose(cls_vec, mean_vec)


def test_layer_selection(tiny_model_dir, pairs_tsv, tmp_path):
    last_cfg, _ = run_export(tiny_model_dir, pairs_tsv, tmp_path, name="last.gemb")
    two_cfg, _ = run_export(tiny_model_dir, pairs_tsv, tmp_path, name="two.gemb", layer=2)
    zero_cfg, _ = run_export(tiny_model_dir, pairs_tsv, tmp_path, name="zero.gemb", layer=0)
    last = open(last_cfg.out_embeddings, "rb").read()
    assert last == open(two_cfg.out_embeddings, "rb").read()
    assert last != open(zero_cfg.out_embeddings, "rb").read()

    with pytest.raises(ExportError, match="out of range"):
        run_export(tiny_model_dir, pairs_tsv, tmp_path, name="far.gemb", layer=7)


def test_batch_size_consistency(tiny_model_dir, pairs_tsv, tmp_path):
    """Padding differs per batch, so compare values, not bytes."""
    one_cfg, _ = run_export(tiny_model_dir, pairs_tsv, tmp_path, name="b1.gemb", batch_size=1)
    ten_cfg, _ = run_export(tiny_model_dir, pairs_tsv, tmp_path, name="b10.gemb", batch_size=10)
    one = gf.read_gemb(one_cfg.out_embeddings)
    ten = gf.read_gemb(ten_cfg.out_embeddings)
    for example_id in range(EXAMPLES):
        np.testing.assert_allclose(
            one.vectors[example_id], ten.vectors[example_id], rtol=1e-4, atol=1e-6
        )


def test_repeat_runs_identical(tiny_model_dir, pairs_tsv, tmp_path):
    first_cfg, _ = run_export(tiny_model_dir, pairs_tsv, tmp_path, name="r1.gemb")
    second_cfg, _ = run_export(tiny_model_dir, pairs_tsv, tmp_path, name="r2.gemb")
    assert open(first_cfg.out_embeddings, "rb").read() == open(second_cfg.out_embeddings, "rb").read()


def test_cli_end_to_end(tiny_model_dir, pairs_tsv, tmp_path, capsys):
    emb = tmp_path / "cli.gemb"
    voc = tmp_path / "cli_vocab.txt"
    assert main(["embeddings", "--model", tiny_model_dir, "--data", pairs_tsv, "--out", str(emb)]) == 0
    assert main(["vocab", "--model", tiny_model_dir, "--out", str(voc)]) == 0
    out = capsys.readouterr().out
    assert f"wrote {EXAMPLES} vectors" in out
    assert "wrote 14 tokens" in out
    assert gf.read_gemb(emb).dim == HIDDEN
    assert len(gf.read_vocab(voc)) == 14


def test_cli_error_exit(tmp_path, pairs_tsv, capsys):
    code = main(["embeddings", "--model", str(tmp_path / "no-model"), "--data", pairs_tsv, "--out", str(tmp_path / "x.gemb")])
    assert code == 2
    assert "error:" in capsys.readouterr().err
