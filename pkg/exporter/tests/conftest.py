"""Shared fixtures: a tiny local transformer and a small pair file.

The model is built from scratch with a fixed seed and saved to a temp
directory, so tests exercise the real from_pretrained loading path
without any network access.
"""

import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

import pytest

WORDS = [
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "river",
    "stone",
    "bright",
    "water",
    "cold",
    "moon",
    "light",
    "falls",
    "night",
    "long",
]

SENTENCES = [
    ("river stone bright", "water cold", "entailment"),
    ("moon light falls", "night long", "neutral"),
    ("water cold night", "river stone", "contradiction"),
    ("bright moon river", "light falls water", "entailment"),
    ("stone falls", "cold night moon", "neutral"),
    ("light water bright", "stone river", "contradiction"),
    ("night moon cold", "water light", "entailment"),
    ("falls river long", "bright stone", "neutral"),
    ("cold light stone", "moon night falls", "contradiction"),
    ("long water night", "river bright", "entailment"),
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """Build and save a word-level tokenizer plus a 2-layer encoder."""
    import torch
    from tokenizers import Tokenizer, models, pre_tokenizers, processors
    from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

    target = tmp_path_factory.mktemp("tiny-model")
    vocab = {word: index for index, word in enumerate(WORDS)}
    tokenizer = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
    tokenizer.pre_tokenizer = pre_tokenizers.Whitespace()
    tokenizer.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B:1 [SEP]:1",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    wrapped = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
    )
    wrapped.save_pretrained(target)

    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(WORDS),
        hidden_size=16,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(target)
    return str(target)


@pytest.fixture(scope="session")
def pairs_tsv(tmp_path_factory):
    """Ten pair examples; the last premise holds an out-of-vocab word."""
    rows = list(SENTENCES)
    rows[-1] = ("glacier water night", rows[-1][1], rows[-1][2])
    path = tmp_path_factory.mktemp("data") / "pairs.tsv"
    path.write_text("".join(f"{p}\t{h}\t{lbl}\n" for p, h, lbl in rows), encoding="utf-8")
    return str(path)
