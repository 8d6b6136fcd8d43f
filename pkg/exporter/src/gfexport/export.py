"""Export pooled sentence-pair embeddings from a pretrained transformer.

The model and tokenizer are loaded once through the transformers auto
classes, each premise/hypothesis pair is encoded jointly with the model's
own pair convention, and a single vector per example is pooled from one
hidden layer. Everything runs under no_grad in eval mode; this module
never fine-tunes or serves a model.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .formats import ExportError, Pair, read_pairs, write_gemb, write_vocab

_POOLING_MODES = ("cls", "mean")


@dataclass(frozen=True)
class ExportConfig:
    """Everything an export run needs, mirrored one-to-one by CLI flags."""

    model: str
    out_embeddings: str = "embeddings.gemb"
    out_vocab: str = "vocab.txt"
    pooling: str = "cls"
    layer: int | str = "last"
    batch_size: int = 8

    def __post_init__(self):
        if self.pooling not in _POOLING_MODES:
            raise ExportError(f"pooling must be one of {_POOLING_MODES}, got {self.pooling!r}")
        if self.batch_size < 1:
            raise ExportError(f"batch size must be positive, got {self.batch_size}")
        if not isinstance(self.layer, int) and self.layer != "last":
            raise ExportError(f"layer must be an integer or 'last', got {self.layer!r}")


def load_tokenizer(config: ExportConfig):
    from transformers import AutoTokenizer

    try:
        return AutoTokenizer.from_pretrained(config.model)
    except Exception as exc:
        raise ExportError(f"cannot load tokenizer from {config.model!r}: {exc}") from exc


def load_model(config: ExportConfig):
    import torch
    from transformers import AutoModel

    try:
        model = AutoModel.from_pretrained(config.model)
    except Exception as exc:
        raise ExportError(f"cannot load model from {config.model!r}: {exc}") from exc
    model.eval()
    torch.set_grad_enabled(False)
    return model


def _pick_layer(hidden_states, layer: int | str):
    """Select one element of the hidden-states tuple (index 0 = embeddings)."""
    if layer == "last":
        return hidden_states[-1]
    count = len(hidden_states)
    if not (-count <= layer < count):
        raise ExportError(f"layer {layer} out of range for model with {count} hidden states")
    return hidden_states[layer]


def _pool(states, attention_mask, pooling: str) -> np.ndarray:
    """Reduce (batch, seq, hidden) to (batch, hidden) float32."""
    if pooling == "cls":
        pooled = states[:, 0, :]
    else:
        mask = attention_mask.unsqueeze(-1).to(states.dtype)
        pooled = (states * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
    return pooled.detach().cpu().numpy().astype(np.float32)


def encode_pairs(pairs: list[Pair], tokenizer, model, config: ExportConfig) -> dict[int, np.ndarray]:
    """Jointly encode each pair and pool one vector per example id."""
    import torch

    vectors: dict[int, np.ndarray] = {}
    for start in range(0, len(pairs), config.batch_size):
        batch = pairs[start : start + config.batch_size]
        encoded = tokenizer(
            [pair.premise for pair in batch],
            [pair.hypothesis for pair in batch],
            padding=True,
            truncation=True,
            return_tensors="pt",
        )
        with torch.no_grad():
            output = model(**encoded, output_hidden_states=True)
        states = _pick_layer(output.hidden_states, config.layer)
        pooled = _pool(states, encoded["attention_mask"], config.pooling)
        for pair, vector in zip(batch, pooled):
            vectors[pair.example_id] = vector
    return vectors


def export_embeddings(data_path, config: ExportConfig) -> int:
    """Encode every pair in a TSV file and write the embedding table.

    Returns the number of vectors written. The vector width is the model's
    hidden size regardless of which layer or pooling was chosen.
    """
    pairs = read_pairs(data_path)
    if not pairs:
        raise ExportError(f"{data_path}: no examples to export")
    tokenizer = load_tokenizer(config)
    model = load_model(config)
    vectors = encode_pairs(pairs, tokenizer, model, config)
    dim = model.config.hidden_size
    write_gemb(vectors, dim, config.out_embeddings)
    return len(vectors)


def export_vocab(config: ExportConfig) -> int:
    """Write the tokenizer's vocabulary, one token per line, ordered by id.

    Returns the number of tokens written.
    """
    tokenizer = load_tokenizer(config)
    vocab = tokenizer.get_vocab()
    tokens = [token for token, _ in sorted(vocab.items(), key=lambda item: item[1])]
    write_vocab(tokens, config.out_vocab)
    return len(tokens)


def default_output_paths(out_dir) -> tuple[str, str]:
    """Conventional file names inside an output directory."""
    base = Path(out_dir)
    return str(base / "embeddings.gemb"), str(base / "vocab.txt")
