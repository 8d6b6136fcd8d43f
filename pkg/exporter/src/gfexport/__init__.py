"""Bridge pretrained transformer encoders to embedding-table files."""

__version__ = "0.1.0"

from .export import (
    ExportConfig,
    encode_pairs,
    export_embeddings,
    export_vocab,
    load_model,
    load_tokenizer,
)
from .formats import ExportError, Pair, read_pairs, write_gemb, write_vocab

__all__ = [
    "ExportConfig",
    "ExportError",
    "Pair",
    "encode_pairs",
    "export_embeddings",
    "export_vocab",
    "load_model",
    "load_tokenizer",
    "read_pairs",
    "write_gemb",
    "write_vocab",
    "__version__",
]
