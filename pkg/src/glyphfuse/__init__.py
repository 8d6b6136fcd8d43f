"""Glyph-image text encoding fused with contextual sentence embeddings.

Importing the package resolves GLYPHFUSE_THREADS before numpy loads, since
BLAS thread pools are sized at import time and cannot shrink afterwards.
"""

from __future__ import annotations

import os
from pathlib import Path

from .errors import (
    ConfigError,
    DimensionError,
    FormatError,
    GlyphfuseError,
    GradientError,
    NumericalError,
)

__version__ = "0.1.0"


def _apply_thread_limit() -> None:
    raw = os.environ.get("GLYPHFUSE_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError(f"GLYPHFUSE_THREADS must be a positive integer, got {raw!r}")
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ[var] = str(n)


_apply_thread_limit()

from .data import (  # noqa: E402
    LABELS,
    EmbeddingTable,
    Example,
    Vocab,
    count_unk,
    gen_hash_embeddings,
    load_checkpoint,
    read_gemb,
    read_tsv,
    read_vocab,
    save_checkpoint,
    write_gemb,
)
from .encoder import CnnConfig, VisualEmbedding, encode_image, encode_sequence, init_visual_params  # noqa: E402
from .fusion import ClassifierConfig, FusedFeatures, classify, forward_nli, fuse, init_nli_params  # noqa: E402
from .optim import OptimizerState, optimizer_step  # noqa: E402
from .raster import (  # noqa: E402
    BitmapFont,
    GlyphImage,
    Segmenter,
    load_bdf,
    load_dictionary,
    random_image,
    render,
    segment,
    write_pgm,
)
from .tensor import ModelParams, Tensor, no_grad  # noqa: E402
from .training import (  # noqa: E402
    EvalReport,
    TrainConfig,
    TrainResult,
    ablation_run,
    charrec_run,
    emit_report,
    evaluate,
    targeted_eval,
    train,
)

__all__ = [
    "__version__",
    "fixture_path",
    "GlyphfuseError",
    "DimensionError",
    "ConfigError",
    "FormatError",
    "NumericalError",
    "GradientError",
    "Tensor",
    "ModelParams",
    "no_grad",
    "OptimizerState",
    "optimizer_step",
    "GlyphImage",
    "BitmapFont",
    "Segmenter",
    "segment",
    "render",
    "random_image",
    "load_bdf",
    "load_dictionary",
    "write_pgm",
    "CnnConfig",
    "VisualEmbedding",
    "init_visual_params",
    "encode_image",
    "encode_sequence",
    "ClassifierConfig",
    "FusedFeatures",
    "init_nli_params",
    "fuse",
    "classify",
    "forward_nli",
    "LABELS",
    "Example",
    "read_tsv",
    "EmbeddingTable",
    "read_gemb",
    "write_gemb",
    "gen_hash_embeddings",
    "Vocab",
    "read_vocab",
    "count_unk",
    "save_checkpoint",
    "load_checkpoint",
    "TrainConfig",
    "TrainResult",
    "EvalReport",
    "train",
    "evaluate",
    "targeted_eval",
    "ablation_run",
    "charrec_run",
    "emit_report",
]


def fixture_path(name: str) -> Path:
    """Absolute path of a bundled fixture file."""
    path = Path(__file__).parent / "fixtures" / name
    if not path.exists():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return path
