"""Late fusion of the visual and contextual branches, plus the MLP head.

Both embeddings pass through their own trainable affine projection, the
results are concatenated, and a two-layer perceptron produces class
logits. The premise and hypothesis are encoded as one token sequence
joined by a reserved separator image, so the LSTM sees the pair order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tensor as T
from .encoder import CnnConfig, encode_sequence, init_visual_params
from .errors import ConfigError, DimensionError
from .raster import CANVAS_HEIGHT, CANVAS_WIDTH, GlyphImage
from .tensor import ModelParams, Tensor

__all__ = [
    "ClassifierConfig",
    "FusedFeatures",
    "init_head_params",
    "init_nli_params",
    "fuse",
    "classify",
    "sep_image",
    "forward_nli",
    "forward_context_only",
    "predict_label",
]

N_CLASSES = 3


@dataclass(frozen=True)
class ClassifierConfig:
    """Projection widths and MLP shape for the fused classifier."""

    context_dim: int
    visual_dim: int = 128
    proj_visual: int = 128
    proj_context: int = 128
    mlp_hidden: int = 256
    n_classes: int = N_CLASSES

    def __post_init__(self) -> None:
        if self.n_classes < 2:
            raise ConfigError(f"n_classes must be at least 2, got {self.n_classes}")
        for name in ("context_dim", "visual_dim", "proj_visual", "proj_context", "mlp_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def fused_dim(self) -> int:
        return self.proj_visual + self.proj_context


@dataclass
class FusedFeatures:
    """Concatenation of the two projected embeddings."""

    vector: Tensor

    @property
    def width(self) -> int:
        return self.vector.shape[0]


def _uniform(rng: np.random.Generator, fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
    bound = float(np.sqrt(1.0 / fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


def init_head_params(rng: np.random.Generator, config: ClassifierConfig, params: ModelParams | None = None) -> ModelParams:
    """Projections and MLP; weights uniform by fan-in, biases zero."""
    if params is None:
        params = ModelParams()
    params.add("fuse.visual.weight", _uniform(rng, config.visual_dim, (config.proj_visual, config.visual_dim)))
    params.add("fuse.visual.bias", np.zeros(config.proj_visual, dtype=np.float32))
    params.add("fuse.context.weight", _uniform(rng, config.context_dim, (config.proj_context, config.context_dim)))
    params.add("fuse.context.bias", np.zeros(config.proj_context, dtype=np.float32))
    params.add("mlp.fc1.weight", _uniform(rng, config.fused_dim, (config.mlp_hidden, config.fused_dim)))
    params.add("mlp.fc1.bias", np.zeros(config.mlp_hidden, dtype=np.float32))
    params.add("mlp.fc2.weight", _uniform(rng, config.mlp_hidden, (config.n_classes, config.mlp_hidden)))
    params.add("mlp.fc2.bias", np.zeros(config.n_classes, dtype=np.float32))
    return params


def init_nli_params(rng: np.random.Generator, cnn_config: CnnConfig, cls_config: ClassifierConfig) -> ModelParams:
    """All trainable tensors for the fused NLI model, visual branch first."""
    if cls_config.visual_dim != cnn_config.lstm_hidden:
        raise ConfigError(
            f"classifier visual_dim {cls_config.visual_dim} != encoder width {cnn_config.lstm_hidden}"
        )
    params = init_visual_params(rng, cnn_config)
    return init_head_params(rng, cls_config, params)


VISUAL_PREFIXES = ("cnn.", "lstm.")
HEAD_PREFIXES = ("fuse.", "mlp.")


def fuse(v: Tensor, c: Tensor, params: ModelParams) -> FusedFeatures:
    """Project each branch and concatenate: [affine_v(v) ; affine_c(c)]."""
    pv = T.linear(v, params["fuse.visual.weight"], params["fuse.visual.bias"])
    pc = T.linear(c, params["fuse.context.weight"], params["fuse.context.bias"])
    return FusedFeatures(T.concat1d([pv, pc]))


def classify(fused: FusedFeatures, params: ModelParams) -> Tensor:
    """Two-layer perceptron over the fused vector; returns logits."""
    hidden = T.relu(T.linear(fused.vector, params["mlp.fc1.weight"], params["mlp.fc1.bias"]))
    return T.linear(hidden, params["mlp.fc2.weight"], params["mlp.fc2.bias"])


def predict_label(logits: Tensor) -> int:
    """Argmax with lowest-index tie-break."""
    return int(np.argmax(logits.data))


_SEP_PIXELS: np.ndarray | None = None


def sep_image() -> GlyphImage:
    """Reserved pair separator: an ink border around a blank center.

    No font glyph composes to this shape (glyphs never touch the canvas
    border after centering), so the marker cannot collide with text.
    """
    global _SEP_PIXELS
    if _SEP_PIXELS is None:
        px = np.zeros((CANVAS_HEIGHT, CANVAS_WIDTH), dtype=np.float32)
        px[0, :] = 1.0
        px[-1, :] = 1.0
        px[:, 0] = 1.0
        px[:, -1] = 1.0
        _SEP_PIXELS = px
    return GlyphImage(_SEP_PIXELS.copy(), "<sep>")


def forward_nli(
    premise_images: Sequence[GlyphImage],
    hypothesis_images: Sequence[GlyphImage],
    c: Tensor,
    params: ModelParams,
    cnn_config: CnnConfig,
    training: bool = False,
    rng: np.random.Generator | None = None,
    granularity: str = "word",
) -> Tensor:
    """Logits for one premise/hypothesis pair.

    The pair becomes a single token sequence premise ++ [separator] ++
    hypothesis, encoded once by the visual encoder, then fused with the
    contextual vector and classified.
    """
    if not premise_images or not hypothesis_images:
        raise DimensionError("both premise and hypothesis need at least one token image")
    sequence = list(premise_images) + [sep_image()] + list(hypothesis_images)
    embedding = encode_sequence(sequence, params, cnn_config, training=training, rng=rng, granularity=granularity)
    return classify(fuse(embedding.vector, c, params), params)


def forward_context_only(c: Tensor, params: ModelParams, cls_config: ClassifierConfig) -> Tensor:
    """Logits with the visual branch silenced (zero vector in place of v)."""
    v = Tensor.zeros(cls_config.visual_dim)
    return classify(fuse(v, c, params), params)
