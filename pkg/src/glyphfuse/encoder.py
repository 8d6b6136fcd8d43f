"""Visual sentence encoder: per-image CNN features pooled by an LSTM.

Each 30x60 glyph image passes through three 3x3 conv layers (32 channels,
max pooling after the first two) and two dense layers, yielding a
128-wide feature. A unidirectional LSTM walks the token sequence and the
sentence embedding is the mean of its hidden states. All convolutions for
one sequence run as a single batched call, which keeps training fast
without changing any per-image result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tensor as T
from .errors import ConfigError, DimensionError
from .raster import CANVAS_HEIGHT, CANVAS_WIDTH, GlyphImage
from .tensor import ModelParams, Tensor

__all__ = [
    "CnnConfig",
    "VisualEmbedding",
    "init_cnn_params",
    "init_visual_params",
    "encode_image",
    "encode_sequence",
]


@dataclass(frozen=True)
class CnnConfig:
    """Shape of the convolutional stack and its dense head.

    The flatten width is always derived from the input extents, paddings,
    and pooling plan, so the first dense layer can never disagree with the
    conv output.
    """

    in_height: int = CANVAS_HEIGHT
    in_width: int = CANVAS_WIDTH
    channels: tuple[int, int, int] = (32, 32, 32)
    paddings: tuple[int, int, int] = (1, 1, 1)
    pool_after: tuple[bool, bool, bool] = (True, True, False)
    fc1_out: int = 128
    fc2_out: int = 128
    lstm_hidden: int = 128
    dropout: float = 0.3

    def __post_init__(self) -> None:
        if self.in_height < 1 or self.in_width < 1:
            raise ConfigError(f"input extents must be positive, got {self.in_height}x{self.in_width}")
        for name, triple in (("channels", self.channels), ("paddings", self.paddings), ("pool_after", self.pool_after)):
            if len(triple) != 3:
                raise ConfigError(f"{name} must have exactly 3 entries, got {len(triple)}")
        if any(c < 1 for c in self.channels):
            raise ConfigError(f"channel counts must be positive, got {self.channels}")
        if any(p < 0 for p in self.paddings):
            raise ConfigError(f"paddings must be non-negative, got {self.paddings}")
        if min(self.fc1_out, self.fc2_out, self.lstm_hidden) < 1:
            raise ConfigError("dense and LSTM widths must be positive")
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        self.feature_shape()  # raises if the spatial extents collapse

    def feature_shape(self) -> tuple[int, int, int]:
        """(channels, height, width) after the conv stack."""
        h, w = self.in_height, self.in_width
        for pad, pool in zip(self.paddings, self.pool_after):
            h, w = h + 2 * pad - 2, w + 2 * pad - 2
            if h < 1 or w < 1:
                raise ConfigError(
                    f"conv stack collapses the canvas: {self.in_height}x{self.in_width} "
                    f"with paddings {self.paddings}"
                )
            if pool:
                if h < 2 or w < 2:
                    raise ConfigError("pooling applied to a spatial extent below 2")
                h, w = h // 2, w // 2
        return self.channels[2], h, w

    @property
    def flatten_dim(self) -> int:
        c, h, w = self.feature_shape()
        return c * h * w

    @classmethod
    def default(cls) -> "CnnConfig":
        return cls()

    @classmethod
    def square800(cls) -> "CnnConfig":
        """Square-canvas variant whose flatten stage is exactly 800 wide.

        A 40x40 canvas pooled after all three convs lands on 32x5x5. Kept
        for comparison runs; the standard pipeline uses the 30x60 default.
        """
        return cls(in_height=40, in_width=40, pool_after=(True, True, True))


@dataclass
class VisualEmbedding:
    """Sentence-level output of the visual branch."""

    vector: Tensor
    granularity: str
    token_count: int

    def __post_init__(self) -> None:
        if self.vector.ndim != 1:
            raise DimensionError(f"visual embedding must be rank 1, got {self.vector.shape}")
        if self.token_count < 1:
            raise DimensionError(f"token_count must be positive, got {self.token_count}")


def _uniform(rng: np.random.Generator, fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
    bound = float(np.sqrt(1.0 / fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


def init_cnn_params(rng: np.random.Generator, config: CnnConfig, params: ModelParams | None = None) -> ModelParams:
    """Conv and dense weights ~ U(-sqrt(1/fan_in), +sqrt(1/fan_in)); zero biases."""
    if params is None:
        params = ModelParams()
    c_in = 1
    for i, c_out in enumerate(config.channels, start=1):
        params.add(f"cnn.conv{i}.kernel", _uniform(rng, c_in * 9, (c_out, c_in, 3, 3)))
        params.add(f"cnn.conv{i}.bias", np.zeros(c_out, dtype=np.float32))
        c_in = c_out
    flat = config.flatten_dim
    params.add("cnn.fc1.weight", _uniform(rng, flat, (config.fc1_out, flat)))
    params.add("cnn.fc1.bias", np.zeros(config.fc1_out, dtype=np.float32))
    params.add("cnn.fc2.weight", _uniform(rng, config.fc1_out, (config.fc2_out, config.fc1_out)))
    params.add("cnn.fc2.bias", np.zeros(config.fc2_out, dtype=np.float32))
    return params


def init_visual_params(rng: np.random.Generator, config: CnnConfig, params: ModelParams | None = None) -> ModelParams:
    """CNN parameters plus the LSTM cell (forget-gate bias 1, others 0)."""
    params = init_cnn_params(rng, config, params)
    hidden = config.lstm_hidden
    params.add("lstm.wx", _uniform(rng, config.fc2_out, (4 * hidden, config.fc2_out)))
    params.add("lstm.wh", _uniform(rng, hidden, (4 * hidden, hidden)))
    bias = np.zeros(4 * hidden, dtype=np.float32)
    bias[hidden : 2 * hidden] = 1.0  # forget gate open at init
    params.add("lstm.bias", bias)
    return params


def _check_image(image: GlyphImage, config: CnnConfig) -> None:
    expected = (config.in_height, config.in_width)
    if image.pixels.shape != expected:
        raise DimensionError(f"image shape {image.pixels.shape} != configured {expected}")


def _cnn_features(x: Tensor, params: ModelParams, config: CnnConfig) -> Tensor:
    """Conv stack + dense head; accepts [1,H,W] or a batch [N,1,H,W]."""
    batched = x.ndim == 4
    for i in range(1, 4):
        x = T.relu(T.conv2d(x, params[f"cnn.conv{i}.kernel"], params[f"cnn.conv{i}.bias"], padding=config.paddings[i - 1]))
        if config.pool_after[i - 1]:
            x = T.maxpool2d(x)
    if batched:
        x = T.reshape(x, (x.shape[0], config.flatten_dim))
    else:
        x = T.reshape(x, (config.flatten_dim,))
    x = T.relu(T.linear(x, params["cnn.fc1.weight"], params["cnn.fc1.bias"]))
    x = T.relu(T.linear(x, params["cnn.fc2.weight"], params["cnn.fc2.bias"]))
    return x


def encode_image(image: GlyphImage, params: ModelParams, config: CnnConfig | None = None) -> Tensor:
    """Feature vector (width fc2_out) for a single glyph image."""
    config = config or CnnConfig.default()
    _check_image(image, config)
    x = Tensor(image.pixels[None, :, :])
    return _cnn_features(x, params, config)


def encode_sequence(
    images: Sequence[GlyphImage],
    params: ModelParams,
    config: CnnConfig | None = None,
    training: bool = False,
    rng: np.random.Generator | None = None,
    granularity: str = "word",
) -> VisualEmbedding:
    """Run the CNN over every token image, the LSTM over the sequence, and
    return the temporal mean of hidden states as the sentence embedding.

    Dropout (rate from config) applies to the hidden states feeding the
    mean during training only; the recurrent path stays undropped.
    """
    if not images:
        raise DimensionError("encode_sequence needs at least one image")
    config = config or CnnConfig.default()
    for image in images:
        _check_image(image, config)
    batch = np.stack([image.pixels for image in images])[:, None, :, :]
    feats = _cnn_features(Tensor(batch), params, config)

    hidden = config.lstm_hidden
    h = Tensor.zeros(hidden)
    c = Tensor.zeros(hidden)
    outputs = []
    for i in range(len(images)):
        x_i = T.take_row(feats, i)
        h, c = T.lstm_step(x_i, h, c, params["lstm.wx"], params["lstm.wh"], params["lstm.bias"])
        outputs.append(T.dropout(h, config.dropout, training, rng))
    vector = T.mean_vectors(outputs)
    return VisualEmbedding(vector=vector, granularity=granularity, token_count=len(images))
