"""Training loop, evaluation modes, and report emission.

A run is fully determined by (seed, config, data, embeddings): shuffling,
dropout, and initialization all draw from generators derived from the
seed, and every reduction has a fixed order, so repeated runs produce
bit-identical histories, parameters, and report files.

Three evaluation modes mirror the experiment suite: plain accuracy, a
random-image ablation (the visual branch sees label-independent noise),
and a targeted evaluation restricted to sentences containing
out-of-vocabulary tokens.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from . import tensor as T
from .data import LABELS, EmbeddingTable, Example, Vocab, count_unk
from .encoder import CnnConfig, _cnn_features, init_cnn_params
from .errors import ConfigError
from .fusion import (
    HEAD_PREFIXES,
    VISUAL_PREFIXES,
    ClassifierConfig,
    forward_context_only,
    forward_nli,
    init_nli_params,
    predict_label,
)
from .optim import OptimizerState, optimizer_step
from .raster import BitmapFont, GlyphImage, Segmenter, random_image, render, segment
from .tensor import ModelParams, Tensor

__all__ = [
    "TrainConfig",
    "HistoryEntry",
    "TrainResult",
    "EvalReport",
    "ImageSource",
    "RenderedSource",
    "RandomSource",
    "train",
    "evaluate",
    "targeted_eval",
    "ablation_run",
    "charrec_run",
    "emit_report",
    "emit_markdown",
    "write_history_csv",
]

GRANULARITIES = ("word", "char")
ABLATIONS = ("none", "random_image")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one run; model selection is min validation loss."""

    seed: int
    epochs: int = 30
    lr_visual: float = 4e-6
    lr_head: float = 1e-3
    batch_size: int = 16
    granularity: str = "word"
    ablation: str = "none"
    context_only: bool = False
    optimizer: str = "adam"
    stop_at_dev_accuracy: float | None = None

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.lr_visual <= 0 or self.lr_head <= 0:
            raise ConfigError("learning rates must be positive")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.granularity not in GRANULARITIES:
            raise ConfigError(f"granularity must be one of {GRANULARITIES}, got {self.granularity!r}")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")

    def as_dict(self) -> dict[str, object]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class HistoryEntry:
    epoch: int
    train_loss: float
    dev_loss: float
    dev_accuracy: float


@dataclass
class TrainResult:
    params: ModelParams
    history: list[HistoryEntry]
    best_epoch: int
    cnn_config: CnnConfig
    cls_config: ClassifierConfig


@dataclass
class EvalReport:
    """Accuracy plus a gold-by-predicted confusion matrix.

    The targeted fields are filled only by the UNK-restricted evaluation;
    ``targeted_empty`` flags a vocabulary that covered every sentence.
    """

    accuracy: float
    confusion: np.ndarray
    n_examples: int
    config: dict[str, object]
    targeted_accuracy: float | None = None
    targeted_count: int | None = None
    targeted_empty: bool = False

    def __post_init__(self) -> None:
        self.confusion = np.asarray(self.confusion, dtype=np.int64)
        if self.confusion.ndim != 2 or self.confusion.shape[0] != self.confusion.shape[1]:
            raise ConfigError(f"confusion matrix must be square, got {self.confusion.shape}")
        if int(self.confusion.sum()) != self.n_examples:
            raise ConfigError(
                f"confusion counts sum to {int(self.confusion.sum())}, expected {self.n_examples}"
            )
        trace_acc = float(np.trace(self.confusion)) / self.n_examples if self.n_examples else 0.0
        if abs(trace_acc - self.accuracy) > 1e-12:
            raise ConfigError(f"accuracy {self.accuracy} != trace/n {trace_acc}")


# ---------------------------------------------------------------------------
# image sources


class ImageSource(Protocol):
    """Supplies token images for the pair; counting never renders."""

    def pair_token_counts(self, example: Example) -> tuple[int, int]: ...

    def pair_images(self, example: Example) -> tuple[list[GlyphImage], list[GlyphImage]]: ...


class RenderedSource:
    """Segments the pair texts and renders each segment with the font."""

    def __init__(self, font: BitmapFont, segmenter: Segmenter):
        self.font = font
        self.segmenter = segmenter
        self._cache: dict[tuple[str, str], tuple[list[GlyphImage], list[GlyphImage]]] = {}

    def _segments(self, example: Example) -> tuple[list[str], list[str]]:
        return segment(example.premise, self.segmenter), segment(example.hypothesis, self.segmenter)

    def pair_token_counts(self, example: Example) -> tuple[int, int]:
        premise, hypothesis = self._segments(example)
        return len(premise), len(hypothesis)

    def pair_images(self, example: Example) -> tuple[list[GlyphImage], list[GlyphImage]]:
        key = (example.premise, example.hypothesis)
        cached = self._cache.get(key)
        if cached is None:
            premise, hypothesis = self._segments(example)
            cached = self._cache[key] = (
                [render(seg, self.font) for seg in premise],
                [render(seg, self.font) for seg in hypothesis],
            )
        return cached


class RandomSource:
    """Ablation control: same token counts, label-independent pixels.

    Each image is drawn from a generator keyed by (seed, example id, token
    index), so ablated runs are exactly reproducible. Only the base
    source's token counts are consulted; its rendering is never invoked.
    """

    def __init__(self, base: ImageSource, seed: int):
        self.base = base
        self.seed = seed
        self._cache: dict[tuple[int, int, int], tuple[list[GlyphImage], list[GlyphImage]]] = {}

    def pair_token_counts(self, example: Example) -> tuple[int, int]:
        return self.base.pair_token_counts(example)

    def _keyed_image(self, example_id: int, index: int) -> GlyphImage:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, example_id, index])))
        return random_image(rng)

    def pair_images(self, example: Example) -> tuple[list[GlyphImage], list[GlyphImage]]:
        n_premise, n_hypothesis = self.base.pair_token_counts(example)
        key = (example.id, n_premise, n_hypothesis)
        cached = self._cache.get(key)
        if cached is None:
            premise = [self._keyed_image(example.id, i) for i in range(n_premise)]
            hypothesis = [self._keyed_image(example.id, n_premise + i) for i in range(n_hypothesis)]
            cached = self._cache[key] = (premise, hypothesis)
        return cached


# ---------------------------------------------------------------------------
# forward plumbing shared by train and the evaluators


class _Forward:
    def __init__(
        self,
        params: ModelParams,
        cnn_config: CnnConfig,
        cls_config: ClassifierConfig,
        source: ImageSource | None,
        granularity: str,
        context_only: bool,
    ):
        self.params = params
        self.cnn_config = cnn_config
        self.cls_config = cls_config
        self.source = source
        self.granularity = granularity
        self.context_only = context_only

    def logits(self, example: Example, embeddings: EmbeddingTable, training: bool, rng) -> Tensor:
        c = Tensor(embeddings.get(example.id))
        if self.context_only:
            return forward_context_only(c, self.params, self.cls_config)
        premise, hypothesis = self.source.pair_images(example)
        return forward_nli(
            premise, hypothesis, c, self.params, self.cnn_config,
            training=training, rng=rng, granularity=self.granularity,
        )


def _build_source(
    config: TrainConfig,
    font: BitmapFont | None,
    dictionary: Sequence[str] | None,
    image_source: ImageSource | None,
) -> ImageSource | None:
    if config.context_only:
        return None
    base = image_source
    if base is None:
        if font is None:
            raise ConfigError("a font is required unless running context_only or passing an image source")
        base = RenderedSource(font, Segmenter(config.granularity, dictionary))
    if config.ablation == "random_image":
        return RandomSource(base, config.seed)
    return base


def _check_embeddings(name: str, examples: Sequence[Example], table: EmbeddingTable) -> None:
    for example in examples:
        if example.id not in table:
            raise ConfigError(f"{name} example id {example.id} has no embedding")


def _mean_loss(losses: list[Tensor]) -> Tensor:
    total = reduce(T.add, losses) if len(losses) > 1 else losses[0]
    return T.scale(total, 1.0 / len(losses))


def _eval_predictions(
    forward: _Forward, examples: Sequence[Example], embeddings: EmbeddingTable
) -> tuple[list[int], list[float]]:
    predictions: list[int] = []
    losses: list[float] = []
    with T.no_grad():
        for example in examples:
            logits = forward.logits(example, embeddings, training=False, rng=None)
            predictions.append(predict_label(logits))
            losses.append(T.softmax_cross_entropy(logits, example.label_index).item())
    return predictions, losses


def _confusion(examples: Sequence[Example], predictions: Sequence[int], n_classes: int) -> np.ndarray:
    matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
    for example, pred in zip(examples, predictions):
        matrix[example.label_index, pred] += 1
    return matrix


# ---------------------------------------------------------------------------
# training


def train(
    train_set: Sequence[Example],
    dev_set: Sequence[Example],
    train_emb: EmbeddingTable,
    dev_emb: EmbeddingTable,
    config: TrainConfig,
    font: BitmapFont | None = None,
    cnn_config: CnnConfig | None = None,
    cls_config: ClassifierConfig | None = None,
    dictionary: Sequence[str] | None = None,
    image_source: ImageSource | None = None,
) -> TrainResult:
    """Seeded minibatch training with min-dev-loss model selection.

    Dev loss is measured each epoch with dropout off; the returned
    parameters come from the epoch with the smallest dev loss (earliest
    epoch on ties). History records train loss, dev loss, and dev
    accuracy per epoch.
    """
    if not train_set or not dev_set:
        raise ConfigError("train and dev sets must be non-empty")
    if train_emb.dim != dev_emb.dim:
        raise ConfigError(f"embedding dims differ: train {train_emb.dim}, dev {dev_emb.dim}")
    _check_embeddings("train", train_set, train_emb)
    _check_embeddings("dev", dev_set, dev_emb)

    cnn_config = cnn_config or CnnConfig.default()
    if cls_config is None:
        cls_config = ClassifierConfig(context_dim=train_emb.dim)
    elif cls_config.context_dim != train_emb.dim:
        raise ConfigError(
            f"classifier context_dim {cls_config.context_dim} != embedding dim {train_emb.dim}"
        )

    source = _build_source(config, font, dictionary, image_source)
    init_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([config.seed, 0])))
    params = init_nli_params(init_rng, cnn_config, cls_config)
    forward = _Forward(params, cnn_config, cls_config, source, config.granularity, config.context_only)

    state = OptimizerState(config.optimizer)
    head = params.subset(*HEAD_PREFIXES)
    groups: list[tuple[ModelParams, float]] = [(head, config.lr_head)]
    if not config.context_only:
        groups.append((params.subset(*VISUAL_PREFIXES), config.lr_visual))

    run_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([config.seed, 1])))
    n = len(train_set)
    history: list[HistoryEntry] = []
    best_epoch = -1
    best_loss = float("inf")
    best_arrays: dict[str, np.ndarray] = {}

    for epoch in range(config.epochs):
        order = run_rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            batch = [train_set[i] for i in order[start : start + config.batch_size]]
            losses = [
                T.softmax_cross_entropy(
                    forward.logits(example, train_emb, training=True, rng=run_rng),
                    example.label_index,
                )
                for example in batch
            ]
            mean = _mean_loss(losses)
            mean.backward()
            optimizer_step(state, groups)
            loss_sum += mean.item() * len(batch)
        train_loss = loss_sum / n

        predictions, dev_losses = _eval_predictions(forward, dev_set, dev_emb)
        dev_loss = sum(dev_losses) / len(dev_set)
        correct = sum(1 for example, pred in zip(dev_set, predictions) if pred == example.label_index)
        dev_accuracy = correct / len(dev_set)
        history.append(HistoryEntry(epoch, train_loss, dev_loss, dev_accuracy))

        if dev_loss < best_loss:
            best_loss = dev_loss
            best_epoch = epoch
            best_arrays = params.clone_arrays()
        if config.stop_at_dev_accuracy is not None and dev_accuracy >= config.stop_at_dev_accuracy:
            break

    params.load_arrays(best_arrays)
    return TrainResult(params, history, best_epoch, cnn_config, cls_config)


# ---------------------------------------------------------------------------
# evaluation modes


def evaluate(
    params: ModelParams,
    test_set: Sequence[Example],
    embeddings: EmbeddingTable,
    config: TrainConfig,
    font: BitmapFont | None = None,
    cnn_config: CnnConfig | None = None,
    cls_config: ClassifierConfig | None = None,
    dictionary: Sequence[str] | None = None,
    image_source: ImageSource | None = None,
) -> EvalReport:
    """Accuracy and confusion with dropout off; parameters are read-only."""
    if not test_set:
        raise ConfigError("test set must be non-empty")
    _check_embeddings("test", test_set, embeddings)
    cnn_config = cnn_config or CnnConfig.default()
    cls_config = cls_config or ClassifierConfig(context_dim=embeddings.dim)
    source = _build_source(config, font, dictionary, image_source)
    forward = _Forward(params, cnn_config, cls_config, source, config.granularity, config.context_only)
    predictions, _ = _eval_predictions(forward, test_set, embeddings)
    confusion = _confusion(test_set, predictions, cls_config.n_classes)
    accuracy = float(np.trace(confusion)) / len(test_set)
    return EvalReport(accuracy, confusion, len(test_set), config.as_dict())


def targeted_eval(
    params: ModelParams,
    test_set: Sequence[Example],
    embeddings: EmbeddingTable,
    vocab: Vocab,
    segmenter: Segmenter,
    config: TrainConfig,
    font: BitmapFont | None = None,
    cnn_config: CnnConfig | None = None,
    cls_config: ClassifierConfig | None = None,
    dictionary: Sequence[str] | None = None,
    image_source: ImageSource | None = None,
) -> EvalReport:
    """Full-set report plus accuracy over sentences with at least one UNK."""
    if not test_set:
        raise ConfigError("test set must be non-empty")
    _check_embeddings("test", test_set, embeddings)
    cnn_config = cnn_config or CnnConfig.default()
    cls_config = cls_config or ClassifierConfig(context_dim=embeddings.dim)
    source = _build_source(config, font, dictionary, image_source)
    forward = _Forward(params, cnn_config, cls_config, source, config.granularity, config.context_only)
    predictions, _ = _eval_predictions(forward, test_set, embeddings)

    mask = [count_unk(example, vocab, segmenter) >= 1 for example in test_set]
    subset_total = sum(1 for flag in mask if flag)
    subset_correct = sum(
        1
        for example, pred, flag in zip(test_set, predictions, mask)
        if flag and pred == example.label_index
    )
    confusion = _confusion(test_set, predictions, cls_config.n_classes)
    accuracy = float(np.trace(confusion)) / len(test_set)
    return EvalReport(
        accuracy,
        confusion,
        len(test_set),
        config.as_dict(),
        targeted_accuracy=(subset_correct / subset_total) if subset_total else 0.0,
        targeted_count=subset_total,
        targeted_empty=subset_total == 0,
    )


def ablation_run(
    train_set: Sequence[Example],
    dev_set: Sequence[Example],
    test_set: Sequence[Example],
    train_emb: EmbeddingTable,
    dev_emb: EmbeddingTable,
    test_emb: EmbeddingTable,
    config: TrainConfig,
    font: BitmapFont | None = None,
    cnn_config: CnnConfig | None = None,
    cls_config: ClassifierConfig | None = None,
    dictionary: Sequence[str] | None = None,
    image_source: ImageSource | None = None,
) -> EvalReport:
    """Train and evaluate with every token image replaced by keyed noise."""
    config = dataclasses.replace(config, ablation="random_image")
    result = train(
        train_set, dev_set, train_emb, dev_emb, config,
        font=font, cnn_config=cnn_config, cls_config=cls_config,
        dictionary=dictionary, image_source=image_source,
    )
    return evaluate(
        result.params, test_set, test_emb, config,
        font=font, cnn_config=result.cnn_config, cls_config=result.cls_config,
        dictionary=dictionary, image_source=image_source,
    )


# ---------------------------------------------------------------------------
# character recognition harness


def charrec_run(
    font: BitmapFont,
    n_classes: int,
    samples_per_class: int,
    noise: float,
    seed: int,
    epochs: int = 12,
    lr: float = 1e-3,
    batch_size: int = 32,
    cnn_config: CnnConfig | None = None,
) -> EvalReport:
    """Classify rendered glyphs under pixel-flip noise with the CNN.

    The first n_classes covered codepoints (sorted) become the classes;
    each gets samples_per_class noisy renders, split 80/20 into train and
    test. A linear head on the CNN feature is trained with Adam and final
    parameters are scored on the held-out renders.
    """
    if n_classes < 2:
        raise ConfigError(f"need at least 2 classes, got {n_classes}")
    if samples_per_class < 2:
        raise ConfigError(f"need at least 2 samples per class, got {samples_per_class}")
    if not (0.0 <= noise < 1.0):
        raise ConfigError(f"noise must be in [0, 1), got {noise}")
    covered = sorted(font.glyphs)
    if len(covered) < n_classes:
        raise ConfigError(f"font covers {len(covered)} codepoints, need {n_classes}")
    cnn_config = cnn_config or CnnConfig.default()

    classes = covered[:n_classes]
    noise_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 2])))
    n_test = max(1, samples_per_class // 5)
    train_x: list[np.ndarray] = []
    train_y: list[int] = []
    test_x: list[np.ndarray] = []
    test_y: list[int] = []
    for cls, codepoint in enumerate(classes):
        base = render(chr(codepoint), font).pixels
        for index in range(samples_per_class):
            flips = noise_rng.random(base.shape) < noise
            pixels = np.where(flips, 1.0 - base, base).astype(np.float32)
            if index < samples_per_class - n_test:
                train_x.append(pixels)
                train_y.append(cls)
            else:
                test_x.append(pixels)
                test_y.append(cls)

    init_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0])))
    params = init_cnn_params(init_rng, cnn_config)
    bound = float(np.sqrt(1.0 / cnn_config.fc2_out))
    params.add("head.weight", init_rng.uniform(-bound, bound, size=(n_classes, cnn_config.fc2_out)).astype(np.float32))
    params.add("head.bias", np.zeros(n_classes, dtype=np.float32))

    def batch_logits(pixels: list[np.ndarray]) -> Tensor:
        stacked = Tensor(np.stack(pixels)[:, None, :, :])
        feats = _cnn_features(stacked, params, cnn_config)
        return T.linear(feats, params["head.weight"], params["head.bias"])

    state = OptimizerState("adam")
    run_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 1])))
    n = len(train_x)
    for _ in range(epochs):
        order = run_rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            logits = batch_logits([train_x[i] for i in idx])
            losses = [
                T.softmax_cross_entropy(T.take_row(logits, row), train_y[i])
                for row, i in enumerate(idx)
            ]
            _mean_loss(losses).backward()
            optimizer_step(state, [(params, lr)])

    with T.no_grad():
        logits = batch_logits(test_x)
        predictions = np.argmax(logits.data, axis=1)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for gold, pred in zip(test_y, predictions):
        confusion[gold, int(pred)] += 1
    accuracy = float(np.trace(confusion)) / len(test_y)
    echo = {
        "run": "charrec",
        "n_classes": n_classes,
        "samples_per_class": samples_per_class,
        "noise": noise,
        "seed": seed,
        "epochs": epochs,
        "lr": lr,
        "batch_size": batch_size,
    }
    return EvalReport(accuracy, confusion, len(test_y), echo)


# ---------------------------------------------------------------------------
# report emission


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _class_names(n: int) -> list[str]:
    if n == len(LABELS):
        return list(LABELS)
    return [str(i) for i in range(n)]


def _csv_rows(report: EvalReport) -> list[tuple[str, str]]:
    rows = [("accuracy", _fmt(report.accuracy)), ("n_examples", _fmt(report.n_examples))]
    names = _class_names(report.confusion.shape[0])
    for i, gold in enumerate(names):
        for j, pred in enumerate(names):
            rows.append((f"confusion_{gold}_{pred}", _fmt(int(report.confusion[i, j]))))
    if report.targeted_count is not None:
        rows.append(("targeted_accuracy", _fmt(report.targeted_accuracy)))
        rows.append(("unk_sentences", _fmt(report.targeted_count)))
        if report.targeted_empty:
            rows.append(("targeted_empty", "true"))
    return rows


def emit_report(report: EvalReport, path, fmt: str) -> None:
    """Write a report as `metric,value` CSV or a one-row markdown table."""
    if fmt == "csv":
        lines = ["metric,value"] + [f"{metric},{value}" for metric, value in _csv_rows(report)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif fmt == "markdown":
        emit_markdown([report], path)
    else:
        raise ConfigError(f"unknown report format {fmt!r}, expected 'csv' or 'markdown'")


def emit_markdown(reports: Sequence[EvalReport], path) -> None:
    """One table row per run, one column per metric."""
    targeted = any(report.targeted_count is not None for report in reports)
    header = ["run", "accuracy", "n_examples"]
    if targeted:
        header += ["targeted_accuracy", "unk_sentences"]
    lines = ["| " + " | ".join(header) + " |", "| " + " | ".join("---" for _ in header) + " |"]
    for index, report in enumerate(reports):
        row = [
            str(report.config.get("run", f"run{index}")),
            _fmt(report.accuracy),
            _fmt(report.n_examples),
        ]
        if targeted:
            if report.targeted_count is not None:
                row += [_fmt(report.targeted_accuracy), _fmt(report.targeted_count)]
            else:
                row += ["-", "-"]
        lines.append("| " + " | ".join(row) + " |")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_history_csv(history: Sequence[HistoryEntry], path) -> None:
    lines = ["epoch,train_loss,dev_loss,dev_accuracy"]
    for entry in history:
        lines.append(
            f"{entry.epoch},{_fmt(entry.train_loss)},{_fmt(entry.dev_loss)},{_fmt(entry.dev_accuracy)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
