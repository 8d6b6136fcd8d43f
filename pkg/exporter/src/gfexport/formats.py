"""File formats shared with the downstream consumer.

The embedding table format is `GEMB | version u32 | dim u32 | count u64`
followed by (id u64, dim * f32) records sorted by id, all little-endian.
Vocabulary files are UTF-8, one token per line, no blank lines. Both are
written atomically (temp file in the same directory, then rename) so a
crashed export never leaves a truncated file behind.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_GEMB_MAGIC = b"GEMB"
_GEMB_VERSION = 1

_LABELS = ("entailment", "neutral", "contradiction")


class ExportError(Exception):
    """Raised for malformed inputs, bad configuration, or unloadable models."""


@dataclass(frozen=True)
class Pair:
    """One input example: a premise/hypothesis sentence pair.

    The id is the 0-based position in the source file, which is what the
    consumer uses to join embeddings back to examples.
    """

    example_id: int
    premise: str
    hypothesis: str
    label: str


def read_pairs(path) -> list[Pair]:
    """Parse `premise<TAB>hypothesis<TAB>label` lines, no header, UTF-8."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"{path}: {exc.strerror or exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    pairs: list[Pair] = []
    for lineno, line in enumerate(lines, 1):
        columns = line.split("\t")
        if len(columns) != 3:
            raise ExportError(f"{path}:{lineno}: expected 3 tab-separated columns, got {len(columns)}")
        premise, hypothesis, label = columns
        if not premise or not hypothesis:
            raise ExportError(f"{path}:{lineno}: empty premise or hypothesis")
        if label.lower() not in _LABELS:
            raise ExportError(f"{path}:{lineno}: unknown label {label!r}")
        pairs.append(Pair(lineno - 1, premise, hypothesis, label.lower()))
    return pairs


def _write_atomic(path: Path, blob: bytes) -> None:
    # temp file in the target directory so os.replace stays on one filesystem
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_gemb(vectors: dict[int, np.ndarray], dim: int, path) -> None:
    """Write an embedding table; records are sorted by example id."""
    if dim < 1:
        raise ExportError(f"embedding dim must be positive, got {dim}")
    parts = [_GEMB_MAGIC, struct.pack("<IIQ", _GEMB_VERSION, dim, len(vectors))]
    for example_id in sorted(vectors):
        vector = np.asarray(vectors[example_id], dtype=np.float32)
        if vector.shape != (dim,):
            raise ExportError(f"embedding for id {example_id}: shape {vector.shape} != ({dim},)")
        parts.append(struct.pack("<Q", example_id))
        parts.append(vector.astype("<f4").tobytes())
    _write_atomic(Path(path), b"".join(parts))


def write_vocab(tokens: list[str], path) -> None:
    """Write one token per line; empty tokens are rejected, not skipped."""
    for token in tokens:
        if not token:
            raise ExportError("vocab contains an empty token")
        if "\n" in token or "\r" in token:
            raise ExportError(f"vocab token {token!r} contains a line break")
    blob = "".join(token + "\n" for token in tokens).encode("utf-8")
    _write_atomic(Path(path), blob)
