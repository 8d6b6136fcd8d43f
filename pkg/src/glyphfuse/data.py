"""Datasets, embedding tables, vocab files, and checkpoints.

Binary formats (GEMB embedding tables, GFCK checkpoints) are little-endian
and fully specified here, so files round-trip bit-exactly across
platforms. The hash-embedding generator is a platform-independent stand-in
for a real language model: it hashes tokens to pseudorandom unit vectors
so the whole pipeline runs with no external artifacts.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, FormatError
from .raster import Segmenter, segment
from .tensor import ModelParams

__all__ = [
    "LABELS",
    "Example",
    "EmbeddingTable",
    "Vocab",
    "read_tsv",
    "read_gemb",
    "write_gemb",
    "gen_hash_embeddings",
    "read_vocab",
    "count_unk",
    "save_checkpoint",
    "load_checkpoint",
]

LABELS = ("entailment", "neutral", "contradiction")
_LABEL_INDEX = {name: i for i, name in enumerate(LABELS)}


@dataclass(frozen=True)
class Example:
    """One NLI instance; ids follow 0-based line order within a file."""

    id: int
    premise: str
    hypothesis: str
    label: str

    def __post_init__(self) -> None:
        if self.id < 0:
            raise FormatError(f"example id must be non-negative, got {self.id}")
        if not self.premise or not self.hypothesis:
            raise FormatError(f"example {self.id}: premise and hypothesis must be non-empty")
        if self.label not in _LABEL_INDEX:
            raise FormatError(f"example {self.id}: unknown label {self.label!r}")

    @property
    def label_index(self) -> int:
        return _LABEL_INDEX[self.label]


def read_tsv(path) -> list[Example]:
    """Parse `premise<TAB>hypothesis<TAB>label` lines, no header, UTF-8.

    Labels are case-insensitive. Errors carry the 1-based line number.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    examples: list[Example] = []
    for lineno, line in enumerate(lines, 1):
        columns = line.split("\t")
        if len(columns) != 3:
            raise FormatError(f"{path}:{lineno}: expected 3 tab-separated columns, got {len(columns)}")
        premise, hypothesis, raw_label = columns
        label = raw_label.strip().lower()
        if label not in _LABEL_INDEX:
            raise FormatError(f"{path}:{lineno}: unknown label {raw_label!r}")
        if not premise or not hypothesis:
            raise FormatError(f"{path}:{lineno}: empty premise or hypothesis")
        examples.append(Example(id=lineno - 1, premise=premise, hypothesis=hypothesis, label=label))
    return examples


# ---------------------------------------------------------------------------
# GEMB embedding tables

_GEMB_MAGIC = b"GEMB"
_GEMB_VERSION = 1
_U64_MAX = 2**64 - 1


class EmbeddingTable:
    """Map from example id to a fixed-width float32 vector."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ConfigError(f"embedding dim must be positive, got {dim}")
        self.dim = dim
        self.vectors: dict[int, np.ndarray] = {}

    def put(self, example_id: int, vector: np.ndarray) -> None:
        if not (0 <= example_id <= _U64_MAX):
            raise FormatError(f"embedding id {example_id} outside u64 range")
        arr = np.asarray(vector, dtype=np.float32)
        if arr.shape != (self.dim,):
            raise DimensionError(f"embedding for id {example_id}: shape {arr.shape} != ({self.dim},)")
        self.vectors[example_id] = arr

    def get(self, example_id: int) -> np.ndarray:
        try:
            return self.vectors[example_id]
        except KeyError:
            raise ConfigError(f"no embedding stored for example id {example_id}") from None

    def __contains__(self, example_id: int) -> bool:
        return example_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.vectors.keys() == other.vectors.keys()
            and all(np.array_equal(v, other.vectors[k]) for k, v in self.vectors.items())
        )


def write_gemb(table: EmbeddingTable, path) -> None:
    """magic | version u32 | dim u32 | count u64 | records of (id u64, dim f32)."""
    parts = [_GEMB_MAGIC, struct.pack("<IIQ", _GEMB_VERSION, table.dim, len(table.vectors))]
    for example_id in sorted(table.vectors):
        parts.append(struct.pack("<Q", example_id))
        parts.append(table.vectors[example_id].astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_gemb(path) -> EmbeddingTable:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 20:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    if blob[:4] != _GEMB_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    version, dim, count = struct.unpack_from("<IIQ", blob, 4)
    if version != _GEMB_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dim < 1:
        raise FormatError(f"{path}: embedding dim must be positive, got {dim}")
    record = 8 + 4 * dim
    expected = 20 + count * record
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {count} records, found {len(blob)}")
    table = EmbeddingTable(dim)
    offset = 20
    for _ in range(count):
        (example_id,) = struct.unpack_from("<Q", blob, offset)
        if example_id in table.vectors:
            raise FormatError(f"{path}: duplicate id {example_id}")
        vector = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset + 8).copy()
        table.vectors[example_id] = vector
        offset += record
    return table


# ---------------------------------------------------------------------------
# hash embeddings
#
# Fixed 64-bit pipeline so all platforms agree bit for bit:
# FNV-1a over the token's UTF-8 bytes plus the seed, a splitmix64 finish,
# then one LCG draw per coordinate mapped into [-1, 1).

_M64 = 2**64 - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_LCG_A = 6364136223846793005
_LCG_C = 1442695040888963407


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _M64
    return h


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


_LCG_TABLES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _lcg_tables(dim: int) -> tuple[np.ndarray, np.ndarray]:
    # x_{j+1} = A^j x_1 + C (A^{j-1} + ... + 1), precomputed per coordinate
    cached = _LCG_TABLES.get(dim)
    if cached is not None:
        return cached
    a_pow, geo = [], []
    power, acc = 1, 0
    for _ in range(dim):
        a_pow.append(power)
        geo.append(acc)
        acc = (acc + power) & _M64
        power = (power * _LCG_A) & _M64
    tables = (np.array(a_pow, dtype=np.uint64), np.array(geo, dtype=np.uint64))
    _LCG_TABLES[dim] = tables
    return tables


def _token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    state = _splitmix64(_fnv1a64(token.encode("utf-8") + struct.pack("<Q", seed & _M64)))
    a_pow, geo = _lcg_tables(dim)
    with np.errstate(over="ignore"):
        draws = a_pow * np.uint64(state) + geo * np.uint64(_LCG_C)
    return ((draws >> np.uint64(11)).astype(np.float64) / float(2**53)) * 2.0 - 1.0


def gen_hash_embeddings(examples, dim: int, seed: int) -> EmbeddingTable:
    """One pseudorandom unit vector per example, summed over the pair's
    whitespace-delimited tokens. Deterministic across platforms."""
    if dim < 1:
        raise ConfigError(f"embedding dim must be positive, got {dim}")
    table = EmbeddingTable(dim)
    cache: dict[str, np.ndarray] = {}
    for example in examples:
        total = np.zeros(dim, dtype=np.float64)
        for token in example.premise.split() + example.hypothesis.split():
            vec = cache.get(token)
            if vec is None:
                vec = cache[token] = _token_vector(token, dim, seed)
            total += vec
        norm = float(np.linalg.norm(total))
        if norm > 0.0:
            total /= norm
        table.put(example.id, total.astype(np.float32))
    return table


# ---------------------------------------------------------------------------
# vocab / UNK counting


class Vocab:
    """Set of known tokens; anything else counts as UNK."""

    def __init__(self, tokens):
        self.tokens = frozenset(tokens)
        if "" in self.tokens:
            raise FormatError("vocab contains an empty token")

    def __contains__(self, token: str) -> bool:
        return token in self.tokens

    def __len__(self) -> int:
        return len(self.tokens)


def read_vocab(path) -> Vocab:
    """UTF-8, one token per line; blank lines are skipped."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    return Vocab(line for line in lines if line)


def count_unk(example: Example, vocab: Vocab, segmenter: Segmenter) -> int:
    """Number of segmented pair tokens missing from the vocab."""
    tokens = segment(example.premise, segmenter) + segment(example.hypothesis, segmenter)
    return sum(1 for token in tokens if token not in vocab)


# ---------------------------------------------------------------------------
# GFCK checkpoints

_GFCK_MAGIC = b"GFCK"
_GFCK_VERSION = 1


def save_checkpoint(params: ModelParams, path) -> None:
    """magic | version u32 | count u32 | per tensor (sorted by name):
    name-len u16, UTF-8 name, rank u8, rank x u32 dims, f32 row-major."""
    names = sorted(params.names())
    parts = [_GFCK_MAGIC, struct.pack("<II", _GFCK_VERSION, len(names))]
    for name in names:
        tensor = params[name]
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise FormatError(f"parameter name too long to store: {name[:40]}...")
        arr = tensor.data.astype("<f4")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


def _read_exact(blob: bytes, offset: int, size: int, path, what: str) -> int:
    if offset + size > len(blob):
        raise FormatError(f"{path}: truncated while reading {what}")
    return offset + size


def read_checkpoint_arrays(path) -> dict[str, np.ndarray]:
    """Raw name -> array contents of a checkpoint file."""
    path = Path(path)
    blob = path.read_bytes()
    offset = _read_exact(blob, 0, 12, path, "header")
    if blob[:4] != _GFCK_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != _GFCK_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        end = _read_exact(blob, offset, 2, path, "name length")
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset = end
        end = _read_exact(blob, offset, name_len, path, "name")
        name = blob[offset:end].decode("utf-8")
        offset = end
        end = _read_exact(blob, offset, 1, path, "rank")
        rank = blob[offset]
        offset = end
        end = _read_exact(blob, offset, 4 * rank, path, f"dims of {name}")
        dims = struct.unpack_from(f"<{rank}I", blob, offset) if rank else ()
        offset = end
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        end = _read_exact(blob, offset, 4 * size, path, f"data of {name}")
        data = np.frombuffer(blob, dtype="<f4", count=size, offset=offset).reshape(dims).copy()
        offset = end
        if name in arrays:
            raise FormatError(f"{path}: duplicate tensor name {name!r}")
        arrays[name] = data
    if offset != len(blob):
        raise FormatError(f"{path}: {len(blob) - offset} trailing bytes after last tensor")
    return arrays


def load_checkpoint(path, params: ModelParams) -> ModelParams:
    """Load stored tensors into an existing parameter collection.

    Every name and shape must match the collection built from the current
    configs; mismatches are reported with the offending tensor named.
    """
    arrays = read_checkpoint_arrays(path)
    stored, expected = set(arrays), set(params.names())
    if stored != expected:
        missing = sorted(expected - stored)
        extra = sorted(stored - expected)
        raise FormatError(f"{path}: checkpoint does not match model config: missing={missing} extra={extra}")
    for name, arr in arrays.items():
        want = params[name].data.shape
        if arr.shape != want:
            raise FormatError(f"{path}: tensor {name!r} has shape {arr.shape}, model expects {want}")
    params.load_arrays(arrays)
    return params
