"""Procedural fonts and synthetic datasets for tests and demos.

The bundled font is generated, not licensed: every glyph is a bordered
frame around a pseudorandom interior derived from its codepoint, so all
glyphs are visually distinct and the whole font is reproducible from
code. Three marker glyphs (solid, horizontal stripes, vertical stripes)
have strong structure on purpose: the glyph-determined task below sets
the label by the marker that starts the hypothesis, which only a model
that actually reads pixels can exploit.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import LABELS
from .errors import ConfigError
from .raster import BitmapFont

__all__ = [
    "GLYPH_HEIGHT",
    "GLYPH_WIDTH",
    "MARKER_CODEPOINTS",
    "CJK_FILLERS",
    "build_font",
    "write_bdf",
    "build_latin_dataset",
    "build_devanagari_dataset",
    "build_cjk_dataset",
    "build_glyph_task",
    "build_unk_small",
    "build_split_file",
]

GLYPH_HEIGHT = 12
GLYPH_WIDTH = 8

DIGITS = tuple(range(0x30, 0x3A))
LATIN = tuple(range(0x61, 0x7B))
DEVANAGARI = tuple(range(0x0905, 0x091D))
CJK_FILLERS = tuple(range(0x4E00, 0x4E30))
# one marker per NLI class, in LABELS order
MARKER_CODEPOINTS = (0x7A00, 0x7A01, 0x7A02)

_M64 = 2**64 - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


def _framed_glyph(codepoint: int) -> np.ndarray:
    glyph = np.zeros((GLYPH_HEIGHT, GLYPH_WIDTH), dtype=np.uint8)
    glyph[0, :] = glyph[-1, :] = 1
    glyph[:, 0] = glyph[:, -1] = 1
    for r in range(1, GLYPH_HEIGHT - 1):
        for c in range(1, GLYPH_WIDTH - 1):
            glyph[r, c] = _splitmix64(codepoint * 4096 + r * 64 + c) & 1
    return glyph


def _marker_glyphs() -> dict[int, np.ndarray]:
    solid = np.ones((GLYPH_HEIGHT, GLYPH_WIDTH), dtype=np.uint8)
    hstripes = np.zeros((GLYPH_HEIGHT, GLYPH_WIDTH), dtype=np.uint8)
    hstripes[0::2, :] = 1
    vstripes = np.zeros((GLYPH_HEIGHT, GLYPH_WIDTH), dtype=np.uint8)
    vstripes[:, 0::2] = 1
    return dict(zip(MARKER_CODEPOINTS, (solid, hstripes, vstripes)))


def build_font() -> BitmapFont:
    """The fixture font: digits, Latin, Devanagari, CJK fillers, markers."""
    glyphs: dict[int, np.ndarray] = {}
    for cp in (*DIGITS, *LATIN, *DEVANAGARI, *CJK_FILLERS):
        glyphs[cp] = _framed_glyph(cp)
    glyphs.update(_marker_glyphs())
    patterns = {g.tobytes() for g in glyphs.values()}
    if len(patterns) != len(glyphs):
        raise ConfigError("procedural font produced colliding glyph patterns")
    return BitmapFont(glyphs, GLYPH_HEIGHT)


def write_bdf(glyphs: dict[int, np.ndarray], height: int, path, name: str = "glyphsynth") -> None:
    """Emit the BDF subset for a glyph map (hex rows, MSB = left pixel)."""
    lines = [
        "STARTFONT 2.1",
        f"FONT {name}",
        f"SIZE {height} 75 75",
        f"FONTBOUNDINGBOX {max((g.shape[1] for g in glyphs.values()), default=1)} {height} 0 0",
        f"CHARS {len(glyphs)}",
    ]
    for cp in sorted(glyphs):
        bitmap = np.asarray(glyphs[cp], dtype=np.uint8)
        width = bitmap.shape[1]
        n_bytes = (width + 7) // 8
        row_bits = n_bytes * 8
        lines += [
            f"STARTCHAR uni{cp:04X}",
            f"ENCODING {cp}",
            "SWIDTH 500 0",
            f"DWIDTH {width} 0",
            f"BBX {width} {height} 0 0",
            "BITMAP",
        ]
        for row in bitmap:
            value = 0
            for j, bit in enumerate(row):
                if bit:
                    value |= 1 << (row_bits - 1 - j)
            lines.append(f"{value:0{2 * n_bytes}X}")
        lines.append("ENDCHAR")
    lines.append("ENDFONT")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# dataset builders (each returns TSV lines, label = line index mod 3)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _word(rng: np.random.Generator, alphabet: tuple[int, ...], lo: int, hi: int) -> str:
    length = int(rng.integers(lo, hi + 1))
    return "".join(chr(alphabet[int(i)]) for i in rng.integers(0, len(alphabet), size=length))


def _sentence(rng: np.random.Generator, alphabet: tuple[int, ...], words: tuple[int, int], word_len: tuple[int, int]) -> str:
    count = int(rng.integers(words[0], words[1] + 1))
    return " ".join(_word(rng, alphabet, *word_len) for _ in range(count))


def _unique_pairs(make, n: int) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    while len(pairs) < n:
        pair = make()
        if pair not in seen:
            seen.add(pair)
            pairs.append(pair)
    return pairs


def _to_lines(pairs: list[tuple[str, str]]) -> list[str]:
    return [f"{p}\t{h}\t{LABELS[i % 3]}" for i, (p, h) in enumerate(pairs)]


def build_latin_dataset(n: int = 60, seed: int = 101) -> list[str]:
    rng = _rng(seed)
    make = lambda: (
        _sentence(rng, LATIN, (4, 7), (3, 6)),
        _sentence(rng, LATIN, (4, 7), (3, 6)),
    )
    return _to_lines(_unique_pairs(make, n))


def build_devanagari_dataset(n: int = 60, seed: int = 102) -> list[str]:
    rng = _rng(seed)
    make = lambda: (
        _sentence(rng, DEVANAGARI, (3, 6), (2, 4)),
        _sentence(rng, DEVANAGARI, (3, 6), (2, 4)),
    )
    return _to_lines(_unique_pairs(make, n))


def build_cjk_dataset(n: int = 60, seed: int = 103) -> list[str]:
    rng = _rng(seed)
    make = lambda: (
        _word(rng, CJK_FILLERS, 8, 14),
        _word(rng, CJK_FILLERS, 8, 14),
    )
    return _to_lines(_unique_pairs(make, n))


def build_glyph_task(
    n_train: int = 48, n_dev: int = 12, n_test: int = 30, seed: int = 104
) -> dict[str, list[str]]:
    """The glyph-determined task: the label IS the hypothesis-initial marker.

    Train and dev draw filler characters from the first half of the CJK
    block; most test sentences draw from the held-out second half, so
    their fillers are out-of-vocabulary (spaceless text also means the
    hash-embedding branch sees each sentence as one unseen token). Six
    test examples reuse the training pool so the UNK subset is a strict
    subset. Returns tsv line lists plus the train-derived vocab.
    """
    rng = _rng(seed)
    train_pool = CJK_FILLERS[:32]
    test_pool = CJK_FILLERS[32:48]

    def make_with(pool: tuple[int, ...], index: int) -> tuple[str, str]:
        # short sentences keep the marker a large share of the pooled mean
        marker = chr(MARKER_CODEPOINTS[index % 3])
        premise = _word(rng, pool, 3, 5)
        hypothesis = marker + _word(rng, pool, 2, 4)
        return premise, hypothesis

    seen: set[tuple[str, str]] = set()

    def take(pool: tuple[int, ...], count: int, offset: int) -> list[tuple[str, str]]:
        out: list[tuple[str, str]] = []
        while len(out) < count:
            pair = make_with(pool, offset + len(out))
            if pair not in seen:
                seen.add(pair)
                out.append(pair)
        return out

    train_pairs = take(train_pool, n_train, 0)
    dev_pairs = take(train_pool, n_dev, 0)
    test_unk = take(test_pool, n_test - 6, 0)
    test_known = take(train_pool, 6, n_test - 6)
    test_pairs = test_unk + test_known

    vocab = sorted({ch for p, h in train_pairs for ch in p + h})
    return {
        "train": _to_lines(train_pairs),
        "dev": _to_lines(dev_pairs),
        "test": _to_lines(test_pairs),
        "vocab": vocab,
    }


def build_unk_small(seed: int = 105) -> dict[str, list[str]]:
    """Eight word-mode examples; exactly the last four contain an OOV token."""
    rng = _rng(seed)
    known = [_word(rng, LATIN, 3, 6) for _ in range(12)]
    unknown = [_word(rng, LATIN, 3, 6) for _ in range(4)]
    while set(known) & set(unknown) or len(set(known)) < 12 or len(set(unknown)) < 4:
        known = [_word(rng, LATIN, 3, 6) for _ in range(12)]
        unknown = [_word(rng, LATIN, 3, 6) for _ in range(4)]

    def pick(pool: list[str], count: int) -> str:
        idx = rng.integers(0, len(pool), size=count)
        return " ".join(pool[int(i)] for i in idx)

    pairs = []
    for i in range(4):
        pairs.append((pick(known, 3), pick(known, 2)))
    for i in range(4):
        pairs.append((pick(known, 3), pick(known, 2) + " " + unknown[i]))
    return {"data": _to_lines(pairs), "vocab": sorted(set(known))}


def build_split_file(n: int, seed: int) -> list[str]:
    """Size-matched synthetic split (Latin, word mode) for loader checks."""
    rng = _rng(seed)
    lines = []
    for i in range(n):
        premise = _sentence(rng, LATIN, (3, 6), (3, 6))
        hypothesis = _sentence(rng, LATIN, (3, 6), (3, 6))
        lines.append(f"{premise}\t{hypothesis}\t{LABELS[i % 3]}")
    return lines
