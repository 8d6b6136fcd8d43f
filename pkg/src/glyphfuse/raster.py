"""Text segmentation and deterministic glyph rasterization.

Text is split into segments (whitespace words, dictionary longest-match
compounds, or single codepoints) and each segment is drawn onto a fixed
30x60 canvas from bitmap font glyphs. Everything is integer arithmetic:
the same segment and font produce bit-identical pixels on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigError, DimensionError, FormatError

__all__ = [
    "CANVAS_HEIGHT",
    "CANVAS_WIDTH",
    "GlyphImage",
    "BitmapFont",
    "Segmenter",
    "segment",
    "render",
    "load_bdf",
    "load_dictionary",
    "random_image",
    "write_pgm",
]

# Canvas is 30 rows tall by 60 columns wide, suiting horizontal scripts.
CANVAS_HEIGHT = 30
CANVAS_WIDTH = 60

_GAP = 1  # blank columns between adjacent glyphs


@dataclass
class GlyphImage:
    """A rendered text segment: 30x60 pixels in [0, 1], 1 = ink."""

    pixels: np.ndarray
    source_text: str

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=np.float32)
        if self.pixels.shape != (CANVAS_HEIGHT, CANVAS_WIDTH):
            raise DimensionError(
                f"glyph image must be {CANVAS_HEIGHT}x{CANVAS_WIDTH}, got {self.pixels.shape}"
            )
        if not np.all(np.isfinite(self.pixels)):
            raise DimensionError("glyph image contains non-finite pixels")
        lo, hi = float(self.pixels.min()), float(self.pixels.max())
        if lo < 0.0 or hi > 1.0:
            raise DimensionError(f"glyph image pixels outside [0, 1]: min {lo}, max {hi}")


def _default_box(height: int) -> np.ndarray:
    # hollow rectangle used for codepoints the font does not cover
    width = max(3, height * 2 // 3)
    box = np.zeros((height, width), dtype=np.uint8)
    box[0, :] = 1
    box[-1, :] = 1
    box[:, 0] = 1
    box[:, -1] = 1
    return box


class BitmapFont:
    """Monochrome bitmap glyphs keyed by codepoint, all of one height."""

    def __init__(self, glyphs: dict[int, np.ndarray], height: int, default_glyph: np.ndarray | None = None):
        if height < 1:
            raise ConfigError(f"font height must be positive, got {height}")
        self.height = height
        self.glyphs: dict[int, np.ndarray] = {}
        for cp, bitmap in glyphs.items():
            self.glyphs[cp] = self._check_bitmap(bitmap, f"glyph U+{cp:04X}")
        if default_glyph is None:
            default_glyph = _default_box(height)
        self.default_glyph = self._check_bitmap(default_glyph, "default glyph")

    def _check_bitmap(self, bitmap: np.ndarray, what: str) -> np.ndarray:
        arr = np.asarray(bitmap, dtype=np.uint8)
        if arr.ndim != 2 or arr.shape[0] != self.height or arr.shape[1] < 1:
            raise DimensionError(
                f"{what}: bitmap shape {arr.shape} incompatible with font height {self.height}"
            )
        if arr.max(initial=0) > 1:
            raise DimensionError(f"{what}: bitmap values must be 0 or 1")
        return arr

    def glyph(self, codepoint: int) -> np.ndarray:
        return self.glyphs.get(codepoint, self.default_glyph)

    def __contains__(self, codepoint: int) -> bool:
        return codepoint in self.glyphs

    def __len__(self) -> int:
        return len(self.glyphs)


class Segmenter:
    """Splitting policy: whitespace words or single codepoints.

    In word mode an optional dictionary triggers greedy longest-match
    splitting inside any whitespace chunk that shares codepoints with the
    dictionary (the spaceless-script case). Char mode never consults it.
    """

    def __init__(self, mode: str, dictionary: Iterable[str] | None = None):
        if mode not in ("word", "char"):
            raise ConfigError(f"segmenter mode must be 'word' or 'char', got {mode!r}")
        entries = frozenset(dictionary or ())
        for entry in entries:
            if not entry:
                raise ConfigError("dictionary entries must be non-empty")
            if any(ch.isspace() for ch in entry):
                raise ConfigError(f"dictionary entry {entry!r} contains whitespace")
        self.mode = mode
        self.entries = entries
        self.max_entry_len = max((len(e) for e in entries), default=0)
        self.covered = frozenset(ch for entry in entries for ch in entry)


def segment(text: str, segmenter: Segmenter) -> list[str]:
    """Split text into renderable segments; whitespace never survives."""
    if segmenter.mode == "char":
        return [ch for ch in text if not ch.isspace()]
    segments: list[str] = []
    for chunk in text.split():
        if segmenter.entries and any(ch in segmenter.covered for ch in chunk):
            segments.extend(_longest_match(chunk, segmenter))
        else:
            segments.append(chunk)
    return segments


def _longest_match(chunk: str, segmenter: Segmenter) -> list[str]:
    out: list[str] = []
    i, n = 0, len(chunk)
    while i < n:
        for length in range(min(segmenter.max_entry_len, n - i), 0, -1):
            if chunk[i : i + length] in segmenter.entries:
                out.append(chunk[i : i + length])
                i += length
                break
        else:
            out.append(chunk[i])
            i += 1
    return out


def render(seg: str, font: BitmapFont) -> GlyphImage:
    """Draw a segment onto the 30x60 canvas.

    Glyphs are laid out left to right with a one-pixel gap. Compositions
    wider than 60 or taller than 30 are downscaled (nearest neighbor,
    aspect preserved) to fit; the result is centered with left/top bias
    on odd margins.
    """
    if not seg:
        raise DimensionError("cannot render an empty segment")
    bitmaps = [font.glyph(ord(ch)) for ch in seg]
    height = font.height
    total_w = sum(b.shape[1] for b in bitmaps) + _GAP * (len(bitmaps) - 1)
    composed = np.zeros((height, total_w), dtype=np.uint8)
    x = 0
    for bitmap in bitmaps:
        composed[:, x : x + bitmap.shape[1]] = bitmap
        x += bitmap.shape[1] + _GAP

    h_t, w_t = height, total_w
    if height > CANVAS_HEIGHT or total_w > CANVAS_WIDTH:
        # integer aspect-fit: no float rounding anywhere
        if total_w * CANVAS_HEIGHT >= height * CANVAS_WIDTH:
            w_t = CANVAS_WIDTH
            h_t = max(1, (height * CANVAS_WIDTH) // total_w)
        else:
            h_t = CANVAS_HEIGHT
            w_t = max(1, (total_w * CANVAS_HEIGHT) // height)
        rows = ((2 * np.arange(h_t) + 1) * height) // (2 * h_t)
        cols = ((2 * np.arange(w_t) + 1) * total_w) // (2 * w_t)
        composed = composed[np.ix_(rows, cols)]

    canvas = np.zeros((CANVAS_HEIGHT, CANVAS_WIDTH), dtype=np.float32)
    top = (CANVAS_HEIGHT - h_t) // 2
    left = (CANVAS_WIDTH - w_t) // 2
    canvas[top : top + h_t, left : left + w_t] = composed
    return GlyphImage(canvas, seg)


def random_image(rng: np.random.Generator) -> GlyphImage:
    """Label-free control input: every pixel an independent fair coin."""
    pixels = rng.integers(0, 2, size=(CANVAS_HEIGHT, CANVAS_WIDTH)).astype(np.float32)
    return GlyphImage(pixels, "<random>")


def write_pgm(image: GlyphImage, path) -> None:
    """Binary PGM (P5), maxval 255, ink rendered as 255."""
    data = np.rint(image.pixels * 255.0).astype(np.uint8).tobytes()
    header = f"P5\n{CANVAS_WIDTH} {CANVAS_HEIGHT}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data)


def load_dictionary(path) -> list[str]:
    """One segmentation entry per line; blank lines are skipped."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    return [line for line in lines if line]


# ---------------------------------------------------------------------------
# BDF font loading

_HEX_DIGITS = frozenset("0123456789abcdefABCDEF")


def load_bdf(path) -> BitmapFont:
    """Parse the BDF subset: STARTFONT, FONTBOUNDINGBOX, STARTCHAR blocks.

    Each glyph needs ENCODING, BBX, and BITMAP hex rows (most significant
    bit is the leftmost pixel). Records outside this subset are ignored.
    Glyphs with negative encodings are skipped. Errors carry line numbers.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    it: Iterator[tuple[int, str]] = iter(enumerate(lines, 1))

    def fail(lineno: int, message: str) -> FormatError:
        return FormatError(f"{path}:{lineno}: {message}")

    font_height: int | None = None
    glyphs: dict[int, np.ndarray] = {}
    saw_startfont = False

    for lineno, raw in it:
        fields = raw.split()
        if not fields:
            continue
        keyword = fields[0]
        if not saw_startfont:
            if keyword != "STARTFONT":
                raise fail(lineno, f"expected STARTFONT, found {keyword}")
            saw_startfont = True
            continue
        if keyword == "FONTBOUNDINGBOX":
            if len(fields) < 3:
                raise fail(lineno, "FONTBOUNDINGBOX needs width and height")
            try:
                font_height = int(fields[2])
            except ValueError:
                raise fail(lineno, f"FONTBOUNDINGBOX height {fields[2]!r} is not an integer") from None
            if font_height < 1:
                raise fail(lineno, f"font height must be positive, got {font_height}")
        elif keyword == "STARTCHAR":
            if font_height is None:
                raise fail(lineno, "STARTCHAR before FONTBOUNDINGBOX")
            name = fields[1] if len(fields) > 1 else "?"
            encoding, bitmap = _parse_glyph(it, path, name, font_height)
            if encoding >= 0:
                if encoding in glyphs:
                    raise fail(lineno, f"duplicate ENCODING {encoding}")
                glyphs[encoding] = bitmap
        elif keyword == "ENDFONT":
            break
        # anything else (FONT, SIZE, CHARS, COMMENT, properties) is ignored

    if not saw_startfont:
        raise fail(1, "empty file, expected STARTFONT")
    if font_height is None:
        raise fail(len(lines), "missing FONTBOUNDINGBOX")
    return BitmapFont(glyphs, font_height)


def _parse_glyph(
    it: Iterator[tuple[int, str]], path: Path, name: str, font_height: int
) -> tuple[int, np.ndarray]:
    def fail(lineno: int, message: str) -> FormatError:
        return FormatError(f"{path}:{lineno}: glyph {name}: {message}")

    encoding: int | None = None
    width: int | None = None
    last_lineno = 0
    for lineno, raw in it:
        last_lineno = lineno
        fields = raw.split()
        if not fields:
            continue
        keyword = fields[0]
        if keyword == "ENCODING":
            if len(fields) < 2:
                raise fail(lineno, "ENCODING needs a value")
            try:
                encoding = int(fields[1])
            except ValueError:
                raise fail(lineno, f"ENCODING {fields[1]!r} is not an integer") from None
        elif keyword == "BBX":
            if len(fields) < 5:
                raise fail(lineno, "BBX needs four values")
            try:
                width, bbx_h = int(fields[1]), int(fields[2])
            except ValueError:
                raise fail(lineno, "BBX values must be integers") from None
            if width < 1:
                raise fail(lineno, f"glyph width must be positive, got {width}")
            if bbx_h != font_height:
                raise fail(lineno, f"glyph height {bbx_h} != font height {font_height}")
        elif keyword == "BITMAP":
            if encoding is None:
                raise fail(lineno, "BITMAP before ENCODING")
            if width is None:
                raise fail(lineno, "BITMAP before BBX")
            bitmap = _parse_bitmap_rows(it, path, name, width, font_height)
            return encoding, bitmap
        elif keyword == "ENDCHAR":
            raise fail(lineno, "ENDCHAR before BITMAP")
        # SWIDTH/DWIDTH and friends are ignored
    raise fail(last_lineno or 1, "unexpected end of file inside glyph")


def _parse_bitmap_rows(
    it: Iterator[tuple[int, str]], path: Path, name: str, width: int, height: int
) -> np.ndarray:
    def fail(lineno: int, message: str) -> FormatError:
        return FormatError(f"{path}:{lineno}: glyph {name}: {message}")

    n_bytes = (width + 7) // 8
    row_bits = n_bytes * 8
    rows = np.zeros((height, width), dtype=np.uint8)
    filled = 0
    lineno = 0
    for lineno, raw in it:
        token = raw.strip()
        if not token:
            continue
        if token == "ENDCHAR":
            if filled != height:
                raise fail(lineno, f"expected {height} bitmap rows, found {filled}")
            return rows
        if filled >= height:
            raise fail(lineno, f"more than {height} bitmap rows")
        if len(token) != 2 * n_bytes or any(ch not in _HEX_DIGITS for ch in token):
            raise fail(lineno, f"bitmap row {token!r} is not {2 * n_bytes} hex digits")
        value = int(token, 16)
        for j in range(width):
            rows[filled, j] = (value >> (row_bits - 1 - j)) & 1
        filled += 1
    raise fail(lineno, "unexpected end of file inside BITMAP")
