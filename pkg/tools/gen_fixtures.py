"""Regenerate the committed fixture files under src/glyphfuse/fixtures/.

Everything here is deterministic: rerunning the script reproduces the same
bytes. The JSON glyph reference is written straight from the in-memory
bitmaps so tests can compare BDF parsing against a second, hex-free route.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from glyphfuse.synth import (
    GLYPH_HEIGHT,
    build_cjk_dataset,
    build_devanagari_dataset,
    build_font,
    build_glyph_task,
    build_latin_dataset,
    build_unk_small,
    write_bdf,
)

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "glyphfuse" / "fixtures"


def write_lines(name: str, lines: list[str]) -> None:
    (FIXTURES / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"  {name}: {len(lines)} lines")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    font = build_font()
    write_bdf(font.glyphs, GLYPH_HEIGHT, FIXTURES / "font.bdf")
    print(f"  font.bdf: {len(font.glyphs)} glyphs")

    reference = {
        str(cp): ["".join("#" if bit else "." for bit in row) for row in bitmap]
        for cp, bitmap in sorted(font.glyphs.items())
    }
    (FIXTURES / "font_reference.json").write_text(
        json.dumps(reference, indent=0, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"  font_reference.json: {len(reference)} glyphs")

    write_lines("nli_latin.tsv", build_latin_dataset())
    write_lines("nli_devanagari.tsv", build_devanagari_dataset())
    write_lines("nli_cjk.tsv", build_cjk_dataset())

    task = build_glyph_task()
    write_lines("glyph_train.tsv", task["train"])
    write_lines("glyph_dev.tsv", task["dev"])
    write_lines("glyph_test.tsv", task["test"])
    write_lines("glyph_vocab.txt", task["vocab"])

    unk = build_unk_small()
    write_lines("unk_small.tsv", unk["data"])
    write_lines("unk_small_vocab.txt", unk["vocab"])


if __name__ == "__main__":
    main()
