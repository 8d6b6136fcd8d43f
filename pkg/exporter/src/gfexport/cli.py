"""Command-line entry points for the embedding exporter."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .export import ExportConfig, export_embeddings, export_vocab
from .formats import ExportError


def _parse_layer(text: str) -> int | str:
    if text == "last":
        return "last"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"layer must be an integer or 'last', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gfexport", description="Export transformer embeddings and vocabularies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    emb = commands.add_parser("embeddings", help="encode a TSV of sentence pairs into an embedding table")
    emb.add_argument("--model", required=True, help="model name or local directory for the auto classes")
    emb.add_argument("--data", required=True, help="premise<TAB>hypothesis<TAB>label file")
    emb.add_argument("--out", required=True, help="output embedding table path")
    emb.add_argument("--pooling", choices=["cls", "mean"], default="cls", help="sequence-to-vector reduction")
    emb.add_argument("--layer", type=_parse_layer, default="last", help="hidden-state index, or 'last'")
    emb.add_argument("--batch-size", type=int, default=8, help="pairs encoded per forward pass")

    voc = commands.add_parser("vocab", help="dump the tokenizer vocabulary, one token per line")
    voc.add_argument("--model", required=True, help="model name or local directory for the auto classes")
    voc.add_argument("--out", required=True, help="output vocabulary path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "embeddings":
            config = ExportConfig(
                model=args.model,
                out_embeddings=args.out,
                pooling=args.pooling,
                layer=args.layer,
                batch_size=args.batch_size,
            )
            count = export_embeddings(args.data, config)
            print(f"wrote {count} vectors to {args.out}")
        else:
            config = ExportConfig(model=args.model, out_vocab=args.out)
            count = export_vocab(config)
            print(f"wrote {count} tokens to {args.out}")
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
