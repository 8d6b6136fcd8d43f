"""Command-line entry point for the full pipeline.

Subcommands: render (glyph image preview), hash-emb (standalone embedding
generator), train / eval / ablate / targeted (the NLI experiment suite),
and charrec (glyph classification under pixel noise). Every run writes a
manifest.json next to its outputs with the resolved configuration.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    EmbeddingTable,
    gen_hash_embeddings,
    load_checkpoint,
    read_gemb,
    read_tsv,
    read_vocab,
    save_checkpoint,
    write_gemb,
)
from .encoder import CnnConfig
from .errors import GlyphfuseError, NumericalError
from .fusion import ClassifierConfig, init_nli_params
from .raster import Segmenter, load_bdf, load_dictionary, render, segment, write_pgm
from .training import (
    TrainConfig,
    ablation_run,
    charrec_run,
    emit_report,
    evaluate,
    targeted_eval,
    train,
    write_history_csv,
)

__all__ = ["main", "build_parser"]

_CNN_PRESETS = {"default": CnnConfig.default, "square800": CnnConfig.square800}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glyphfuse",
        description="Glyph-image text encoding fused with contextual embeddings.",
    )
    parser.add_argument("--version", action="version", version=f"glyphfuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    font_common = argparse.ArgumentParser(add_help=False)
    font_common.add_argument("--font", required=True, help="BDF font file")
    font_common.add_argument("--mode", choices=["word", "char"], default="word", help="segmentation granularity")
    font_common.add_argument("--dict", dest="dictionary", help="longest-match segmentation dictionary file")

    out_common = argparse.ArgumentParser(add_help=False)
    out_common.add_argument("--out", required=True, help="output directory")

    run_common = argparse.ArgumentParser(add_help=False)
    run_common.add_argument("--seed", type=int, default=0)
    run_common.add_argument("--fake-emb", nargs=2, type=int, metavar=("DIM", "SEED"),
                            help="derive embeddings from token hashes instead of a GEMB file")

    train_common = argparse.ArgumentParser(add_help=False)
    train_common.add_argument("--epochs", type=int, default=30)
    train_common.add_argument("--lr-visual", type=float, default=4e-6)
    train_common.add_argument("--lr-head", type=float, default=1e-3)
    train_common.add_argument("--batch-size", type=int, default=16)
    train_common.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    train_common.add_argument("--context-only", action="store_true",
                              help="silence the visual branch (zero vector)")
    train_common.add_argument("--cnn-preset", choices=sorted(_CNN_PRESETS), default="default")
    train_common.add_argument("--emb-train", help="GEMB file for the training split")
    train_common.add_argument("--emb-dev", help="GEMB file for the dev split")
    train_common.add_argument("--emb-test", help="GEMB file for the test split")

    p = sub.add_parser("render", parents=[font_common, out_common],
                       help="render text segments to PGM images")
    p.add_argument("--text", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("hash-emb", parents=[out_common],
                       help="write hash-derived embeddings for a dataset")
    p.add_argument("--data", required=True, help="dataset TSV")
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_hash_emb)

    p = sub.add_parser("train", parents=[font_common, out_common, run_common, train_common],
                       help="train the fused NLI model")
    p.add_argument("--train", required=True, dest="train_path")
    p.add_argument("--dev", required=True, dest="dev_path")
    p.add_argument("--test", dest="test_path")
    p.add_argument("--ablation", choices=["none", "random_image"], default="none")
    p.add_argument("--grid", help="semicolon-separated lr_visual,lr_head,batch triples to sweep")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[font_common, out_common, run_common],
                       help="evaluate a checkpoint on a test split")
    p.add_argument("--test", required=True, dest="test_path")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--emb", help="GEMB file for the test split")
    p.add_argument("--cnn-preset", choices=sorted(_CNN_PRESETS), default="default")
    p.add_argument("--context-only", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", parents=[font_common, out_common, run_common, train_common],
                       help="train and evaluate with random images in place of glyphs")
    p.add_argument("--train", required=True, dest="train_path")
    p.add_argument("--dev", required=True, dest="dev_path")
    p.add_argument("--test", required=True, dest="test_path")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("targeted", parents=[font_common, out_common, run_common],
                       help="evaluate a checkpoint on sentences containing UNK tokens")
    p.add_argument("--test", required=True, dest="test_path")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--emb", help="GEMB file for the test split")
    p.add_argument("--cnn-preset", choices=sorted(_CNN_PRESETS), default="default")
    p.add_argument("--context-only", action="store_true")
    p.set_defaults(func=cmd_targeted)

    p = sub.add_parser("charrec", parents=[out_common],
                       help="character recognition under pixel-flip noise")
    p.add_argument("--font", required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--samples-per-class", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--lr", type=float, default=1e-3)
    p.set_defaults(func=cmd_charrec)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (GlyphfuseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


# ---------------------------------------------------------------------------
# shared helpers


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, config: dict, inputs: dict, outputs: dict) -> None:
    manifest = {
        "toolkit_version": __version__,
        "command": command,
        "config": config,
        "inputs": {k: str(v) for k, v in inputs.items() if v is not None},
        "outputs": outputs,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _embeddings_for(args, examples, flag_value: str | None) -> EmbeddingTable:
    if args.fake_emb is not None:
        dim, seed = args.fake_emb
        return gen_hash_embeddings(examples, dim, seed)
    return read_gemb(flag_value)


def _require_embedding_source(parser_hint: str, args, *flags: str) -> None:
    if args.fake_emb is not None:
        return
    missing = [name for name, value in flags_with_values(args, flags) if value is None]
    if missing:
        raise GlyphfuseError(
            f"{parser_hint}: provide --fake-emb DIM SEED or {', '.join('--' + m.replace('_', '-') for m in missing)}"
        )


def flags_with_values(args, flags):
    return [(flag, getattr(args, flag, None)) for flag in flags]


def _load_dictionary(args):
    return load_dictionary(args.dictionary) if getattr(args, "dictionary", None) else None


def _train_config(args, ablation: str | None = None) -> TrainConfig:
    return TrainConfig(
        seed=args.seed,
        epochs=args.epochs,
        lr_visual=args.lr_visual,
        lr_head=args.lr_head,
        batch_size=args.batch_size,
        granularity=args.mode,
        ablation=ablation if ablation is not None else getattr(args, "ablation", "none"),
        context_only=args.context_only,
        optimizer=args.optimizer,
    )


def _eval_config(args) -> TrainConfig:
    return TrainConfig(seed=args.seed, granularity=args.mode, context_only=args.context_only)


def _parse_grid(spec: str) -> list[tuple[float, float, int]]:
    triples = []
    for part in spec.split(";"):
        pieces = part.split(",")
        if len(pieces) != 3:
            raise GlyphfuseError(f"grid entry {part!r} is not lr_visual,lr_head,batch")
        triples.append((float(pieces[0]), float(pieces[1]), int(pieces[2])))
    if not triples:
        raise GlyphfuseError("empty grid")
    return triples


# ---------------------------------------------------------------------------
# subcommands


def cmd_render(args) -> int:
    out = _out_dir(args)
    font = load_bdf(args.font)
    segmenter = Segmenter(args.mode, _load_dictionary(args))
    segments = segment(args.text, segmenter)
    names = []
    for i, seg in enumerate(segments):
        name = f"seg_{i}.pgm"
        write_pgm(render(seg, font), out / name)
        names.append(name)
    _write_manifest(
        out, "render",
        {"mode": args.mode, "text": args.text, "dictionary": args.dictionary},
        {"font": args.font},
        {"images": names},
    )
    print(f"wrote {len(names)} images to {out}")
    return 0


def cmd_hash_emb(args) -> int:
    out = _out_dir(args)
    examples = read_tsv(args.data)
    table = gen_hash_embeddings(examples, args.dim, args.seed)
    write_gemb(table, out / "embeddings.gemb")
    _write_manifest(
        out, "hash-emb",
        {"dim": args.dim, "seed": args.seed},
        {"data": args.data},
        {"embeddings": "embeddings.gemb"},
    )
    print(f"wrote embeddings.gemb ({len(table)} vectors, dim {table.dim}) to {out}")
    return 0


def _run_training(args, config: TrainConfig):
    train_set = read_tsv(args.train_path)
    dev_set = read_tsv(args.dev_path)
    _require_embedding_source(args.command, args, "emb_train", "emb_dev")
    train_emb = _embeddings_for(args, train_set, args.emb_train)
    dev_emb = _embeddings_for(args, dev_set, args.emb_dev)
    font = load_bdf(args.font)
    dictionary = _load_dictionary(args)
    cnn_config = _CNN_PRESETS[args.cnn_preset]()

    if getattr(args, "grid", None):
        best = None
        for lr_visual, lr_head, batch in _parse_grid(args.grid):
            candidate = dataclasses.replace(config, lr_visual=lr_visual, lr_head=lr_head, batch_size=batch)
            result = train(train_set, dev_set, train_emb, dev_emb, candidate,
                           font=font, cnn_config=cnn_config, dictionary=dictionary)
            dev_loss = result.history[result.best_epoch].dev_loss
            if best is None or dev_loss < best[0]:
                best = (dev_loss, candidate, result)
        config, result = best[1], best[2]
    else:
        result = train(train_set, dev_set, train_emb, dev_emb, config,
                       font=font, cnn_config=cnn_config, dictionary=dictionary)
    return train_set, dev_set, result, config, font, dictionary, cnn_config


def cmd_train(args) -> int:
    out = _out_dir(args)
    config = _train_config(args)
    _, _, result, config, font, dictionary, cnn_config = _run_training(args, config)

    save_checkpoint(result.params, out / "model.gfck")
    write_history_csv(result.history, out / "history.csv")
    outputs = {"checkpoint": "model.gfck", "history": "history.csv"}

    if args.test_path:
        test_set = read_tsv(args.test_path)
        test_emb = _embeddings_for(args, test_set, args.emb_test)
        report = evaluate(result.params, test_set, test_emb, config,
                          font=font, cnn_config=cnn_config, cls_config=result.cls_config,
                          dictionary=dictionary)
        report.config["run"] = "train"
        emit_report(report, out / "report.csv", "csv")
        emit_report(report, out / "report.md", "markdown")
        outputs.update({"report_csv": "report.csv", "report_md": "report.md"})
        print(f"test accuracy {report.accuracy:.4f} over {report.n_examples} examples")

    _write_manifest(
        out, "train", dict(config.as_dict(), cnn_preset=args.cnn_preset, grid=getattr(args, "grid", None)),
        {"train": args.train_path, "dev": args.dev_path, "test": args.test_path,
         "font": args.font, "dictionary": args.dictionary,
         "emb_train": args.emb_train, "emb_dev": args.emb_dev, "emb_test": args.emb_test},
        outputs,
    )
    print(f"best epoch {result.best_epoch}, dev loss {result.history[result.best_epoch].dev_loss:.6f}")
    return 0


def _restore_params(args, embeddings: EmbeddingTable):
    cnn_config = _CNN_PRESETS[args.cnn_preset]()
    cls_config = ClassifierConfig(context_dim=embeddings.dim)
    rng = np.random.Generator(np.random.PCG64(0))
    params = init_nli_params(rng, cnn_config, cls_config)
    load_checkpoint(args.checkpoint, params)
    return params, cnn_config, cls_config


def cmd_eval(args) -> int:
    out = _out_dir(args)
    test_set = read_tsv(args.test_path)
    _require_embedding_source("eval", args, "emb")
    test_emb = _embeddings_for(args, test_set, args.emb)
    font = load_bdf(args.font)
    params, cnn_config, cls_config = _restore_params(args, test_emb)
    config = _eval_config(args)
    report = evaluate(params, test_set, test_emb, config,
                      font=font, cnn_config=cnn_config, cls_config=cls_config,
                      dictionary=_load_dictionary(args))
    report.config["run"] = "eval"
    emit_report(report, out / "report.csv", "csv")
    emit_report(report, out / "report.md", "markdown")
    _write_manifest(
        out, "eval", dict(config.as_dict(), cnn_preset=args.cnn_preset),
        {"test": args.test_path, "checkpoint": args.checkpoint, "font": args.font, "emb": args.emb},
        {"report_csv": "report.csv", "report_md": "report.md"},
    )
    print(f"accuracy {report.accuracy:.4f} over {report.n_examples} examples")
    return 0


def cmd_ablate(args) -> int:
    out = _out_dir(args)
    config = _train_config(args, ablation="random_image")
    train_set = read_tsv(args.train_path)
    dev_set = read_tsv(args.dev_path)
    test_set = read_tsv(args.test_path)
    _require_embedding_source("ablate", args, "emb_train", "emb_dev", "emb_test")
    train_emb = _embeddings_for(args, train_set, args.emb_train)
    dev_emb = _embeddings_for(args, dev_set, args.emb_dev)
    test_emb = _embeddings_for(args, test_set, args.emb_test)
    font = load_bdf(args.font)
    dictionary = _load_dictionary(args)
    cnn_config = _CNN_PRESETS[args.cnn_preset]()

    report = ablation_run(train_set, dev_set, test_set, train_emb, dev_emb, test_emb,
                          config, font=font, cnn_config=cnn_config, dictionary=dictionary)
    report.config["run"] = "ablate"
    emit_report(report, out / "report.csv", "csv")
    emit_report(report, out / "report.md", "markdown")
    _write_manifest(
        out, "ablate", dict(config.as_dict(), cnn_preset=args.cnn_preset),
        {"train": args.train_path, "dev": args.dev_path, "test": args.test_path,
         "font": args.font, "dictionary": args.dictionary},
        {"report_csv": "report.csv", "report_md": "report.md"},
    )
    print(f"ablated accuracy {report.accuracy:.4f} over {report.n_examples} examples")
    return 0


def cmd_targeted(args) -> int:
    out = _out_dir(args)
    test_set = read_tsv(args.test_path)
    _require_embedding_source("targeted", args, "emb")
    test_emb = _embeddings_for(args, test_set, args.emb)
    font = load_bdf(args.font)
    vocab = read_vocab(args.vocab)
    dictionary = _load_dictionary(args)
    segmenter = Segmenter(args.mode, dictionary)
    params, cnn_config, cls_config = _restore_params(args, test_emb)
    config = _eval_config(args)
    report = targeted_eval(params, test_set, test_emb, vocab, segmenter, config,
                           font=font, cnn_config=cnn_config, cls_config=cls_config,
                           dictionary=dictionary)
    report.config["run"] = "targeted"
    emit_report(report, out / "report.csv", "csv")
    emit_report(report, out / "report.md", "markdown")
    _write_manifest(
        out, "targeted", dict(config.as_dict(), cnn_preset=args.cnn_preset),
        {"test": args.test_path, "checkpoint": args.checkpoint, "vocab": args.vocab,
         "font": args.font, "emb": args.emb},
        {"report_csv": "report.csv", "report_md": "report.md"},
    )
    if report.targeted_empty:
        print("warning: vocabulary covers every sentence; UNK subset is empty")
    print(f"targeted accuracy {report.targeted_accuracy:.4f} over {report.targeted_count} UNK sentences")
    return 0


def cmd_charrec(args) -> int:
    out = _out_dir(args)
    font = load_bdf(args.font)
    report = charrec_run(font, args.classes, args.samples_per_class, args.noise,
                         args.seed, epochs=args.epochs, lr=args.lr)
    emit_report(report, out / "report.csv", "csv")
    emit_report(report, out / "report.md", "markdown")
    _write_manifest(
        out, "charrec", dict(report.config),
        {"font": args.font},
        {"report_csv": "report.csv", "report_md": "report.md"},
    )
    print(f"charrec accuracy {report.accuracy:.4f} over {report.n_examples} held-out renders")
    return 0
