"""Command line: fine-tune (optionally) and export frozen edge embeddings.

    cgembed export --graph prog.cg.jsonl --src prog.src.jsonl --out prog.emb \
        [--ablation caller|callee] [--finetune --train-list graphs.txt] \
        [--model microsoft/codebert-base | --init-random] [--layers N] \
        [--max-len M] [--seed S] [--lr F] [--batch B] [--epochs E]

``--train-list`` names one graph file per line; the matching source maps
are the ``*.src.jsonl`` siblings. Without ``--model`` or ``--init-random``
the default pretrained checkpoint is attempted and a setup error is
reported if it cannot be fetched.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .formats import ExportFormatError, read_edges, read_sources, write_embeddings
from .model import (
    FINETUNE_BATCH,
    FINETUNE_EPOCHS,
    FINETUNE_LR,
    SetupError,
    build_random,
    export_embeddings,
    finetune,
    load_pretrained,
)
from .tokenizer import Vocabulary

log = logging.getLogger("cgembed")

DEFAULT_CHECKPOINT = "microsoft/codebert-base"
GRAPH_SUFFIX = ".cg.jsonl"
SOURCE_SUFFIX = ".src.jsonl"


def _source_sibling(graph_path: Path) -> Path:
    name = graph_path.name
    stem = name[: -len(GRAPH_SUFFIX)] if name.endswith(GRAPH_SUFFIX) else graph_path.stem
    return graph_path.with_name(stem + SOURCE_SUFFIX)


def _train_corpus(train_list: str) -> tuple[list, dict[str, str]]:
    edges, sources = [], {}
    for line in Path(train_list).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        graph_path = Path(line.strip())
        edges.extend(read_edges(graph_path))
        sources.update(read_sources(_source_sibling(graph_path)))
    return edges, sources


def cmd_export(args) -> int:
    edges = read_edges(args.graph)
    sources = read_sources(args.src) if args.src else read_sources(_source_sibling(Path(args.graph)))

    train_edges, train_sources = ([], {})
    if args.finetune:
        if not args.train_list:
            log.error("--finetune requires --train-list")
            return 2
        train_edges, train_sources = _train_corpus(args.train_list)

    vocab_texts = list(train_sources.values()) or list(sources.values())
    vocab = Vocabulary.build(vocab_texts)
    if args.init_random:
        encoder = build_random(vocab, args.max_len, layers=args.layers, seed=args.seed,
                               ablation=args.ablation)
    else:
        encoder = load_pretrained(args.model, vocab, args.max_len, ablation=args.ablation)

    if args.finetune:
        result = finetune(encoder, train_edges, train_sources,
                          epochs=args.epochs, lr=args.lr, batch=args.batch, seed=args.seed)
        log.info("fine-tune losses per epoch: %s",
                 ", ".join(f"{x:.4f}" for x in result.epoch_losses))
    else:
        encoder.freeze()

    vectors = export_embeddings(encoder, edges, sources)
    write_embeddings(args.out, vectors)
    log.info("wrote %s: %d vectors of dim %d", args.out, vectors.shape[0], vectors.shape[1])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgembed", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="export per-edge embeddings in the CGEMBED1 format")
    p.add_argument("--graph", required=True, help="edge list (*.cg.jsonl)")
    p.add_argument("--src", help="source map (default: sibling *.src.jsonl)")
    p.add_argument("--out", required=True, help="output *.emb path")
    p.add_argument("--ablation", choices=("caller", "callee"),
                   help="keep only one side's source code in the pair input")
    p.add_argument("--finetune", action="store_true", help="fine-tune before exporting")
    p.add_argument("--train-list", help="text file listing labeled training graphs")
    p.add_argument("--model", default=DEFAULT_CHECKPOINT,
                   help=f"pretrained checkpoint name or path (default {DEFAULT_CHECKPOINT})")
    p.add_argument("--init-random", action="store_true",
                   help="build a seeded randomly initialized encoder instead of a checkpoint")
    p.add_argument("--layers", type=int, default=2, help="encoder layers for --init-random")
    p.add_argument("--max-len", type=int, default=256, help="maximum pair sequence length")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=FINETUNE_LR)
    p.add_argument("--batch", type=int, default=FINETUNE_BATCH)
    p.add_argument("--epochs", type=int, default=FINETUNE_EPOCHS)
    p.set_defaults(fn=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="cgembed: %(levelname)s: %(message)s",
                        stream=sys.stderr, force=True)
    try:
        return args.fn(args)
    except SetupError as exc:
        log.error("%s", exc)
        return 2
    except ExportFormatError as exc:
        log.error("%s", exc)
        return 3
    except ValueError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
