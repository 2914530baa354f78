"""Batch command-line front end.

Commands: featurize | train | prune | calibrate | eval | monomorph | synth.
Every command is a thin wrapper over a module operation; all outputs are
files named on the command line, inputs are never mutated. Exit codes:
0 success, 2 usage/config, 3 format or alignment, 4 numeric abort.

Sibling-file convention: for a graph ``X.cg.jsonl`` the source map is
``X.src.jsonl`` and transformer embeddings are ``X.emb``. The environment
variable CGPRUNE_THREADS caps internal parallelism (default: all cores).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AlignmentError, CgpruneError, ConfigError, FormatError, NumericError, TrainingError
from .graph import GRAPH_SUFFIX, SOURCE_SUFFIX, CallGraph, Label, SourceMap, load_callgraph, load_sources, save_callgraph
from .model import FusionConfig, FusionModel, load_model, save_model, train
from .pruning import aggregate, calibrate_balanced, monomorph_score, prune, prune_threshold, score
from .semantic import DEFAULT_HASH_DIM, FileProvider, HashProvider, load_embeddings, semantic_matrix, write_embeddings
from .structural import featurize_graph
from .synth import SynthConfig, generate, write_corpus
from .util import parallel_map

log = logging.getLogger("cgprune")

PROVIDERS = ("hash", "emb-file")


def _sibling(graph_path: Path, suffix: str) -> Path:
    name = graph_path.name
    stem = name[: -len(GRAPH_SUFFIX)] if name.endswith(GRAPH_SUFFIX) else graph_path.stem
    return graph_path.with_name(stem + suffix)


def _load_sources_for(graph_path: Path, explicit: str | None) -> SourceMap:
    path = Path(explicit) if explicit else _sibling(graph_path, SOURCE_SUFFIX)
    if path.exists():
        return load_sources(path)
    log.warning("no source map at %s; semantic halves will be zero", path)
    return SourceMap()


def _provider_for(args, graph_path: Path, g: CallGraph, dim: int, mode: str):
    """Provider plus the sources it needs, honoring the sibling convention."""
    if args.provider == "hash":
        return HashProvider(dim=dim, mode=mode), _load_sources_for(graph_path, getattr(args, "src", None))
    emb = Path(args.emb) if getattr(args, "emb", None) else _sibling(graph_path, ".emb")
    store = load_embeddings(emb, expected_count=len(g.edges))
    if store.dimension != dim:
        raise AlignmentError(f"{emb.name}: dimension {store.dimension} != expected {dim}")
    return FileProvider(store), SourceMap()


def _graph_feature_rows(args, graph_path: Path, dim: int, mode: str, need_sem: bool = True):
    g = load_callgraph(graph_path)
    struct = featurize_graph(g)
    if not need_sem:
        return g, np.zeros((len(g.edges), 0)), struct
    provider, sources = _provider_for(args, graph_path, g, dim, mode)
    sem = semantic_matrix(g, provider, sources)
    return g, sem, struct


def _graph_paths(args) -> list[Path]:
    paths = [Path(p) for p in getattr(args, "graphs", None) or []]
    if getattr(args, "train_list", None):
        listing = Path(args.train_list).read_text(encoding="utf-8")
        paths.extend(Path(line.strip()) for line in listing.splitlines() if line.strip())
    if not paths:
        raise ConfigError("no input graphs: pass --graphs or --train-list")
    return paths


def _model_probs(model: FusionModel, g: CallGraph, sem: np.ndarray, struct: np.ndarray) -> np.ndarray:
    if len(g.edges) == 0:
        return np.zeros(0)
    return model.prob_tp(sem if model.config.uses_sem else None, struct if model.config.uses_struct else None)


def _write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


# -- commands ----------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = SynthConfig()
    if args.config:
        cfg = SynthConfig(**json.loads(Path(args.config).read_text(encoding="utf-8")))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    corpus = generate(cfg)
    manifest = write_corpus(corpus, args.out, cfg)
    log.info("wrote %d programs under %s", len(corpus), args.out)
    print(manifest)
    return 0


def cmd_featurize(args) -> int:
    graph_path = Path(args.graph)
    dim = args.dim if args.provider == "hash" else _peek_emb_dim(args, graph_path)
    g, sem, struct = _graph_feature_rows(args, graph_path, dim, args.mode)
    out_features = Path(args.out_features) if args.out_features else _sibling(graph_path, ".feat.jsonl")
    with out_features.open("w", encoding="utf-8") as fh:
        for i in range(struct.shape[0]):
            fh.write(json.dumps({"ordinal": i, "struct": list(struct[i])}) + "\n")
    if args.provider == "hash":
        out_emb = Path(args.out_emb) if args.out_emb else _sibling(graph_path, ".emb")
        write_embeddings(out_emb, sem.astype(np.float32), dim=dim)
        log.info("wrote %s and %s (%d edges)", out_features.name, out_emb.name, len(g.edges))
    else:
        log.info("wrote %s (%d edges)", out_features.name, len(g.edges))
    return 0


def _peek_emb_dim(args, graph_path: Path) -> int:
    emb = Path(args.emb) if getattr(args, "emb", None) else _sibling(graph_path, ".emb")
    return load_embeddings(emb).dimension


def _assemble_dataset(args, paths: list[Path], cfg: FusionConfig):
    rows_per_graph = parallel_map(
        lambda p: _graph_feature_rows(args, p, cfg.k_c, cfg.source_mode, cfg.uses_sem), paths
    )
    dataset = []
    for g, sem, struct in rows_per_graph:
        for i, e in enumerate(g.edges):
            if e.label is Label.UNKNOWN:
                raise TrainingError(f"{g.program_id}: edge ordinal {i} has no ground-truth label")
            dataset.append((sem[i], struct[i], e.label.value))
    return rows_per_graph, dataset


def _training_config(args) -> FusionConfig:
    overrides = {}
    if args.config:
        overrides.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    for name in ("ablation", "lr", "batch", "epochs", "seed", "hidden", "activation"):
        value = getattr(args, name, None)
        if value is not None:
            overrides["h" if name == "hidden" else name] = value
    if args.mode != "both":
        overrides["source_mode"] = args.mode
    if args.provider == "hash":
        overrides.setdefault("k_c", args.dim)
    if "class_weights" in overrides:
        overrides["class_weights"] = tuple(overrides["class_weights"])
    return FusionConfig(**overrides)


def cmd_train(args) -> int:
    paths = _graph_paths(args)
    cfg = _training_config(args)
    if args.provider == "emb-file" and cfg.uses_sem:
        cfg = dataclasses.replace(cfg, k_c=_peek_emb_dim(args, paths[0]))
    _, dataset = _assemble_dataset(args, paths, cfg)
    model = train(cfg, dataset)
    save_model(model, args.model_out)
    log.info("trained on %d edges from %d programs -> %s", len(dataset), len(paths), args.model_out)
    return 0


def cmd_calibrate(args) -> int:
    model = load_model(args.model)
    paths = _graph_paths(args)
    rows_per_graph = parallel_map(
        lambda p: _graph_feature_rows(args, p, model.config.k_c, model.config.source_mode,
                                      model.config.uses_sem), paths
    )
    programs = [(g, list(_model_probs(model, g, sem, struct))) for g, sem, struct in rows_per_graph]
    tau = calibrate_balanced(programs)
    if args.out:
        _write_json(args.out, {"tau": tau})
    print(f"{tau:.2f}")
    return 0


def cmd_prune(args) -> int:
    model = load_model(args.model)
    graph_path = Path(args.graph)
    g, sem, struct = _graph_feature_rows(args, graph_path, model.config.k_c,
                                         model.config.source_mode, model.config.uses_sem)
    probs = _model_probs(model, g, sem, struct)
    if args.threshold is not None:
        pruned = prune_threshold(g, probs, args.threshold)
    else:
        pruned = prune(g, lambda i, e: probs[i] > 0.5)
    save_callgraph(pruned, args.out)
    log.info("kept %d of %d edges -> %s", len(pruned.edges), len(g.edges), args.out)
    return 0


def _paired_graphs(args) -> list[tuple[CallGraph, CallGraph]]:
    if len(args.pred) != len(args.truth):
        raise ConfigError(f"{len(args.pred)} predicted graphs vs {len(args.truth)} truth graphs")
    pairs = []
    for pred_path, truth_path in zip(args.pred, args.truth):
        pairs.append((load_callgraph(Path(pred_path)), load_callgraph(Path(truth_path))))
    return pairs


def cmd_eval(args) -> int:
    rows = [score(pred, truth.true_triples()) for pred, truth in _paired_graphs(args)]
    report = aggregate(rows)
    if args.out:
        _write_json(args.out, report.to_json())
    for metric in ("precision", "recall", "f_measure"):
        print(f"{metric}: {report.mean[metric]:.4f} +/- {report.std[metric]:.4f}")
    return 0


def cmd_monomorph(args) -> int:
    rows = []
    for pred, truth in _paired_graphs(args):
        truth_graph = truth.with_edges([e for e in truth.edges if e.label is Label.TRUE_POSITIVE])
        rows.append(monomorph_score(pred, truth_graph))
    report = aggregate(rows)
    if args.out:
        _write_json(args.out, report.to_json())
    for metric in ("precision", "recall", "f_measure"):
        print(f"{metric}: {report.mean[metric]:.4f} +/- {report.std[metric]:.4f}")
    return 0


# -- parser ------------------------------------------------------------------


def _add_provider_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", choices=PROVIDERS, default="hash", help="semantic vector source")
    p.add_argument("--dim", type=int, default=DEFAULT_HASH_DIM, help="hash encoder dimension (even)")
    p.add_argument("--mode", choices=("both", "caller-only", "callee-only"), default="both",
                   help="source-code ablation for the hash encoder")
    p.add_argument("--src", help="source map path (default: sibling *.src.jsonl)")
    p.add_argument("--emb", help="embedding file path (default: sibling *.emb)")


def _add_graph_list_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graphs", nargs="+", help="graph files (*.cg.jsonl)")
    p.add_argument("--train-list", help="text file listing graph paths, one per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgprune", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"cgprune {__version__}")
    parser.add_argument("--seed", type=int, help="override the seed of the invoked command")
    parser.add_argument("--config", help="JSON config file for synth/train")
    parser.add_argument("--quiet", action="store_true", help="suppress warnings and progress logs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("featurize", help="emit structural features and embeddings for one graph")
    p.add_argument("--graph", required=True)
    _add_provider_flags(p)
    p.add_argument("--out-features", help="output *.feat.jsonl (default: sibling)")
    p.add_argument("--out-emb", help="output *.emb for the hash provider (default: sibling)")
    p.set_defaults(fn=cmd_featurize)

    p = sub.add_parser("train", help="train a fusion classifier on labeled graphs")
    _add_graph_list_flags(p)
    _add_provider_flags(p)
    p.add_argument("--ablation", choices=("both", "sem-only", "struct-only"))
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden", type=int, help="per-branch projection width h")
    p.add_argument("--activation", choices=("relu", "none"))
    p.add_argument("--model-out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("calibrate", help="balanced-point threshold on a labeled training corpus")
    p.add_argument("--model", required=True)
    _add_graph_list_flags(p)
    _add_provider_flags(p)
    p.add_argument("--out", help="write {tau: ...} JSON here")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("prune", help="prune one graph with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--graph", required=True)
    _add_provider_flags(p)
    rule = p.add_mutually_exclusive_group()
    rule.add_argument("--threshold", type=float, help="keep edges with prob_TP >= threshold")
    rule.add_argument("--argmax", action="store_true", help="keep edges with prob_TP > prob_FP (default)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_prune)

    p = sub.add_parser("eval", help="edge-level precision/recall/F against labeled truth")
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--truth", nargs="+", required=True)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("monomorph", help="monomorphic call-site detection scored against truth")
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--truth", nargs="+", required=True)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(fn=cmd_monomorph)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="cgprune: %(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return args.fn(args)
    except (FormatError, AlignmentError) as exc:
        log.error("%s", exc)
        return 3
    except NumericError as exc:
        log.error("%s", exc)
        return 4
    except (ConfigError, TrainingError) as exc:
        log.error("%s", exc)
        return 2
    except CgpruneError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
