"""Call-graph pruning toolkit.

Classifies static call-graph edges as true or false positives from fused
structural and semantic features, prunes the graph, calibrates thresholds,
and evaluates against ground truth and a monomorphic call-site client.
"""

__version__ = "0.1.0"

from .graph import CallGraph, Edge, Label, SourceMap, load_callgraph, load_sources, save_callgraph
from .model import FusionConfig, FusionModel, classify_edge, load_model, save_model, train
from .pruning import (
    MetricsRow,
    PruneReport,
    aggregate,
    calibrate_balanced,
    monomorph_score,
    monomorphic_sites,
    prune,
    prune_threshold,
    random_prune,
    score,
)
from .semantic import EmbeddingStore, FileProvider, HashProvider, hash_encode, load_embeddings, semantic_matrix, write_embeddings
from .structural import Standardizer, direct_features, featurize_graph, fit_standardizer, transitive_features
from .synth import SynthConfig, generate, split, write_corpus

__all__ = [
    "CallGraph",
    "Edge",
    "EmbeddingStore",
    "FileProvider",
    "FusionConfig",
    "FusionModel",
    "HashProvider",
    "Label",
    "MetricsRow",
    "PruneReport",
    "SourceMap",
    "Standardizer",
    "SynthConfig",
    "aggregate",
    "calibrate_balanced",
    "classify_edge",
    "direct_features",
    "featurize_graph",
    "fit_standardizer",
    "generate",
    "hash_encode",
    "load_callgraph",
    "load_embeddings",
    "load_model",
    "load_sources",
    "monomorph_score",
    "monomorphic_sites",
    "prune",
    "prune_threshold",
    "random_prune",
    "save_callgraph",
    "save_model",
    "score",
    "semantic_matrix",
    "split",
    "train",
    "transitive_features",
    "write_corpus",
    "write_embeddings",
]
