"""Frozen edge-embedding exporter for the call-graph pruning toolkit."""

__version__ = "0.1.0"

from .formats import EdgeRecord, read_edges, read_embeddings, read_sources, write_embeddings
from .model import Encoder, FinetuneResult, build_random, export_embeddings, finetune, load_pretrained
from .tokenizer import Vocabulary, encode_pair, tokenize

__all__ = [
    "EdgeRecord",
    "Encoder",
    "FinetuneResult",
    "Vocabulary",
    "build_random",
    "encode_pair",
    "export_embeddings",
    "finetune",
    "load_pretrained",
    "read_edges",
    "read_embeddings",
    "read_sources",
    "tokenize",
    "write_embeddings",
]
