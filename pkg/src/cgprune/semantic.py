"""Per-edge semantic vectors from interchangeable providers.

Two providers implement the same contract (a declared dimension plus a
deterministic ``vector_for``): ``FileProvider`` replays transformer
embeddings from a ``*.emb`` file produced by the exporter, and
``HashProvider`` is a built-in token-hash encoder for desk-scale runs where
no transformer is available.

Embedding file format (the bit-exact boundary with the exporter):
8-byte magic ``CGEMBED1``, little-endian u32 dimension, little-endian u64
row count, then count x dim little-endian IEEE-754 32-bit floats, row-major
by edge ordinal.
"""

from __future__ import annotations

import hashlib
import re
import struct
from pathlib import Path

import numpy as np

from .errors import AlignmentError, ConfigError, FormatError
from .graph import CallGraph, SourceMap

EMB_MAGIC = b"CGEMBED1"
_HEADER = struct.Struct("<8sIQ")

# Fixed hash seed: corpora must hash identically across machines and runs.
HASH_SEED = 0xC6A4A7935BD1E995

DEFAULT_HASH_DIM = 256

_WORD_RE = re.compile(r"[A-Za-z0-9]+")
_CAMEL_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|[0-9]+")

SOURCE_MODES = ("both", "caller-only", "callee-only")


class EmbeddingStore:
    """Edge-ordinal-aligned dense array of 32-bit-float vectors."""

    def __init__(self, vectors: np.ndarray):
        self.vectors = np.asarray(vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            raise FormatError("embedding store expects a 2-D array")

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    def vector(self, ordinal: int) -> np.ndarray:
        if not 0 <= ordinal < self.count:
            raise IndexError(f"ordinal {ordinal} outside [0, {self.count})")
        return self.vectors[ordinal]


def write_embeddings(path: str | Path, vectors: np.ndarray, dim: int | None = None) -> None:
    """Write vectors in the CGEMBED1 binary format."""
    arr = np.asarray(vectors, dtype=np.float32)
    if arr.ndim != 2:
        arr = arr.reshape(-1, dim if dim else arr.shape[-1])
    if dim is None:
        dim = arr.shape[1]
    if arr.shape[1] != dim:
        raise FormatError(f"vector width {arr.shape[1]} != declared dim {dim}")
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(EMB_MAGIC, dim, arr.shape[0]))
        fh.write(arr.astype("<f4").tobytes(order="C"))


def load_embeddings(path: str | Path, expected_count: int | None = None) -> EmbeddingStore:
    """Load a CGEMBED1 file, checking magic, count alignment and payload size."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size or raw[:8] != EMB_MAGIC:
        raise FormatError(f"{Path(path).name}: bad magic, not a CGEMBED1 file")
    _, dim, count = _HEADER.unpack_from(raw)
    if expected_count is not None and count != expected_count:
        raise AlignmentError(
            f"{Path(path).name}: file holds {count} vectors, graph has {expected_count} edges"
        )
    payload = raw[_HEADER.size :]
    expected_bytes = count * dim * 4
    if len(payload) != expected_bytes:
        raise FormatError(
            f"{Path(path).name}: payload is {len(payload)} bytes, expected {expected_bytes}"
        )
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    return EmbeddingStore(vectors.copy())


def tokenize(text: str) -> list[str]:
    """Split on non-alphanumeric boundaries and camelCase transitions, lowercase."""
    tokens: list[str] = []
    for run in _WORD_RE.findall(text):
        tokens.extend(t.lower() for t in _CAMEL_RE.findall(run))
    return tokens


def _bucket(token: str, buckets: int) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=HASH_SEED.to_bytes(8, "little")
    ).digest()
    return int.from_bytes(digest, "little") % buckets


def _hash_half(source: str | None, buckets: int) -> np.ndarray:
    half = np.zeros(buckets, dtype=np.float64)
    if source is None:
        return half
    for token in tokenize(source):
        half[_bucket(token, buckets)] += 1.0
    norm = np.linalg.norm(half)
    if norm > 0.0:
        half /= norm
    return half


def hash_encode(
    caller_src: str | None,
    callee_src: str | None,
    dim: int = DEFAULT_HASH_DIM,
) -> np.ndarray:
    """Bag-of-tokens feature hashing: caller half then callee half, each L2-normalized."""
    if dim <= 0 or dim % 2 != 0:
        raise ConfigError(f"hash dimension must be an even positive integer, got {dim}")
    half = dim // 2
    return np.concatenate([_hash_half(caller_src, half), _hash_half(callee_src, half)])


class HashProvider:
    """Deterministic token-hash stand-in for transformer embeddings.

    ``mode`` mirrors the caller/callee ablations: 'caller-only' zeroes the
    callee half, 'callee-only' the caller half.
    """

    def __init__(self, dim: int = DEFAULT_HASH_DIM, mode: str = "both"):
        if dim <= 0 or dim % 2 != 0:
            raise ConfigError(f"hash dimension must be an even positive integer, got {dim}")
        if mode not in SOURCE_MODES:
            raise ConfigError(f"source mode must be one of {SOURCE_MODES}, got {mode!r}")
        self._dim = dim
        self.mode = mode

    @property
    def dimension(self) -> int:
        return self._dim

    def vector_for(self, ordinal: int, caller_src: str | None, callee_src: str | None) -> np.ndarray:
        if self.mode == "caller-only":
            callee_src = None
        elif self.mode == "callee-only":
            caller_src = None
        return hash_encode(caller_src, callee_src, self._dim)


class FileProvider:
    """Replays vectors from an EmbeddingStore; sources are ignored."""

    def __init__(self, store: EmbeddingStore):
        self.store = store

    @property
    def dimension(self) -> int:
        return self.store.dimension

    def vector_for(self, ordinal: int, caller_src: str | None, callee_src: str | None) -> np.ndarray:
        return self.store.vector(ordinal).astype(np.float64)


def semantic_matrix(g: CallGraph, provider, sources: SourceMap | None = None) -> np.ndarray:
    """Edge-ordinal-aligned semantic vectors, shape (|E|, provider.dimension)."""
    sources = sources or SourceMap()
    out = np.zeros((len(g.edges), provider.dimension), dtype=np.float64)
    for i, e in enumerate(g.edges):
        try:
            out[i] = provider.vector_for(i, sources.get(e.caller), sources.get(e.callee))
        except Exception as exc:
            exc.args = (f"edge ordinal {i}: {exc}",)
            raise
    return out
