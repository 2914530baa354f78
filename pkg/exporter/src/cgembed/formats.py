"""File formats shared with the pruning toolkit.

The exporter talks to the pruner through files only: it consumes the
``*.cg.jsonl`` edge list and ``*.src.jsonl`` source map, and produces the
``*.emb`` binary format (8-byte magic ``CGEMBED1``, little-endian u32
dimension, little-endian u64 row count, then row-major little-endian
float32 vectors, one row per edge ordinal).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EMB_MAGIC = b"CGEMBED1"
_HEADER = struct.Struct("<8sIQ")


class ExportFormatError(ValueError):
    """Malformed input or output file."""


@dataclass(frozen=True)
class EdgeRecord:
    caller: str
    callee: str
    offset: int
    label: int | None


def read_edges(path: str | Path) -> list[EdgeRecord]:
    """Edge records in file order; the order defines the export ordinals."""
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(
                    EdgeRecord(obj["caller"], obj["callee"], int(obj["offset"]), obj.get("label"))
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ExportFormatError(f"{Path(path).name}:{lineno}: {exc}") from exc
    return records


def read_sources(path: str | Path) -> dict[str, str]:
    sources: dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                sources[obj["sig"]] = obj["code"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ExportFormatError(f"{Path(path).name}:{lineno}: {exc}") from exc
    return sources


def write_embeddings(path: str | Path, vectors: np.ndarray) -> None:
    arr = np.asarray(vectors, dtype=np.float32)
    if arr.ndim != 2:
        raise ExportFormatError("expected a 2-D array of edge vectors")
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(EMB_MAGIC, arr.shape[1], arr.shape[0]))
        fh.write(arr.astype("<f4").tobytes(order="C"))


def read_embeddings(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size or raw[:8] != EMB_MAGIC:
        raise ExportFormatError(f"{Path(path).name}: not a CGEMBED1 file")
    _, dim, count = _HEADER.unpack_from(raw)
    payload = raw[_HEADER.size :]
    if len(payload) != count * dim * 4:
        raise ExportFormatError(f"{Path(path).name}: truncated payload")
    return np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
