"""Static call graphs: parsing, ground-truth labels, reachability queries.

A call graph is a directed multigraph over function signatures. Edges are
(caller, callee, offset) triples; the offset is the call-site position inside
the caller, so one caller/callee pair may legitimately appear at several
offsets. Edge order is the ingestion order and is load-bearing: feature rows
and embedding rows are aligned to it by ordinal.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DuplicateEdgeError, FormatError

# Default entry pattern: a node whose signature contains the simple name
# "main" (word-bounded, case-sensitive). Configurable per graph.
DEFAULT_ENTRY_PATTERN = r"\bmain\b"

GRAPH_SUFFIX = ".cg.jsonl"
SOURCE_SUFFIX = ".src.jsonl"


class Label(enum.Enum):
    """Ground-truth status of an edge."""

    FALSE_POSITIVE = 0
    TRUE_POSITIVE = 1
    UNKNOWN = None

    @classmethod
    def from_json(cls, value: object) -> "Label":
        if value is None:
            return cls.UNKNOWN
        if value in (0, 1):
            return cls(value)
        raise FormatError(f"label must be 0, 1 or null, got {value!r}")

    def to_json(self) -> int | None:
        return self.value


@dataclass(frozen=True)
class Edge:
    caller: str
    callee: str
    offset: int
    label: Label = Label.UNKNOWN

    @property
    def triple(self) -> tuple[str, str, int]:
        """Edge identity: the (caller, callee, offset) triple."""
        return (self.caller, self.callee, self.offset)

    @property
    def site(self) -> tuple[str, int]:
        """Call site identity: (caller, offset)."""
        return (self.caller, self.offset)


class CallGraph:
    """Immutable directed multigraph with ordinal-stable edge order.

    Nodes are opaque signature strings compared byte-for-byte. The entry node
    is the unique node matching ``entry_pattern``; with zero or multiple
    matches the graph has no entry and all depths are -1.
    """

    def __init__(
        self,
        program_id: str,
        edges: Iterable[Edge],
        nodes: Iterable[str] = (),
        entry_pattern: str = DEFAULT_ENTRY_PATTERN,
    ):
        self.program_id = program_id
        self.edges: tuple[Edge, ...] = tuple(edges)
        node_set = set(nodes)
        seen: set[tuple[str, str, int]] = set()
        for e in self.edges:
            if not e.caller or not e.callee:
                raise FormatError("empty function signature")
            if e.offset < 0:
                raise FormatError(f"negative offset on edge {e.triple}")
            if e.triple in seen:
                raise DuplicateEdgeError(f"duplicate edge {e.triple}")
            seen.add(e.triple)
            node_set.add(e.caller)
            node_set.add(e.callee)
        if any(not n for n in node_set):
            raise FormatError("empty function signature")
        self.nodes: frozenset[str] = frozenset(node_set)
        self._triples = seen
        self.entry = self._find_entry(entry_pattern)

    def _find_entry(self, pattern: str) -> str | None:
        rx = re.compile(pattern)
        matches = [n for n in sorted(self.nodes) if rx.search(n)]
        return matches[0] if len(matches) == 1 else None

    # -- basic queries -----------------------------------------------------

    def __len__(self) -> int:
        return len(self.edges)

    def has_edge(self, edge: Edge) -> bool:
        return edge.triple in self._triples

    def triple_set(self) -> set[tuple[str, str, int]]:
        return set(self._triples)

    def true_triples(self) -> set[tuple[str, str, int]]:
        """Triples of edges labeled true positive (the ground-truth graph)."""
        return {e.triple for e in self.edges if e.label is Label.TRUE_POSITIVE}

    @cached_property
    def successors(self) -> dict[str, frozenset[str]]:
        """Simple projection: distinct callees per node, offsets collapsed."""
        out: dict[str, set[str]] = {n: set() for n in self.nodes}
        for e in self.edges:
            out[e.caller].add(e.callee)
        return {n: frozenset(s) for n, s in out.items()}

    @cached_property
    def sites(self) -> dict[tuple[str, int], tuple[str, ...]]:
        """Distinct callees per (caller, offset) call site, in edge order."""
        grouped: dict[tuple[str, int], list[str]] = {}
        for e in self.edges:
            grouped.setdefault(e.site, []).append(e.callee)
        return {s: tuple(c) for s, c in grouped.items()}

    @cached_property
    def depths(self) -> dict[str, int]:
        """BFS depth from the entry node; -1 when absent or unreachable."""
        depths = {n: -1 for n in self.nodes}
        if self.entry is None:
            return depths
        depths[self.entry] = 0
        frontier = [self.entry]
        while frontier:
            nxt: list[str] = []
            for u in frontier:
                for v in self.successors[u]:
                    if depths[v] == -1:
                        depths[v] = depths[u] + 1
                        nxt.append(v)
            frontier = nxt
        return depths

    @cached_property
    def closure(self) -> "ClosureView":
        return ClosureView(self)

    def with_edges(self, edges: Iterable[Edge]) -> "CallGraph":
        """New graph with the same nodes/program id and the given edge list."""
        g = CallGraph(self.program_id, edges, nodes=self.nodes)
        # keep the original entry: node set is unchanged
        g.entry = self.entry
        return g


def shortest_depth(g: CallGraph, node: str) -> int:
    """Edges on a shortest path from the entry to ``node``; -1 if unreachable."""
    if node not in g.nodes:
        raise KeyError(f"node not in graph: {node!r}")
    return g.depths[node]


class ClosureView:
    """Transitive closure of the simple projection of a call graph.

    ``reachable(u, v)`` is true iff a directed path of length >= 1 exists.
    Reach sets are stored as bitmasks over a fixed node ordering, so queries
    and set unions stay cheap at desk scale.
    """

    def __init__(self, g: CallGraph):
        self._order = sorted(g.nodes)
        self._index = {n: i for i, n in enumerate(self._order)}
        succ_masks = []
        for n in self._order:
            m = 0
            for v in g.successors[n]:
                m |= 1 << self._index[v]
            succ_masks.append(m)
        self._reach = [self._bfs_mask(i, succ_masks) for i in range(len(self._order))]
        self._in_counts = [0] * len(self._order)
        for mask in self._reach:
            while mask:
                low = mask & -mask
                self._in_counts[low.bit_length() - 1] += 1
                mask ^= low

    @staticmethod
    def _bfs_mask(start: int, succ_masks: list[int]) -> int:
        reached = succ_masks[start]
        frontier = reached
        while frontier:
            nxt = 0
            while frontier:
                low = frontier & -frontier
                nxt |= succ_masks[low.bit_length() - 1]
                frontier ^= low
            frontier = nxt & ~reached
            reached |= nxt
        return reached

    def _bit(self, node: str) -> int:
        if node not in self._index:
            raise KeyError(f"node not in graph: {node!r}")
        return self._index[node]

    def reachable(self, u: str, v: str) -> bool:
        return bool(self._reach[self._bit(u)] >> self._bit(v) & 1)

    def reach_out(self, u: str) -> int:
        return self._reach[self._bit(u)].bit_count()

    def reach_in(self, v: str) -> int:
        return self._in_counts[self._bit(v)]

    def reach_union(self, nodes: Iterable[str], include_self: bool = True) -> int:
        """Size of the union of reach sets, optionally including the nodes."""
        mask = 0
        for n in nodes:
            i = self._bit(n)
            mask |= self._reach[i]
            if include_self:
                mask |= 1 << i
        return mask.bit_count()

    @property
    def edge_count(self) -> int:
        """Number of (u, v) pairs with reachable(u, v)."""
        return sum(m.bit_count() for m in self._reach)

    @property
    def node_count(self) -> int:
        return len(self._order)


def transitive_closure(g: CallGraph) -> ClosureView:
    return g.closure


@dataclass
class SourceMap:
    """Signature -> source text; absent signatures resolve to None."""

    sources: dict[str, str] = field(default_factory=dict)

    def get(self, sig: str) -> str | None:
        return self.sources.get(sig)

    def __len__(self) -> int:
        return len(self.sources)


def _program_id_for(path: Path) -> str:
    name = path.name
    if name.endswith(GRAPH_SUFFIX):
        return name[: -len(GRAPH_SUFFIX)]
    return path.stem


def load_callgraph(path: str | Path, entry_pattern: str = DEFAULT_ENTRY_PATTERN) -> CallGraph:
    """Parse a ``*.cg.jsonl`` file: one {caller, callee, offset, label} per line."""
    path = Path(path)
    edges: list[Edge] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                edge = Edge(
                    caller=obj["caller"],
                    callee=obj["callee"],
                    offset=int(obj["offset"]),
                    label=Label.from_json(obj.get("label")),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path.name}:{lineno}: malformed edge line: {exc}") from exc
            edges.append(edge)
    try:
        return CallGraph(_program_id_for(path), edges, entry_pattern=entry_pattern)
    except DuplicateEdgeError as exc:
        raise DuplicateEdgeError(f"{path.name}: {exc}") from exc


def save_callgraph(g: CallGraph, path: str | Path) -> None:
    """Write the graph back out in the ``*.cg.jsonl`` line format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for e in g.edges:
            fh.write(
                json.dumps(
                    {"caller": e.caller, "callee": e.callee, "offset": e.offset, "label": e.label.to_json()}
                )
                + "\n"
            )


def load_sources(path: str | Path) -> SourceMap:
    """Parse a ``*.src.jsonl`` file: one {sig, code} object per line."""
    path = Path(path)
    sources: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                sources[obj["sig"]] = obj["code"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(f"{path.name}:{lineno}: malformed source line: {exc}") from exc
    return SourceMap(sources)


def save_sources(srcmap: SourceMap | Mapping[str, str], path: str | Path) -> None:
    sources = srcmap.sources if isinstance(srcmap, SourceMap) else dict(srcmap)
    with Path(path).open("w", encoding="utf-8") as fh:
        for sig in sources:
            fh.write(json.dumps({"sig": sig, "code": sources[sig]}) + "\n")
