"""Per-edge structural feature vectors (22 dims) and training standardization.

Each edge gets 11 feature types in two variants, direct then transitive:

    f1  src-node-in-deg    edges ending in the caller
    f2  src-node-out-deg   edges out of the caller
    f3  dest-node-in-deg   edges ending in the callee
    f4  dest-node-out-deg  edges out of the callee
    f5  depth              shortest path length from the entry to the caller
    f6  repeated-edges     edges from caller to callee over all offsets
    f7  L-fanout           edges leaving the same (caller, offset) call site
    f8  node-count         |V|
    f9  edge-count         |E|
    f10 avg-degree         mean direct out-degree over nodes
    f11 avg-L-fanout       mean fanout over distinct call sites

The transitive variants replace adjacency counts with reach-set counts over
the transitive closure of the simple projection (t1-t4, t6, t7, t9-t11);
depth is already a path notion, so t5 duplicates f5. Empty-denominator
averages are defined as 0. The unreachable/missing-entry depth sentinel
is -1 so that standardization keeps it distinguishable from depth 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrainingError
from .graph import CallGraph, Edge

NUM_FEATURES = 22


class _GraphStats:
    """Whole-graph aggregates shared by every edge of one graph."""

    def __init__(self, g: CallGraph):
        self.in_deg: dict[str, int] = {n: 0 for n in g.nodes}
        self.out_deg: dict[str, int] = {n: 0 for n in g.nodes}
        self.pair_count: dict[tuple[str, str], int] = {}
        self.site_fanout: dict[tuple[str, int], int] = {}
        for e in g.edges:
            self.in_deg[e.callee] += 1
            self.out_deg[e.caller] += 1
            self.pair_count[(e.caller, e.callee)] = self.pair_count.get((e.caller, e.callee), 0) + 1
            self.site_fanout[e.site] = self.site_fanout.get(e.site, 0) + 1
        n_nodes = len(g.nodes)
        n_edges = len(g.edges)
        n_sites = len(self.site_fanout)
        self.node_count = n_nodes
        self.edge_count = n_edges
        self.avg_degree = n_edges / n_nodes if n_nodes else 0.0
        self.avg_fanout = n_edges / n_sites if n_sites else 0.0

        closure = g.closure
        self.site_reach: dict[tuple[str, int], int] = {
            site: closure.reach_union(callees) for site, callees in g.sites.items()
        }
        self.closure_edge_count = closure.edge_count
        self.avg_reach_out = self.closure_edge_count / n_nodes if n_nodes else 0.0
        self.avg_site_reach = (
            sum(self.site_reach.values()) / n_sites if n_sites else 0.0
        )


def _require_edge(g: CallGraph, e: Edge) -> None:
    if not g.has_edge(e):
        raise KeyError(f"edge not in graph: {e.triple}")


def direct_features(g: CallGraph, e: Edge, _stats: _GraphStats | None = None) -> list[float]:
    """The 11 direct feature values for one edge."""
    _require_edge(g, e)
    st = _stats or _GraphStats(g)
    return [
        float(st.in_deg[e.caller]),
        float(st.out_deg[e.caller]),
        float(st.in_deg[e.callee]),
        float(st.out_deg[e.callee]),
        float(g.depths[e.caller]),
        float(st.pair_count[(e.caller, e.callee)]),
        float(st.site_fanout[e.site]),
        float(st.node_count),
        float(st.edge_count),
        st.avg_degree,
        st.avg_fanout,
    ]


def transitive_features(g: CallGraph, e: Edge, _stats: _GraphStats | None = None) -> list[float]:
    """The 11 transitive feature values for one edge."""
    _require_edge(g, e)
    st = _stats or _GraphStats(g)
    closure = g.closure
    return [
        float(closure.reach_in(e.caller)),
        float(closure.reach_out(e.caller)),
        float(closure.reach_in(e.callee)),
        float(closure.reach_out(e.callee)),
        float(g.depths[e.caller]),
        1.0 if closure.reachable(e.caller, e.callee) else 0.0,
        float(st.site_reach[e.site]),
        float(st.node_count),
        float(st.closure_edge_count),
        st.avg_reach_out,
        st.avg_site_reach,
    ]


def featurize_graph(g: CallGraph) -> np.ndarray:
    """Raw 22-dim structural vectors for every edge, ordinal-aligned.

    Returns an array of shape (|E|, 22); row i belongs to edge i.
    """
    if not g.edges:
        return np.zeros((0, NUM_FEATURES))
    stats = _GraphStats(g)
    rows = [
        direct_features(g, e, stats) + transitive_features(g, e, stats) for e in g.edges
    ]
    return np.array(rows, dtype=np.float64)


@dataclass
class Standardizer:
    """Per-dimension z-scoring fitted on a training corpus.

    Zero-variance dimensions keep divisor 1, so constant inputs map to 0.
    """

    mean: np.ndarray
    std: np.ndarray

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        v = np.asarray(vectors, dtype=np.float64)
        return (v - self.mean) / self.std

    def to_json(self) -> dict:
        return {"mean": [repr(float(x)) for x in self.mean], "std": [repr(float(x)) for x in self.std]}

    @classmethod
    def from_json(cls, obj: dict) -> "Standardizer":
        return cls(
            mean=np.array([float(x) for x in obj["mean"]], dtype=np.float64),
            std=np.array([float(x) for x in obj["std"]], dtype=np.float64),
        )

    @classmethod
    def identity(cls, dim: int) -> "Standardizer":
        return cls(mean=np.zeros(dim), std=np.ones(dim))


def fit_standardizer(corpus: np.ndarray) -> Standardizer:
    """Fit per-dimension mean/std (population) on raw feature rows."""
    corpus = np.asarray(corpus, dtype=np.float64)
    if corpus.size == 0:
        raise TrainingError("cannot fit a standardizer on an empty corpus")
    lo = corpus.min(axis=0)
    hi = corpus.max(axis=0)
    constant = lo == hi
    # constant dimensions: mean is the exact shared value, divisor 1
    mean = np.where(constant, lo, corpus.mean(axis=0))
    std = np.std(corpus, axis=0)
    std = np.where(constant | (std == 0.0), 1.0, std)
    return Standardizer(mean=mean, std=std)
