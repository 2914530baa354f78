from __future__ import annotations

import random

import pytest

from cgprune.errors import DuplicateEdgeError, FormatError
from cgprune.graph import (
    CallGraph,
    Edge,
    Label,
    load_callgraph,
    load_sources,
    save_callgraph,
    shortest_depth,
    transitive_closure,
)
from oracles import bfs_depths, bfs_reach, random_triples


def graph_of(triples, nodes=(), program_id="t"):
    return CallGraph(program_id, [Edge(*t) for t in triples], nodes=nodes)


def test_load_basic(tmp_path):
    p = tmp_path / "demo.cg.jsonl"
    p.write_text(
        '{"caller": "a", "callee": "b", "offset": 0, "label": 1}\n'
        '{"caller": "a", "callee": "c", "offset": 0, "label": null}\n'
    )
    g = load_callgraph(p)
    assert g.program_id == "demo"
    assert g.nodes == {"a", "b", "c"}
    assert [e.triple for e in g.edges] == [("a", "b", 0), ("a", "c", 0)]
    assert g.edges[0].label is Label.TRUE_POSITIVE
    assert g.edges[1].label is Label.UNKNOWN


def test_load_empty_file(tmp_path):
    p = tmp_path / "empty.cg.jsonl"
    p.write_text("")
    g = load_callgraph(p)
    assert len(g.nodes) == 0 and len(g.edges) == 0


def test_load_duplicate_triple_rejected(tmp_path):
    p = tmp_path / "dup.cg.jsonl"
    line = '{"caller": "a", "callee": "b", "offset": 0, "label": 0}\n'
    p.write_text(line + line)
    with pytest.raises(DuplicateEdgeError):
        load_callgraph(p)


def test_load_malformed_line_reports_line_number(tmp_path):
    p = tmp_path / "bad.cg.jsonl"
    p.write_text('{"caller": "a", "callee": "b", "offset": 0}\nnot json\n')
    with pytest.raises(FormatError, match="bad.cg.jsonl:2"):
        load_callgraph(p)


def test_same_pair_two_offsets_is_two_edges():
    g = graph_of([("a", "b", 0), ("a", "b", 1)])
    assert len(g.edges) == 2


def test_save_load_round_trip(tmp_path):
    g = graph_of([("a", "b", 0), ("b", "c", 2), ("a", "b", 1)])
    p1 = tmp_path / "x.cg.jsonl"
    p2 = tmp_path / "y.cg.jsonl"
    save_callgraph(g, p1)
    save_callgraph(load_callgraph(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_source_map_absent_is_none(tmp_path):
    p = tmp_path / "x.src.jsonl"
    p.write_text('{"sig": "a", "code": "def a(): pass"}\n')
    sources = load_sources(p)
    assert sources.get("a") == "def a(): pass"
    assert sources.get("missing") is None


def test_depth_chain_and_entry():
    g = graph_of([("main", "f", 0), ("f", "g", 0)])
    assert g.entry == "main"
    assert shortest_depth(g, "main") == 0
    assert shortest_depth(g, "g") == 2


def test_depth_isolated_node_sentinel():
    g = graph_of([("main", "f", 0)], nodes={"h"})
    assert shortest_depth(g, "h") == -1


def test_depth_no_entry_all_sentinel():
    g = graph_of([("a", "b", 0)])
    assert g.entry is None
    assert shortest_depth(g, "a") == -1 and shortest_depth(g, "b") == -1


def test_depth_ambiguous_entry_is_absent():
    g = graph_of([("p.main", "q.main", 0)])
    assert g.entry is None


def test_depth_unknown_node_raises():
    g = graph_of([("main", "f", 0)])
    with pytest.raises(KeyError):
        shortest_depth(g, "zzz")


def test_closure_two_chain():
    g = graph_of([("a", "b", 0), ("b", "c", 0)])
    view = transitive_closure(g)
    assert view.reachable("a", "c")
    assert not view.reachable("c", "a")
    assert view.reach_out("a") == 2
    assert view.reach_in("c") == 2


def test_closure_self_loop():
    g = graph_of([("a", "a", 0)])
    view = transitive_closure(g)
    assert view.reachable("a", "a")
    assert view.reach_out("a") == 1


def test_closure_ignores_offsets_and_multiplicity():
    g1 = graph_of([("a", "b", 0)])
    g2 = graph_of([("a", "b", 0), ("a", "b", 7)])
    assert transitive_closure(g1).reach_out("a") == transitive_closure(g2).reach_out("a") == 1


def test_closure_matches_bfs_oracle_on_random_graphs():
    rng = random.Random(1234)
    for _ in range(500):
        names, triples = random_triples(rng, max_nodes=20)
        g = graph_of(triples, nodes=names)
        view = transitive_closure(g)
        for n in names:
            reach = bfs_reach(triples, n)
            assert view.reach_out(n) == len(reach)
            for m in names:
                assert view.reachable(n, m) == (m in reach)


def test_closure_transitivity_property():
    rng = random.Random(77)
    for _ in range(50):
        names, triples = random_triples(rng, max_nodes=12)
        view = transitive_closure(graph_of(triples, nodes=names))
        for a in names:
            for b in names:
                if not view.reachable(a, b):
                    continue
                for c in names:
                    if view.reachable(b, c):
                        assert view.reachable(a, c)


def test_depths_match_bfs_oracle():
    rng = random.Random(99)
    for _ in range(200):
        names, triples = random_triples(rng, max_nodes=15, with_main=True)
        g = graph_of(triples, nodes=names)
        assert g.depths == bfs_depths(triples, names, g.entry)


def test_edge_relaxation_invariant():
    rng = random.Random(5)
    for _ in range(100):
        names, triples = random_triples(rng, max_nodes=15, with_main=True)
        g = graph_of(triples, nodes=names)
        for e in g.edges:
            du, dv = g.depths[e.caller], g.depths[e.callee]
            if du >= 0:
                assert 0 <= dv <= du + 1
