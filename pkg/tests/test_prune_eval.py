from __future__ import annotations

import random

import pytest

from cgprune.errors import AlignmentError, ConfigError, TrainingError
from cgprune.graph import CallGraph, Edge, Label
from cgprune.pruning import (
    TAU_GRID,
    aggregate,
    calibrate_balanced,
    monomorph_score,
    monomorphic_sites,
    prune,
    prune_threshold,
    random_prune,
    score,
)
from oracles import mono_sites, prf, random_triples


def graph_of(triples, labels=None, nodes=(), program_id="t"):
    labels = labels or [Label.UNKNOWN] * len(triples)
    return CallGraph(program_id, [Edge(*t, label=l) for t, l in zip(triples, labels)], nodes=nodes)


def test_prune_keep_all_is_identity():
    g = graph_of([("a", "b", 0), ("b", "c", 1)])
    out = prune(g, lambda i, e: True)
    assert out.edges == g.edges and out.nodes == g.nodes


def test_prune_drop_all_keeps_nodes():
    g = graph_of([("a", "b", 0), ("b", "c", 1)])
    out = prune(g, lambda i, e: False)
    assert len(out.edges) == 0
    assert out.nodes == g.nodes  # V' = V


def test_prune_even_ordinals():
    triples = [("a", "b", i) for i in range(5)]
    g = graph_of(triples)
    out = prune(g, lambda i, e: i % 2 == 0)
    assert [e.offset for e in out.edges] == [0, 2, 4]


def test_prune_classifier_failure_carries_ordinal():
    g = graph_of([("a", "b", 0), ("b", "c", 1)])

    def broken(i, e):
        if i == 1:
            raise RuntimeError("boom")
        return True

    with pytest.raises(RuntimeError, match="ordinal 1"):
        prune(g, broken)


def test_prune_semantics_random_property():
    rng = random.Random(314)
    for _ in range(200):
        names, triples = random_triples(rng, max_nodes=10)
        g = graph_of(triples, nodes=names)
        keep = {t for t in triples if rng.random() < 0.5}
        out = prune(g, lambda i, e: e.triple in keep)
        assert out.nodes == g.nodes
        assert [e.triple for e in out.edges] == [t for t in [e.triple for e in g.edges] if t in keep]


def test_prune_threshold_boundaries():
    g = graph_of([("a", "b", 0), ("a", "c", 0), ("a", "d", 0)])
    probs = [0.0, 0.5, 1.0]
    assert len(prune_threshold(g, probs, 0.0).edges) == 3
    assert [e.callee for e in prune_threshold(g, probs, 1.0).edges] == ["d"]


def test_prune_threshold_length_mismatch():
    g = graph_of([("a", "b", 0)])
    with pytest.raises(AlignmentError):
        prune_threshold(g, [0.5, 0.5], 0.5)


def test_prune_threshold_monotone_inclusion():
    rng = random.Random(11)
    triples = [("a", f"n{i}", i) for i in range(30)]
    g = graph_of(triples)
    probs = [rng.random() for _ in range(30)]
    prev = None
    for tau in TAU_GRID:
        kept = {e.triple for e in prune_threshold(g, probs, tau).edges}
        if prev is not None:
            assert kept <= prev
        prev = kept


def test_random_prune_fractions():
    triples = [("a", f"n{i}", 0) for i in range(50)]
    g = graph_of(triples)
    assert len(random_prune(g, 0, seed=1).edges) == 50
    assert len(random_prune(g, 100, seed=1).edges) == 0
    assert len(random_prune(g, 30, seed=1).edges) == 35


def test_random_prune_seeded_and_uniform():
    triples = [("a", f"n{i}", 0) for i in range(50)]
    labels = [Label.TRUE_POSITIVE] * 50
    g = graph_of(triples, labels)
    truth = g.true_triples()
    assert [e.triple for e in random_prune(g, 40, seed=7).edges] == [
        e.triple for e in random_prune(g, 40, seed=7).edges
    ]
    for pct in (10, 20, 50, 90):
        total = 0.0
        for trial in range(1000):
            kept = random_prune(g, pct, seed=trial)
            total += score(kept, truth).recall
        assert abs(total / 1000 - (1 - pct / 100)) <= 0.02


def test_score_hand_counts():
    g = graph_of([("a", "b", 0), ("a", "c", 0), ("a", "d", 0)])
    truth = {("a", "b", 0), ("a", "c", 0), ("a", "e", 0)}
    row = score(g, truth)
    assert row.precision == pytest.approx(2 / 3)
    assert row.recall == pytest.approx(2 / 3)
    assert row.f_measure == pytest.approx(2 / 3)
    assert (row.predicted, row.truth, row.hit) == (3, 3, 2)


def test_score_perfect_and_empty():
    g = graph_of([("a", "b", 0)])
    assert score(g, {("a", "b", 0)}).f_measure == 1.0
    empty = graph_of([])
    assert score(empty, {("a", "b", 0)}).precision == 0.0
    assert score(g, set()).recall == 0.0


def test_score_matches_set_oracle():
    rng = random.Random(2718)
    for _ in range(500):
        names, triples = random_triples(rng, max_nodes=8)
        g = graph_of(triples, nodes=names)
        _, truth_list = random_triples(rng, max_nodes=8)
        truth = set(truth_list)
        row = score(g, truth)
        p, r, f = prf(set(triples), truth)
        assert (row.precision, row.recall, row.f_measure) == (p, r, f)
        if row.precision + row.recall > 0:
            expect = 2 * row.precision * row.recall / (row.precision + row.recall)
            assert abs(row.f_measure - expect) < 1e-12


def test_aggregate_single_and_pair():
    one = score(graph_of([("a", "b", 0)]), {("a", "b", 0)})
    rep = aggregate([one])
    assert rep.mean["precision"] == 1.0 and rep.std["precision"] == 0.0
    r1 = score(graph_of([("a", "b", 0), ("a", "c", 0), ("a", "d", 0), ("a", "e", 0), ("a", "f", 0)]),
               {("a", "b", 0)})
    r2 = score(graph_of([("a", "b", 0), ("a", "c", 0), ("a", "d", 0), ("a", "e", 0), ("a", "f", 0)]),
               {("a", "b", 0), ("a", "c", 0), ("a", "d", 0)})
    rep = aggregate([r1, r2])
    assert rep.mean["precision"] == pytest.approx((0.2 + 0.6) / 2)


def test_aggregate_matches_streaming_recompute():
    rng = random.Random(5)
    rows = []
    for _ in range(40):
        names, triples = random_triples(rng, max_nodes=8)
        _, truth = random_triples(rng, max_nodes=8)
        rows.append(score(graph_of(triples, nodes=names), set(truth)))
    rep = aggregate(rows)
    for metric in ("precision", "recall", "f_measure"):
        values = [getattr(r, metric) for r in rows]
        mean = sum(values) / len(values)
        var = sum((v - mean) ** 2 for v in values) / len(values)
        assert abs(rep.mean[metric] - mean) < 1e-12
        assert abs(rep.std[metric] - var**0.5) < 1e-12


def test_aggregate_empty_rejected():
    with pytest.raises(TrainingError):
        aggregate([])


def test_calibrate_perfect_classifier_smallest_tau():
    triples = [("a", f"n{i}", i) for i in range(10)]
    labels = [Label.TRUE_POSITIVE if i % 2 == 0 else Label.FALSE_POSITIVE for i in range(10)]
    g = graph_of(triples, labels)
    probs = [1.0 if i % 2 == 0 else 0.0 for i in range(10)]
    assert calibrate_balanced([(g, probs)]) == 0.01


def test_calibrate_minimizes_gap_on_grid():
    rng = random.Random(99)
    programs = []
    for _ in range(6):
        triples = [("a", f"n{i}", i) for i in range(rng.randint(5, 25))]
        labels = [Label.TRUE_POSITIVE if rng.random() < 0.6 else Label.FALSE_POSITIVE for _ in triples]
        probs = [min(1.0, max(0.0, (0.6 if l is Label.TRUE_POSITIVE else 0.3) + rng.gauss(0, 0.2)))
                 for l in labels]
        programs.append((graph_of(triples, labels), probs))

    def gap(tau):
        ps, rs = [], []
        for g, probs in programs:
            row = score(prune_threshold(g, probs, tau), g.true_triples())
            ps.append(row.precision)
            rs.append(row.recall)
        return abs(sum(ps) / len(ps) - sum(rs) / len(rs))

    star = calibrate_balanced(programs)
    best = gap(star)
    for tau in TAU_GRID:
        assert best <= gap(tau) + 1e-15
        if gap(tau) == best:
            assert star <= tau  # smallest-tau tie break


def test_calibrate_empty_rejected():
    with pytest.raises(TrainingError):
        calibrate_balanced([])


def test_monomorphic_sites_basics():
    assert monomorphic_sites(graph_of([("a", "b", 0)])) == {("a", 0)}
    assert monomorphic_sites(graph_of([("a", "b", 0), ("a", "c", 0)])) == set()


def test_monomorphic_sites_match_oracle():
    rng = random.Random(123)
    for _ in range(500):
        names, triples = random_triples(rng, max_nodes=10)
        assert monomorphic_sites(graph_of(triples, nodes=names)) == mono_sites(triples)


def test_monomorph_score_perfect_and_directional():
    truth = graph_of([("a", "b", 0), ("c", "d", 1)])
    assert monomorph_score(truth, truth).f_measure == 1.0
    noisy = graph_of([("a", "b", 0), ("a", "x", 0), ("c", "d", 1)])
    row = monomorph_score(noisy, truth)
    assert row.recall < 1.0  # site (a,0) went polymorphic in pred


def test_monomorph_score_matches_oracle_pairs():
    rng = random.Random(321)
    for _ in range(100):
        names, pred_t = random_triples(rng, max_nodes=8)
        names2, truth_t = random_triples(rng, max_nodes=8)
        row = monomorph_score(graph_of(pred_t, nodes=names), graph_of(truth_t, nodes=names2))
        p, r, f = prf(mono_sites(pred_t), mono_sites(truth_t))
        assert (row.precision, row.recall, row.f_measure) == (p, r, f)


def test_random_prune_bad_fraction():
    g = graph_of([("a", "b", 0)])
    with pytest.raises(ConfigError):
        random_prune(g, 101, seed=0)


def test_score_invariant_under_signature_relabeling():
    rng = random.Random(909)
    for _ in range(50):
        names, triples = random_triples(rng, max_nodes=8)
        _, truth_list = random_triples(rng, max_nodes=8)
        rename = {n: f"renamed::{n}" for n in set(names) | {t for tr in truth_list for t in tr[:2]}}
        mapped = [(rename[c], rename[d], o) for c, d, o in triples]
        mapped_truth = {(rename[c], rename[d], o) for c, d, o in truth_list}
        a = score(graph_of(triples, nodes=names), set(truth_list))
        b = score(graph_of(mapped), mapped_truth)
        assert (a.precision, a.recall, a.f_measure) == (b.precision, b.recall, b.f_measure)
