"""Exporter acceptance: format round-trip with the pruning toolkit and the
fine-tune smoke run. Run with ``pytest exporter/tests -v -s``.

The cross-component tests import the primary package (cgprune); install it
first (``pip install -e . --no-build-isolation`` at the repository root).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
import torch

from cgembed.cli import main
from cgembed.formats import read_edges, read_embeddings, read_sources, write_embeddings
from cgembed.model import SetupError, build_random, export_embeddings, finetune, load_pretrained
from cgembed.tokenizer import Vocabulary

GOLDEN = Path(__file__).parent / "golden"


def ok(name: str, passed: bool, detail: str = "") -> None:
    print(f"[{'PASS' if passed else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))
    assert passed, f"{name}: {detail}"


def toy_corpus(tmp_path: Path, n_edges: int, seed: int = 5) -> tuple[Path, Path]:
    rng = np.random.default_rng(seed)
    edges, sources = [], {}
    for i in range(n_edges):
        caller, callee = f"fn{i:02d}", f"gn{i:02d}"
        edges.append({"caller": caller, "callee": callee, "offset": 0, "label": int(i % 2)})
        verb = "loadData" if i % 2 else "spuriousLink"
        sources[caller] = f"def {caller}() {{ {verb} prepare{int(rng.integers(0, 4))} }}"
        sources[callee] = f"def {callee}() {{ handle{int(rng.integers(0, 4))} {verb} }}"
    graph = tmp_path / "toy.cg.jsonl"
    src = tmp_path / "toy.src.jsonl"
    graph.write_text("\n".join(json.dumps(e) for e in edges) + "\n")
    src.write_text("\n".join(json.dumps({"sig": s, "code": c}) for s, c in sources.items()) + "\n")
    return graph, src


def test_export_loads_in_primary_component(tmp_path):
    cgprune_semantic = pytest.importorskip("cgprune.semantic")
    graph, src = toy_corpus(tmp_path, 10)
    out = tmp_path / "toy.emb"
    code = main(["export", "--graph", str(graph), "--src", str(src), "--out", str(out),
                 "--init-random", "--layers", "1", "--max-len", "64", "--seed", "3"])
    assert code == 0
    store = cgprune_semantic.load_embeddings(out, expected_count=10)
    ok(
        "exporter output loads in the primary component",
        store.dimension == 768 and store.count == 10,
        f"dim {store.dimension}, count {store.count}, zero alignment errors",
    )


def test_golden_file_parses_identically_in_both_components():
    cgprune_semantic = pytest.importorskip("cgprune.semantic")
    ours = read_embeddings(GOLDEN / "toy10.emb")
    theirs = cgprune_semantic.load_embeddings(GOLDEN / "toy10.emb", expected_count=10)
    identical = (
        theirs.dimension == ours.shape[1] == 768
        and theirs.count == ours.shape[0] == 10
        and np.array_equal(theirs.vectors, ours)
    )
    ok("checked-in golden .emb parses identically in both components", identical,
       f"{ours.shape[0]} vectors, dim {ours.shape[1]}")


def test_finetune_smoke_decreasing_loss_and_stable_export(tmp_path):
    graph, src = toy_corpus(tmp_path, 50)
    edges = read_edges(graph)
    sources = read_sources(src)
    vocab = Vocabulary.build(sources.values())
    encoder = build_random(vocab, max_len=64, layers=1, seed=11)
    result = finetune(encoder, edges, sources, epochs=2, batch=10, seed=11)
    decreasing = result.epoch_losses[1] < result.epoch_losses[0]
    first = export_embeddings(encoder, edges, sources)
    second = export_embeddings(encoder, edges, sources)
    stable = np.array_equal(first, second) and first.shape == (50, 768)
    ok(
        "2-epoch fine-tune on 50 edges completes with decreasing loss",
        decreasing,
        f"epoch losses {result.epoch_losses[0]:.4f} -> {result.epoch_losses[1]:.4f}",
    )
    ok("frozen re-export is bit-stable", stable, f"{first.shape[0]} vectors")


def test_head_outputs_probability_pair(tmp_path):
    graph, src = toy_corpus(tmp_path, 10)
    edges = read_edges(graph)
    sources = read_sources(src)
    vocab = Vocabulary.build(sources.values())
    encoder = build_random(vocab, max_len=64, layers=1, seed=2)
    result = finetune(encoder, edges, sources, epochs=1, batch=5, seed=2)
    pooled = encoder.pooled(encoder.batch_inputs(edges[:3], sources))
    probs = torch.softmax(result.head(pooled), dim=-1)
    assert probs.shape == (3, 2)
    assert torch.all(probs > 0)
    assert torch.allclose(probs.sum(dim=-1), torch.ones(3), atol=1e-6)


def test_export_empty_graph_header_only(tmp_path):
    graph = tmp_path / "empty.cg.jsonl"
    src = tmp_path / "empty.src.jsonl"
    graph.write_text("")
    src.write_text("")
    out = tmp_path / "empty.emb"
    vocab = Vocabulary.build(["placeholder"])
    encoder = build_random(vocab, max_len=32, layers=1, seed=0)
    vectors = export_embeddings(encoder, [], {})
    write_embeddings(out, vectors.reshape(0, encoder.dimension))
    assert out.stat().st_size == 20  # magic + dim + count, no payload
    assert read_embeddings(out).shape == (0, 768)


def test_ablation_replaces_other_side_with_empty_segment(tmp_path):
    graph, src = toy_corpus(tmp_path, 4)
    edges = read_edges(graph)
    sources = read_sources(src)
    vocab = Vocabulary.build(sources.values())
    from cgembed.tokenizer import CLS, EOS, SEP

    caller_only = build_random(vocab, max_len=64, layers=1, seed=0, ablation="caller")
    seqs = caller_only.batch_inputs(edges, sources)
    for seq, e in zip(seqs, edges):
        sep = seq.index(SEP)
        assert seq[0] == CLS and seq[-1] == EOS
        assert seq[sep + 1 :] == [EOS]  # callee segment empty
        assert sep > 1  # caller tokens present

    callee_only = build_random(vocab, max_len=64, layers=1, seed=0, ablation="callee")
    for seq in callee_only.batch_inputs(edges, sources):
        assert seq[1] == SEP  # caller segment empty


def test_missing_pretrained_weights_is_setup_error(monkeypatch):
    monkeypatch.setenv("HF_HUB_OFFLINE", "1")
    vocab = Vocabulary.build(["x"])
    with pytest.raises(SetupError):
        load_pretrained("definitely/not-a-local-model", vocab, max_len=32)


def test_finetune_rejects_unlabeled(tmp_path):
    graph, src = toy_corpus(tmp_path, 4)
    edges = [e.__class__(e.caller, e.callee, e.offset, None) for e in read_edges(graph)]
    sources = read_sources(src)
    vocab = Vocabulary.build(sources.values())
    encoder = build_random(vocab, max_len=32, layers=1, seed=0)
    with pytest.raises(ValueError):
        finetune(encoder, edges, sources, epochs=1)
