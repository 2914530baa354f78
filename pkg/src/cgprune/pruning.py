"""Pruning rules, threshold calibration, the random baseline, and scoring.

Pruning never adds edges and never removes nodes: the output graph keeps
V' = V and E' a subset of E with survivor order preserved. Precision and
Recall compare edge triples against a ground-truth set; per-program rows
are aggregated as an unweighted mean with the population standard
deviation. Metrics with an empty denominator (|S| = 0 or |G| = 0) are
defined as 0.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import AlignmentError, ConfigError, TrainingError
from .graph import CallGraph, Edge

# Calibration grid: tau in {0.00, 0.01, ..., 1.00}.
TAU_GRID = [i / 100.0 for i in range(101)]


@dataclass(frozen=True)
class MetricsRow:
    program_id: str
    precision: float
    recall: float
    f_measure: float
    predicted: int  # |S|
    truth: int  # |G|
    hit: int  # |S intersect G|

    def to_json(self) -> dict:
        return {
            "program_id": self.program_id,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "counts": {"predicted": self.predicted, "truth": self.truth, "hit": self.hit},
        }


@dataclass(frozen=True)
class PruneReport:
    rows: tuple[MetricsRow, ...]
    mean: dict[str, float]
    std: dict[str, float]

    def to_json(self) -> dict:
        return {
            "per_program": [r.to_json() for r in self.rows],
            "aggregate": {
                metric: {"mean": self.mean[metric], "std": self.std[metric]}
                for metric in ("precision", "recall", "f_measure")
            },
        }


def prune(g: CallGraph, classifier: Callable[[int, Edge], bool]) -> CallGraph:
    """Drop edges the classifier rejects; keep nodes and survivor order.

    ``classifier(ordinal, edge)`` returns True for true-positive (kept)
    edges. A classifier exception aborts with the failing ordinal attached.
    """
    kept = []
    for i, e in enumerate(g.edges):
        try:
            keep = classifier(i, e)
        except Exception as exc:
            exc.args = (f"classifier failed on edge ordinal {i}: {exc}",)
            raise
        if keep:
            kept.append(e)
    return g.with_edges(kept)


def prune_threshold(g: CallGraph, probs: Sequence[float], tau: float) -> CallGraph:
    """Keep edge i iff probs[i] >= tau."""
    if len(probs) != len(g.edges):
        raise AlignmentError(f"{len(probs)} probabilities for {len(g.edges)} edges")
    return g.with_edges(e for i, e in enumerate(g.edges) if probs[i] >= tau)


def random_prune(g: CallGraph, fraction_pct: float, seed: int) -> CallGraph:
    """Remove round(N/100 * |E|) uniformly chosen edges, seeded.

    Rounding is half-up for determinism across platforms.
    """
    if not 0.0 <= fraction_pct <= 100.0:
        raise ConfigError(f"prune percentage must be within [0, 100], got {fraction_pct}")
    n_edges = len(g.edges)
    n_remove = int(math.floor(fraction_pct / 100.0 * n_edges + 0.5))
    doomed = set(random.Random(seed).sample(range(n_edges), n_remove))
    return g.with_edges(e for i, e in enumerate(g.edges) if i not in doomed)


def _prf(predicted: int, truth: int, hit: int) -> tuple[float, float, float]:
    precision = hit / predicted if predicted else 0.0
    recall = hit / truth if truth else 0.0
    f = 2.0 * precision * recall / (precision + recall) if precision + recall > 0.0 else 0.0
    return precision, recall, f


def score(pred: CallGraph, truth_edges: set[tuple[str, str, int]]) -> MetricsRow:
    """Precision/Recall/F of the predicted edge set against ground truth."""
    s = pred.triple_set()
    hit = len(s & truth_edges)
    precision, recall, f = _prf(len(s), len(truth_edges), hit)
    return MetricsRow(pred.program_id, precision, recall, f, len(s), len(truth_edges), hit)


def aggregate(rows: Sequence[MetricsRow]) -> PruneReport:
    """Unweighted per-program mean and population std of each metric."""
    if not rows:
        raise TrainingError("cannot aggregate zero metric rows")
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for metric in ("precision", "recall", "f_measure"):
        values = [getattr(r, metric) for r in rows]
        mu = sum(values) / len(values)
        mean[metric] = mu
        std[metric] = math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))
    return PruneReport(tuple(rows), mean, std)


def calibrate_balanced(
    programs: Sequence[tuple[CallGraph, Sequence[float]]],
) -> float:
    """Grid threshold where mean precision and mean recall are closest.

    ``programs`` pairs each labeled training graph with its per-edge
    prob_TP values. Scans tau over the 0.01 grid and returns the value
    minimizing |meanP(tau) - meanR(tau)|; ties go to the smallest tau.
    """
    if not programs:
        raise TrainingError("calibration needs at least one labeled program")
    truths = [g.true_triples() for g, _ in programs]
    best_tau, best_gap = TAU_GRID[0], float("inf")
    for tau in TAU_GRID:
        ps, rs = [], []
        for (g, probs), truth in zip(programs, truths):
            row = score(prune_threshold(g, probs, tau), truth)
            ps.append(row.precision)
            rs.append(row.recall)
        gap = abs(sum(ps) / len(ps) - sum(rs) / len(rs))
        if gap < best_gap:
            best_tau, best_gap = tau, gap
    return best_tau


def monomorphic_sites(g: CallGraph) -> set[tuple[str, int]]:
    """Call sites with exactly one distinct callee."""
    return {site for site, callees in g.sites.items() if len(set(callees)) == 1}


def monomorph_score(pred: CallGraph, truth: CallGraph) -> MetricsRow:
    """P/R/F of predicted monomorphic sites against the ground-truth graph's."""
    s = monomorphic_sites(pred)
    g = monomorphic_sites(truth)
    hit = len(s & g)
    precision, recall, f = _prf(len(s), len(g), hit)
    return MetricsRow(pred.program_id, precision, recall, f, len(s), len(g), hit)
