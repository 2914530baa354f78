"""Seeded generator of labeled synthetic call-graph corpora.

Each generated program has a ``main`` entry, a true-call backbone reaching
every live function, planted polymorphic call sites whose whole fanout is
true (the pattern that defeats pure fanout heuristics), and false edges of
two kinds: pollution (extra callees planted at a genuinely monomorphic true
site, the way an over-approximating analysis smears virtual dispatch) and
spurious sites (call sites that never happen at runtime at all).

Pseudo-source is a token sequence, not compilable code. Live functions draw
identifier tokens from an API pool while the stub functions targeted by
false edges draw from a separate pool, and callers mention the names of
their true callees; ``signal_strength`` scales how cleanly that separation
holds, with 0 making token content independent of the labels. Everything is
derived from per-program sub-seeds of the master seed, so corpora are
byte-reproducible.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .graph import GRAPH_SUFFIX, SOURCE_SUFFIX, CallGraph, Edge, Label, SourceMap, save_callgraph, save_sources

MANIFEST_NAME = "manifest.json"

# Fraction of nodes that are live (participate in true calls); the rest are
# stubs reachable only through false edges.
LIVE_FRACTION = 0.65
# Split of the false-edge budget between site pollution and spurious sites.
POLLUTION_SHARE = 0.55
# Fraction of spurious-site callees drawn from live functions; those false
# edges cannot be told apart by callee token content alone.
SPURIOUS_LIVE_CALLEES = 0.3


@dataclass(frozen=True)
class SynthConfig:
    """Corpus shape knobs; the defaults are the documented desk-scale corpus."""

    seed: int = 42
    programs: int = 25
    nodes_min: int = 40
    nodes_max: int = 70
    true_density: float = 0.5  # extra true edges per live node
    false_density: float = 1.1  # false edges per live node
    poly_rate: float = 0.08  # planted all-true polymorphic sites per live node
    fanout_min: int = 3
    fanout_max: int = 5
    vocab_size: int = 120
    signal_strength: float = 0.9

    def validate(self) -> None:
        if self.programs < 1:
            raise ConfigError("programs must be >= 1")
        if not 3 <= self.nodes_min <= self.nodes_max:
            raise ConfigError("need nodes_max >= nodes_min >= 3")
        if not 2 <= self.fanout_min <= self.fanout_max:
            raise ConfigError("need fanout_max >= fanout_min >= 2")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ConfigError("signal_strength must be within [0, 1]")
        if self.vocab_size < 30:
            raise ConfigError("vocab_size must be >= 30")
        if self.true_density < 0 or self.false_density <= 0:
            raise ConfigError("densities must produce at least one edge")
        if int(LIVE_FRACTION * self.nodes_min) <= self.fanout_max:
            raise ConfigError("nodes_min too small for the requested fanout range")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def _pools(cfg: SynthConfig) -> tuple[list[str], list[str], list[str]]:
    third = cfg.vocab_size // 3
    filler = [f"util{i}" for i in range(third)]
    api = [f"api{i}" for i in range(third)]
    misc = [f"ext{i}" for i in range(cfg.vocab_size - 2 * third)]
    return filler, api, misc


class _ProgramBuilder:
    def __init__(self, cfg: SynthConfig, program_id: str, rng: np.random.Generator):
        self.cfg = cfg
        self.id = program_id
        self.rng = rng
        self.filler, self.api, self.misc = _pools(cfg)
        n = int(rng.integers(cfg.nodes_min, cfg.nodes_max + 1))
        self.n_live = max(int(n * LIVE_FRACTION), cfg.fanout_max + 1)
        # shuffled name assignment: an fn index carries no liveness signal
        pool = [f"{program_id}.fn{i:03d}" for i in range(1, n)]
        order = rng.permutation(n - 1)
        self.names = [f"{program_id}.main"] + [pool[int(i)] for i in order]
        self.live = self.names[: self.n_live]
        self.stubs = self.names[self.n_live :]
        if not self.stubs:
            raise ConfigError("node range leaves no stub functions; raise nodes_min")
        self.next_offset = {name: 0 for name in self.names}
        self.edges: list[Edge] = []
        self.site_callees: dict[tuple[str, int], set[str]] = {}
        self.mentions: dict[str, list[str]] = {name: [] for name in self.names}

    def fresh_site(self, caller: str) -> int:
        offset = self.next_offset[caller]
        self.next_offset[caller] = offset + 1
        return offset

    def add_edge(self, caller: str, callee: str, offset: int, true: bool) -> bool:
        site = (caller, offset)
        callees = self.site_callees.setdefault(site, set())
        if callee in callees:
            return False
        callees.add(callee)
        label = Label.TRUE_POSITIVE if true else Label.FALSE_POSITIVE
        self.edges.append(Edge(caller, callee, offset, label))
        return True

    def choice(self, pool: list[str]) -> str:
        return pool[int(self.rng.integers(0, len(pool)))]

    def sample(self, pool: list[str], k: int) -> list[str]:
        idx = self.rng.choice(len(pool), size=min(k, len(pool)), replace=False)
        return [pool[int(i)] for i in idx]

    def build(self) -> tuple[CallGraph, SourceMap]:
        cfg, rng = self.cfg, self.rng

        # caller sources mention true callees with probability s and false
        # callees with probability s(1-s); at s=0 sources carry no echo of
        # the graph structure at all, so labels are token-independent
        def mention(caller: str, callee: str, true: bool) -> None:
            p = cfg.signal_strength if true else cfg.signal_strength * (1.0 - cfg.signal_strength)
            if rng.random() < p:
                self.mentions[caller].append(callee)

        # true backbone: every live function reachable from main
        for i in range(1, self.n_live):
            parent = self.live[int(rng.integers(0, i))]
            self.add_edge(parent, self.live[i], self.fresh_site(parent), True)
            mention(parent, self.live[i], True)

        # extra true calls, each at its own (monomorphic) site
        for _ in range(round(cfg.true_density * self.n_live)):
            caller = self.choice(self.live)
            callee = self.choice(self.live[1:])
            if self.add_edge(caller, callee, self.fresh_site(caller), True):
                mention(caller, callee, True)

        # planted polymorphic sites: the whole fanout is true
        for _ in range(max(1, round(cfg.poly_rate * self.n_live))):
            caller = self.choice(self.live)
            fanout = int(rng.integers(cfg.fanout_min, cfg.fanout_max + 1))
            offset = self.fresh_site(caller)
            for callee in self.sample(self.live[1:], fanout):
                if self.add_edge(caller, callee, offset, True):
                    mention(caller, callee, True)

        # false edges: pollute monomorphic true sites, then spurious sites
        n_false = max(1, round(cfg.false_density * self.n_live))
        n_pollute = round(n_false * POLLUTION_SHARE)
        mono_sites = [
            site for site, callees in self.site_callees.items() if len(callees) == 1
        ]
        placed = 0
        while placed < n_pollute and mono_sites:
            site = mono_sites[int(rng.integers(0, len(mono_sites)))]
            for callee in self.sample(self.stubs, int(rng.integers(1, 4))):
                if placed >= n_pollute:
                    break
                if self.add_edge(site[0], callee, site[1], False):
                    placed += 1
                    mention(site[0], callee, False)
            mono_sites.remove(site)
        while placed < n_false:
            caller = self.choice(self.stubs if rng.random() < 0.5 else self.live)
            offset = self.fresh_site(caller)
            for _ in range(int(rng.integers(1, 5))):
                if placed >= n_false:
                    break
                pool = self.live[1:] if rng.random() < SPURIOUS_LIVE_CALLEES else self.stubs
                if self.add_edge(caller, self.choice(pool), offset, False):
                    placed += 1
                    mention(caller, self.edges[-1].callee, False)

        # nodes derive from edge endpoints only: the jsonl edge format cannot
        # carry isolated nodes, and features must match across a round trip
        graph = CallGraph(self.id, self.edges)
        return graph, SourceMap({name: self.render_source(name) for name in self.names})

    def render_source(self, name: str) -> str:
        rng, cfg = self.rng, self.cfg
        simple = name.split(".")[-1]
        is_live = name in set(self.live)
        # stubs drift from the API pool toward their own pool as the
        # semantic signal strengthens
        body: list[str] = []
        for _ in range(6):
            if is_live or rng.random() >= cfg.signal_strength:
                body.append(self.choice(self.api))
            else:
                body.append(self.choice(self.misc))
        body.extend(self.choice(self.filler) for _ in range(4))
        calls = " ".join(f"{callee.split('.')[-1]}()" for callee in self.mentions[name])
        return f"def {simple}() {{ {' '.join(body)} {calls} }}"


def generate(cfg: SynthConfig) -> list[tuple[CallGraph, SourceMap]]:
    """Generate the corpus: one labeled graph + source map per program."""
    cfg.validate()
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.programs)
    corpus = []
    for i, child in enumerate(children):
        builder = _ProgramBuilder(cfg, f"prog{i:03d}", np.random.Generator(np.random.PCG64(child)))
        corpus.append(builder.build())
    return corpus


def write_corpus(corpus: list[tuple[CallGraph, SourceMap]], out_dir: str | Path, cfg: SynthConfig) -> Path:
    """Write ``*.cg.jsonl``/``*.src.jsonl`` per program plus a manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ids = []
    for graph, sources in corpus:
        save_callgraph(graph, out_dir / f"{graph.program_id}{GRAPH_SUFFIX}")
        save_sources(sources, out_dir / f"{graph.program_id}{SOURCE_SUFFIX}")
        ids.append(graph.program_id)
    manifest = {"programs": ids, "config": cfg.to_json()}
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return path


def split(programs: list, train_fraction: float, seed: int) -> tuple[list, list]:
    """Program-level train/test split with a seeded shuffle."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train fraction must be strictly between 0 and 1")
    n_train = int(round(len(programs) * train_fraction))
    if n_train < 1 or n_train >= len(programs):
        raise ConfigError(
            f"cannot split {len(programs)} programs at fraction {train_fraction}"
        )
    order = np.random.Generator(np.random.PCG64(seed)).permutation(len(programs))
    train = [programs[i] for i in sorted(order[:n_train])]
    test = [programs[i] for i in sorted(order[n_train:])]
    return train, test
