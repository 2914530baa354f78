"""Deterministic word-level tokenizer and sequence-pair encoding.

When a pretrained checkpoint (with its own tokenizer) is unavailable, the
exporter builds a corpus vocabulary: identifiers split on non-alphanumeric
boundaries and camelCase transitions, lowercased, ranked by frequency then
lexicographically. Pair inputs follow the layout

    [CLS] <caller tokens> [SEP] <callee tokens> [EOS]

with each side truncated to at most (max_len - 3) // 2 tokens, splitting
the special-token budget evenly between caller and callee.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

PAD, CLS, SEP, EOS, UNK = 0, 1, 2, 3, 4
_FIRST_ID = 5

_WORD_RE = re.compile(r"[A-Za-z0-9]+")
_CAMEL_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|[0-9]+")


def tokenize(text: str) -> list[str]:
    out: list[str] = []
    for run in _WORD_RE.findall(text):
        out.extend(t.lower() for t in _CAMEL_RE.findall(run))
    return out


@dataclass(frozen=True)
class Vocabulary:
    ids: dict[str, int]

    @classmethod
    def build(cls, texts: Iterable[str]) -> "Vocabulary":
        counts: Counter[str] = Counter()
        for text in texts:
            counts.update(tokenize(text))
        ranked = sorted(counts, key=lambda t: (-counts[t], t))
        return cls({tok: _FIRST_ID + i for i, tok in enumerate(ranked)})

    def __len__(self) -> int:
        return _FIRST_ID + len(self.ids)

    def encode(self, text: str) -> list[int]:
        return [self.ids.get(tok, UNK) for tok in tokenize(text)]


def encode_pair(
    vocab: Vocabulary,
    caller_src: str | None,
    callee_src: str | None,
    max_len: int,
) -> list[int]:
    """Token ids for one edge: [CLS] caller [SEP] callee [EOS]."""
    budget = (max_len - 3) // 2
    caller = vocab.encode(caller_src or "")[:budget]
    callee = vocab.encode(callee_src or "")[:budget]
    return [CLS, *caller, SEP, *callee, EOS]


def pad_batch(sequences: list[list[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Right-pad to the batch maximum; returns (ids, attention masks)."""
    width = max(len(s) for s in sequences)
    ids = [s + [PAD] * (width - len(s)) for s in sequences]
    masks = [[1] * len(s) + [0] * (width - len(s)) for s in sequences]
    return ids, masks
