"""Encoder construction, fine-tuning, and frozen embedding export.

The encoder is a RoBERTa-architecture transformer. With network access (or
a local checkpoint directory) it loads pretrained weights by name; in a
sealed environment a randomly initialized encoder with the same
architecture family can be built from a config, seeded for
reproducibility. Fine-tuning attaches a 2-class head to the pooled [CLS]
state and trains encoder plus head with Adam on cross-entropy; afterwards
every parameter is frozen and the pooled states become the exported
per-edge vectors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .formats import EdgeRecord
from .tokenizer import Vocabulary, encode_pair, pad_batch

log = logging.getLogger("cgembed")

HIDDEN_SIZE = 768

FINETUNE_LR = 1e-5
FINETUNE_BATCH = 10
FINETUNE_EPOCHS = 2


class SetupError(RuntimeError):
    """Pretrained weights or tokenizer could not be loaded."""


@dataclass
class Encoder:
    """A transformer encoder plus the tokenizer that feeds it."""

    model: "torch.nn.Module"
    vocab: Vocabulary
    max_len: int
    ablation: str | None = None  # None, "caller" or "callee"

    @property
    def dimension(self) -> int:
        return self.model.config.hidden_size

    def batch_inputs(self, edges, sources) -> list[list[int]]:
        sequences = []
        for e in edges:
            caller_src = sources.get(e.caller)
            callee_src = sources.get(e.callee)
            if self.ablation == "caller":
                callee_src = None  # keep only the caller's code
            elif self.ablation == "callee":
                caller_src = None
            sequences.append(encode_pair(self.vocab, caller_src, callee_src, self.max_len))
        return sequences

    def pooled(self, sequences: list[list[int]]) -> torch.Tensor:
        ids, masks = pad_batch(sequences)
        out = self.model(
            input_ids=torch.tensor(ids, dtype=torch.long),
            attention_mask=torch.tensor(masks, dtype=torch.long),
        )
        return out.last_hidden_state[:, 0, :]  # [CLS] position

    def freeze(self) -> None:
        self.model.eval()
        for p in self.model.parameters():
            p.requires_grad_(False)


def load_pretrained(name_or_path: str, vocab: Vocabulary, max_len: int, ablation=None) -> Encoder:
    """Load a pretrained checkpoint; raises SetupError when unavailable."""
    try:
        from transformers import AutoModel

        model = AutoModel.from_pretrained(name_or_path)
    except Exception as exc:
        raise SetupError(
            f"pretrained weights {name_or_path!r} are unavailable: {exc}"
        ) from exc
    return Encoder(model, vocab, max_len, ablation)


def build_random(vocab: Vocabulary, max_len: int, layers: int = 2, seed: int = 0, ablation=None) -> Encoder:
    """Seeded randomly initialized encoder with the same architecture family."""
    from transformers import RobertaConfig, RobertaModel

    torch.manual_seed(seed)
    config = RobertaConfig(
        vocab_size=len(vocab),
        hidden_size=HIDDEN_SIZE,
        num_hidden_layers=layers,
        num_attention_heads=12,
        intermediate_size=1024,
        max_position_embeddings=max_len + 4,
        pad_token_id=0,
    )
    return Encoder(RobertaModel(config), vocab, max_len, ablation)


@dataclass
class FinetuneResult:
    epoch_losses: list[float]
    head: "torch.nn.Module"  # frozen 2-class classification head


def finetune(
    encoder: Encoder,
    edges: list[EdgeRecord],
    sources: dict[str, str],
    epochs: int = FINETUNE_EPOCHS,
    lr: float = FINETUNE_LR,
    batch: int = FINETUNE_BATCH,
    seed: int = 0,
) -> FinetuneResult:
    """Train a 2-class head (and the encoder) on labeled edges; then freeze.

    Returns the mean loss per epoch plus the trained head. Edges without a
    0/1 label are rejected.
    """
    labeled = [(e, e.label) for e in edges]
    if not labeled:
        raise ValueError("fine-tuning corpus is empty")
    if any(lab not in (0, 1) for _, lab in labeled):
        raise ValueError("fine-tuning requires 0/1 labels on every edge")

    torch.manual_seed(seed)
    head = nn.Linear(encoder.dimension, 2)
    params = list(encoder.model.parameters()) + list(head.parameters())
    optimizer = torch.optim.Adam(params, lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    sequences = encoder.batch_inputs([e for e, _ in labeled], sources)
    labels = torch.tensor([lab for _, lab in labeled], dtype=torch.long)

    generator = np.random.Generator(np.random.PCG64(seed))
    encoder.model.train()
    epoch_losses = []
    for epoch in range(epochs):
        order = generator.permutation(len(sequences))
        total, batches = 0.0, 0
        for start in range(0, len(order), batch):
            idx = order[start : start + batch]
            pooled = encoder.pooled([sequences[i] for i in idx])
            loss = loss_fn(head(pooled), labels[idx])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss.detach())
            batches += 1
        epoch_losses.append(total / batches)
        log.info("epoch %d/%d: mean loss %.4f", epoch + 1, epochs, epoch_losses[-1])
    encoder.freeze()
    head.eval()
    for p in head.parameters():
        p.requires_grad_(False)
    return FinetuneResult(epoch_losses, head)


def export_embeddings(
    encoder: Encoder,
    edges: list[EdgeRecord],
    sources: dict[str, str],
    batch: int = 16,
) -> np.ndarray:
    """Pooled vector per edge, ordinal-aligned, as float32 rows."""
    encoder.model.eval()
    rows = np.zeros((len(edges), encoder.dimension), dtype=np.float32)
    sequences = encoder.batch_inputs(edges, sources)
    with torch.no_grad():
        for start in range(0, len(sequences), batch):
            chunk = sequences[start : start + batch]
            pooled = encoder.pooled(chunk)
            rows[start : start + len(chunk)] = pooled.cpu().numpy().astype(np.float32)
    return rows
