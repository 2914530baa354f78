"""Fusion classifier: two projection branches, a hidden classifier layer,
softmax output, mini-batch Adam training, and versioned (de)serialization.

Semantic and structural feature vectors are each projected to h dims by a
fully connected layer, concatenated in fixed (semantic, structural) order,
and classified by a 2h -> 2 layer followed by softmax. Ablated variants drop
one branch and shrink the classifier input to h. The structural
standardizer fitted during training is baked into the model artifact, so
inference needs no training corpus.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import nn
from .errors import ConfigError, FormatError, NumericError, TrainingError
from .graph import Label
from .structural import NUM_FEATURES, Standardizer, fit_standardizer

MODEL_VERSION = 1

ABLATIONS = ("both", "sem-only", "struct-only")


@dataclass
class FusionConfig:
    """Architecture and training hyperparameters.

    Defaults follow the reference setup: h = 32 hidden dims per branch and
    Adam at lr 5e-6 with batch 50 for 5 epochs. ``activation`` applies to
    the projection layers; the classifier layer always emits raw logits.
    ``class_weights`` rescales the loss per class (FP, TP); the default is
    unweighted.
    """

    k_c: int = 768
    k_s: int = NUM_FEATURES
    h: int = 32
    ablation: str = "both"
    source_mode: str = "both"
    lr: float = 5e-6
    batch: int = 50
    epochs: int = 5
    seed: int = 0
    activation: str = nn.RELU
    class_weights: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self) -> None:
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if self.h < 1:
            raise ConfigError("h must be >= 1")
        if self.ablation != "struct-only" and self.k_c < 1:
            raise ConfigError("k_c must be >= 1 unless ablation is struct-only")
        if self.batch < 1 or self.epochs < 1:
            raise ConfigError("batch and epochs must be >= 1")
        if self.activation not in (nn.RELU, nn.LINEAR):
            raise ConfigError(f"activation must be 'relu' or 'none', got {self.activation!r}")

    @property
    def uses_sem(self) -> bool:
        return self.ablation != "struct-only"

    @property
    def uses_struct(self) -> bool:
        return self.ablation != "sem-only"

    @property
    def hidden_in(self) -> int:
        return self.h * (int(self.uses_sem) + int(self.uses_struct))


@dataclass
class FusionModel:
    config: FusionConfig
    standardizer: Standardizer
    sem_proj: nn.DenseLayer | None
    struct_proj: nn.DenseLayer | None
    hidden: nn.DenseLayer

    def _fused(self, f_sem: np.ndarray | None, f_struct: np.ndarray | None) -> np.ndarray:
        parts = []
        if self.sem_proj is not None:
            if f_sem is None:
                raise ConfigError("model expects a semantic vector")
            parts.append(self.sem_proj.forward(np.asarray(f_sem, dtype=np.float64)))
        if self.struct_proj is not None:
            if f_struct is None:
                raise ConfigError("model expects a structural vector")
            z = self.standardizer.apply(np.asarray(f_struct, dtype=np.float64))
            parts.append(self.struct_proj.forward(z))
        return np.concatenate(parts, axis=-1)

    def fuse_forward(
        self, f_sem: np.ndarray | None, f_struct: np.ndarray | None
    ) -> np.ndarray:
        """Probabilities (prob_FP, prob_TP); rows for batched input."""
        return nn.softmax(self.hidden.forward(self._fused(f_sem, f_struct)))

    def prob_tp(self, sem: np.ndarray | None, struct: np.ndarray | None) -> np.ndarray:
        """prob_TP per row for matrix inputs."""
        probs = self.fuse_forward(sem, struct)
        return np.atleast_2d(probs)[:, 1]

    def params(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for layer in (self.sem_proj, self.struct_proj, self.hidden):
            if layer is not None:
                out.extend([layer.weights, layer.bias])
        return out


def classify_edge(
    m: FusionModel, f_sem: np.ndarray | None, f_struct: np.ndarray | None
) -> tuple[Label, float]:
    """Label an edge: true positive iff prob_TP strictly exceeds prob_FP.

    Ties resolve to false positive (prune), the conservative reading.
    """
    prob = m.fuse_forward(f_sem, f_struct)
    p_tp = float(prob[1])
    label = Label.TRUE_POSITIVE if p_tp > float(prob[0]) else Label.FALSE_POSITIVE
    return label, p_tp


def _init_model(cfg: FusionConfig, standardizer: Standardizer) -> FusionModel:
    rng = nn.Rng(cfg.seed)
    sem = nn.init_layer(rng, cfg.h, cfg.k_c, cfg.activation) if cfg.uses_sem else None
    struct = nn.init_layer(rng, cfg.h, cfg.k_s, cfg.activation) if cfg.uses_struct else None
    hidden = nn.init_layer(rng, 2, cfg.hidden_in, nn.LINEAR)
    return FusionModel(cfg, standardizer, sem, struct, hidden)


def _batch_loss_grads(
    model: FusionModel,
    sem: np.ndarray | None,
    struct_z: np.ndarray | None,
    labels: np.ndarray,
    weights: np.ndarray,
) -> tuple[float, list[np.ndarray]]:
    """Mean weighted cross-entropy over the batch and grads per parameter."""
    n = labels.shape[0]
    parts, caches = [], []
    for layer, x in ((model.sem_proj, sem), (model.struct_proj, struct_z)):
        if layer is None:
            continue
        z = layer.pre_activation(x)
        h = np.maximum(z, 0.0) if layer.activation == nn.RELU else z
        parts.append(h)
        caches.append((layer, x, z))
    fused = np.concatenate(parts, axis=1)
    logits = model.hidden.pre_activation(fused)
    probs = nn.softmax(logits)
    picked = np.clip(probs[np.arange(n), labels], nn.PROB_FLOOR, None)
    sample_w = weights[labels]
    loss = float(np.mean(sample_w * -np.log(picked)))

    d_logits = probs.copy()
    d_logits[np.arange(n), labels] -= 1.0
    d_logits *= (sample_w / n)[:, None]
    dwh, dbh, d_fused = nn.dense_backward(model.hidden, fused, logits, d_logits)
    grads = []
    col = 0
    for layer, x, z in caches:
        d_h = d_fused[:, col : col + layer.out_dim]
        col += layer.out_dim
        dw, db, _ = nn.dense_backward(layer, x, z, d_h)
        grads.extend([dw, db])
    grads.extend([dwh, dbh])
    return loss, grads


def train(cfg: FusionConfig, dataset: Sequence[tuple]) -> FusionModel:
    """Train a fusion model on (f_sem, f_struct, label) triples.

    Runs ``epochs`` passes of seeded shuffled mini-batches (short final
    batch kept), minimizing mean cross-entropy with Adam. Labels must be
    0 (false positive) or 1 (true positive).
    """
    if len(dataset) == 0:
        raise TrainingError("training dataset is empty")
    labels = np.array([int(row[2]) for row in dataset])
    if not np.all((labels == 0) | (labels == 1)):
        raise TrainingError("training labels must be 0 or 1")
    sem = None
    if cfg.uses_sem:
        sem = np.array([np.asarray(row[0], dtype=np.float64) for row in dataset])
        if sem.shape[1] != cfg.k_c:
            raise ConfigError(f"semantic width {sem.shape[1]} != config k_c {cfg.k_c}")
    struct_z = None
    standardizer = Standardizer.identity(cfg.k_s)
    if cfg.uses_struct:
        struct = np.array([np.asarray(row[1], dtype=np.float64) for row in dataset])
        if struct.shape[1] != cfg.k_s:
            raise ConfigError(f"structural width {struct.shape[1]} != config k_s {cfg.k_s}")
        standardizer = fit_standardizer(struct)
        struct_z = standardizer.apply(struct)

    model = _init_model(cfg, standardizer)
    adam = nn.AdamState(lr=cfg.lr)
    rng = nn.Rng(cfg.seed)
    weights = np.asarray(cfg.class_weights, dtype=np.float64)
    n = labels.shape[0]
    step = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch):
            idx = order[start : start + cfg.batch]
            loss, grads = _batch_loss_grads(
                model,
                sem[idx] if sem is not None else None,
                struct_z[idx] if struct_z is not None else None,
                labels[idx],
                weights,
            )
            if not np.isfinite(loss):
                raise NumericError(f"non-finite training loss at step {step}")
            new_params = nn.adam_step(adam, model.params(), grads)
            _assign_params(model, new_params)
            step += 1
    return model


def _assign_params(model: FusionModel, params: list[np.ndarray]) -> None:
    it = iter(params)
    for layer in (model.sem_proj, model.struct_proj, model.hidden):
        if layer is not None:
            layer.weights = next(it)
            layer.bias = next(it)


# -- serialization ----------------------------------------------------------


def _layer_to_json(layer: nn.DenseLayer) -> dict:
    return {
        "rows": layer.out_dim,
        "cols": layer.in_dim,
        "weights": [repr(float(x)) for x in layer.weights.reshape(-1)],
        "bias": [repr(float(x)) for x in layer.bias],
        "activation": layer.activation,
    }


def _layer_from_json(obj: dict) -> nn.DenseLayer:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    weights = np.array([float(x) for x in obj["weights"]], dtype=np.float64)
    bias = np.array([float(x) for x in obj["bias"]], dtype=np.float64)
    if weights.size != rows * cols or bias.size != rows:
        raise FormatError("layer payload does not match declared shape")
    return nn.DenseLayer(weights.reshape(rows, cols), bias, obj["activation"])


def save_model(model: FusionModel, path: str | Path) -> None:
    """Write the model as versioned JSON; floats as exact decimal strings."""
    cfg = asdict(model.config)
    cfg["class_weights"] = list(model.config.class_weights)
    layers = {"hidden": _layer_to_json(model.hidden)}
    if model.sem_proj is not None:
        layers["sem_proj"] = _layer_to_json(model.sem_proj)
    if model.struct_proj is not None:
        layers["struct_proj"] = _layer_to_json(model.struct_proj)
    doc = {
        "version": MODEL_VERSION,
        "config": cfg,
        "standardizer": model.standardizer.to_json(),
        "layers": layers,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> FusionModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable model file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != MODEL_VERSION:
        raise FormatError(
            f"unsupported model version {doc.get('version') if isinstance(doc, dict) else doc!r}"
        )
    try:
        raw_cfg = dict(doc["config"])
        raw_cfg["class_weights"] = tuple(raw_cfg.get("class_weights", (1.0, 1.0)))
        cfg = FusionConfig(**raw_cfg)
        standardizer = Standardizer.from_json(doc["standardizer"])
        layers = doc["layers"]
        model = FusionModel(
            config=cfg,
            standardizer=standardizer,
            sem_proj=_layer_from_json(layers["sem_proj"]) if cfg.uses_sem else None,
            struct_proj=_layer_from_json(layers["struct_proj"]) if cfg.uses_struct else None,
            hidden=_layer_from_json(layers["hidden"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed model file: {exc}") from exc
    if model.hidden.in_dim != cfg.hidden_in or model.hidden.out_dim != 2:
        raise FormatError("classifier layer shape does not match config")
    if model.sem_proj is not None and (model.sem_proj.in_dim, model.sem_proj.out_dim) != (cfg.k_c, cfg.h):
        raise FormatError("semantic projection shape does not match config")
    if model.struct_proj is not None and (model.struct_proj.in_dim, model.struct_proj.out_dim) != (cfg.k_s, cfg.h):
        raise FormatError("structural projection shape does not match config")
    return model
