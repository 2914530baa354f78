"""Minimal dense neural-network kernel.

Fully connected layers with optional ReLU, a numerically stable softmax,
cross-entropy loss, hand-derived reverse-mode gradients, Adam with bias
correction, seeded initialization, and a central-difference gradient
checker. Everything runs in 64-bit floats; vector arguments may be a single
sample (1-D) or a batch (2-D, one row per sample).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

RELU = "relu"
LINEAR = "none"

PROB_FLOOR = 1e-12  # clamp before log in cross-entropy


class Rng:
    """Deterministic random stream from a 64-bit seed."""

    def __init__(self, seed: int):
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def uniform(self, lo: float, hi: float, shape) -> np.ndarray:
        return self._gen.uniform(lo, hi, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, lo: int, hi: int) -> int:
        return int(self._gen.integers(lo, hi))


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = LINEAR

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def pre_activation(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"input width {x.shape[-1]} != layer input {self.in_dim}")
        return x @ self.weights.T + self.bias

    def forward(self, x: np.ndarray) -> np.ndarray:
        z = self.pre_activation(x)
        return np.maximum(z, 0.0) if self.activation == RELU else z


def init_layer(rng: Rng, out_dim: int, in_dim: int, activation: str = LINEAR) -> DenseLayer:
    """Uniform init on [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(in_dim)
    return DenseLayer(
        weights=rng.uniform(-bound, bound, (out_dim, in_dim)),
        bias=rng.uniform(-bound, bound, out_dim),
        activation=activation,
    )


def dense_backward(
    layer: DenseLayer, x: np.ndarray, z: np.ndarray, d_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients through one layer given input x, pre-activation z and d_out.

    Returns (dW, db, dx). Batched inputs sum gradients over the batch.
    """
    if layer.activation == RELU:
        d_out = d_out * (z > 0.0)
    if x.ndim == 1:
        dw = np.outer(d_out, x)
        db = d_out.copy()
    else:
        dw = d_out.T @ x
        db = d_out.sum(axis=0)
    dx = d_out @ layer.weights
    return dw, db, dx


def softmax(z: np.ndarray) -> np.ndarray:
    """Stable softmax over the last axis (max subtraction)."""
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise NumericError("softmax input contains non-finite values")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(prob: np.ndarray, label: int) -> float:
    """Negative log-likelihood of ``label``; probability clamped to >= 1e-12."""
    prob = np.asarray(prob, dtype=np.float64)
    if not 0 <= label < prob.shape[-1]:
        raise IndexError(f"label {label} outside [0, {prob.shape[-1]})")
    return float(-np.log(max(prob[label], PROB_FLOOR)))


@dataclass
class Mlp:
    """Plain layer stack ending in softmax + cross-entropy."""

    layers: list[DenseLayer]

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return softmax(x)

    def loss(self, x: np.ndarray, label: int) -> float:
        return cross_entropy(self.forward(x), label)

    def backward(self, x: np.ndarray, label: int) -> list[tuple[np.ndarray, np.ndarray]]:
        """Gradients of the scalar loss w.r.t. every (weights, bias)."""
        inputs, pres = [], []
        h = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            inputs.append(h)
            z = layer.pre_activation(h)
            pres.append(z)
            h = np.maximum(z, 0.0) if layer.activation == RELU else z
        prob = softmax(h)
        d = prob.copy()
        d[label] -= 1.0  # d loss / d logits
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)
        for i in reversed(range(len(self.layers))):
            dw, db, d = dense_backward(self.layers[i], inputs[i], pres[i], d)
            grads[i] = (dw, db)
        return grads

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend([layer.weights, layer.bias])
        return out


@dataclass
class AdamState:
    """Adam with bias correction; moments mirror the parameter shapes."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def _ensure(self, params: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]


def adam_step(
    state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]
) -> list[np.ndarray]:
    """One Adam update; returns new parameter arrays, mutating only the state."""
    state._ensure(params)
    state.t += 1
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / (1.0 - state.beta1**state.t)
        v_hat = state.v[i] / (1.0 - state.beta2**state.t)
        out.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


def numeric_gradients(loss_fn, params: list[np.ndarray], h: float = 1e-4) -> list[np.ndarray]:
    """Central-difference gradients of ``loss_fn()`` w.r.t. params, in place.

    ``loss_fn`` must read the current contents of ``params``; entries are
    wiggled one scalar at a time and restored.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = loss_fn()
            flat[j] = orig - h
            down = loss_fn()
            flat[j] = orig
            gflat[j] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(
    analytic: list[np.ndarray], numeric: list[np.ndarray]
) -> float:
    """max |ga - gn| / max(|ga|, |gn|, 1) over all parameters."""
    worst = 0.0
    for ga, gn in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(ga), np.abs(gn)), 1.0)
        worst = max(worst, float(np.max(np.abs(ga - gn) / denom)))
    return worst
