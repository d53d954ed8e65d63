"""Dense layers, manual backprop and first-order optimizers (numpy only)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ValidationError

ACTIVATIONS = ("relu", "identity", "sigmoid")


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str = "relu"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ValidationError(
                f"inconsistent layer shapes W{self.weights.shape} b{self.biases.shape}"
            )

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.biases.copy(), self.activation)

    def zeros_like(self) -> "DenseLayer":
        return DenseLayer(np.zeros_like(self.weights), np.zeros_like(self.biases), self.activation)


def glorot_layer(rng: np.random.Generator, n_in: int, n_out: int, activation: str) -> DenseLayer:
    limit = np.sqrt(6.0 / (n_in + n_out))
    W = rng.uniform(-limit, limit, size=(n_out, n_in))
    return DenseLayer(W, np.zeros(n_out), activation)


def build_stack(rng, n_in: int, widths: Sequence[int], activation: str = "relu") -> List[DenseLayer]:
    layers, prev = [], n_in
    for w in widths:
        layers.append(glorot_layer(rng, prev, int(w), activation))
        prev = int(w)
    return layers


def dense_forward(layer: DenseLayer, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (pre-activation, activation) for a batch ``X`` of shape (n, in)."""
    Z = X @ layer.weights.T + layer.biases
    return Z, activate(layer.activation, Z)


def activate(kind: str, Z: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(Z, 0.0)
    if kind == "sigmoid":
        return sigmoid(Z)
    return Z


def activation_grad(kind: str, Z: np.ndarray, dA: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return dA * (Z > 0)
    if kind == "sigmoid":
        s = sigmoid(Z)
        return dA * s * (1.0 - s)
    return dA


def stack_forward(layers: Sequence[DenseLayer], X: np.ndarray):
    """Forward through a layer stack; the cache holds each layer's input and pre-activation."""
    cache = []
    A = X
    for layer in layers:
        Z, A_next = dense_forward(layer, A)
        cache.append((A, Z))
        A = A_next
    return A, cache


def stack_backward(layers: Sequence[DenseLayer], cache, dA: np.ndarray):
    """Backprop ``dA`` (gradient w.r.t. the stack output) through the stack.

    Returns (per-layer gradient DenseLayers, gradient w.r.t. the stack input).
    Gradients are summed over the batch.
    """
    grads: List[DenseLayer] = [None] * len(layers)  # type: ignore[list-item]
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        A_in, Z = cache[i]
        dZ = activation_grad(layer.activation, Z, dA)
        grads[i] = DenseLayer(dZ.T @ A_in, dZ.sum(axis=0), layer.activation)
        dA = dZ @ layer.weights
    return grads, dA


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


PROB_FLOOR = 1e-12


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-example ``-log p[label]`` with the probability clamped at 1e-12."""
    probs = np.atleast_2d(probs)
    labels = np.atleast_1d(labels)
    picked = probs[np.arange(len(labels)), labels]
    return -np.log(np.maximum(picked, PROB_FLOOR))


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: List[np.ndarray] = []
        self.v: List[np.ndarray] = []

    def step(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
