"""Comparison classifiers written from scratch: Gaussian naive Bayes, a
one-vs-rest linear SVC trained by hinge-loss subgradient descent, and an MLP.

All of them consume ``concat(f_c, f_d)`` and expose ``predict_proba(f_c, f_d)``
returning an (n, 3) probability matrix.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core_types import ControlLabel
from .errors import TrainingError, ValidationError
from .layers import DenseLayer, build_stack, cross_entropy, glorot_layer, softmax, stack_backward, stack_forward
from .network import N_CLASSES, TrainConfig, fit_minibatch

log = logging.getLogger(__name__)


def _joined(f_c, f_d, n_features: Optional[int] = None) -> Tuple[np.ndarray, bool]:
    Fc = np.asarray(f_c, dtype=np.float64)
    Fd = np.asarray(getattr(f_d, "values", f_d), dtype=np.float64)
    single = Fc.ndim == 1
    Fc, Fd = np.atleast_2d(Fc), np.atleast_2d(Fd)
    if Fc.shape[0] != Fd.shape[0]:
        raise ValidationError("f_c and f_d batch sizes differ")
    X = np.concatenate([Fc, Fd], axis=1)
    if n_features is not None and X.shape[1] != n_features:
        raise ValidationError(f"expected {n_features} input features, got {X.shape[1]}")
    return X, single


def _xy(examples):
    from .features import stack

    if isinstance(examples, tuple):
        Fc, Fd, y = examples
    else:
        Fc, Fd, y = stack(examples)
    X, _ = _joined(Fc, Fd)
    return X, np.asarray(y, dtype=np.int64), np.asarray(Fc).shape[-1]


# -- naive Bayes -----------------------------------------------------------


@dataclass
class NaiveBayes:
    priors: np.ndarray  # (3,)
    means: np.ndarray  # (3, n_features)
    variances: np.ndarray  # (3, n_features)
    n_continuous: int

    kind = "naive_bayes"

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        ll = -0.5 * (
            np.log(2.0 * np.pi * self.variances)[None, :, :]
            + (X[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :]
        ).sum(axis=2)
        return ll + np.log(self.priors)[None, :]

    def predict_proba(self, f_c, f_d) -> np.ndarray:
        X, single = _joined(f_c, f_d, self.means.shape[1])
        probs = softmax(self.joint_log_likelihood(X))
        return probs[0] if single else probs


def fit_naive_bayes(examples, variance_floor: float = 1e-9) -> NaiveBayes:
    """Per-class Gaussian fit with variances clamped below at ``variance_floor``."""
    X, y, n_c = _xy(examples)
    counts = np.bincount(y, minlength=N_CLASSES)
    for k in range(N_CLASSES):
        if counts[k] == 0:
            raise ValidationError(f"class {ControlLabel(k).display} absent from training data")
    means = np.stack([X[y == k].mean(axis=0) for k in range(N_CLASSES)])
    variances = np.stack([X[y == k].var(axis=0) for k in range(N_CLASSES)])
    return NaiveBayes(
        priors=counts / counts.sum(),
        means=means,
        variances=np.maximum(variances, variance_floor),
        n_continuous=n_c,
    )


# -- linear SVC ------------------------------------------------------------


@dataclass
class LinearSVC:
    weights: np.ndarray  # (3, n_features), one row per one-vs-rest classifier
    biases: np.ndarray  # (3,)
    n_continuous: int
    objective_history: List[float] = field(default_factory=list, repr=False)

    kind = "linear_svc"

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights.T + self.biases

    def predict_proba(self, f_c, f_d) -> np.ndarray:
        X, single = _joined(f_c, f_d, self.weights.shape[1])
        # softmax over margins only provides ROC scores; it is not calibrated
        probs = softmax(self.decision_function(X))
        return probs[0] if single else probs


def hinge_objective(W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray, C: float) -> float:
    """Sum over the three binary problems of ``0.5||w||^2 + C * mean(hinge)``.

    ``Y`` holds +-1 targets, shape (n, 3).
    """
    margins = Y * (X @ W.T + b)
    return float(0.5 * np.sum(W * W) + C * np.maximum(0.0, 1.0 - margins).mean(axis=0).sum())


def fit_linear_svc(
    examples,
    C: float = 1.0,
    epochs: int = 50,
    seed: int = 0,
    learning_rate: float = 0.05,
    batch_size: int = 32,
) -> LinearSVC:
    """One-vs-rest linear classifiers by mini-batch subgradient descent on the
    L2-regularized hinge loss, step size ``learning_rate / sqrt(epoch)``."""
    if C < 0:
        raise ValidationError("C must be >= 0")
    X, y, n_c = _xy(examples)
    n, p = X.shape
    if n == 0:
        raise ValidationError("training set is empty")
    Y = np.where(y[:, None] == np.arange(N_CLASSES)[None, :], 1.0, -1.0)
    W = np.zeros((N_CLASSES, p))
    b = np.zeros(N_CLASSES)
    rng = np.random.default_rng(seed)
    history = [hinge_objective(W, b, X, Y, C)]
    for epoch in range(1, epochs + 1):
        eta = learning_rate / np.sqrt(epoch)
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            Xb, Yb = X[idx], Y[idx]
            active = (Yb * (Xb @ W.T + b) < 1.0) * Yb  # (m, 3): nonzero where hinge is active
            gW = W - C * active.T @ Xb / len(idx)
            gb = -C * active.sum(axis=0) / len(idx)
            W -= eta * gW
            b -= eta * gb
        obj = hinge_objective(W, b, X, Y, C)
        if not np.isfinite(obj):
            raise TrainingError(f"linear SVC objective diverged at epoch {epoch}")
        history.append(obj)
    return LinearSVC(W, b, n_c, history)


# -- MLP -------------------------------------------------------------------


@dataclass
class MLP:
    layers: List[DenseLayer]
    n_continuous: int

    kind = "mlp"

    def arrays(self) -> List[np.ndarray]:
        out = []
        for layer in self.layers:
            out += [layer.weights, layer.biases]
        return out

    def copy(self) -> "MLP":
        return copy.deepcopy(self)

    def logits(self, X: np.ndarray):
        return stack_forward(self.layers, X)

    def predict_proba(self, f_c, f_d) -> np.ndarray:
        X, single = _joined(f_c, f_d, self.layers[0].n_in)
        probs = softmax(self.logits(X)[0])
        return probs[0] if single else probs


def init_mlp(n_features: int, hidden: Sequence[int], seed: int, n_continuous: int) -> MLP:
    hidden = [int(h) for h in hidden]
    if not hidden or any(h < 1 for h in hidden):
        raise ValidationError("MLP needs at least one hidden layer of positive width")
    rng = np.random.default_rng(seed)
    layers = build_stack(rng, n_features, hidden)
    layers.append(glorot_layer(rng, hidden[-1], N_CLASSES, "identity"))
    return MLP(layers, n_continuous)


def _mlp_loss_and_grad(model: MLP, X, y):
    logits, cache = model.logits(X)
    probs = softmax(logits)
    d_logits = probs.copy()
    d_logits[np.arange(len(y)), y] -= 1.0
    grads, _ = stack_backward(model.layers, cache, d_logits)
    flat = []
    for g in grads:
        flat += [g.weights, g.biases]
    return float(cross_entropy(probs, y).sum()), flat


def _mlp_mean_loss(model: MLP, X, y):
    return float(cross_entropy(softmax(model.logits(X)[0]), y).mean())


def fit_mlp(
    examples,
    hidden: Sequence[int] = (64, 32),
    config: TrainConfig = TrainConfig(),
    validation=None,
):
    """Dense ReLU stack with a softmax head on ``concat(f_c, f_d)``.

    Returns ``(model, history)``; the model is the best-validation checkpoint.
    """
    X, y, n_c = _xy(examples)
    val = None
    if validation is not None and len(validation):
        Xv, yv, _ = _xy(validation)
        val = (Xv, yv)
    model = init_mlp(X.shape[1], hidden, config.seed, n_c)
    return fit_minibatch(model, _mlp_loss_and_grad, _mlp_mean_loss, (X, y), val, config)


def predict_proba(model, f_c, f_d) -> np.ndarray:
    """Uniform scoring entry point for every fitted model."""
    return model.predict_proba(f_c, f_d)
