"""Two-branch gated-fusion classifier.

The continuous branch maps ``f_c`` to ``R_c`` and the discrete branch maps the
biomarker vector ``f_d`` to ``R_d`` (both width ``d_r``). A sigmoid gate over
``[R_c, R_d]`` mixes them per dimension::

    g     = sigmoid(W_g [R_c; R_d] + b_g)
    fused = g * R_c + (1 - g) * R_d
    probs = softmax(W_o fused + b_o)

Gradients are derived by hand; see :func:`backward`.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import TrainingError, ValidationError
from .layers import (
    SGD,
    Adam,
    DenseLayer,
    build_stack,
    cross_entropy,
    dense_forward,
    glorot_layer,
    softmax,
    stack_backward,
    stack_forward,
)

log = logging.getLogger(__name__)

N_CLASSES = 3


@dataclass(frozen=True)
class Architecture:
    branch_c: Tuple[int, ...] = (32, 16)
    branch_d: Tuple[int, ...] = (64, 32, 16)

    def __post_init__(self):
        object.__setattr__(self, "branch_c", tuple(int(w) for w in self.branch_c))
        object.__setattr__(self, "branch_d", tuple(int(w) for w in self.branch_d))
        if not self.branch_c or not self.branch_d:
            raise ValidationError("both branches need at least one layer")
        if any(w < 1 for w in self.branch_c + self.branch_d):
            raise ValidationError("layer widths must be positive")
        if self.branch_c[-1] != self.branch_d[-1]:
            raise ValidationError(
                f"branch output widths differ ({self.branch_c[-1]} vs {self.branch_d[-1]})"
            )

    @property
    def d_r(self) -> int:
        return self.branch_c[-1]


@dataclass
class ModelParams:
    branch_c: List[DenseLayer]
    branch_d: List[DenseLayer]
    gate: DenseLayer
    output: DenseLayer

    kind = "glumarker"

    def __post_init__(self):
        for name, stack in (("branch_c", self.branch_c), ("branch_d", self.branch_d)):
            if not stack:
                raise ValidationError(f"{name} is empty")
            for a, b in zip(stack, stack[1:]):
                if b.n_in != a.n_out:
                    raise ValidationError(f"{name}: layer widths do not chain")
        d_r = self.branch_c[-1].n_out
        if self.branch_d[-1].n_out != d_r:
            raise ValidationError("branch_c and branch_d must end in the same width")
        if self.gate.weights.shape != (d_r, 2 * d_r) or self.gate.activation != "sigmoid":
            raise ValidationError(f"gate must be a sigmoid layer of shape ({d_r}, {2 * d_r})")
        if self.output.weights.shape != (N_CLASSES, d_r):
            raise ValidationError(f"output layer must have shape ({N_CLASSES}, {d_r})")

    @property
    def d_r(self) -> int:
        return self.branch_c[-1].n_out

    @property
    def n_continuous(self) -> int:
        return self.branch_c[0].n_in

    @property
    def n_discrete(self) -> int:
        return self.branch_d[0].n_in

    def layers(self) -> List[DenseLayer]:
        return [*self.branch_c, *self.branch_d, self.gate, self.output]

    def arrays(self) -> List[np.ndarray]:
        """Parameter arrays in a fixed order; optimizers update them in place."""
        out = []
        for layer in self.layers():
            out += [layer.weights, layer.biases]
        return out

    def copy(self) -> "ModelParams":
        return copy.deepcopy(self)

    def zeros_like(self) -> "ModelParams":
        return ModelParams(
            [l.zeros_like() for l in self.branch_c],
            [l.zeros_like() for l in self.branch_d],
            self.gate.zeros_like(),
            self.output.zeros_like(),
        )

    def predict_proba(self, f_c, f_d) -> np.ndarray:
        return predict_proba(self, f_c, f_d)


def init_params(n_continuous: int, n_discrete: int, arch: Architecture, seed: int) -> ModelParams:
    rng = np.random.default_rng(seed)
    d_r = arch.d_r
    return ModelParams(
        branch_c=build_stack(rng, n_continuous, arch.branch_c),
        branch_d=build_stack(rng, n_discrete, arch.branch_d),
        gate=glorot_layer(rng, 2 * d_r, d_r, "sigmoid"),
        output=glorot_layer(rng, d_r, N_CLASSES, "identity"),
    )


def _as_batch(params: ModelParams, f_c, f_d):
    Fc = np.asarray(f_c, dtype=np.float64)
    Fd = np.asarray(getattr(f_d, "values", f_d), dtype=np.float64)
    single = Fc.ndim == 1
    Fc, Fd = np.atleast_2d(Fc), np.atleast_2d(Fd)
    if Fc.shape[1] != params.n_continuous or Fd.shape[1] != params.n_discrete:
        raise ValidationError(
            f"input widths ({Fc.shape[1]}, {Fd.shape[1]}) do not match model "
            f"({params.n_continuous}, {params.n_discrete})"
        )
    if Fc.shape[0] != Fd.shape[0]:
        raise ValidationError("f_c and f_d batch sizes differ")
    return Fc, Fd, single


def forward(params: ModelParams, f_c, f_d):
    """Class probabilities and the activation cache for :func:`backward`.

    Accepts single vectors or row-stacked batches.
    """
    Fc, Fd, single = _as_batch(params, f_c, f_d)
    R_c, cache_c = stack_forward(params.branch_c, Fc)
    R_d, cache_d = stack_forward(params.branch_d, Fd)
    H = np.concatenate([R_c, R_d], axis=1)
    Zg, g = dense_forward(params.gate, H)
    fused = g * R_c + (1.0 - g) * R_d
    logits, _ = dense_forward(params.output, fused)
    probs = softmax(logits)
    cache = dict(cache_c=cache_c, cache_d=cache_d, R_c=R_c, R_d=R_d, H=H, Zg=Zg, g=g,
                 fused=fused, probs=probs)
    return (probs[0] if single else probs), cache


def predict_proba(params: ModelParams, f_c, f_d) -> np.ndarray:
    return forward(params, f_c, f_d)[0]


def loss(probs, label) -> float:
    """Cross-entropy of one probability vector against an integer class."""
    return float(cross_entropy(np.asarray(probs, dtype=np.float64), np.array([int(label)]))[0])


def backward(params: ModelParams, cache: dict, labels) -> ModelParams:
    """Gradient of the summed cross-entropy over the cached batch."""
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    probs, g, R_c, R_d = cache["probs"], cache["g"], cache["R_c"], cache["R_d"]
    n = probs.shape[0]
    if labels.shape != (n,):
        raise ValidationError("label count does not match cached batch")
    d_r = params.d_r

    d_logits = probs.copy()
    d_logits[np.arange(n), labels] -= 1.0
    grad_out = DenseLayer(d_logits.T @ cache["fused"], d_logits.sum(axis=0), "identity")
    d_fused = d_logits @ params.output.weights

    # fused = g*R_c + (1-g)*R_d
    d_g = d_fused * (R_c - R_d)
    d_Rc = d_fused * g
    d_Rd = d_fused * (1.0 - g)

    d_Zg = d_g * g * (1.0 - g)
    grad_gate = DenseLayer(d_Zg.T @ cache["H"], d_Zg.sum(axis=0), "sigmoid")
    d_H = d_Zg @ params.gate.weights
    d_Rc = d_Rc + d_H[:, :d_r]
    d_Rd = d_Rd + d_H[:, d_r:]

    grads_c, _ = stack_backward(params.branch_c, cache["cache_c"], d_Rc)
    grads_d, _ = stack_backward(params.branch_d, cache["cache_d"], d_Rd)
    return ModelParams(grads_c, grads_d, grad_gate, grad_out)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 60
    batch_size: int = 32
    seed: int = 0
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: Optional[int] = 15

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValidationError("learning_rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch_size must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")

    def make_optimizer(self):
        if self.optimizer == "sgd":
            return SGD(self.learning_rate)
        return Adam(self.learning_rate, self.beta1, self.beta2, self.eps)


@dataclass
class History:
    epochs: List[int] = field(default_factory=list)
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    best_epoch: int = 0

    def rows(self):
        for e, t, v in zip(self.epochs, self.train_loss, self.val_loss):
            yield e, t, v


def fit_minibatch(
    model,
    loss_and_grad: Callable,
    mean_loss: Callable,
    train: Tuple[np.ndarray, ...],
    validation: Optional[Tuple[np.ndarray, ...]],
    config: TrainConfig,
):
    """Seeded mini-batch descent shared by every neural model.

    ``loss_and_grad(model, *batch)`` returns (summed loss, list of summed
    gradient arrays aligned with ``model.arrays()``); ``mean_loss(model, *data)``
    scores a whole dataset. The returned model is the one with the lowest
    validation loss (training loss when there is no validation data), epoch 0
    being the initial parameters.
    """
    n = train[0].shape[0]
    if n == 0:
        raise ValidationError("training set is empty")
    rng = np.random.default_rng(config.seed)
    opt = config.make_optimizer()
    history = History()

    def score(m):
        tl = mean_loss(m, *train)
        vl = mean_loss(m, *validation) if validation is not None and len(validation[0]) else tl
        return tl, vl

    tl, vl = score(model)
    history.epochs.append(0), history.train_loss.append(tl), history.val_loss.append(vl)
    initial = model.copy()
    # divergence is reported through the finite-loss checks, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        best = _epochs(model, loss_and_grad, score, train, config, rng, opt, history)
    return (best if best is not None else initial), history


def _epochs(model, loss_and_grad, score, train, config, rng, opt, history):
    """Run the epochs in place; returns a copy of the best model, or None if
    no epoch beat the initial validation loss."""
    n = train[0].shape[0]
    best, best_loss, since_best = None, history.val_loss[0], 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch_loss, grads = loss_and_grad(model, *(a[idx] for a in train))
            if not np.isfinite(batch_loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}; learning rate "
                    f"{config.learning_rate:g} is probably too high"
                )
            opt.step(model.arrays(), [g / len(idx) for g in grads])
        tl, vl = score(model)
        if not (np.isfinite(tl) and np.isfinite(vl)):
            raise TrainingError(
                f"non-finite loss at epoch {epoch}; learning rate "
                f"{config.learning_rate:g} is probably too high"
            )
        history.epochs.append(epoch), history.train_loss.append(tl), history.val_loss.append(vl)
        log.debug("epoch %d train %.5f val %.5f", epoch, tl, vl)
        if vl < best_loss:
            best, best_loss, since_best = model.copy(), vl, 0
            history.best_epoch = epoch
        else:
            since_best += 1
            if config.patience is not None and since_best >= config.patience:
                break
    return best


def _glumarker_loss_and_grad(params: ModelParams, Fc, Fd, y):
    probs, cache = forward(params, Fc, Fd)
    return float(cross_entropy(probs, y).sum()), backward(params, cache, y).arrays()


def _glumarker_mean_loss(params: ModelParams, Fc, Fd, y):
    return float(cross_entropy(forward(params, Fc, Fd)[0], y).mean())


def train(split, arch: Architecture = Architecture(), config: TrainConfig = TrainConfig(),
          init: Optional[ModelParams] = None):
    """Train on ``split.train`` with early stopping on ``split.validation``.

    ``split`` may be a :class:`~glumarker.features.DatasetSplit` or a
    ``(train, validation)`` pair of ``(F_c, F_d, y)`` tuples.
    """
    train_data, val_data = _unpack(split)
    params = init.copy() if init is not None else init_params(
        train_data[0].shape[1], train_data[1].shape[1], arch, config.seed
    )
    return fit_minibatch(params, _glumarker_loss_and_grad, _glumarker_mean_loss,
                         train_data, val_data, config)


def _unpack(split):
    from .features import stack

    if hasattr(split, "train"):
        tr = stack(split.train)
        va = stack(split.validation) if split.validation else None
        return tr, va
    tr, va = split
    return tuple(np.asarray(a) for a in tr), (None if va is None else tuple(np.asarray(a) for a in va))
