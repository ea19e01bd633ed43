"""Fully-connected networks with a bias row of amount ``beta``.

Column ``i`` of a data matrix is datapoint ``i``. A layer's activations are
``sigma(Z)`` stacked on a constant row ``beta * 1^T``; weight matrices have
one extra column that multiplies that row.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DivergenceError, InvalidInputError, ShapeError
from .linalg_core import as_matrix


@dataclass(frozen=True)
class Activation:
    """Positively homogeneous activation: ``relu``, ``leaky_relu`` or ``identity``."""

    kind: str = "relu"
    slope: float = 0.0

    def __post_init__(self):
        if self.kind not in ("relu", "leaky_relu", "identity"):
            raise ValueError(f"unknown activation {self.kind!r}")
        if self.kind == "leaky_relu" and not 0.0 < self.slope < 1.0:
            raise ValueError("leaky_relu slope must lie in (0, 1)")

    def __call__(self, z):
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        if self.kind == "leaky_relu":
            return np.where(z > 0, z, self.slope * z)
        return np.asarray(z, dtype=float)

    def derivative(self, z):
        # sigma'(0) := 0 for relu (slope for leaky_relu)
        if self.kind == "relu":
            return (z > 0).astype(float)
        if self.kind == "leaky_relu":
            return np.where(z > 0, 1.0, self.slope)
        return np.ones_like(z, dtype=float)

    @classmethod
    def parse(cls, text):
        """``"relu"``, ``"identity"`` or ``"leaky_relu:0.1"``."""
        if isinstance(text, cls):
            return text
        name, _, slope = str(text).partition(":")
        return cls(name, float(slope) if slope else 0.0)

    def __str__(self):
        return f"leaky_relu:{self.slope}" if self.kind == "leaky_relu" else self.kind


RELU = Activation("relu")
IDENTITY = Activation("identity")


def leaky_relu(slope):
    return Activation("leaky_relu", slope)


class Cost(str, Enum):
    """Output cost ``C(Z_L)``.

    MSE averages the squared column errors over the ``N`` datapoints, SSE sums
    them, CROSS_ENTROPY is the mean softmax cross-entropy against one-hot columns.
    """

    MSE = "mse"
    SSE = "sse"
    CROSS_ENTROPY = "cross_entropy"


def _log_softmax(z):
    shifted = z - z.max(axis=0, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))


def cost_value(cost, out, targets):
    cost = Cost(cost)
    n = out.shape[1]
    if cost is Cost.CROSS_ENTROPY:
        return float(-np.sum(targets * _log_softmax(out)) / n)
    sse = float(np.sum((out - targets) ** 2))
    return sse / n if cost is Cost.MSE else sse


def cost_gradient(cost, out, targets):
    cost = Cost(cost)
    n = out.shape[1]
    if cost is Cost.CROSS_ENTROPY:
        return (np.exp(_log_softmax(out)) - targets) / n
    g = 2.0 * (out - targets)
    return g / n if cost is Cost.MSE else g


def check_targets(cost, out_rows, targets, n):
    targets = as_matrix(targets)
    if targets.shape != (out_rows, n):
        raise ShapeError(f"targets have shape {targets.shape}, expected {(out_rows, n)}")
    if Cost(cost) is Cost.CROSS_ENTROPY:
        onehot = np.all((targets == 0) | (targets == 1)) and np.all(targets.sum(axis=0) == 1)
        if not onehot:
            raise InvalidInputError("cross_entropy needs one-hot target columns")
    return targets


@dataclass
class NetworkParams:
    weights: list
    beta: float = 0.0
    activation: Activation = RELU

    def __post_init__(self):
        self.weights = [as_matrix(w) for w in self.weights]
        if not self.weights:
            raise ShapeError("a network needs at least one layer")
        for l in range(1, len(self.weights)):
            if self.weights[l].shape[1] != self.weights[l - 1].shape[0] + 1:
                raise ShapeError(
                    f"W{l + 1} has {self.weights[l].shape[1]} columns, "
                    f"expected {self.weights[l - 1].shape[0] + 1}"
                )
        if self.beta < 0:
            raise InvalidInputError("beta must be non-negative")

    @property
    def depth(self):
        return len(self.weights)

    @property
    def widths(self):
        """``(n_0, n_1, ..., n_L)``."""
        return (self.weights[0].shape[1] - 1,) + tuple(w.shape[0] for w in self.weights)

    def norm_sq(self):
        return float(sum(np.sum(w**2) for w in self.weights))

    def with_weights(self, weights):
        return NetworkParams([np.array(w, dtype=float) for w in weights], self.beta, self.activation)

    def copy(self):
        return self.with_weights(self.weights)


@dataclass
class ForwardTrace:
    pre_activations: list  # Z_1 .. Z_L
    activations: list  # Zsigma_0 .. Zsigma_{L-1}, each with the beta row appended

    @property
    def output(self):
        return self.pre_activations[-1]


def with_bias_row(a, beta):
    return np.vstack([a, np.full((1, a.shape[1]), float(beta))])


def init_params(widths, beta=0.0, activation=RELU, rng=None, gain=1.0):
    """Gaussian init with per-layer std ``gain / sqrt(fan_in + 1)``.

    ``widths`` is ``(n_0, n_1, ..., n_L)``.
    """
    rng = np.random.default_rng(rng)
    weights = [
        rng.standard_normal((n_out, n_in + 1)) * (gain / np.sqrt(n_in + 1))
        for n_in, n_out in zip(widths[:-1], widths[1:])
    ]
    return NetworkParams(weights, beta, Activation.parse(activation))


def forward(params, X):
    X = as_matrix(X)
    if X.shape[0] != params.widths[0]:
        raise ShapeError(f"X has {X.shape[0]} rows, network expects {params.widths[0]}")
    post = [with_bias_row(X, params.beta)]
    pre = []
    for l, w in enumerate(params.weights):
        z = w @ post[-1]
        pre.append(z)
        if l < params.depth - 1:
            post.append(with_bias_row(params.activation(z), params.beta))
    return ForwardTrace(pre, post)


def loss(params, X, targets, cost=Cost.MSE, lam=0.0):
    """``C(Z_L) + lam * sum_l ||W_l||_F^2``."""
    trace = forward(params, X)
    targets = check_targets(cost, params.widths[-1], targets, trace.output.shape[1])
    return cost_value(cost, trace.output, targets) + lam * params.norm_sq()


def _loss_and_gradient(params, X, targets, cost, lam):
    trace = forward(params, X)
    out = trace.output
    value = cost_value(cost, out, targets) + lam * params.norm_sq()
    delta = cost_gradient(cost, out, targets)
    grads = [None] * params.depth
    for l in range(params.depth - 1, -1, -1):
        w = params.weights[l]
        grads[l] = delta @ trace.activations[l].T + 2.0 * lam * w
        if l > 0:
            delta = params.activation.derivative(trace.pre_activations[l - 1]) * (w[:, :-1].T @ delta)
    return value, grads


def gradient(params, X, targets, cost=Cost.MSE, lam=0.0):
    """Exact gradient of :func:`loss` with respect to every weight matrix."""
    X = as_matrix(X)
    targets = check_targets(cost, params.widths[-1], targets, X.shape[1])
    return _loss_and_gradient(params, X, targets, cost, lam)[1]


@dataclass
class OptimizerConfig:
    """Two full-batch phases: Adam warm-up, then plain GD with step halving.

    During GD a step that increases the loss is rejected and the learning
    rate halved; accepted steps multiply it by ``gd_growth``. GD stops early
    once the gradient norm drops below ``grad_tol``.
    """

    adam_steps: int = 0
    adam_lr: float = 1e-2
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    gd_steps: int = 0
    gd_lr: float = 1e-2
    gd_growth: float = 1.0
    min_lr: float = 1e-14
    grad_tol: float = 0.0
    divergence: float = 1e12
    seed: int = 0


def _grad_norm(grads):
    return float(np.sqrt(sum(np.sum(g**2) for g in grads)))


def train(params, X, targets, cost=Cost.MSE, lam=0.0, opt=None, history=None):
    """Train ``params`` and return the final parameters.

    If ``history`` is a list, one ``(phase, loss)`` tuple is appended per
    step; in the GD phase the recorded loss is that of the accepted iterate
    and is therefore non-increasing.
    """
    opt = opt or OptimizerConfig()
    X = as_matrix(X)
    targets = check_targets(cost, params.widths[-1], targets, X.shape[1])
    weights = [w.copy() for w in params.weights]

    def evaluate(ws):
        return _loss_and_gradient(params.with_weights(ws), X, targets, cost, lam)

    m = [np.zeros_like(w) for w in weights]
    v = [np.zeros_like(w) for w in weights]
    b1, b2 = opt.adam_betas
    step = 0
    for t in range(1, opt.adam_steps + 1):
        value, grads = evaluate(weights)
        if not np.isfinite(value) or value > opt.divergence:
            raise DivergenceError(step, value)
        for i, g in enumerate(grads):
            m[i] = b1 * m[i] + (1 - b1) * g
            v[i] = b2 * v[i] + (1 - b2) * g**2
            mhat = m[i] / (1 - b1**t)
            vhat = v[i] / (1 - b2**t)
            weights[i] = weights[i] - opt.adam_lr * mhat / (np.sqrt(vhat) + opt.adam_eps)
        if history is not None:
            history.append(("adam", value))
        step += 1

    if opt.gd_steps > 0:
        value, grads = evaluate(weights)
        if not np.isfinite(value) or value > opt.divergence:
            raise DivergenceError(step, value)
        lr = opt.gd_lr
        for _ in range(opt.gd_steps):
            if _grad_norm(grads) < opt.grad_tol:
                break
            trial = [w - lr * g for w, g in zip(weights, grads)]
            new_value, new_grads = evaluate(trial)
            if np.isfinite(new_value) and new_value <= value:
                weights, value, grads = trial, new_value, new_grads
                lr *= opt.gd_growth
            else:
                lr *= 0.5
                if lr < opt.min_lr:
                    break
            if history is not None:
                history.append(("gd", value))
            step += 1

    return params.with_weights(weights)


def train_to_tolerance(params, X, targets, cost, lam, opt):
    """Like :func:`train` but also returns the final loss and gradient norm."""
    out = train(params, X, targets, cost, lam, opt)
    grads = gradient(out, X, targets, cost, lam)
    return out, loss(out, X, targets, cost, lam), _grad_norm(grads)
