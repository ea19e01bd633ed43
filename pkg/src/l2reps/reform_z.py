"""Loss over hidden representations and the attraction/repulsion forces.

The regularizer of layer ``l`` is ``||Z_l (Zsigma_{l-1})^+||_F^2``. For
gradients it is replaced by the smooth Tikhonov surrogate
``Tr[K_l (Ksigma_{l-1} + eps I)^{-1}]`` with ``K = Z^T Z``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError, DivergenceError, InvalidInputError, ShapeError
from .linalg_core import DEFAULT_TOL, as_matrix, pinv, proj_onto_row_space
from .network import (
    RELU,
    Activation,
    NetworkParams,
    check_targets,
    cost_gradient,
    cost_value,
    forward,
    with_bias_row,
)

CONSTRAINT_TOL = 1e-6


@dataclass
class HiddenReps:
    reps: list  # Z_1 .. Z_L
    X: np.ndarray
    beta: float = 0.0
    activation: Activation = RELU

    def __post_init__(self):
        self.X = as_matrix(self.X)
        self.reps = [as_matrix(z) for z in self.reps]
        n = self.X.shape[1]
        for l, z in enumerate(self.reps, start=1):
            if z.shape[1] != n:
                raise ShapeError(f"Z_{l} has {z.shape[1]} columns, expected {n}")

    @property
    def depth(self):
        return len(self.reps)

    def activations(self):
        """``[Zsigma_0, ..., Zsigma_{L-1}]``."""
        post = [with_bias_row(self.X, self.beta)]
        for z in self.reps[:-1]:
            post.append(with_bias_row(self.activation(z), self.beta))
        return post

    def replace(self, reps):
        return HiddenReps([np.array(z, dtype=float) for z in reps], self.X, self.beta, self.activation)


@dataclass
class ForceField:
    attraction: np.ndarray
    repulsion: np.ndarray
    layer: int
    epsilon_attraction: float
    epsilon_repulsion: float


def constraint_violations(Z, tol=DEFAULT_TOL):
    """Relative residual ``||Z_l (I - P_l)|| / ||Z_l||`` for every layer."""
    out = []
    for z, post in zip(Z.reps, Z.activations()):
        norm = np.linalg.norm(z)
        if norm == 0.0:
            out.append(0.0)
            continue
        p = proj_onto_row_space(post, tol)
        out.append(float(np.linalg.norm(z - z @ p) / norm))
    return out


def check_constraints(Z, tol=CONSTRAINT_TOL):
    for l, v in enumerate(constraint_violations(Z), start=1):
        if v > tol:
            raise ConstraintError(l, v)


def reg_terms(Z, tol=DEFAULT_TOL):
    """``[||Z_l (Zsigma_{l-1})^+||_F^2 for l = 1..L]``."""
    return [float(np.sum((z @ pinv(post, tol)) ** 2)) for z, post in zip(Z.reps, Z.activations())]


def loss_r(Z, cost, targets, lam, tol=CONSTRAINT_TOL):
    """``C(Z_L) + lam * sum_l ||Z_l (Zsigma_{l-1})^+||_F^2`` on the feasible set."""
    check_constraints(Z, tol)
    out = Z.reps[-1]
    targets = check_targets(cost, out.shape[0], targets, out.shape[1])
    return cost_value(cost, out, targets) + lam * sum(reg_terms(Z))


def reps_from_weights(params, X):
    """Phi: the pre-activations of ``params`` on ``X``."""
    trace = forward(params, X)
    return HiddenReps(trace.pre_activations, X, params.beta, params.activation)


def weights_from_reps(Z, tol=CONSTRAINT_TOL):
    """Psi: ``W_l = Z_l (Zsigma_{l-1})^+``, the residual-free weights of ``Z``."""
    check_constraints(Z, tol)
    weights = [z @ pinv(post) for z, post in zip(Z.reps, Z.activations())]
    return NetworkParams(weights, Z.beta, Z.activation)


Phi = reps_from_weights
Psi = weights_from_reps


def weight_residuals(params, X):
    """``W_l - Z_l (Zsigma_{l-1})^+`` for every layer: the part of ``W_l`` orthogonal to the data."""
    trace = forward(params, X)
    return [w - z @ pinv(post) for w, z, post in zip(params.weights, trace.pre_activations, trace.activations)]


def default_epsilon(gram):
    n = gram.shape[0]
    scale = np.trace(gram) / n
    return 1e-6 * scale if scale > 0 else 1e-6


def _gram(a):
    return a.T @ a


def _reg_inverse(post, eps):
    k = _gram(post)
    return np.linalg.inv(k + eps * np.eye(k.shape[0]))


def tikhonov_reg_terms(Z, epsilons):
    """``[Tr[K_l (Ksigma_{l-1} + eps_l I)^{-1}] for l = 1..L]``."""
    return [
        float(np.sum(z * (z @ _reg_inverse(post, eps))))
        for z, post, eps in zip(Z.reps, Z.activations(), epsilons)
    ]


def default_epsilons(Z):
    return [default_epsilon(_gram(post)) for post in Z.activations()]


def _attraction(z, inv):
    return 2.0 * z @ inv


def _repulsion(z_l, z_next, inv, activation):
    s = activation(z_l)
    a = inv @ _gram(z_next) @ inv
    return -2.0 * activation.derivative(z_l) * (s @ a)


def forces(Z, layer, epsilon=None):
    """Attraction and repulsion on hidden layer ``layer`` (1-based, ``1 <= layer <= L-1``).

    Attraction is the gradient of ``Tr[K_l (Ksigma_{l-1}+eps I)^{-1}]`` and
    repulsion that of ``Tr[K_{l+1} (Ksigma_l+eps I)^{-1}]``, both w.r.t. ``Z_l``.
    With ``epsilon=None`` each inverse gets ``1e-6 * Tr(Ksigma)/N``.
    """
    if not 1 <= layer <= Z.depth - 1:
        raise InvalidInputError(f"layer must be in 1..{Z.depth - 1}, got {layer}")
    post = Z.activations()
    k_prev, k_here = _gram(post[layer - 1]), _gram(post[layer])
    eps_a = default_epsilon(k_prev) if epsilon is None else float(epsilon)
    eps_r = default_epsilon(k_here) if epsilon is None else float(epsilon)
    if eps_a <= 0 or eps_r <= 0:
        raise InvalidInputError("epsilon must be positive")
    z = Z.reps[layer - 1]
    eye = np.eye(k_prev.shape[0])
    att = _attraction(z, np.linalg.inv(k_prev + eps_a * eye))
    rep = _repulsion(z, Z.reps[layer], np.linalg.inv(k_here + eps_r * eye), Z.activation)
    return ForceField(att, rep, layer, eps_a, eps_r)


def tikhonov_loss(Z, cost, targets, lam, epsilons):
    return cost_value(cost, Z.reps[-1], targets) + lam * sum(tikhonov_reg_terms(Z, epsilons))


def tikhonov_gradient(Z, cost, targets, lam, epsilons):
    """Gradient of :func:`tikhonov_loss` with respect to every ``Z_l``."""
    post = Z.activations()
    invs = [_reg_inverse(p, e) for p, e in zip(post, epsilons)]
    grads = []
    for l, z in enumerate(Z.reps):
        g = lam * _attraction(z, invs[l])
        if l < Z.depth - 1:
            g = g + lam * _repulsion(z, Z.reps[l + 1], invs[l + 1], Z.activation)
        else:
            g = g + cost_gradient(cost, z, targets)
        grads.append(g)
    return grads


def project(Z, tol=DEFAULT_TOL):
    """Map ``Z_l -> Z_l P_{Im Zsigma_{l-1}}`` sequentially from the first layer."""
    reps = [z.copy() for z in Z.reps]
    post = with_bias_row(Z.X, Z.beta)
    for l in range(len(reps)):
        reps[l] = reps[l] @ proj_onto_row_space(post, tol)
        post = with_bias_row(Z.activation(reps[l]), Z.beta)
    return Z.replace(reps)


def projected_gd(Z0, cost, targets, lam, steps, lr, epsilon=None, history=None, divergence=1e12, min_lr=1e-14):
    """Projected gradient descent on the Tikhonov-regularized representation loss.

    Each step moves along the negative gradient, projects back onto the
    feasible set, and is accepted only if the regularized loss did not
    increase; otherwise the learning rate is halved. ``epsilon`` is fixed for
    the whole run (scale-relative defaults are computed from ``Z0``).
    """
    check_constraints(Z0)
    targets = check_targets(cost, Z0.reps[-1].shape[0], targets, Z0.X.shape[1])
    if epsilon is None:
        epsilons = default_epsilons(Z0)
    elif np.isscalar(epsilon):
        epsilons = [float(epsilon)] * Z0.depth
    else:
        epsilons = list(epsilon)
    Z = Z0
    value = tikhonov_loss(Z, cost, targets, lam, epsilons)
    for step in range(steps):
        if not np.isfinite(value) or value > divergence:
            raise DivergenceError(step, value)
        grads = tikhonov_gradient(Z, cost, targets, lam, epsilons)
        while True:
            trial = project(Z.replace([z - lr * g for z, g in zip(Z.reps, grads)]))
            new_value = tikhonov_loss(trial, cost, targets, lam, epsilons)
            if np.isfinite(new_value) and new_value <= value:
                Z, value = trial, new_value
                break
            lr *= 0.5
            if lr < min_lr:
                if history is not None:
                    history.append(value)
                return Z
        if history is not None:
            history.append(value)
    return Z


def check_in_feasible_set(Z, tol=CONSTRAINT_TOL):
    """True iff ``Z`` satisfies the row-space constraint chain."""
    try:
        check_constraints(Z, tol)
    except ConstraintError:
        return False
    return True

