"""Desk-scale datasets: teacher networks, bipartite/one-hot constructions, clusters."""
from dataclasses import dataclass

import numpy as np

from ..cprank import bipartite_matrix
from ..errors import InvalidInputError
from ..network import RELU, forward, init_params

KINDS = ("teacher", "bipartite", "onehot", "counterexample_n2", "synthetic_clusters")


@dataclass(frozen=True)
class DatasetSpec:
    """Which dataset to build. Fields not used by ``kind`` are ignored.

    teacher            -- Gaussian inputs (``input_dim x n``) through a random
                          ReLU net with layer widths ``widths`` (bias amount 1)
    bipartite          -- ``X = I_n``, ``Y = B_n``
    onehot             -- ``X = I_n``, ``Y`` one-hot over ``classes``, sorted by class
    counterexample_n2  -- ``X = (1, -1)``, ``Y = (1, 1)``
    synthetic_clusters -- ``classes`` Gaussian clusters in ``dim`` dimensions, one-hot ``Y``
    """

    kind: str
    n: int = 0
    seed: int = 0
    classes: int = 0
    dim: int = 0
    input_dim: int = 0
    widths: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown dataset kind {self.kind!r}; expected one of {KINDS}")


def teacher(n, input_dim, widths, seed=0):
    return DatasetSpec("teacher", n=n, seed=seed, input_dim=input_dim, widths=tuple(widths))


def bipartite(n):
    return DatasetSpec("bipartite", n=n)


def onehot(n, classes, seed=0):
    return DatasetSpec("onehot", n=n, classes=classes, seed=seed)


def counterexample_n2():
    return DatasetSpec("counterexample_n2")


def synthetic_clusters(n, classes, dim, seed=0):
    return DatasetSpec("synthetic_clusters", n=n, classes=classes, dim=dim, seed=seed)


def _labels(n, classes, rng):
    labels = np.arange(n) % classes
    rng.shuffle(labels)
    return np.sort(labels)


def _onehot_matrix(labels, classes):
    y = np.zeros((classes, labels.size))
    y[labels, np.arange(labels.size)] = 1.0
    return y


def generate(spec):
    """Return ``(X, Y)``; deterministic in ``spec`` (including its seed)."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "counterexample_n2":
        return np.array([[1.0, -1.0]]), np.array([[1.0, 1.0]])
    if spec.n < 1:
        raise InvalidInputError("dataset needs n >= 1")
    if spec.kind == "bipartite":
        return np.eye(spec.n), bipartite_matrix(spec.n)
    if spec.kind == "onehot":
        if not 1 <= spec.classes <= spec.n:
            raise InvalidInputError("onehot needs 1 <= classes <= n")
        return np.eye(spec.n), _onehot_matrix(_labels(spec.n, spec.classes, rng), spec.classes)
    if spec.kind == "synthetic_clusters":
        if spec.classes < 1 or spec.dim < 1:
            raise InvalidInputError("synthetic_clusters needs classes >= 1 and dim >= 1")
        labels = _labels(spec.n, spec.classes, rng)
        centers = 2.0 * rng.standard_normal((spec.dim, spec.classes))
        X = centers[:, labels] + 0.5 * rng.standard_normal((spec.dim, spec.n))
        return X, _onehot_matrix(labels, spec.classes)
    # teacher
    if spec.input_dim < 1 or not spec.widths:
        raise InvalidInputError("teacher needs input_dim >= 1 and non-empty widths")
    X = rng.standard_normal((spec.input_dim, spec.n))
    net = init_params((spec.input_dim,) + tuple(spec.widths), beta=1.0, activation=RELU, rng=rng)
    return X, forward(net, X).output
