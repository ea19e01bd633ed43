"""Neuron merging for shallow ReLU networks with scalar input and output.

The network is ``f(x) = b + sum_k a_k relu(c_k x + d_k)``. Two neurons whose
cusps fall in the same gap between consecutive data points, and whose ``a``
and ``c`` signs agree, can be replaced by one neuron that matches their sum
on every data point and has a smaller parameter norm. Repeating this leaves
at most four neurons per gap and two on each side of the data, so at most
``4N`` neurons in total.
"""
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, PreconditionError


@dataclass
class ShallowNet1D:
    neurons: np.ndarray  # rows (a, c, d)
    b: float = 0.0

    def __post_init__(self):
        self.neurons = np.asarray(self.neurons, dtype=float).reshape(-1, 3)
        self.b = float(self.b)
        if not (np.all(np.isfinite(self.neurons)) and np.isfinite(self.b)):
            raise InvalidInputError("non-finite network parameters")

    @property
    def width(self):
        return self.neurons.shape[0]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, c, d = self.neurons.T
        pre = np.multiply.outer(x, c) + d
        return self.b + np.maximum(pre, 0.0) @ a

    def norm(self):
        """``sum_k a_k^2 + c_k^2 + d_k^2`` (the output bias is not included)."""
        return float(np.sum(self.neurons**2))

    @classmethod
    def random(cls, width, rng=None, scale=1.0):
        rng = np.random.default_rng(rng)
        return cls(rng.standard_normal((width, 3)) * scale, float(rng.standard_normal()))


def canonicalize(net):
    """Rescale every neuron so that ``a^2 = c^2 + d^2``; drop neurons that vanish identically.

    ``a relu(c x + d) = (a/s) relu(s c x + s d)`` for ``s > 0``, and the
    balanced choice of ``s`` minimizes ``a^2 + c^2 + d^2`` along that curve.
    """
    a, c, d = net.neurons.T
    r = np.hypot(c, d)
    keep = (a != 0) & (r > 0)
    a, c, d, r = a[keep], c[keep], d[keep], r[keep]
    s = np.sqrt(np.abs(a) / r)
    return ShallowNet1D(np.column_stack([a / s, c * s, d * s]), net.b)


def cusp(neuron):
    """``-d/c``, the input where the neuron switches between dead and active; None when ``c = 0``."""
    _, c, d = neuron
    if c == 0:
        return None
    return -d / c


def merge_pair(n1, n2):
    """Single canonical neuron equal to ``n1 + n2`` outside the interval between their cusps.

    Solves ``a c = a1 c1 + a2 c2``, ``a d = a1 d1 + a2 d2``, ``a^2 = c^2 + d^2``
    with ``sign(a) = sign(a1)``.
    """
    a1, c1, d1 = n1
    a2, c2, d2 = n2
    if a1 == 0 or a2 == 0 or np.sign(a1) != np.sign(a2):
        raise PreconditionError("merged neurons need output weights of the same sign")
    if c1 * c2 < 0:
        raise PreconditionError("merged neurons need input weights of the same sign")
    p = a1 * c1 + a2 * c2
    q = a1 * d1 + a2 * d2
    a = np.sign(a1) * (p * p + q * q) ** 0.25
    if a == 0:
        return np.zeros(3)
    return np.array([a, p / a, q / a])


def _region(cz, xs):
    # cusps exactly on a data point go to the gap on their left
    return int(np.searchsorted(xs, cz, side="left"))


def _sign_class(neuron):
    return (neuron[0] > 0, neuron[1] > 0)


def _reduce_bucket(bucket, limit):
    """Merge same-sign pairs until at most ``limit`` neurons remain."""
    bucket = list(bucket)
    while len(bucket) > limit:
        classes = {}
        for idx, nrn in enumerate(bucket):
            classes.setdefault(_sign_class(nrn), []).append(idx)
        members = max(classes.values(), key=lambda v: (len(v), -v[0]))
        if len(members) < 2:
            break
        i, j = members[0], members[1]
        merged = merge_pair(bucket[i], bucket[j])
        bucket = [nrn for idx, nrn in enumerate(bucket) if idx not in (i, j)]
        bucket.insert(i, merged)
    return bucket


def compress(net, X):
    """Compress ``net`` to at most ``4N`` neurons without changing it on the data ``X``.

    Steps: canonicalize, fold cusp-free neurons into the output bias, drop
    neurons dead on every data point, bucket the rest by cusp into the
    ``N-1`` gaps and the two outer regions, then merge inside each bucket.
    """
    xs = np.sort(np.asarray(X, dtype=float).ravel())
    if xs.size == 0:
        raise InvalidInputError("need at least one data point")
    net = canonicalize(net)
    b = net.b
    kept = []
    for nrn in net.neurons:
        a, c, d = nrn
        if c == 0:
            if d > 0:
                b += a * d
            continue
        if np.all(c * xs + d <= 0):
            continue
        kept.append(nrn)
    n = xs.size
    buckets = [[] for _ in range(n + 1)]
    for nrn in kept:
        buckets[_region(cusp(nrn), xs)].append(nrn)
    out = []
    for r, bucket in enumerate(buckets):
        limit = 2 if r in (0, n) else 4
        out.extend(_reduce_bucket(bucket, limit))
    return ShallowNet1D(np.array(out).reshape(-1, 3), b)


def write_csv(net, path):
    """Header ``b,<value>``, then ``a,c,d`` and one row per neuron."""
    lines = [f"b,{net.b!r}", "a,c,d"] + [",".join(repr(float(v)) for v in row) for row in net.neurons]
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(lines) < 2 or not lines[0].startswith("b,") or lines[1].replace(" ", "") != "a,c,d":
        raise InvalidInputError(f"{path}: expected 'b,<value>' and 'a,c,d' header lines")
    b = float(lines[0].split(",", 1)[1])
    rows = [[float(t) for t in ln.split(",")] for ln in lines[2:]]
    if any(len(r) != 3 for r in rows):
        raise InvalidInputError(f"{path}: every neuron row needs three values")
    return ShallowNet1D(np.array(rows).reshape(-1, 3), b)
