"""Loss over covariance pairs ``(K_l, Ksigma_l)`` and the cone they live in.

A pair is realizable by ``k`` neurons when there are ``z_1..z_k`` in R^N with
``K = sum z_i z_i^T`` and ``Ksigma = sum sigma(z_i) sigma(z_i)^T + beta^2 11^T``.
The smallest such ``k`` (Rank_sigma) is hard to compute, so this module
brackets it: linear-algebra lower bounds and a randomized witness search for
the upper bound.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import least_squares

from .errors import ConstraintError, InvalidInputError, NotPSDError, PreconditionError, ShapeError
from .linalg_core import DEFAULT_TOL, as_matrix, numerical_rank, pinv, proj_onto_row_space, sqrtm_psd, symmetrize
from .network import RELU, Activation, NetworkParams, check_targets, cost_value, forward, with_bias_row

PSD_TOL = 1e-8
IMAGE_TOL = 1e-6
WITNESS_TOL = 1e-6
POLISH_FROM = 1e-2
HOPS = 16
HOP_SCALE = 1.0


def _check_psd(m, name):
    w = np.linalg.eigvalsh(symmetrize(m))
    scale = max(np.max(np.abs(w)), 0.0) if w.size else 0.0
    if w.size and w[0] < -PSD_TOL * scale:
        raise NotPSDError(f"{name} has eigenvalue {w[0]:.3e}")


@dataclass
class CovariancePair:
    K: np.ndarray
    K_sigma: np.ndarray
    beta: float = 0.0

    def __post_init__(self):
        self.K = as_matrix(self.K)
        self.K_sigma = as_matrix(self.K_sigma)
        if self.K.shape != self.K_sigma.shape or self.K.shape[0] != self.K.shape[1]:
            raise ShapeError(f"pair shapes {self.K.shape}, {self.K_sigma.shape}")

    @property
    def n(self):
        return self.K.shape[0]

    @property
    def untranslated_sigma(self):
        """``Ksigma - beta^2 11^T``."""
        return self.K_sigma - self.beta**2 * np.ones_like(self.K_sigma)

    def norm(self):
        return float(np.sqrt(np.sum(self.K**2) + np.sum(self.untranslated_sigma**2)))

    def validate(self):
        for m, name in ((self.K, "K"), (self.K_sigma, "K_sigma")):
            if not np.allclose(m, m.T, atol=PSD_TOL * max(1.0, np.max(np.abs(m)))):
                raise InvalidInputError(f"{name} is not symmetric")
            _check_psd(m, name)
        _check_psd(self.untranslated_sigma, "K_sigma - beta^2 11^T")


@dataclass
class ConeWitness:
    """Rows of ``vectors`` are the ``z_i``."""

    vectors: np.ndarray
    activation: Activation = RELU

    @property
    def size(self):
        return self.vectors.shape[0]

    def residual(self, pair):
        z = self.vectors
        s = self.activation(z)
        rk = pair.K - z.T @ z
        rs = pair.untranslated_sigma - s.T @ s
        return float(np.sqrt(np.sum(rk**2) + np.sum(rs**2)))


@dataclass
class CovarianceChain:
    pairs: list  # (K_l, Ksigma_l) for l = 1..L-1
    output: np.ndarray  # Z_L
    K0_sigma: np.ndarray  # X^T X + beta^2 11^T

    def __post_init__(self):
        self.output = as_matrix(self.output)
        self.K0_sigma = as_matrix(self.K0_sigma)

    @property
    def depth(self):
        return len(self.pairs) + 1

    def sigma_grams(self):
        """``[Ksigma_0, ..., Ksigma_{L-1}]``."""
        return [self.K0_sigma] + [p.K_sigma for p in self.pairs]

    def grams(self):
        """``[K_1, ..., K_L]`` with ``K_L = Z_L^T Z_L``."""
        return [p.K for p in self.pairs] + [self.output.T @ self.output]


def input_sigma_gram(X, beta):
    X = as_matrix(X)
    return X.T @ X + beta**2 * np.ones((X.shape[1], X.shape[1]))


def chain_from_weights(params, X):
    trace = forward(params, X)
    pairs = [
        CovariancePair(z.T @ z, post.T @ post, params.beta)
        for z, post in zip(trace.pre_activations[:-1], trace.activations[1:])
    ]
    return CovarianceChain(pairs, trace.output, input_sigma_gram(X, params.beta))


def image_violations(chain, tol=DEFAULT_TOL):
    """Relative residual of ``Im K_l in Im Ksigma_{l-1}`` (and ``Z_L``) per layer."""
    out = []
    mats = [p.K for p in chain.pairs] + [chain.output]
    for m, ks in zip(mats, chain.sigma_grams()):
        norm = np.linalg.norm(m)
        if norm == 0.0:
            out.append(0.0)
            continue
        p = proj_onto_row_space(ks, tol)
        out.append(float(np.linalg.norm(m - m @ p) / norm))
    return out


def check_image_chain(chain, tol=IMAGE_TOL):
    for l, v in enumerate(image_violations(chain), start=1):
        if v > tol:
            raise ConstraintError(l, v)


def trace_terms(chain, tol=DEFAULT_TOL):
    """``[Tr[K_l (Ksigma_{l-1})^+] for l = 1..L]``."""
    return [float(np.sum(k * pinv(ks, tol).T)) for k, ks in zip(chain.grams(), chain.sigma_grams())]


def loss_k(chain, cost, targets, lam, tol=IMAGE_TOL):
    check_image_chain(chain, tol)
    out = chain.output
    targets = check_targets(cost, out.shape[0], targets, out.shape[1])
    return cost_value(cost, out, targets) + lam * sum(trace_terms(chain))


def cone_construct(vectors, beta=0.0, n=None, activation=RELU):
    """Pair generated by the rows of ``vectors`` plus the witness that built it."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.size == 0:
        if n is None:
            raise InvalidInputError("need n when no vectors are given")
        vectors = np.zeros((0, n))
    vectors = np.atleast_2d(vectors)
    if n is not None and vectors.shape[1] != n:
        raise ShapeError(f"vectors have length {vectors.shape[1]}, expected {n}")
    s = activation(vectors)
    ones = np.ones((vectors.shape[1], vectors.shape[1]))
    pair = CovariancePair(vectors.T @ vectors, s.T @ s + beta**2 * ones, beta)
    return pair, ConeWitness(vectors.copy(), activation)


# --- witness search -------------------------------------------------------


def _upper_indices(n):
    i, j = np.triu_indices(n)
    w = np.where(i == j, 1.0, np.sqrt(2.0))
    return i, j, w


def _residual_and_jacobian(zflat, k, n, target_k, target_s, activation, idx, scale, mask=None):
    i, j, w = idx
    z = zflat.reshape(k, n)
    s = activation(z)
    ds = activation.derivative(z)
    rk = (target_k - z.T @ z)[i, j] * w / scale
    rs = (target_s - s.T @ s)[i, j] * w / scale
    m = i.size
    rows = np.arange(m)
    jk = np.zeros((m, k, n))
    jk[rows, :, i] -= z[:, j].T
    jk[rows, :, j] -= z[:, i].T
    js = np.zeros((m, k, n))
    js[rows, :, i] -= (s[:, j] * ds[:, i]).T
    js[rows, :, j] -= (s[:, i] * ds[:, j]).T
    jac = np.concatenate([jk, js]).reshape(2 * m, k * n) * (np.concatenate([w, w]) / scale)[:, None]
    if mask is not None:
        jac = jac[:, mask]
    return np.concatenate([rk, rs]), jac


def _solve(z0, target_k, target_s, activation, scale, max_nfev, mask=None):
    """Least-squares fit of both Gram matrices; entries outside ``mask`` stay fixed."""
    k, n = z0.shape
    idx = _upper_indices(n)
    base = z0.ravel().copy()
    free = np.ones(base.size, dtype=bool) if mask is None else mask.ravel()
    cache = {}

    def both(x):
        key = x.tobytes()
        if key not in cache:
            cache.clear()
            full = base.copy()
            full[free] = x
            cache[key] = _residual_and_jacobian(full, k, n, target_k, target_s, activation, idx, scale, free)
        return cache[key]

    if not free.any():
        return z0.copy()
    res = least_squares(
        lambda x: both(x)[0],
        base[free],
        jac=lambda x: both(x)[1],
        method="trf",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    out = base.copy()
    out[free] = res.x
    return out.reshape(k, n)


def _polish(z, pair, activation, scale, max_nfev, snap=1e-3):
    # zeros at an exact factorization sit on the relu kink; fixing them turns
    # the fit into a smooth problem on the remaining support
    mask = np.abs(z) > snap * np.max(np.abs(z))
    snapped = np.where(mask, z, 0.0)
    return _solve(snapped, pair.K, pair.untranslated_sigma, activation, scale, max_nfev, mask)


@dataclass
class SearchResult:
    witness: ConeWitness
    relative_residual: float
    restart: int

    @property
    def found(self):
        return self.relative_residual < WITNESS_TOL


def search_witness(pair, k, restarts=50, activation=RELU, seed=0, tol=WITNESS_TOL, max_nfev=300):
    """Look for ``k`` vectors realizing ``pair``.

    Each restart runs a trust-region least-squares fit of both Gram matrices
    from a Gaussian, an absolute-Gaussian or a rotated exact factorization of
    ``K`` start, then tries single-row sign flips (which keep ``K`` but
    change ``Ksigma``) while they lower the residual. Near misses are
    polished on their support and then perturbed and refit a few times.
    Returns the best restart; ties go to the lowest restart index.
    """
    rng = np.random.default_rng(seed)
    n = pair.n
    scale = pair.norm() or 1.0
    target_s = pair.untranslated_sigma
    std = np.sqrt(max(np.trace(pair.K), np.trace(target_s), 1e-300) / (k * n))
    best = None
    evals, evecs = np.linalg.eigh(symmetrize(pair.K))
    top = np.argsort(evals)[::-1][: min(k, n)]
    root = (evecs[:, top] * np.sqrt(np.clip(evals[top], 0.0, None))).T
    for r in range(restarts):
        if r % 3 == 2:
            # exact factorization of K mixed by a random rotation: only Ksigma is off
            q, _ = np.linalg.qr(rng.standard_normal((k, k)))
            z0 = q[:, : root.shape[0]] @ root
        else:
            z0 = rng.standard_normal((k, n)) * std
            if r % 3 == 1:
                z0 = np.abs(z0)
        z = _solve(z0, pair.K, target_s, activation, scale, max_nfev)
        wit = ConeWitness(z, activation)
        rel = wit.residual(pair) / scale
        for _ in range(k):
            if rel < tol:
                break
            trials = []
            for row in range(k):
                flipped = z.copy()
                flipped[row] *= -1
                trials.append(ConeWitness(flipped, activation).residual(pair) / scale)
            row = int(np.argmin(trials))
            if trials[row] >= rel:
                break
            z[row] *= -1
            z = _solve(z, pair.K, target_s, activation, scale, max_nfev)
            wit = ConeWitness(z, activation)
            rel = wit.residual(pair) / scale
        if tol <= rel < POLISH_FROM:
            polished = ConeWitness(_polish(z, pair, activation, scale, max_nfev), activation)
            prel = polished.residual(pair) / scale
            if prel < rel:
                wit, rel = polished, prel
        # near misses are usually a wrong activation pattern in a few rows:
        # alternately kick every row or redraw one row, then refit
        for hop in range(HOPS):
            if not tol <= rel < POLISH_FROM:
                break
            if hop % 2:
                kicked = wit.vectors.copy()
                kicked[rng.integers(k)] = rng.standard_normal(n) * std
            else:
                kicked = wit.vectors + rng.standard_normal((k, n)) * (HOP_SCALE * std)
            hop = ConeWitness(_solve(kicked, pair.K, target_s, activation, scale, max_nfev), activation)
            hrel = hop.residual(pair) / scale
            if hrel < rel:
                wit, rel = hop, hrel
        if best is None or rel < best.relative_residual:
            best = SearchResult(wit, rel, r)
        if rel < tol:
            break
    return best


def rank_sigma_lower_bound(pair, activation=RELU, graph=None):
    from .cprank import cp_rank_lower_bound

    bound = max(numerical_rank(pair.K, 1e-8), numerical_rank(pair.untranslated_sigma, 1e-8))
    if activation.kind == "relu":
        bound = max(bound, cp_rank_lower_bound(pair.untranslated_sigma, graph))
    return bound


class RankSigmaBounds(NamedTuple):
    lower: int
    upper: int
    witness: ConeWitness


def rank_sigma_bounds(pair, budget=50, activation=RELU, seed=0, graph=None, max_k=None):
    """``(lower, upper, witness)`` bracketing Rank_sigma of ``pair``.

    ``upper`` is the smallest ``k`` for which :func:`search_witness` found a
    certificate; when nothing is found up to ``max_k`` (default ``N(N+1)``)
    the Caratheodory bound ``N(N+1)`` is returned and ``witness`` is None.
    """
    pair.validate()
    n = pair.n
    cap = n * (n + 1)
    lower = rank_sigma_lower_bound(pair, activation, graph)
    if np.linalg.norm(pair.K) == 0 and np.linalg.norm(pair.untranslated_sigma) == 0:
        return RankSigmaBounds(0, 0, ConeWitness(np.zeros((0, n)), activation))
    top = cap if max_k is None else min(max_k, cap)
    for k in range(max(lower, 1), top + 1):
        res = search_witness(pair, k, budget, activation, seed=np.random.SeedSequence([int(seed), k]))
        if res.found:
            return RankSigmaBounds(lower, k, res.witness)
    return RankSigmaBounds(lower, cap, None)


# --- reconstruction -------------------------------------------------------


def weights_from_chain(chain, witnesses, X, widths=None, beta=None, activation=RELU):
    """Recursively build weights whose covariance chain equals ``chain``.

    ``witnesses[l]`` realizes ``chain.pairs[l]``; its rows (padded with zero
    rows up to ``widths[l]``) become the hidden representation of layer
    ``l + 1`` and ``W_l = Z_l (Zsigma_{l-1})^+``.
    """
    X = as_matrix(X)
    if len(witnesses) != len(chain.pairs):
        raise PreconditionError("need one witness per hidden layer")
    if beta is None:
        beta = chain.pairs[0].beta if chain.pairs else 0.0
    if widths is None:
        widths = [w.size for w in witnesses]
    check_image_chain(chain)
    reps = []
    for wit, pair, width in zip(witnesses, chain.pairs, widths):
        if wit.size > width:
            raise PreconditionError(f"witness of size {wit.size} does not fit width {width}")
        if wit.residual(pair) > WITNESS_TOL * max(pair.norm(), 1.0):
            raise PreconditionError("witness does not reproduce its pair")
        reps.append(np.vstack([wit.vectors, np.zeros((width - wit.size, pair.n))]))
    reps.append(chain.output)
    post = with_bias_row(X, beta)
    weights = []
    for z in reps:
        weights.append(z @ pinv(post))
        post = with_bias_row(activation(z), beta)
    return NetworkParams(weights, beta, activation)


# --- closed forms ---------------------------------------------------------


def linear_interpolation_gram(X, output, layer, depth):
    """``X^T (X^{-T} Z_L^T Z_L X^{-1})^{layer/depth} X`` for an invertible ``X``."""
    X = as_matrix(X)
    xinv = np.linalg.inv(X)
    m = symmetrize(xinv.T @ output.T @ output @ xinv)
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    power = (v * w ** (layer / depth)) @ v.T
    return symmetrize(X.T @ power @ X)


@dataclass
class RepresentationCost:
    value: float
    pair: CovariancePair
    verified: bool
    witness: ConeWitness = field(default=None)


def representation_cost_shallow(X, Y, budget=20, seed=0, verify=True, max_k=None):
    """Width-free representation cost of a shallow bias-free ReLU net on ``X = I_N``.

    The optimum is ``K_1 = Ksigma_1 = (Y^T Y)^{1/2}`` with value
    ``2 Tr[(Y^T Y)^{1/2}]``, provided that square root is completely positive.
    ``verified`` records whether a non-negative witness was found; the
    search scans ``k`` from the rank lower bound up to ``max_k`` (default:
    two above that bound), since each infeasible ``k`` costs ``budget`` solves.
    """
    X = as_matrix(X)
    Y = as_matrix(Y)
    n = X.shape[1]
    if X.shape != (n, n) or not np.allclose(X, np.eye(n)):
        raise PreconditionError("the closed form needs X = I_N")
    if Y.shape[1] != n:
        raise ShapeError(f"Y has {Y.shape[1]} columns, expected {n}")
    root = sqrtm_psd(Y.T @ Y)
    pair = CovariancePair(root, root.copy(), 0.0)
    value = 2.0 * float(np.trace(root))
    if not verify:
        return RepresentationCost(value, pair, False)
    if np.any(root < -1e-12 * max(1.0, np.max(np.abs(root)))):
        return RepresentationCost(value, pair, False)
    if max_k is None:
        max_k = rank_sigma_lower_bound(pair, RELU) + 2
    _, _, witness = rank_sigma_bounds(pair, budget, RELU, seed, max_k=max_k)
    return RepresentationCost(value, pair, witness is not None, witness)
