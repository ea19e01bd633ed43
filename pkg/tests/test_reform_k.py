import numpy as np
import pytest
from conftest import random_nets
from hypothesis import given
from hypothesis import strategies as st

from l2reps.cprank import bipartite_matrix, complete_bipartite_graph, incidence_matrix
from l2reps.errors import ConstraintError, NotPSDError, PreconditionError
from l2reps.linalg_core import numerical_rank
from l2reps.network import IDENTITY, RELU, Cost, NetworkParams
from l2reps.reform_k import (
    CovarianceChain,
    CovariancePair,
    chain_from_weights,
    check_image_chain,
    cone_construct,
    input_sigma_gram,
    linear_interpolation_gram,
    loss_k,
    rank_sigma_bounds,
    rank_sigma_lower_bound,
    representation_cost_shallow,
    search_witness,
    trace_terms,
    weights_from_chain,
)
from l2reps.reform_z import loss_r, reps_from_weights


@given(random_nets())
def test_trace_identity(case):
    params, X, Y = case
    lk = loss_k(chain_from_weights(params, X), Cost.MSE, Y, 0.7)
    lr = loss_r(reps_from_weights(params, X), Cost.MSE, Y, 0.7)
    assert abs(lk - lr) < 1e-8 * (1 + abs(lr))


def test_chain_rank_bounded_by_width(rng):
    w1 = np.hstack([np.linalg.qr(rng.standard_normal((4, 2)))[0].T, np.zeros((2, 1))])
    params = NetworkParams([w1, rng.standard_normal((1, 3))], 0.0, RELU)
    chain = chain_from_weights(params, rng.standard_normal((4, 6)))
    assert numerical_rank(chain.pairs[0].K, 1e-8) <= 2


def test_nonnegative_reps_give_equal_grams(rng):
    w1 = np.hstack([np.abs(rng.standard_normal((3, 2))), np.zeros((3, 1))])
    params = NetworkParams([w1, rng.standard_normal((1, 4))], 0.0, RELU)
    chain = chain_from_weights(params, np.abs(rng.standard_normal((2, 5))))
    np.testing.assert_allclose(chain.pairs[0].K, chain.pairs[0].K_sigma)


def test_zero_chain_loss_is_cost_of_zero():
    n = 3
    chain = CovarianceChain([CovariancePair(np.zeros((n, n)), np.zeros((n, n)))], np.zeros((1, n)), np.eye(n))
    assert loss_k(chain, Cost.MSE, np.full((1, n), 2.0), 1.0) == pytest.approx(4.0)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_bipartite_optimum_regularizer(n):
    b = bipartite_matrix(n)
    chain = CovarianceChain([CovariancePair(b, b)], b, np.eye(n))
    assert sum(trace_terms(chain)) == pytest.approx(n * n, rel=1e-10)


def test_image_chain_violation_detected():
    k0 = np.diag([1.0, 0.0])
    chain = CovarianceChain([CovariancePair(np.diag([0.0, 1.0]), np.diag([0.0, 1.0]))], np.ones((1, 2)), k0)
    with pytest.raises(ConstraintError):
        check_image_chain(chain)


def test_pair_validation():
    with pytest.raises(NotPSDError):
        CovariancePair(np.diag([1.0, -1.0]), np.eye(2)).validate()
    # K_sigma must dominate the beta^2 translation
    with pytest.raises(NotPSDError):
        CovariancePair(np.eye(2), np.eye(2), beta=1.0).validate()


def test_cone_single_vector():
    pair, wit = cone_construct([[1.0, -2.0, 0.5]])
    assert numerical_rank(pair.K) == 1
    assert rank_sigma_bounds(pair, budget=5)[:2] == (1, 1)


def test_cone_unit_vectors():
    n = 4
    pair, _ = cone_construct(np.eye(n))
    np.testing.assert_array_equal(pair.K, np.eye(n))
    np.testing.assert_array_equal(pair.K_sigma, np.eye(n))
    lower, upper, _ = rank_sigma_bounds(pair, budget=10)
    assert (lower, upper) == (n, n)


def test_cone_incidence_rows():
    e = incidence_matrix(complete_bipartite_graph(4))
    pair, _ = cone_construct(e)
    np.testing.assert_allclose(pair.K, e.T @ e)
    np.testing.assert_allclose(pair.K_sigma, e.T @ e)


def test_bipartite_lower_bound_is_cp_rank():
    b = bipartite_matrix(4)
    assert rank_sigma_lower_bound(CovariancePair(b, b), graph=complete_bipartite_graph(4)) == 4


@given(
    st.integers(1, 4), st.integers(1, 4), st.floats(0.0, 3.0), st.floats(0.0, 3.0),
    st.sampled_from([0.0, 1.0]), st.integers(0, 2**32 - 1),
)
def test_cone_convexity(kp, kq, alpha, gamma, beta, seed):
    g = np.random.default_rng(seed)
    n = 4
    vp, vq = g.standard_normal((kp, n)), g.standard_normal((kq, n))
    p, _ = cone_construct(vp, beta)
    q, _ = cone_construct(vq, beta)
    k = alpha * p.K + gamma * q.K
    ks = alpha * p.untranslated_sigma + gamma * q.untranslated_sigma + beta**2
    combined, wit = cone_construct(np.vstack([np.sqrt(alpha) * vp, np.sqrt(gamma) * vq]), beta)
    assert wit.residual(CovariancePair(k, ks, beta)) < 1e-10 * (1 + np.abs(k).max())
    np.testing.assert_allclose(combined.K_sigma, ks, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_search_recovers_constructed_witness(seed):
    g = np.random.default_rng(seed)
    pair, wit = cone_construct(g.standard_normal((3, 5)), beta=1.0)
    res = search_witness(pair, 3, restarts=50, seed=seed)
    assert res.found
    assert res.witness.residual(pair) < 1e-6 * pair.norm()


@pytest.mark.parametrize("seed", range(5))
def test_bounds_bracket_construction(seed):
    g = np.random.default_rng(100 + seed)
    k = int(g.integers(1, 5))
    pair, _ = cone_construct(g.standard_normal((k, 5)))
    lower, upper, witness = rank_sigma_bounds(pair, budget=50, seed=seed)
    assert lower <= k
    assert lower <= upper <= k
    assert witness.residual(pair) < 1e-6 * pair.norm()


@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_weights_from_chain_reconstructs(beta, rng):
    X = rng.standard_normal((3, 5))
    v1 = rng.standard_normal((4, 5))
    p1, w1 = cone_construct(v1 @ np.linalg.pinv(input_sigma_gram(X, beta)) @ input_sigma_gram(X, beta), beta)
    v2 = rng.standard_normal((3, 5))
    p2, w2 = cone_construct(v2 @ np.linalg.pinv(p1.K_sigma) @ p1.K_sigma, beta)
    out = rng.standard_normal((2, 5)) @ np.linalg.pinv(p2.K_sigma) @ p2.K_sigma
    chain = CovarianceChain([p1, p2], out, input_sigma_gram(X, beta))
    params = weights_from_chain(chain, [w1, w2], X, widths=[6, 3], beta=beta)
    rebuilt = chain_from_weights(params, X)
    for a, b in zip(rebuilt.pairs, chain.pairs):
        np.testing.assert_allclose(a.K, b.K, atol=1e-8 * (1 + np.abs(b.K).max()))
        np.testing.assert_allclose(a.K_sigma, b.K_sigma, atol=1e-8 * (1 + np.abs(b.K_sigma).max()))
    np.testing.assert_allclose(rebuilt.output, out, atol=1e-8)
    assert params.widths == (3, 6, 3, 2)


def test_representation_cost_bipartite():
    res = representation_cost_shallow(np.eye(4), bipartite_matrix(4))
    assert res.value == pytest.approx(16.0, rel=1e-12)
    assert res.verified
    assert res.witness.residual(res.pair) < 1e-6 * res.pair.norm()


def test_representation_cost_identity_targets():
    assert representation_cost_shallow(np.eye(5), np.eye(5), verify=False).value == pytest.approx(10.0)


def test_representation_cost_onehot_blocks():
    labels = np.array([0, 0, 0, 1, 1, 2])
    Y = np.eye(3)[:, labels]
    res = representation_cost_shallow(np.eye(6), Y, budget=10)
    sizes = np.bincount(labels)
    expected = np.zeros((6, 6))
    start = 0
    for m in sizes:
        expected[start:start + m, start:start + m] = 1.0 / np.sqrt(m)
        start += m
    np.testing.assert_allclose(res.pair.K, expected, atol=1e-12)
    assert res.verified and res.witness.size == 3


def test_representation_cost_needs_identity_inputs():
    with pytest.raises(PreconditionError):
        representation_cost_shallow(2 * np.eye(3), np.eye(3))


def test_identity_activation_lower_bound_is_rank(rng):
    pair, _ = cone_construct(rng.standard_normal((2, 4)), activation=IDENTITY)
    assert rank_sigma_lower_bound(pair, IDENTITY) == 2


def test_linear_interpolation_endpoints(rng):
    X = rng.standard_normal((4, 4))
    out = rng.standard_normal((3, 4))
    np.testing.assert_allclose(linear_interpolation_gram(X, out, 0, 2), X.T @ X, atol=1e-10)
    np.testing.assert_allclose(linear_interpolation_gram(X, out, 2, 2), out.T @ out, atol=1e-9)
