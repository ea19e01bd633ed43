"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import time

import numpy as np

from l2reps.compress1d import ShallowNet1D, canonicalize, compress
from l2reps.cprank import bipartite_matrix, complete_bipartite_graph, cp_rank_lower_bound, near_optimal_network
from l2reps.experiments.counterexample import verify_counterexample
from l2reps.experiments.datasets import teacher
from l2reps.experiments.sweep import SweepConfig, sweep
from l2reps.network import (
    IDENTITY,
    RELU,
    Cost,
    OptimizerConfig,
    forward,
    gradient,
    init_params,
    loss,
    train_to_tolerance,
)
from l2reps.reform_k import (
    chain_from_weights,
    cone_construct,
    linear_interpolation_gram,
    loss_k,
    rank_sigma_bounds,
    representation_cost_shallow,
)
from l2reps.reform_z import (
    HiddenReps,
    forces,
    loss_r,
    project,
    reps_from_weights,
    tikhonov_reg_terms,
    weight_residuals,
    weights_from_reps,
)


def _random_net(g, residual_prone=False):
    depth = int(g.integers(1, 4))
    widths = tuple(int(w) for w in g.integers(1, 7, depth + 1))
    n = int(g.integers(1, 4)) if residual_prone else int(g.integers(1, 9))
    act = [RELU, IDENTITY][int(g.integers(2))]
    beta = [0.0, 1.0][int(g.integers(2))]
    params = init_params(widths, beta, act, g, gain=1.5)
    return params, g.standard_normal((widths[0], n)), g.standard_normal((widths[-1], n))


def test_criterion_1_reformulation_equivalence(criterion):
    start = time.perf_counter()
    g = np.random.default_rng(2024)
    lam = 0.3
    worst_trace, worst_gap, bad = 0.0, 0.0, 0
    with_residual = 0
    for i in range(50):
        params, X, Y = _random_net(g, residual_prone=i % 2 == 0)
        lr = loss_r(reps_from_weights(params, X), Cost.MSE, Y, lam)
        lk = loss_k(chain_from_weights(params, X), Cost.MSE, Y, lam)
        lw = loss(params, X, Y, Cost.MSE, lam)
        worst_trace = max(worst_trace, abs(lr - lk))
        residual = np.sqrt(sum(np.sum(r**2) for r in weight_residuals(params, X)))
        gap = lw - lr
        # the gap is exactly lam * ||residual||^2, so equality holds iff the residual vanishes
        worst_gap = max(worst_gap, abs(gap - lam * residual**2))
        if lr > lw + 1e-12 * (1 + lw):
            bad += 1
        if residual < 1e-10:
            bad += abs(gap) > 1e-8 * (1 + lw)
        else:
            with_residual += 1
            bad += not gap > 0
    elapsed = time.perf_counter() - start
    ok = worst_trace < 1e-8 and worst_gap < 1e-8 and bad == 0 and elapsed < 10
    criterion(1, ok, f"max|loss_r-loss_k|={worst_trace:.1e}, max|gap-lam*res^2|={worst_gap:.1e}, "
                     f"{with_residual}/50 nets with residual, {elapsed:.2f}s")
    assert ok


def test_criterion_2_round_trip(criterion):
    start = time.perf_counter()
    g = np.random.default_rng(7)
    worst = 0.0
    for i in range(50):
        params, X, _ = _random_net(g)
        if i % 2:
            Z = reps_from_weights(params, X)
        else:
            # arbitrary representations pushed onto the constraint chain
            raw = HiddenReps([g.standard_normal(z.shape) for z in reps_from_weights(params, X).reps], X,
                             params.beta, params.activation)
            Z = project(raw)
        back = reps_from_weights(weights_from_reps(Z), X)
        for a, b in zip(back.reps, Z.reps):
            worst = max(worst, np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and elapsed < 5
    criterion(2, ok, f"max relative error {worst:.1e}, {elapsed:.2f}s")
    assert ok


def _fd(f, x, idx, h):
    up, down = x.copy(), x.copy()
    up[idx] += h
    down[idx] -= h
    return (f(up) - f(down)) / (2 * h)


def _rel_err(analytic, fd, scale):
    return abs(analytic - fd) / max(abs(fd), 1e-3 * scale, 1e-12)


def test_criterion_3_gradients_and_forces(criterion):
    start = time.perf_counter()
    g = np.random.default_rng(3)
    params = init_params((3, 6, 5, 2), 1.0, RELU, g, gain=1.5)
    X, Y = g.standard_normal((3, 5)), g.standard_normal((2, 5))
    lam = 0.05
    grads = gradient(params, X, Y, Cost.MSE, lam)
    scale = np.sqrt(sum(np.sum(gr**2) for gr in grads))
    worst = {"backprop": 0.0, "attraction": 0.0, "repulsion": 0.0}
    for _ in range(120):
        l = int(g.integers(params.depth))
        w = params.weights[l]
        idx = tuple(int(g.integers(s)) for s in w.shape)

        def f(wl, l=l):
            ws = list(params.weights)
            ws[l] = wl
            return loss(params.with_weights(ws), X, Y, Cost.MSE, lam)

        worst["backprop"] = max(worst["backprop"], _rel_err(grads[l][idx], _fd(f, w, idx, 1e-6), scale))

    Z = reps_from_weights(params, X)
    eps = 1e-4
    fields = {layer: forces(Z, layer, eps) for layer in (1, 2)}
    for which, offset in (("attraction", 1), ("repulsion", 0)):
        for _ in range(120):
            layer = int(g.integers(1, 3))
            term = layer - offset
            z = Z.reps[layer - 1]
            idx = tuple(int(g.integers(s)) for s in z.shape)
            target = getattr(fields[layer], which)

            def f(m, layer=layer, term=term):
                reps = list(Z.reps)
                reps[layer - 1] = m
                return tikhonov_reg_terms(Z.replace(reps), [eps] * Z.depth)[term]

            err = _rel_err(target[idx], _fd(f, z, idx, 1e-4 * max(1.0, abs(z[idx]))), np.linalg.norm(target))
            worst[which] = max(worst[which], err)
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) < 1e-4 and elapsed < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    criterion(3, ok, f"max relative error over 120 coords each: {detail}, {elapsed:.2f}s")
    assert ok


def test_criterion_4_counterexample(criterion):
    start = time.perf_counter()
    reports = [verify_counterexample(lam, (0.05, 0.1), samples=10_000, delta=1e-3) for lam in (0.05, 0.1, 0.5)]
    elapsed = time.perf_counter() - start
    failures = [f"lam={r.lam}:{name}" for r in reports for name in r.failures()]
    ok = not failures and elapsed < 30
    criterion(4, ok, f"{sum(len(r.checks) for r in reports)} checks, failures={failures or 'none'}, {elapsed:.2f}s")
    assert ok


def test_criterion_5_cp_rank(criterion):
    start = time.perf_counter()
    problems = []
    for n in (2, 4, 6, 8):
        b = bipartite_matrix(n)
        if cp_rank_lower_bound(b, complete_bipartite_graph(n)) != n * n // 4:
            problems.append(f"cp N={n}")
        net = near_optimal_network(n)
        if abs(net.norm_sq() - (n * n + n)) > 1e-9 or np.max(np.abs(forward(net, np.eye(n)).output - b)) > 1e-10:
            problems.append(f"net N={n}")
        # witness verification only where it is cheap; the value is the closed form in every case
        cost = representation_cost_shallow(np.eye(n), b, verify=n <= 4)
        if abs(cost.value - n * n) > 1e-9 * n * n or (n <= 4 and not cost.verified):
            problems.append(f"repcost N={n}")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 5
    criterion(5, ok, f"N in (2,4,6,8), problems={problems or 'none'}, {elapsed:.2f}s")
    assert ok


def test_criterion_6_compression(criterion):
    start = time.perf_counter()
    g = np.random.default_rng(6)
    widest, worst_err, norm_up = 0, 0.0, 0
    for _ in range(200):
        net = ShallowNet1D.random(100, g)
        xs = g.standard_normal(10)
        small = compress(net, xs)
        before = net(xs)
        widest = max(widest, small.width)
        worst_err = max(worst_err, np.max(np.abs(small(xs) - before)) / max(1.0, np.max(np.abs(before))))
        norm_up += small.norm() > canonicalize(net).norm() * (1 + 1e-12)
    elapsed = time.perf_counter() - start
    ok = widest <= 40 and worst_err <= 1e-9 and norm_up == 0 and elapsed < 60
    criterion(6, ok, f"max width {widest}/40, max relative error {worst_err:.1e}, "
                     f"norm increases {norm_up}, {elapsed:.2f}s")
    assert ok


def test_criterion_7_linear_interpolation(criterion):
    start = time.perf_counter()
    g = np.random.default_rng(0)
    X, Y = g.standard_normal((4, 4)), g.standard_normal((4, 4))
    opt = OptimizerConfig(adam_steps=3000, adam_lr=1e-2, gd_steps=50_000, gd_lr=1e-2, gd_growth=1.05, grad_tol=1e-8)
    params, _, grad_norm = train_to_tolerance(init_params((4, 6, 4), 0.0, IDENTITY, g), X, Y, Cost.MSE, 1e-3, opt)
    chain = chain_from_weights(params, X)
    k1 = chain.pairs[0].K
    ref = linear_interpolation_gram(X, chain.output, 1, 2)
    rel = np.linalg.norm(k1 - ref) / np.linalg.norm(ref)
    elapsed = time.perf_counter() - start
    ok = grad_norm < 1e-7 and rel < 1e-3 and elapsed < 120
    criterion(7, ok, f"grad norm {grad_norm:.1e}, K1 relative error {rel:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_8_plateau(criterion):
    start = time.perf_counter()
    opt = OptimizerConfig(adam_steps=2000, adam_lr=3e-2, gd_steps=3000, gd_lr=1e-2, gd_growth=1.1, grad_tol=1e-9)
    cfg = SweepConfig(widths=tuple(range(1, 15)), trials=5, lam=1e-2, optimizer=opt, gain=0.5, plateau_tol=0.01)
    small = sweep(cfg, teacher(3, 2, (8, 3), seed=0))
    tail = small.min_losses[11:14]
    tail_spread = tail.max() / tail.min() - 1

    smoke_opt = OptimizerConfig(adam_steps=3000, adam_lr=1e-2, gd_steps=1000, gd_lr=1e-2, gd_growth=1.1)
    smoke_cfg = SweepConfig(widths=(2, 4, 8, 16, 32, 64), trials=3, depth=3, lam=2e-3, optimizer=smoke_opt,
                            gain=1.0, plateau_tol=0.02)
    smoke = sweep(smoke_cfg, teacher(100, 5, (10, 10, 1), seed=0))
    elapsed = time.perf_counter() - start
    plateau = smoke.plateau_start
    ok = (small.is_monotone(0.01) and tail_spread <= 0.01 and plateau is not None
          and plateau < smoke_cfg.widths[-1] and elapsed < 900)
    criterion(8, ok, f"N=3 monotone={small.is_monotone(0.01)}, widths 12-14 spread {tail_spread:.1e}, "
                     f"N=3 plateau start {small.plateau_start}; teacher N=100 plateau start {plateau}, "
                     f"{elapsed:.0f}s")
    assert ok


def test_criterion_9_rank_sigma_brackets(criterion):
    start = time.perf_counter()
    g = np.random.default_rng(9)
    misses = []
    for i in range(20):
        k = int(g.integers(1, 7))
        beta = float(i % 2)
        pair, _ = cone_construct(g.standard_normal((k, 5)), beta)
        lower, upper, witness = rank_sigma_bounds(pair, budget=50, seed=i, max_k=k)
        if not (lower <= k and upper <= k and witness is not None):
            misses.append((i, k, lower, upper))
    elapsed = time.perf_counter() - start
    ok = not misses and elapsed < 120
    criterion(9, ok, f"20 pairs at N=5, k<=6, misses={misses or 'none'}, {elapsed:.1f}s")
    assert ok
