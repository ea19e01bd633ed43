"""Command-line entry point: ``l2reps <subcommand> [config] [flags]``.

Every subcommand writes CSV (to ``--out`` or stdout) and exits with status 0
iff all of its checks pass, 1 if a check fails and 2 on invalid input.
"""
import argparse
import io
import sys
from pathlib import Path

import numpy as np

from . import compress1d, cprank, serialize
from .errors import InvalidInputError
from .experiments.config import load_config, with_overrides
from .experiments.counterexample import reports_to_csv, verify_counterexample
from .experiments.datasets import generate
from .experiments.forces_io import export_forces
from .experiments.sweep import sweep
from .network import Activation, Cost, forward, init_params, loss, train
from .reform_k import rank_sigma_lower_bound, representation_cost_shallow


def _floats(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(str(v) for v in row) + "\n")
    return buf.getvalue()


def _config(args):
    lam = None
    if getattr(args, "lam", None) is not None and args.command != "counterexample":
        lam = float(args.lam)
    cfg = load_config(args.config)
    return with_overrides(cfg, lam=lam, seed=args.seed, widths=args.widths, trials=args.trials)


def _network_widths(cfg, X, Y):
    hidden = tuple(cfg.widths)
    if len(hidden) == 1:
        hidden = hidden * (cfg.depth - 1)
    if len(hidden) != cfg.depth - 1:
        raise InvalidInputError(f"depth {cfg.depth} needs {cfg.depth - 1} hidden widths, got {len(hidden)}")
    return (X.shape[0],) + hidden + (Y.shape[0],)


def _train_from_config(cfg, history=None):
    X, Y = generate(cfg.dataset_spec())
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed]))
    params = init_params(_network_widths(cfg, X, Y), cfg.beta, Activation.parse(cfg.activation), rng, cfg.gain)
    params = train(params, X, Y, Cost(cfg.cost), cfg.lam, cfg.optimizer(), history)
    return params, X, Y


def cmd_train(args):
    cfg = _config(args)
    history = []
    params, X, Y = _train_from_config(cfg, history)
    if args.save_params:
        serialize.save(params, args.save_params)
    rows = [(i, phase, repr(float(v))) for i, (phase, v) in enumerate(history)]
    final = loss(params, X, Y, Cost(cfg.cost), cfg.lam)
    rows.append((len(history), "final", repr(float(final))))
    _emit(_csv(["step", "phase", "loss"], rows), args.out)
    return 0 if np.isfinite(final) else 1


def cmd_sweep(args):
    cfg = _config(args)
    report = sweep(cfg.sweep_config(), cfg.dataset_spec())
    _emit(report.to_csv(), args.out)
    if args.no_check:
        return 0
    return 0 if report.is_monotone() else 1


def cmd_forces(args):
    cfg = _config(args)
    if args.params:
        params = serialize.load(args.params)
        X, _ = generate(cfg.dataset_spec())
    else:
        params, X, _ = _train_from_config(cfg)
    out = args.out or "forces.csv"
    export_forces(params, X, args.layer, args.epsilon, out)
    return 0


def cmd_counterexample(args):
    lams = _floats(args.lam) if args.lam is not None else [0.05, 0.1, 0.5]
    reports = [
        verify_counterexample(lam, _floats(args.eps), args.samples, args.delta, args.seed or 0) for lam in lams
    ]
    _emit(reports_to_csv(reports), args.out)
    return 0 if all(r.passed for r in reports) else 1


CPRANK_HEADER = ["vertices", "edges", "triangle_free", "cp_rank_lower_bound", "rank",
                 "near_optimal_norm", "near_optimal_max_error", "passed"]


def cmd_cprank(args):
    if args.graph:
        graph = cprank.read_edge_list(args.graph)
        e = cprank.incidence_matrix(graph)
        a = e.T @ e
        lower = cprank.cp_rank_lower_bound(a, graph)
        row = [graph.num_vertices, graph.num_edges, int(cprank.is_triangle_free(graph)), lower,
               int(np.linalg.matrix_rank(a)), "", "", 1]
        _emit(_csv(CPRANK_HEADER, [row]), args.out)
        return 0
    n = args.bipartite
    graph = cprank.complete_bipartite_graph(n)
    b = cprank.bipartite_matrix(n)
    lower = cprank.cp_rank_lower_bound(b, graph)
    net = cprank.near_optimal_network(n)
    err = float(np.max(np.abs(forward(net, np.eye(n)).output - b)))
    norm = net.norm_sq()
    ok = lower == n * n // 4 and abs(norm - (n * n + n)) < 1e-9 and err < 1e-10
    row = [n, graph.num_edges, int(cprank.is_triangle_free(graph)), lower, int(np.linalg.matrix_rank(b)),
           repr(norm), repr(err), int(ok)]
    _emit(_csv(CPRANK_HEADER, [row]), args.out)
    return 0 if ok else 1


def _points(text):
    path = Path(text)
    if path.exists():
        text = path.read_text().replace("\n", ",")
    return np.array(_floats(text))


def cmd_compress1d(args):
    rng = np.random.default_rng(args.seed or 0)
    if args.net:
        net = compress1d.read_csv(args.net)
    else:
        net = compress1d.ShallowNet1D.random(args.random_width, rng)
    xs = _points(args.data) if args.data else np.sort(rng.standard_normal(args.points))
    small = compress1d.compress(net, xs)
    if args.save_net:
        compress1d.write_csv(small, args.save_net)
    before, after = net(xs), small(xs)
    rel = float(np.max(np.abs(before - after)) / max(1.0, np.max(np.abs(before))))
    norm_before = compress1d.canonicalize(net).norm()
    ok = small.width <= 4 * xs.size and rel <= 1e-9 and small.norm() <= norm_before * (1 + 1e-12)
    row = [net.width, small.width, 4 * xs.size, repr(rel), repr(norm_before), repr(small.norm()), int(ok)]
    header = ["width_before", "width_after", "bound", "max_rel_error", "norm_before", "norm_after", "passed"]
    _emit(_csv(header, [row]), args.out)
    return 0 if ok else 1


def cmd_repcost(args):
    graph = None
    if args.bipartite:
        n = args.bipartite
        X, Y = np.eye(n), cprank.bipartite_matrix(n)
        graph = cprank.complete_bipartite_graph(n)
    else:
        cfg = _config(args)
        X, Y = generate(cfg.dataset_spec())
    res = representation_cost_shallow(X, Y, args.budget, args.seed or 0, verify=not args.no_verify)
    lower = rank_sigma_lower_bound(res.pair, graph=graph)
    size = res.witness.size if res.witness is not None else ""
    row = [X.shape[1], repr(res.value), int(res.verified), lower, size]
    _emit(_csv(["N", "cost", "verified", "rank_lower_bound", "witness_size"], [row]), args.out)
    return 0 if (res.verified or args.no_verify) else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", nargs="?", help="key = value config file")
    common.add_argument("--lambda", dest="lam", help="regularization strength (counterexample: comma list)")
    common.add_argument("--seed", type=int)
    common.add_argument("--widths", help="comma-separated hidden widths")
    common.add_argument("--trials", type=int)
    common.add_argument("--out", help="output CSV path (default: stdout)")

    parser = argparse.ArgumentParser(prog="l2reps", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train one network, emit the loss history")
    p.add_argument("--save-params", help="write trained weights as JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", parents=[common], help="min loss per hidden width")
    p.add_argument("--no-check", action="store_true", help="do not fail on non-monotone curves")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("forces", parents=[common], help="export attraction/repulsion forces")
    p.add_argument("--params", help="JSON weights (default: train from the config)")
    p.add_argument("--layer", type=int, default=1)
    p.add_argument("--epsilon", type=float, help="Tikhonov parameter (default: scale-relative)")
    p.set_defaults(func=cmd_forces)

    p = sub.add_parser("counterexample", parents=[common], help="verify the two-point counterexample")
    p.add_argument("--eps", default="0.05,0.1")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--delta", type=float, default=1e-3)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("cprank", parents=[common], help="CP-rank bounds for graph matrices")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--bipartite", type=int, metavar="N")
    g.add_argument("--graph", help="edge list file: 'N k' then k lines 'v w'")
    p.set_defaults(func=cmd_cprank)

    p = sub.add_parser("compress1d", parents=[common], help="merge neurons of a 1D shallow ReLU net")
    p.add_argument("--net", help="network CSV (default: random)")
    p.add_argument("--random-width", type=int, default=100)
    p.add_argument("--data", help="comma-separated points or a file of points")
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--save-net", help="write the compressed network CSV")
    p.set_defaults(func=cmd_compress1d)

    p = sub.add_parser("repcost", parents=[common], help="shallow representation cost on X = I_N")
    p.add_argument("--bipartite", type=int, metavar="N")
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--no-verify", action="store_true")
    p.set_defaults(func=cmd_repcost)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"l2reps {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
