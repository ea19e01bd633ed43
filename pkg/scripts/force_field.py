"""Train a depth-3 ReLU classifier and export attraction/repulsion forces on both hidden layers.

Each CSV has one row per (datapoint, neuron); project the columns of Z (one
point per datapoint) or its rows (one point per neuron) with any PCA tool.

    python3 scripts/force_field.py [--config configs/forces_clusters.cfg] [--outdir results]
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from l2reps.experiments.config import load_config
from l2reps.experiments.datasets import generate
from l2reps.experiments.forces_io import export_forces
from l2reps.network import Activation, Cost, init_params, loss, train

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=ROOT / "configs" / "forces_clusters.cfg")
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--epsilon", type=float, default=None)
    args = parser.parse_args()

    cfg = load_config(args.config)
    X, Y = generate(cfg.dataset_spec())
    widths = (X.shape[0],) + tuple(cfg.widths) + (Y.shape[0],)
    rng = np.random.default_rng(cfg.seed)
    params = init_params(widths, cfg.beta, Activation.parse(cfg.activation), rng, cfg.gain)
    params = train(params, X, Y, Cost(cfg.cost), cfg.lam, cfg.optimizer())
    print(f"trained loss {loss(params, X, Y, Cost(cfg.cost), cfg.lam):.6g}", file=sys.stderr)

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for layer in range(1, params.depth):
        path = outdir / f"forces_layer{layer}.csv"
        field = export_forces(params, X, layer, args.epsilon, path)
        print(
            f"layer {layer}: |attraction| {np.linalg.norm(field.attraction):.4g}, "
            f"|repulsion| {np.linalg.norm(field.repulsion):.4g} -> {path}",
            file=sys.stderr,
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
