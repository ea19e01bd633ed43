"""Compress random 1D shallow ReLU nets and report widths, errors and norms.

    python3 scripts/compression_stats.py [--nets 200] [--width 100] [--points 10] [--seed 0]
"""
import argparse
import sys

import numpy as np

from l2reps.compress1d import ShallowNet1D, canonicalize, compress


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nets", type=int, default=200)
    parser.add_argument("--width", type=int, default=100)
    parser.add_argument("--points", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print("net,width_after,max_rel_error,norm_canonical,norm_after")
    ok = True
    for i in range(args.nets):
        net = ShallowNet1D.random(args.width, rng)
        xs = rng.standard_normal(args.points)
        small = compress(net, xs)
        before = net(xs)
        rel = np.max(np.abs(small(xs) - before)) / max(1.0, np.max(np.abs(before)))
        norm0 = canonicalize(net).norm()
        ok &= small.width <= 4 * args.points and rel <= 1e-9 and small.norm() <= norm0 * (1 + 1e-12)
        print(f"{i},{small.width},{rel:.3e},{norm0:.10g},{small.norm():.10g}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
