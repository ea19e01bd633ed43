"""CP-rank, near-optimal network norm and representation cost for B_N.

    python3 scripts/bipartite_table.py [--max-n 10] [--verify-up-to 4]
"""
import argparse
import sys

import numpy as np

from l2reps.cprank import bipartite_matrix, complete_bipartite_graph, cp_rank_lower_bound, near_optimal_network
from l2reps.network import forward
from l2reps.reform_k import representation_cost_shallow


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-n", type=int, default=10)
    parser.add_argument("--verify-up-to", type=int, default=4, help="run the witness search for N up to this")
    args = parser.parse_args()

    print("N,cp_rank,near_optimal_norm,representation_cost,gap,output_error,witness_verified")
    for n in range(2, args.max_n + 1, 2):
        b = bipartite_matrix(n)
        cp = cp_rank_lower_bound(b, complete_bipartite_graph(n))
        net = near_optimal_network(n)
        err = np.max(np.abs(forward(net, np.eye(n)).output - b))
        cost = representation_cost_shallow(np.eye(n), b, verify=n <= args.verify_up_to)
        verified = int(cost.verified) if n <= args.verify_up_to else ""
        print(f"{n},{cp},{net.norm_sq():.12g},{cost.value:.12g},{net.norm_sq() - cost.value:.6g},{err:.3g},{verified}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
