"""Check the two-point counterexample for several regularization strengths.

    python3 scripts/counterexample.py [--lambdas 0.05,0.1,0.5] [--eps 0.05,0.1]
"""
import argparse
import sys

from l2reps.experiments.counterexample import reports_to_csv, verify_counterexample


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--lambdas", default="0.05,0.1,0.5")
    parser.add_argument("--eps", default="0.05,0.1")
    parser.add_argument("--samples", type=int, default=10_000)
    args = parser.parse_args()

    lams = [float(t) for t in args.lambdas.split(",")]
    eps = [float(t) for t in args.eps.split(",")]
    reports = [verify_counterexample(lam, eps, args.samples) for lam in lams]
    sys.stdout.write(reports_to_csv(reports))
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
