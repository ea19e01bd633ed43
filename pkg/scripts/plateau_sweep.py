"""Width sweeps: the N = 3 plateau run and the N = 100 teacher smoke run.

    python3 scripts/plateau_sweep.py [--config configs/plateau_n3.cfg] [--out results/plateau_n3.csv]
"""
import argparse
import sys
import time
from pathlib import Path

from l2reps.experiments.config import load_config

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=ROOT / "configs" / "plateau_n3.cfg")
    parser.add_argument("--out", help="CSV path (default: stdout)")
    args = parser.parse_args()

    from l2reps.experiments.sweep import sweep

    cfg = load_config(args.config)
    start = time.perf_counter()
    report = sweep(cfg.sweep_config(), cfg.dataset_spec())
    csv = report.to_csv()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(csv)
    else:
        sys.stdout.write(csv)
    print(
        f"plateau start {report.plateau_start}, monotone {report.is_monotone()}, "
        f"{time.perf_counter() - start:.0f}s",
        file=sys.stderr,
    )
    return 0 if report.is_monotone() else 1


if __name__ == "__main__":
    sys.exit(main())
