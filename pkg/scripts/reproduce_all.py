"""Regenerate every figure/table CSV into a results directory.

    python3 scripts/reproduce_all.py --scale 0.1 --output results
"""

import argparse
import time

from curator_audit import reproduce as R


def main() -> None:
    p = argparse.ArgumentParser()
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", default="results")
    p.add_argument("figures", nargs="*", default=list(R.FIGURES))
    args = p.parse_args()
    for name in args.figures:
        t0 = time.time()
        rows = R.reproduce(name, seed=args.seed, scale=args.scale, workers=args.workers)
        R.write_csv(name, rows, f"{args.output}/{name}.csv")
        print(f"{name}: {len(rows)} rows in {time.time() - t0:.1f}s", flush=True)


if __name__ == "__main__":
    main()
