"""Interval probabilities of random weighted sums against the 4 / sqrt(k) bound.

Each vector has k weights of magnitude at least the interval length, plus
optional small weights; the probe samples uniform inputs.
"""
import argparse
import math
import sys

import numpy as np

from ltflab.experiments import lo_probe, write_rows


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--k", type=int, nargs="+", default=[16, 64, 256, 1024])
    p.add_argument("--vectors", type=int, default=10, help="random weight vectors per k")
    p.add_argument("--width", type=int, default=10, help="largest interval length")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = []
    for k in args.k:
        worst = 0.0
        for v in range(args.vectors):
            width = int(rng.integers(0, args.width + 1))
            big = rng.integers(max(width, 1), 4 * max(width, 1) + 1, size=k) * rng.choice([-1, 1], size=k)
            small = rng.integers(-width, width + 1, size=int(rng.integers(0, k + 1)))
            lo = int(rng.integers(-2 * width - 2, 2 * width + 3))
            row = lo_probe([int(a) for a in np.concatenate([big, small])], (lo, lo + width), mode="trials",
                           trials=args.trials, seed=args.seed + v, jobs=args.jobs, label=f"k={k}")
            rows.append(row)
            worst = max(worst, row.estimate)
        print(f"k={k:<5} worst={worst:.5f} bound={4 / math.sqrt(k):.5f} worst*sqrt(k)={worst * math.sqrt(k):.3f}",
              file=sys.stderr)
    write_rows(rows, sys.stdout if args.out == "-" else args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
