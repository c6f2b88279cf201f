"""Not-forced probability of MAJ_n and random LTFs over an (n, |P|) grid.

Writes one CSV row per grid point and prints est * sqrt(n) / |P| alongside,
which stays roughly constant when the |P| / sqrt(n) envelope holds.
"""
import argparse
import math
import sys

from ltflab.core import LinearThresholdGate
from ltflab.experiments import estimate_not_forced, estimate_not_single, random_ltf, scaling_ratios, write_rows
from ltflab.restrictions import Partition


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, nargs="+", default=[256, 1024, 4096])
    p.add_argument("--parts", type=int, nargs="+", default=[2, 4, 8, 16])
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--gates", type=int, default=0, help="random LTFs per n in addition to MAJ_n")
    p.add_argument("--single", action="store_true", help="estimate ManyInputs instead of not-forced")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")
    args = p.parse_args()

    estimate = estimate_not_single if args.single else estimate_not_forced
    rows = []
    for n in args.n:
        gates = [("majority", LinearThresholdGate.majority(n))]
        gates += [(f"random{g}", random_ltf(n, args.seed + g)) for g in range(args.gates)]
        for label, gate in gates:
            for parts in args.parts:
                row = estimate(gate, Partition.equal(n, parts), args.trials, args.seed, jobs=args.jobs, label=label)
                rows.append(row)
                print(f"{label:>10} n={n:<6} |P|={parts:<3} est={row.estimate:.5f} +- {row.stderr:.5f} "
                      f"est*sqrt(n)/|P|={row.estimate * math.sqrt(n) / parts:.3f}", file=sys.stderr)
    for (parts, n, n2), ratio in scaling_ratios([r for r in rows if r.label == "majority"]).items():
        print(f"majority |P|={parts} est({n2})/est({n}) = {ratio:.3f}", file=sys.stderr)
    write_rows(rows, sys.stdout if args.out == "-" else args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
