"""Surviving bottom gates of depth-2 circuits under random restrictions, as n grows.

Uses the MAJ-of-MAJ parity approximator and a circuit of s unit-weight
bottom gates; prints the mean survivors and the ratio between consecutive n,
and writes the surviving fraction of bottom gates as CSV.
"""
import argparse
import math
import sys

from ltflab.constructions import parity_approx_circuit
from ltflab.experiments import EstimateRow, majority_bottom_circuit, restriction_survival, write_rows
from ltflab.restrictions import Partition


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, nargs="+", default=[64, 256, 1024])
    p.add_argument("--parts", type=int, default=8)
    p.add_argument("--trials", type=int, default=20_000)
    p.add_argument("--circuit", choices=["parity-approx", "maj-bottom"], default="maj-bottom")
    p.add_argument("--s", type=int, default=4, help="bottom gates for maj-bottom")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")
    args = p.parse_args()

    rows, prev = [], None
    for n in args.n:
        circuit = parity_approx_circuit(n, 2) if args.circuit == "parity-approx" else majority_bottom_circuit(n, args.s)
        s = restriction_survival(circuit, Partition.equal(n, args.parts), args.trials, args.seed, jobs=args.jobs)
        ratio = "" if prev is None else f" ratio={s.mean_gates / prev:.3f} (1/sqrt ratio {math.sqrt(prev_n / n):.3f})"
        print(f"n={n:<6} mean_gates={s.mean_gates:.4f} +- {s.stderr_gates:.4f} max={s.max_gates} "
              f"mean_wires={s.mean_wires:.2f}{ratio}", file=sys.stderr)
        prev, prev_n = s.mean_gates, n
        # CSV rows hold probabilities, so record the surviving fraction of bottom gates
        bottoms = len(circuit.bottom_gates())
        rows.append(EstimateRow(f"{args.circuit}:surviving_fraction", n, args.parts, s.trials, s.mean_gates / bottoms,
                                s.stderr_gates / bottoms, args.seed))
    write_rows(rows, sys.stdout if args.out == "-" else args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
