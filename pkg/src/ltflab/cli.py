"""Command-line entry point: ``ltflab <subcommand> ...``."""
from __future__ import annotations

import argparse
import hashlib
import io
import os
import sys
from collections.abc import Sequence

import numpy as np

from . import __version__
from .chow import chow_vector, decide_ltf, enumerate_ltfs
from .codes import B_eval, bias_of, build_biased_matrix, correlation_profile
from .constructions import (
    andreev_batch,
    andreev_ltf2_circuit,
    andreev_mod3mod2,
    andreev_tc03_circuit,
    majority_batch,
    parity_approx_circuit,
    parity_batch,
)
from .core import CapacityError, LinearThresholdGate, StructuralError, TruthTable, parse, serialize, size_metrics, truth_table
from .experiments import (
    EstimateRow,
    agreement,
    approx_majority_margin,
    estimate_not_forced,
    estimate_not_single,
    lo_probe,
    majority_bottom_circuit,
    random_ltf,
    restriction_survival,
    write_rows,
)
from .restrictions import Partition

BUILDERS = {
    "parity-approx": lambda a: parity_approx_circuit(a.n, a.c),
    "tc03": lambda a: andreev_tc03_circuit(a.n),
    "ltf2": lambda a: andreev_ltf2_circuit(a.n),
    "mod3mod2": lambda a: andreev_mod3mod2(a.n),
    "majority": lambda a: LinearThresholdGate.majority(a.n).to_circuit("majority"),
    "maj-bottom": lambda a: majority_bottom_circuit(a.n, a.s),
}


def _function(name: str, n: int):
    """Batch evaluator for a named function or ``file:<circuit path>``."""
    if name.startswith("file:"):
        with open(name[5:]) as fh:
            return parse(fh.read())
    table = {
        "parity": parity_batch,
        "not-parity": lambda b: 1 - parity_batch(b),
        "majority": majority_batch,
        "andreev": lambda b: andreev_batch(n, b),
        "const0": lambda b: np.zeros(len(b), dtype=np.uint8),
        "const1": lambda b: np.ones(len(b), dtype=np.uint8),
        "dictator": lambda b: b[:, 0].astype(np.uint8),
    }
    if name not in table:
        raise ValueError(f"unknown function {name!r}; choose from {sorted(table)} or file:<path>")
    return table[name]


def _bits(text: str) -> list[int]:
    if set(text) - {"0", "1"}:
        raise ValueError(f"expected a 0/1 string, got {text!r}")
    return [int(c) for c in text]


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_rows(rows: list[EstimateRow], out: str | None) -> None:
    buf = io.StringIO()
    write_rows(rows, buf)
    _emit(buf.getvalue(), out)


def _load_circuit(args):
    if args.circuit:
        with open(args.circuit) as fh:
            return parse(fh.read())
    return BUILDERS[args.func](args)


# --- subcommands -------------------------------------------------------------------------


def cmd_build(args) -> None:
    circuit = BUILDERS[args.func](args)
    gates, wires = size_metrics(circuit)
    if args.out:
        _emit(serialize(circuit), args.out)
    else:
        sys.stdout.write(serialize(circuit))
    print(f"gates={gates} wires={wires}")


def cmd_eval(args) -> None:
    circuit = _load_circuit(args)
    if args.input is not None:
        bits = _bits(args.input)
        if len(bits) != circuit.num_inputs:
            raise ValueError(f"input has {len(bits)} bits, circuit has {circuit.num_inputs} inputs")
        print(circuit(bits))
    else:
        _emit(truth_table(circuit).to_hex() + "\n", args.out)


def cmd_restrict(args) -> None:
    circuit = _load_circuit(args)
    part = Partition.equal(circuit.num_inputs, args.parts)
    summary = restriction_survival(circuit, part, args.trials, args.seed, jobs=args.jobs)
    _emit_rows(summary.rows(args.label, circuit.num_inputs, args.parts), args.out)
    print(f"mean_gates={summary.mean_gates!r} stderr={summary.stderr_gates!r} max_gates={summary.max_gates} "
          f"mean_wires={summary.mean_wires!r} max_wires={summary.max_wires}", file=sys.stderr)


def cmd_forcing(args) -> None:
    rows = []
    for n in args.n:
        gate = LinearThresholdGate.majority(n) if args.gate == "majority" else random_ltf(n, args.seed)
        for p in args.parts:
            fn = estimate_not_single if args.single else estimate_not_forced
            label = f"{args.gate}:{'not_single' if args.single else 'not_forced'}"
            rows.append(fn(gate, Partition.equal(n, p), args.trials, args.seed, jobs=args.jobs, label=label))
    _emit_rows(rows, args.out)


def cmd_lo(args) -> None:
    weights = args.weights if args.weights else [1] * args.uniform
    row = lo_probe(weights, (args.lo, args.hi), "exact" if args.exact else "trials", args.trials, args.seed,
                   jobs=args.jobs)
    if args.out:
        _emit_rows([row], args.out)
    print(f"estimate={row.estimate!r} stderr={row.stderr!r}")


def cmd_agree(args) -> None:
    mode = "exact" if args.exact else "trials"
    f = _function(args.f, args.n)
    if args.collection:
        margin = approx_majority_margin([_function(g, args.n) for g in args.collection], f, args.n, mode,
                                        args.trials, args.seed)
        print(f"margin={float(margin)!r}")
        return
    row = agreement(f, _function(args.g, args.n), args.n, mode, args.trials, args.seed)
    if args.out:
        _emit_rows([row], args.out)
    print(f"estimate={row.estimate!r}")


def cmd_enumerate(args) -> None:
    lines = [f"{tb.to_hex()} {g.threshold} " + " ".join(str(w) for w in g.weights) for tb, g in enumerate_ltfs(args.n)]
    _emit("".join(line.rstrip() + "\n" for line in lines), args.out)


def cmd_chow(args) -> None:
    table = TruthTable.from_hex(args.n, args.table)
    print("chow=" + " ".join(str(c) for c in chow_vector(table).scaled))
    if args.n <= 6:
        dec = decide_ltf(table)
        if dec.gate is not None:
            print(f"ltf t={dec.gate.threshold} w=" + " ".join(str(w) for w in dec.gate.weights))
        else:
            print("not-ltf certificate=" + " ".join(f"{r}:{v}" for r, v in sorted(dec.certificate.items())))


def cmd_biased(args) -> None:
    mat = build_biased_matrix(args.t, args.r)
    if args.action == "build":
        _emit(mat.export(), args.out)
    elif args.action == "bias":
        b = bias_of(mat, "exhaustive" if args.exact else "sampled", args.samples, args.seed)
        print(f"bias={b} epsilon={mat.epsilon}")
    else:
        rng = np.random.default_rng(args.seed)
        counts = [correlation_profile(mat, rng.integers(0, 2, mat.m), args.theta) for _ in range(args.targets)]
        print(f"max_count={max(counts)} mean_count={float(np.mean(counts))!r}")


def cmd_b_eval(args) -> None:
    if args.x is not None and args.a is not None:
        print(B_eval(args.n, args.k, _bits(args.x), _bits(args.a)))
        return
    n = args.n
    if 2 * n > 24:
        raise CapacityError(f"full table needs 2n <= 24, got {2 * n}")
    rows = [B_eval(n, args.k, [(r >> i) & 1 for i in range(n)], [(r >> (n + i)) & 1 for i in range(n)])
            for r in range(1 << (2 * n))]
    _emit(TruthTable.from_bits(rows).to_hex() + "\n", args.out)


# --- parser ----------------------------------------------------------------------------------


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=int(os.environ.get("LTFLAB_SEED", "0")))
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out")
    common.add_argument("--config", help="key=value file; keys are flag names")

    p = argparse.ArgumentParser(prog="ltflab", description=__doc__)
    p.add_argument("--version", action="version", version=f"ltflab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def source(sp, required_n=True):
        sp.add_argument("--func", choices=sorted(BUILDERS), default="parity-approx")
        sp.add_argument("--circuit", help="circuit file (overrides --func)")
        sp.add_argument("--n", type=int, required=required_n)
        sp.add_argument("--c", type=float, default=2.0)
        sp.add_argument("--s", type=int, default=4, help="bottom gates for maj-bottom")

    sp = sub.add_parser("build", parents=[common], help="emit a construction circuit")
    source(sp)
    sp.set_defaults(run=cmd_build)

    sp = sub.add_parser("eval", parents=[common], help="truth table or one-point evaluation")
    source(sp, required_n=False)
    sp.add_argument("--input", help="0/1 string, x_0 first")
    sp.set_defaults(run=cmd_eval)

    sp = sub.add_parser("restrict", parents=[common], help="surviving bottom gates under random restrictions")
    source(sp, required_n=False)
    sp.add_argument("--parts", type=int, required=True)
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--label", default="survival")
    sp.set_defaults(run=cmd_restrict)

    sp = sub.add_parser("forcing", parents=[common], help="not-forced probability grid")
    sp.add_argument("--n", type=_ints, required=True)
    sp.add_argument("--parts", type=_ints, required=True)
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--gate", choices=["majority", "random"], default="majority")
    sp.add_argument("--single", action="store_true", help="count ManyInputs instead of not-forced")
    sp.set_defaults(run=cmd_forcing)

    sp = sub.add_parser("lo", parents=[common], help="interval probability of a weighted sum")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--weights", type=_ints)
    g.add_argument("--uniform", type=int, help="n unit weights")
    sp.add_argument("--lo", type=int, required=True)
    sp.add_argument("--hi", type=int, required=True)
    sp.add_argument("--exact", action="store_true")
    sp.add_argument("--trials", type=int, default=100_000)
    sp.set_defaults(run=cmd_lo)

    sp = sub.add_parser("agree", parents=[common], help="agreement or approximate-majority margin")
    sp.add_argument("--f", required=True)
    sp.add_argument("--g")
    sp.add_argument("--collection", type=lambda s: s.split(","), help="comma-separated functions")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--exact", action="store_true")
    sp.add_argument("--trials", type=int, default=100_000)
    sp.set_defaults(run=cmd_agree)

    sp = sub.add_parser("enumerate-ltf", parents=[common], help="all LTFs on n inputs")
    sp.add_argument("--n", type=int, required=True)
    sp.set_defaults(run=cmd_enumerate)

    sp = sub.add_parser("chow", parents=[common], help="Chow vector and LTF test of a hex table")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--table", required=True)
    sp.set_defaults(run=cmd_chow)

    sp = sub.add_parser("biased", parents=[common], help="small-bias matrix tools")
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--action", choices=["build", "bias", "profile"], default="build")
    sp.add_argument("--exact", action="store_true", help="exhaustive bias")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--theta", type=float, default=0.25)
    sp.add_argument("--targets", type=int, default=100)
    sp.set_defaults(run=cmd_biased)

    sp = sub.add_parser("b-eval", parents=[common], help="evaluate B_{n,k} at a point or tabulate it")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--x")
    sp.add_argument("--a")
    sp.set_defaults(run=cmd_b_eval)
    return p


def _config_tokens(path: str) -> list[str]:
    tokens = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"config line {line!r} is not key=value")
            flag = "--" + key.strip().replace("_", "-")
            value = value.strip()
            if value.lower() in ("true", "false"):
                tokens += [flag] if value.lower() == "true" else []
            else:
                tokens += [flag, value]
    return tokens


def _resolve(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse argv, merging a --config file; a config key that disagrees with a flag is an error."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        tokens = _config_tokens(args.config)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    head, rest = argv[:1], argv[1:]
    flags_win = parser.parse_args(head + tokens + rest)
    config_wins = parser.parse_args(head + rest + tokens)
    clash = sorted(k for k in vars(flags_win) if k != "run" and getattr(flags_win, k) != getattr(config_wins, k))
    if clash:
        parser.error(f"config file conflicts with command-line flags: {', '.join(clash)}")
    return flags_win


def config_hash(args: argparse.Namespace) -> str:
    items = sorted((k, repr(v)) for k, v in vars(args).items() if k not in ("run", "jobs", "out", "config"))
    return hashlib.sha256(repr(items).encode()).hexdigest()[:12]


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _resolve(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    print(f"# ltflab version={__version__} seed={args.seed} config={config_hash(args)}", file=sys.stderr)
    try:
        args.run(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, StructuralError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
