"""Seeded Monte Carlo and exact estimators for forcing, anti-concentration and agreement."""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from pathlib import Path

import numpy as np

from .core import (
    MAX_TABLE_INPUTS,
    CapacityError,
    Circuit,
    LinearThresholdGate,
    TruthTable,
    all_inputs,
    evaluate_batch,
    weighted_sums,
)
from .restrictions import BLOCK, OutcomeKind, Partition, _stream, classify_batch, dense_weights, sample_block

CSV_HEADER = ("label", "n", "parts", "trials", "estimate", "stderr", "seed")
EXACT_CHUNK = 1 << 16


@dataclass(frozen=True)
class EstimateRow:
    """One estimate.  Exact computations carry trials=0 and stderr=0."""

    label: str
    n: int
    parts: int
    trials: int
    estimate: float
    stderr: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.estimate <= 1.0:
            raise ValueError(f"estimate {self.estimate} outside [0, 1]")

    @classmethod
    def from_count(cls, label: str, n: int, parts: int, hits: int, trials: int, seed: int) -> "EstimateRow":
        p = hits / trials
        return cls(label, n, parts, trials, p, math.sqrt(p * (1 - p) / trials), seed)

    @classmethod
    def exact(cls, label: str, n: int, parts: int, value: Fraction | float, seed: int = 0) -> "EstimateRow":
        return cls(label, n, parts, 0, float(value), 0.0, seed)

    @property
    def is_exact(self) -> bool:
        return self.trials == 0

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(self.estimate - value) <= sigmas * self.stderr


def write_rows(rows: Sequence[EstimateRow], dest: str | Path | io.TextIOBase) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write_rows(rows, fh)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.label, r.n, r.parts, r.trials, repr(r.estimate), repr(r.stderr), r.seed])


def read_rows(src: str | Path | io.TextIOBase) -> list[EstimateRow]:
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_rows(fh)
    reader = csv.reader(src)
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    return [EstimateRow(lab, int(n), int(p), int(t), float(e), float(s), int(seed))
            for lab, n, p, t, e, s, seed in reader]


# --- trial scheduling -------------------------------------------------------------------


def _blocks(trials: int) -> list[tuple[int, int]]:
    """(block index, rows used) covering ``trials`` trials."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    full, rem = divmod(trials, BLOCK)
    return [(b, BLOCK) for b in range(full)] + ([(full, rem)] if rem else [])


def _map_blocks(fn: Callable, blocks: list[tuple[int, int]], jobs: int) -> list:
    if jobs <= 1 or len(blocks) < 2:
        return [fn(b) for b in blocks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, blocks))


def _not_forced_block(weights: tuple[int, ...], threshold: int, partition: Partition, seed: int,
                      block: tuple[int, int]) -> int:
    b, rows = block
    bits, stars = sample_block(partition, seed, b)
    bits, stars = bits[:rows], stars[:rows]
    np.put_along_axis(bits, stars, 0, axis=1)
    s = weighted_sums(bits, weights)
    w = np.asarray(weights, dtype=s.dtype)
    wf = w[stars]
    maxfree = np.where(wf > 0, wf, 0).sum(axis=1)
    minfree = np.where(wf < 0, wf, 0).sum(axis=1)
    forced = (s + minfree >= threshold) | (s + maxfree < threshold)
    return int((~forced).sum())


def estimate_not_forced(gate: LinearThresholdGate, partition: Partition, trials: int, seed: int,
                        jobs: int = 1, label: str = "not_forced") -> EstimateRow:
    """Fraction of restrictions across ``partition`` leaving ``gate`` non-constant."""
    if gate.n != partition.n:
        raise ValueError(f"gate has {gate.n} inputs, partition covers {partition.n}")
    fn = partial(_not_forced_block, gate.weights, gate.threshold, partition, seed)
    hits = sum(_map_blocks(fn, _blocks(trials), jobs))
    return EstimateRow.from_count(label, partition.n, len(partition), hits, trials, seed)


def _classify_block(gates: tuple[tuple[tuple[int, ...], object], ...], partition: Partition, seed: int,
                    block: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial (ManyInputs gate count, their free fan-in) for one block."""
    b, rows = block
    bits, stars = sample_block(partition, seed, b)
    bits, stars = bits[:rows], stars[:rows]
    count = np.zeros(rows, dtype=np.int64)
    wires = np.zeros(rows, dtype=np.int64)
    for weights, decide in gates:
        kind, _, _, fanin = classify_batch(weights, decide, bits, stars)
        many = kind == OutcomeKind.MANY_INPUTS
        count += many
        wires += np.where(many, fanin, 0)
    return count, wires


def estimate_not_single(gate: LinearThresholdGate, partition: Partition, trials: int, seed: int,
                        jobs: int = 1, label: str = "not_single") -> EstimateRow:
    """Fraction of restrictions after which ``gate`` depends on two or more free inputs."""
    if gate.n != partition.n:
        raise ValueError(f"gate has {gate.n} inputs, partition covers {partition.n}")
    fn = partial(_classify_block, ((gate.weights, gate.decide),), partition, seed)
    hits = sum(int(c.sum()) for c, _ in _map_blocks(fn, _blocks(trials), jobs))
    return EstimateRow.from_count(label, partition.n, len(partition), hits, trials, seed)


# --- Littlewood-Offord -----------------------------------------------------------------


def _interval_count_exact(weights: Sequence[int], lo: int, hi: int) -> int:
    """Number of x in {0,1}^n with lo <= sum a_i x_i <= hi, by meet in the middle."""
    half = len(weights) // 2
    left = weighted_sums(all_inputs(half), weights[:half]) if half else np.zeros(1, dtype=np.int64)
    right = np.sort(weighted_sums(all_inputs(len(weights) - half), weights[half:]))
    return int((np.searchsorted(right, hi - left, side="right")
                - np.searchsorted(right, lo - left, side="left")).sum())


def _lo_block(weights: tuple[int, ...], lo: int, hi: int, seed: int, block: tuple[int, int]) -> int:
    b, rows = block
    rng = _stream(seed, b)
    n = len(weights)
    raw = rng.integers(0, 256, size=(rows, (n + 7) // 8), dtype=np.uint8)
    bits = np.unpackbits(raw, axis=1, count=n, bitorder="little")
    s = weighted_sums(bits, weights)
    return int(((s >= lo) & (s <= hi)).sum())


def lo_probe(weights: Sequence[int], interval: tuple[int, int], mode: str = "exact", trials: int = 100_000,
             seed: int = 0, jobs: int = 1, label: str = "lo") -> EstimateRow:
    """Pr over uniform x that sum a_i x_i lies in the closed interval [lo, hi]."""
    lo, hi = interval
    weights = tuple(int(w) for w in weights)
    n = len(weights)
    if mode == "exact":
        if n and len(set(weights)) == 1:
            a = weights[0]
            hits = sum(math.comb(n, j) for j in range(n + 1) if lo <= a * j <= hi)
        elif n <= MAX_TABLE_INPUTS:
            hits = _interval_count_exact(weights, lo, hi)
        else:
            raise CapacityError(f"exact probe needs n <= {MAX_TABLE_INPUTS} or equal weights, got n={n}")
        return EstimateRow.exact(label, n, 0, Fraction(hits, 1 << n), seed)
    if mode != "trials":
        raise ValueError(f"mode must be 'exact' or 'trials', got {mode!r}")
    fn = partial(_lo_block, weights, lo, hi, seed)
    hits = sum(_map_blocks(fn, _blocks(trials), jobs))
    return EstimateRow.from_count(label, n, 0, hits, trials, seed)


# --- agreement -------------------------------------------------------------------------

BatchFn = Callable[[np.ndarray], np.ndarray]


def as_batch(f) -> BatchFn:
    """Turn a table, circuit, gate or batch callable into ``bits (B, n) -> 0/1 array``."""
    if isinstance(f, TruthTable):
        table = f.bits()
        weights = 1 << np.arange(f.num_inputs, dtype=np.int64)
        return lambda bits: table[bits.astype(np.int64) @ weights]
    if isinstance(f, Circuit):
        return partial(evaluate_batch, f)
    if hasattr(f, "evaluate_batch"):
        return f.evaluate_batch
    if callable(f):
        return f
    raise TypeError(f"cannot evaluate {type(f).__name__} on a batch")


def _uniform_bits(n: int, seed: int, block: int, rows: int) -> np.ndarray:
    raw = _stream(seed, block).integers(0, 256, size=(rows, (n + 7) // 8), dtype=np.uint8)
    return np.unpackbits(raw, axis=1, count=n, bitorder="little")


def agreement(f, g, n: int, mode: str = "exact", trials: int = 100_000, seed: int = 0,
              label: str = "agreement") -> EstimateRow:
    """Fraction of inputs in {0,1}^n on which f and g agree."""
    fb, gb = as_batch(f), as_batch(g)
    if mode == "exact":
        if n > MAX_TABLE_INPUTS:
            raise CapacityError(f"exact agreement needs n <= {MAX_TABLE_INPUTS}, got {n}")
        hits = 0
        for start in range(0, 1 << n, EXACT_CHUNK):
            bits = all_inputs(n, start, min(1 << n, start + EXACT_CHUNK))
            hits += int((np.asarray(fb(bits)).astype(bool) == np.asarray(gb(bits)).astype(bool)).sum())
        return EstimateRow.exact(label, n, 0, Fraction(hits, 1 << n), seed)
    if mode != "trials":
        raise ValueError(f"mode must be 'exact' or 'trials', got {mode!r}")
    hits = 0
    for b, rows in _blocks(trials):
        bits = _uniform_bits(n, seed, b, rows)
        hits += int((np.asarray(fb(bits)).astype(bool) == np.asarray(gb(bits)).astype(bool)).sum())
    return EstimateRow.from_count(label, n, 0, hits, trials, seed)


def approx_majority_margin(circuits: Sequence, f, n: int, mode: str = "exact", trials: int = 100_000,
                           seed: int = 0) -> Fraction:
    """min over inputs of the fraction of ``circuits`` agreeing with f.

    Sampled mode minimizes over sampled inputs only, so it can only overestimate.
    """
    if not circuits:
        raise ValueError("need at least one circuit")
    fns = [as_batch(c) for c in circuits]
    target = as_batch(f)
    best = len(fns)
    if mode == "exact":
        if n > 20:
            raise CapacityError(f"exact margin needs n <= 20, got {n}")
        batches = (all_inputs(n, s, min(1 << n, s + EXACT_CHUNK)) for s in range(0, 1 << n, EXACT_CHUNK))
    elif mode == "trials":
        batches = (_uniform_bits(n, seed, b, rows) for b, rows in _blocks(trials))
    else:
        raise ValueError(f"mode must be 'exact' or 'trials', got {mode!r}")
    for bits in batches:
        want = np.asarray(target(bits)).astype(bool)
        votes = sum((np.asarray(c(bits)).astype(bool) == want).astype(np.int64) for c in fns)
        best = min(best, int(votes.min()))
    return Fraction(best, len(fns))


# --- survival under restrictions -------------------------------------------------------------


@dataclass(frozen=True)
class SurvivalSummary:
    """Per-trial counts of bottom gates still depending on two or more free inputs."""

    trials: int
    seed: int
    mean_gates: float
    max_gates: int
    stderr_gates: float
    mean_wires: float
    max_wires: int
    histogram: dict[int, int] = field(default_factory=dict)

    def rows(self, label: str, n: int, parts: int) -> list[EstimateRow]:
        """Histogram as CSV rows: label ``<label>:gates=<c>`` with the trial fraction."""
        return [EstimateRow.from_count(f"{label}:gates={c}", n, parts, k, self.trials, self.seed)
                for c, k in sorted(self.histogram.items())]


def restriction_survival(circuit: Circuit, partition: Partition, trials: int, seed: int,
                         jobs: int = 1) -> SurvivalSummary:
    """Sample restrictions and count bottom gates that stay ManyInputs, with their free fan-in."""
    if circuit.num_inputs != partition.n:
        raise ValueError(f"circuit has {circuit.num_inputs} inputs, partition covers {partition.n}")
    if circuit.depth > 3:
        raise ValueError(f"survival is defined for depth <= 3, got {circuit.depth}")
    gates = tuple((tuple(dense_weights(g, circuit.num_inputs)), g.decide) for g in circuit.bottom_gates())
    fn = partial(_classify_block, gates, partition, seed)
    parts = _map_blocks(fn, _blocks(trials), jobs)
    counts = np.concatenate([c for c, _ in parts])
    wires = np.concatenate([w for _, w in parts])
    mean = float(counts.mean())
    sd = float(counts.std(ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
    return SurvivalSummary(trials, seed, mean, int(counts.max()), sd, float(wires.mean()), int(wires.max()),
                           dict(sorted(Counter(counts.tolist()).items())))


# --- envelope helpers -------------------------------------------------------------------------


def envelope_constants(rows: Sequence[EstimateRow]) -> np.ndarray:
    """estimate * sqrt(n) / |P| per row: constant across a grid iff the O(|P|/sqrt n) shape holds."""
    return np.array([r.estimate * math.sqrt(r.n) / r.parts for r in rows])


def scaling_ratios(rows: Sequence[EstimateRow]) -> dict[tuple[int, int, int], float]:
    """Ratio estimate(n') / estimate(n) for consecutive n at equal |P|, keyed (parts, n, n')."""
    by_parts: dict[int, list[EstimateRow]] = {}
    for r in rows:
        by_parts.setdefault(r.parts, []).append(r)
    out = {}
    for p, rs in by_parts.items():
        rs = sorted(rs, key=lambda r: r.n)
        for a, b in zip(rs, rs[1:]):
            out[(p, a.n, b.n)] = b.estimate / a.estimate
    return out


# --- workload generators ----------------------------------------------------------------------


def random_ltf(n: int, seed: int, max_weight: int = 100) -> LinearThresholdGate:
    """Signed weights uniform in [-max_weight, max_weight] minus 0; threshold splits the mean sum."""
    rng = np.random.default_rng([int(seed), int(n)])
    mag = rng.integers(1, max_weight + 1, size=n)
    sign = rng.choice([-1, 1], size=n)
    w = tuple(int(v) for v in mag * sign)
    return LinearThresholdGate(w, sum(w) // 2)


def majority_bottom_circuit(n: int, s: int = 4) -> Circuit:
    """s unit-weight bottom gates over all inputs with thresholds around n/2, under a MAJ top."""
    from .core import Gate, Kind, input_ref

    refs = [input_ref(i) for i in range(n)]
    base = -(-n // 2) - s // 2
    bottoms = [Gate.make(f"b{j}", Kind.LTF, {r: 1 for r in refs}, base + j) for j in range(s)]
    top = Gate.make("top", Kind.MAJ, {g.id: 1 for g in bottoms})
    return Circuit(n, tuple(bottoms) + (top,), "top", f"maj_bottom_{n}_{s}")
