"""Random restrictions across a partition, forcing tests, circuit simplification."""
from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .core import (
    CapacityError,
    Circuit,
    Gate,
    Kind,
    LinearThresholdGate,
    StructuralError,
    input_index,
    input_ref,
    weighted_sums,
)

STAR = 2
MAX_FREE = 24
BLOCK = 1024  # trials per random stream; trial i lives in stream i // BLOCK


@dataclass(frozen=True)
class Partition:
    n: int
    parts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        parts = tuple(tuple(sorted(int(i) for i in p)) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        flat = [i for p in parts for i in p]
        if sorted(flat) != list(range(self.n)):
            raise ValueError("parts must be disjoint and cover 0..n-1")
        sizes = [len(p) for p in parts]
        if not sizes or min(sizes) == 0 or max(sizes) - min(sizes) > 1:
            raise ValueError(f"part sizes must be nonzero and differ by at most 1, got {sizes}")

    @classmethod
    def equal(cls, n: int, num_parts: int) -> "Partition":
        """Contiguous parts; the first n mod num_parts parts get one extra index."""
        if not 1 <= num_parts <= n:
            raise ValueError(f"need 1 <= parts <= n, got parts={num_parts}, n={n}")
        q, rem = divmod(n, num_parts)
        parts, start = [], 0
        for i in range(num_parts):
            size = q + (i < rem)
            parts.append(tuple(range(start, start + size)))
            start += size
        return cls(n, tuple(parts))

    def __len__(self) -> int:
        return len(self.parts)


@dataclass(frozen=True)
class Restriction:
    """values[i] is 0, 1 or STAR."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(v not in (0, 1, STAR) for v in vals):
            raise ValueError("restriction values must be 0, 1 or STAR")
        object.__setattr__(self, "values", vals)

    @classmethod
    def parse(cls, text: str) -> "Restriction":
        table = {"0": 0, "1": 1, "*": STAR}
        try:
            return cls(tuple(table[c] for c in text.strip()))
        except KeyError as exc:
            raise ValueError(f"restriction strings use 0, 1 and *; got {text!r}") from exc

    def __str__(self) -> str:
        return "".join("01*"[v] for v in self.values)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def free(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.values) if v == STAR)

    def completions(self) -> np.ndarray:
        """All completions as a (2^|free|, n) matrix; free var j is bit j of the row."""
        free = self.free
        base = np.array([v if v != STAR else 0 for v in self.values], dtype=np.uint8)
        out = np.tile(base, (1 << len(free), 1))
        idx = np.arange(1 << len(free), dtype=np.int64)
        for j, i in enumerate(free):
            out[:, i] = (idx >> j) & 1
        return out


# --- sampling --------------------------------------------------------------------


def _stream(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(block)]))


def sample_block(partition: Partition, seed: int, block: int) -> tuple[np.ndarray, np.ndarray]:
    """BLOCK restrictions from stream (seed, block).

    Returns (bits, stars): bits is (BLOCK, n) uint8 with the fixed values,
    stars is (BLOCK, |P|) with the free coordinate of each part.
    """
    rng = _stream(seed, block)
    n = partition.n
    bits = np.unpackbits(rng.integers(0, 256, size=(BLOCK, (n + 7) // 8), dtype=np.uint8), axis=1, count=n,
                         bitorder="little")
    stars = np.empty((BLOCK, len(partition)), dtype=np.int64)
    for p, part in enumerate(partition.parts):
        stars[:, p] = np.asarray(part, dtype=np.int64)[rng.integers(0, len(part), size=BLOCK)]
    return bits, stars


def sample_restrictions(partition: Partition, seed: int, start: int, stop: int) -> np.ndarray:
    """Trials start..stop-1 as a (rows, n) matrix over {0, 1, STAR}."""
    rows = []
    for block in range(start // BLOCK, (stop - 1) // BLOCK + 1 if stop > start else start // BLOCK):
        bits, stars = sample_block(partition, seed, block)
        vals = bits.copy()
        np.put_along_axis(vals, stars, STAR, axis=1)
        lo = max(start - block * BLOCK, 0)
        hi = min(stop - block * BLOCK, BLOCK)
        rows.append(vals[lo:hi])
    return np.concatenate(rows) if rows else np.zeros((0, partition.n), dtype=np.uint8)


def sample_restriction(partition: Partition, seed: int, index: int) -> Restriction:
    """Trial ``index`` of the (seed)-stream: one uniform star per part, fair bits elsewhere."""
    return Restriction(tuple(sample_restrictions(partition, seed, index, index + 1)[0]))


# --- forcing -----------------------------------------------------------------------


class Forced(enum.Enum):
    ZERO = 0
    ONE = 1
    NOT_FORCED = 2


class OutcomeKind(enum.IntEnum):
    FORCED_ZERO = 0
    FORCED_ONE = 1
    SINGLE_INPUT = 2
    MANY_INPUTS = 3


@dataclass(frozen=True)
class ForcingOutcome:
    kind: OutcomeKind
    index: int | None = None
    negated: bool = False

    @property
    def forced(self) -> bool:
        return self.kind in (OutcomeKind.FORCED_ZERO, OutcomeKind.FORCED_ONE)

    def __str__(self) -> str:
        if self.kind is OutcomeKind.SINGLE_INPUT:
            return f"SingleInput({self.index}, {'negated' if self.negated else 'positive'})"
        return {OutcomeKind.FORCED_ZERO: "ForcedZero", OutcomeKind.FORCED_ONE: "ForcedOne",
                OutcomeKind.MANY_INPUTS: "ManyInputs"}[self.kind]


def _check_cover(n_gate: int, rho: Restriction) -> None:
    if rho.n < n_gate:
        raise StructuralError(f"restriction covers {rho.n} inputs, gate needs {n_gate}")


def forced_constant(gate: LinearThresholdGate, rho: Restriction) -> Forced:
    """Interval test: forced to 1 iff s + (negative free weights) >= t,
    forced to 0 iff s + (positive free weights) < t, with s the fixed part."""
    _check_cover(gate.n, rho)
    s = maxfree = minfree = 0
    for w, v in zip(gate.weights, rho.values):
        if v == STAR:
            if w > 0:
                maxfree += w
            else:
                minfree += w
        else:
            s += w * v
    if s + minfree >= gate.threshold:
        return Forced.ONE
    if s + maxfree < gate.threshold:
        return Forced.ZERO
    return Forced.NOT_FORCED


def dense_weights(gate: Gate, n: int) -> list[int]:
    w = [0] * n
    for ref, weight in gate.weights:
        j = input_index(ref)
        if j is None:
            raise StructuralError(f"gate {gate.id} is not a bottom gate (reads {ref})")
        if j >= n:
            raise StructuralError(f"gate {gate.id} reads {ref}, restriction covers {n} inputs")
        w[j] = weight
    return w


def _completion_matrix(f: int) -> np.ndarray:
    idx = np.arange(1 << f, dtype=np.int64)
    return ((idx[:, None] >> np.arange(f, dtype=np.int64)) & 1).astype(np.int64)


def classify_tables(tables: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classify restricted functions given as rows of a (B, 2^f) bool table.

    Returns (kind, var, negated) arrays; ``var`` is the position among the
    f free variables for SINGLE_INPUT rows and -1 elsewhere.
    """
    B, rows = tables.shape
    f = rows.bit_length() - 1
    relevant = np.zeros((B, f), dtype=bool)
    for j in range(f):
        t4 = tables.reshape(B, rows >> (j + 1), 2, 1 << j)
        relevant[:, j] = (t4[:, :, 0, :] != t4[:, :, 1, :]).any(axis=(1, 2))
    count = relevant.sum(axis=1)
    kind = np.where(count == 0, np.where(tables[:, 0], OutcomeKind.FORCED_ONE, OutcomeKind.FORCED_ZERO),
                    np.where(count == 1, OutcomeKind.SINGLE_INPUT, OutcomeKind.MANY_INPUTS)).astype(np.int8)
    var = np.where(count == 1, relevant.argmax(axis=1) if f else 0, -1)
    pos_row = np.where(var >= 0, np.left_shift(1, np.maximum(var, 0)), 0)
    negated = (count == 1) & ~tables[np.arange(B), pos_row]
    return kind, var, negated


def _restricted_table(weights: Sequence[int], decide, rho: Restriction) -> tuple[np.ndarray, list[int]]:
    free = [i for i in rho.free if i < len(weights) and weights[i]]
    if len(free) > MAX_FREE:
        raise CapacityError(f"{len(free)} free gate inputs exceeds brute-force bound {MAX_FREE}")
    s = sum(w * v for w, v in zip(weights, rho.values) if v != STAR)
    wf = [weights[i] for i in free]
    table = np.empty(1 << len(free), dtype=bool)
    step = 1 << 20
    for lo in range(0, table.size, step):
        hi = min(table.size, lo + step)
        idx = np.arange(lo, hi, dtype=np.int64)
        comp = ((idx[:, None] >> np.arange(len(free), dtype=np.int64)) & 1).astype(np.uint8)
        table[lo:hi] = decide(weighted_sums(comp, wf) + s)
    return table, free


def _outcome(table: np.ndarray, free: list[int]) -> ForcingOutcome:
    kind, var, neg = classify_tables(table[None, :])
    k = OutcomeKind(int(kind[0]))
    if k is OutcomeKind.SINGLE_INPUT:
        return ForcingOutcome(k, free[int(var[0])], bool(neg[0]))
    return ForcingOutcome(k)


def forced_single_input(gate: LinearThresholdGate | Gate, rho: Restriction) -> ForcingOutcome:
    """Exhaustive classification of the restricted gate over its free inputs."""
    if isinstance(gate, Gate):
        weights = dense_weights(gate, rho.n)
    else:
        _check_cover(gate.n, rho)
        weights = list(gate.weights)
    table, free = _restricted_table(weights, gate.decide, rho)
    return _outcome(table, free)


def classify_batch(weights: Sequence[int], decide, bits: np.ndarray, stars: np.ndarray,
                   chunk_cells: int = 1 << 22) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Classify one gate under many restrictions given in (bits, stars) form.

    Returns (kind, free_index, negated, free_fanin) per restriction; free_index
    is the original coordinate for SINGLE_INPUT rows.
    """
    B, P = stars.shape
    if P > MAX_FREE:
        raise CapacityError(f"{P} free inputs exceeds brute-force bound {MAX_FREE}")
    w = np.asarray(weights, dtype=object if max(map(abs, weights), default=0) >= 1 << 40 else np.int64)
    masked = bits.copy()
    np.put_along_axis(masked, stars, 0, axis=1)
    fixed = weighted_sums(masked, list(weights))
    wfree = w[stars]
    comp = _completion_matrix(P).astype(w.dtype)
    kind = np.empty(B, dtype=np.int8)
    var = np.empty(B, dtype=np.int64)
    neg = np.empty(B, dtype=bool)
    step = max(1, chunk_cells >> P)
    for lo in range(0, B, step):
        hi = min(B, lo + step)
        sums = fixed[lo:hi, None] + wfree[lo:hi] @ comp.T
        kind[lo:hi], var[lo:hi], neg[lo:hi] = classify_tables(decide(sums))
    idx = np.where(var >= 0, stars[np.arange(B), np.maximum(var, 0)], -1)
    fanin = (wfree != 0).sum(axis=1)
    return kind, idx, neg, fanin


# --- circuit simplification -----------------------------------------------------------


def apply_restriction(circuit: Circuit, rho: Restriction) -> Circuit:
    """Simplify ``circuit`` under ``rho``; the result reads only the free inputs.

    Free input i becomes x_<rank of i among free inputs>.  Bottom gates forced
    to a constant or to one literal disappear: constants are folded into the
    thresholds (or accept sets) of their readers and literals become direct
    wires, negated literals via weight negation plus a threshold shift.
    Surviving gates keep only free inputs.
    """
    if rho.n != circuit.num_inputs:
        raise StructuralError(f"restriction has {rho.n} coordinates, circuit has {circuit.num_inputs} inputs")
    free = rho.free
    rank = {i: r for r, i in enumerate(free)}
    # replacement: ("const", c) | ("lit", ref, negated) | ("gate", id)
    repl: dict[str, tuple] = {}
    for i, v in enumerate(rho.values):
        repl[input_ref(i)] = ("lit", input_ref(rank[i]), False) if v == STAR else ("const", v)
    bottom = {g.id for g in circuit.bottom_gates()}
    kept: list[Gate] = []
    for g in circuit.gates:
        if g.kind is Kind.CONST:
            repl[g.id] = ("const", g.fires(0))
            continue
        if g.id in bottom:
            out = forced_single_input(g, rho)
            if out.forced:
                repl[g.id] = ("const", int(out.kind is OutcomeKind.FORCED_ONE))
                continue
            if out.kind is OutcomeKind.SINGLE_INPUT:
                repl[g.id] = ("lit", input_ref(rank[out.index]), out.negated)
                continue
        weights: dict[str, int] = {}
        offset = 0
        for ref, w in g.weights:
            r = repl[ref]
            if r[0] == "const":
                offset += r[1] * w
            elif r[0] == "lit":
                if r[2]:
                    weights[r[1]] = weights.get(r[1], 0) - w
                    offset += w
                else:
                    weights[r[1]] = weights.get(r[1], 0) + w
            else:
                weights[r[1]] = weights.get(r[1], 0) + w
        new = g.rebased(g.id, weights.items(), offset)
        if new.kind is Kind.CONST:
            repl[g.id] = ("const", new.fires(0))
        else:
            kept.append(new)
            repl[g.id] = ("gate", g.id)
    m = len(free)
    r = repl[circuit.output]
    name = circuit.name
    if r[0] == "const":
        return Circuit(m, (Gate.const("out", r[1]),), "out", name)
    if r[0] == "lit":
        w = -1 if r[2] else 1
        return Circuit(m, (Gate.make("out", Kind.LTF, {r[1]: w}, 0 if r[2] else 1),), "out", name)
    return Circuit(m, tuple(_reachable(kept, circuit.output)), circuit.output, name)


def _reachable(gates: list[Gate], output: str) -> list[Gate]:
    by_id = {g.id: g for g in gates}
    need = {output}
    for g in reversed(gates):
        if g.id in need:
            need.update(ref for ref in g.refs if ref in by_id)
    return [g for g in gates if g.id in need]


def restricted_oracle_table(circuit: Circuit, rho: Restriction) -> np.ndarray:
    """Original circuit's outputs on every completion of rho (free var j = bit j)."""
    from .core import evaluate_batch

    return evaluate_batch(circuit, rho.completions())
