"""Gates, circuits, exact evaluation and bit-parallel truth tables.

Every gate computes a predicate of one integer weighted sum of its inputs:
threshold kinds (LTF, MAJ, AND, OR, CONST) test ``sum >= threshold`` and
modular kinds (MOD2, MOD3) test ``sum mod p in accept``.  Inputs are 0/1.
"""
from __future__ import annotations

import enum
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

MAX_TABLE_INPUTS = 28
_INT64_SAFE = 1 << 62
_LE_U64 = np.dtype("<u8")

_INPUT_REF = re.compile(r"x(\d+)\Z")
_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*\Z")


class StructuralError(ValueError):
    """Malformed gate or circuit (bad reference, ordering, kind parameters)."""


class CapacityError(ValueError):
    """Requested work exceeds a configured size bound."""


class Kind(str, enum.Enum):
    LTF = "LTF"
    MAJ = "MAJ"
    MOD2 = "MOD2"
    MOD3 = "MOD3"
    AND = "AND"
    OR = "OR"
    CONST = "CONST"

    @property
    def modulus(self) -> int | None:
        return {Kind.MOD2: 2, Kind.MOD3: 3}.get(self)


def input_ref(j: int) -> str:
    return f"x{j}"


def input_index(ref: str) -> int | None:
    """Index of a primary-input reference ``x<j>``, else None."""
    m = _INPUT_REF.match(ref)
    return int(m.group(1)) if m else None


def _bound(weights: Iterable[int], threshold: int = 0) -> int:
    return sum(abs(w) for w in weights) + abs(threshold)


def weighted_sums(bits: np.ndarray, weights: Sequence[int]) -> np.ndarray:
    """Row-wise ``bits @ weights`` with exact integer arithmetic.

    Uses int64 when the magnitude bound allows it and Python integers
    (object arrays) otherwise.
    """
    w = list(weights)
    if _bound(w) < _INT64_SAFE:
        return bits.astype(np.int64, copy=False) @ np.asarray(w, dtype=np.int64)
    return bits.astype(object) @ np.asarray(w, dtype=object)


@dataclass(frozen=True)
class LinearThresholdGate:
    """A standalone LTF over x_0..x_{n-1}: output ``[sum_i w_i x_i >= t]``.

    Weights are dense (index i is x_i); zeros mean "not connected".
    """

    weights: tuple[int, ...]
    threshold: int

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        object.__setattr__(self, "threshold", int(self.threshold))

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, w in enumerate(self.weights) if w)

    def __call__(self, assignment: Sequence[int]) -> int:
        return eval_gate(self, assignment)

    def decide(self, totals: np.ndarray) -> np.ndarray:
        return totals >= self.threshold

    def evaluate_batch(self, bits: np.ndarray) -> np.ndarray:
        return self.decide(weighted_sums(bits, self.weights)).astype(np.uint8)

    def table(self) -> "TruthTable":
        return truth_table(self.to_circuit())

    def to_gate(self, gid: str = "g0") -> "Gate":
        return Gate.make(gid, Kind.LTF, {input_ref(i): w for i, w in enumerate(self.weights)}, self.threshold)

    def to_circuit(self, name: str = "ltf") -> "Circuit":
        return Circuit(self.n, (self.to_gate(),), "g0", name)

    @classmethod
    def majority(cls, n: int) -> "LinearThresholdGate":
        return cls((1,) * n, -(-n // 2))


def eval_gate(gate: LinearThresholdGate, assignment: Sequence[int]) -> int:
    """``[sum w_i a_i >= t]`` in exact integer arithmetic."""
    if len(assignment) < len(gate.weights):
        raise StructuralError(
            f"assignment has {len(assignment)} bits, gate references {len(gate.weights)} inputs"
        )
    total = sum(w * int(a) for w, a in zip(gate.weights, assignment) if w)
    return int(total >= gate.threshold)


@dataclass(frozen=True)
class Gate:
    """A circuit node.  Build with :meth:`Gate.make`, which normalizes."""

    id: str
    kind: Kind
    weights: tuple[tuple[str, int], ...]
    threshold: int = 0
    accept: frozenset[int] = field(default_factory=frozenset)

    @classmethod
    def make(
        cls,
        gid: str,
        kind: Kind | str,
        weights: Mapping[str, int] | Iterable[tuple[str, int]] = (),
        threshold: int | None = None,
        accept: Iterable[int] | None = None,
    ) -> "Gate":
        kind = Kind(kind)
        if not _TOKEN.match(gid) or input_index(gid) is not None:
            raise StructuralError(f"invalid gate id {gid!r}")
        pairs = list(weights.items()) if isinstance(weights, Mapping) else list(weights)
        seen = set()
        edges = []
        for ref, w in pairs:
            if ref in seen:
                raise StructuralError(f"gate {gid}: duplicate input reference {ref}")
            seen.add(ref)
            if int(w) != 0:
                edges.append((ref, int(w)))
        fanin = len(edges)
        p = kind.modulus
        if kind in (Kind.MAJ, Kind.AND, Kind.OR):
            if any(w != 1 for _, w in edges):
                raise StructuralError(f"gate {gid}: {kind.value} requires unit weights")
            derived = {Kind.MAJ: -(-fanin // 2), Kind.AND: fanin, Kind.OR: 1}[kind]
            if threshold is not None and int(threshold) != derived:
                raise StructuralError(f"gate {gid}: {kind.value} threshold must be {derived}")
            threshold = derived
        elif kind is Kind.CONST:
            if edges:
                raise StructuralError(f"gate {gid}: CONST takes no inputs")
            if threshold is None:
                raise StructuralError(f"gate {gid}: CONST needs t=0 (one) or t=1 (zero)")
        elif p is not None:
            if accept is None:
                raise StructuralError(f"gate {gid}: {kind.value} needs an accept set")
            acc = frozenset(int(a) for a in accept)
            if not acc <= set(range(p)):
                raise StructuralError(f"gate {gid}: accept residues must lie in 0..{p - 1}")
            return cls(gid, kind, tuple(edges), 0, acc)
        elif threshold is None:
            raise StructuralError(f"gate {gid}: LTF needs a threshold")
        if accept is not None:
            raise StructuralError(f"gate {gid}: accept set only valid for MOD gates")
        return cls(gid, kind, tuple(edges), int(threshold), frozenset())

    @classmethod
    def const(cls, gid: str, value: int) -> "Gate":
        return cls.make(gid, Kind.CONST, (), 0 if value else 1)

    @property
    def refs(self) -> tuple[str, ...]:
        return tuple(r for r, _ in self.weights)

    @property
    def fanin(self) -> int:
        return len(self.weights)

    @property
    def is_modular(self) -> bool:
        return self.kind.modulus is not None

    def fires(self, total: int) -> int:
        p = self.kind.modulus
        if p is None:
            return int(total >= self.threshold)
        return int(total % p in self.accept)

    def decide(self, totals: np.ndarray) -> np.ndarray:
        p = self.kind.modulus
        if p is None:
            return totals >= self.threshold
        residues = totals % p
        out = np.zeros(residues.shape, dtype=bool)
        for a in self.accept:
            out |= residues == a
        return out

    def rebased(self, gid: str, weights: Iterable[tuple[str, int]], offset: int) -> "Gate":
        """Equivalent gate after part of the sum became the constant ``offset``.

        The new gate sees only ``weights``; threshold or accept-set absorbs
        the offset.  With no weights left the result is a CONST gate.
        """
        edges = [(r, w) for r, w in weights if w]
        if not edges:
            return Gate.const(gid, self.fires(offset))
        p = self.kind.modulus
        if p is None:
            return Gate.make(gid, Kind.LTF, edges, self.threshold - offset)
        return Gate.make(gid, self.kind, edges, accept={(a - offset) % p for a in self.accept})

    def format(self) -> str:
        parts = ["gate", self.id, self.kind.value]
        if self.kind in (Kind.LTF, Kind.CONST):
            parts.append(f"t={self.threshold}")
        if self.is_modular:
            parts.append("accept=" + ",".join(str(a) for a in sorted(self.accept)))
        if self.weights:
            parts.append("w=" + ",".join(f"{r}:{w}" for r, w in self.weights))
        return " ".join(parts)


@dataclass(frozen=True)
class Circuit:
    num_inputs: int
    gates: tuple[Gate, ...]
    output: str
    name: str = "circuit"

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not _TOKEN.match(self.name):
            raise StructuralError(f"invalid circuit name {self.name!r}")
        if self.num_inputs < 0:
            raise StructuralError("negative input count")
        seen: set[str] = set()
        for g in self.gates:
            if g.id in seen:
                raise StructuralError(f"duplicate gate id {g.id}")
            for ref in g.refs:
                j = input_index(ref)
                if j is None:
                    if ref not in seen:
                        raise StructuralError(f"gate {g.id} references undefined or later gate {ref}")
                elif j >= self.num_inputs:
                    raise StructuralError(f"gate {g.id} references input {ref} out of range")
            seen.add(g.id)
        if self.output not in seen:
            raise StructuralError(f"output gate {self.output} not defined")

    def gate(self, gid: str) -> Gate:
        for g in self.gates:
            if g.id == gid:
                return g
        raise KeyError(gid)

    def depths(self) -> dict[str, int]:
        """Layer of each gate: 1 + max layer of its gate inputs (inputs are 0)."""
        d: dict[str, int] = {}
        for g in self.gates:
            d[g.id] = 1 + max((d.get(r, 0) for r in g.refs), default=0) if g.kind is not Kind.CONST else 0
        return d

    @property
    def depth(self) -> int:
        return self.depths()[self.output]

    def bottom_gates(self) -> list[Gate]:
        """Non-constant gates whose inputs are all primary inputs."""
        return [
            g for g in self.gates
            if g.kind is not Kind.CONST and all(input_index(r) is not None for r in g.refs)
        ]

    def __call__(self, assignment: Sequence[int]) -> int:
        return eval_circuit(self, assignment)


def eval_circuit(circuit: Circuit, assignment: Sequence[int]) -> int:
    if len(assignment) != circuit.num_inputs:
        raise StructuralError(f"expected {circuit.num_inputs} input bits, got {len(assignment)}")
    values: dict[str, int] = {input_ref(j): int(b) for j, b in enumerate(assignment)}
    for g in circuit.gates:
        values[g.id] = g.fires(sum(w * values[r] for r, w in g.weights))
    return values[circuit.output]


def evaluate_batch(circuit: Circuit, bits: np.ndarray) -> np.ndarray:
    """Evaluate on every row of a (rows, num_inputs) 0/1 matrix."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 2 or bits.shape[1] != circuit.num_inputs:
        raise StructuralError(f"expected a (rows, {circuit.num_inputs}) bit matrix")
    rows = bits.shape[0]
    values = {input_ref(j): bits[:, j] for j in range(circuit.num_inputs)}
    for g in circuit.gates:
        big = _bound((w for _, w in g.weights), g.threshold) >= _INT64_SAFE
        total = np.zeros(rows, dtype=object if big else np.int64)
        for r, w in g.weights:
            total = total + values[r].astype(total.dtype) * w
        values[g.id] = g.decide(total).astype(np.uint8)
    return values[circuit.output]


def size_metrics(circuit: Circuit) -> tuple[int, int]:
    """(gate_count, wire_count); CONST gates are not counted."""
    live = [g for g in circuit.gates if g.kind is not Kind.CONST]
    return len(live), sum(g.fanin for g in live)


# --- truth tables -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TruthTable:
    """Packed output column; row i has x_j equal to bit j of i."""

    num_inputs: int
    packed: np.ndarray  # uint8, little bit order, 2^n bits (zero padded)

    def __post_init__(self):
        nbytes = max(1, (1 << self.num_inputs) // 8)
        if self.packed.dtype != np.uint8 or self.packed.shape != (nbytes,):
            raise StructuralError(f"table for {self.num_inputs} inputs needs {nbytes} packed bytes")
        if self.num_inputs < 3:
            mask = (1 << (1 << self.num_inputs)) - 1
            if int(self.packed[0]) & ~mask:
                raise StructuralError("padding bits must be zero")
        self.packed.setflags(write=False)

    @property
    def rows(self) -> int:
        return 1 << self.num_inputs

    @classmethod
    def from_bits(cls, bits: Sequence[int] | np.ndarray) -> "TruthTable":
        arr = np.asarray(bits, dtype=np.uint8).ravel()
        n = int(arr.size).bit_length() - 1
        if arr.size != 1 << n:
            raise StructuralError("table length must be a power of two")
        return cls(n, np.packbits(arr, bitorder="little"))

    @classmethod
    def from_function(cls, n: int, fn) -> "TruthTable":
        return cls.from_bits([fn([(i >> j) & 1 for j in range(n)]) for i in range(1 << n)])

    @classmethod
    def from_int(cls, n: int, value: int) -> "TruthTable":
        nbytes = max(1, (1 << n) // 8)
        return cls(n, np.frombuffer(value.to_bytes(nbytes, "little"), dtype=np.uint8).copy())

    def to_int(self) -> int:
        return int.from_bytes(self.packed.tobytes(), "little")

    def bits(self) -> np.ndarray:
        return np.unpackbits(self.packed, bitorder="little", count=self.rows)

    def __getitem__(self, row: int) -> int:
        return int(self.packed[row >> 3] >> (row & 7)) & 1

    def __eq__(self, other):
        if not isinstance(other, TruthTable):
            return NotImplemented
        return self.num_inputs == other.num_inputs and self.packed.tobytes() == other.packed.tobytes()

    def __hash__(self):
        return hash((self.num_inputs, self.packed.tobytes()))

    def __invert__(self) -> "TruthTable":
        return TruthTable.from_bits(1 - self.bits())

    def count_ones(self) -> int:
        return int(np.unpackbits(self.packed).sum())

    def to_hex(self) -> str:
        """Lowercase hex, row 0 first; each digit covers 4 rows, earliest row as its high bit."""
        b = self.bits()
        if b.size % 4:
            b = np.concatenate([b, np.zeros(4 - b.size % 4, dtype=np.uint8)])
        nib = b.reshape(-1, 4) @ np.array([8, 4, 2, 1])
        return "".join("0123456789abcdef"[v] for v in nib)

    @classmethod
    def from_hex(cls, n: int, text: str) -> "TruthTable":
        digits = [int(c, 16) for c in text.strip().lower()]
        if len(digits) != max(1, ((1 << n) + 3) // 4):
            raise StructuralError(f"hex table for {n} inputs has wrong length {len(digits)}")
        b = np.array([(d >> s) & 1 for d in digits for s in (3, 2, 1, 0)], dtype=np.uint8)
        if b[1 << n:].any():
            raise StructuralError("nonzero padding in hex table")
        return cls.from_bits(b[: 1 << n])


_LOW_PATTERNS = [
    np.uint64(int("".join("1" if (i >> j) & 1 else "0" for i in reversed(range(64))), 2)) for j in range(6)
]
_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def _input_words(j: int, block_bits: int, base: int, words: int) -> np.ndarray:
    if j < 6:
        return np.full(words, _LOW_PATTERNS[j], dtype=_LE_U64)
    if j < block_bits:
        idx = np.arange(words, dtype=np.int64)
        return np.where((idx >> (j - 6)) & 1, _ONES, np.uint64(0)).astype(_LE_U64)
    return np.full(words, _ONES if (base >> j) & 1 else 0, dtype=_LE_U64)


def _unpack(words: np.ndarray) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), bitorder="little")


def _pack(bools: np.ndarray) -> np.ndarray:
    return np.packbits(bools.astype(np.uint8), bitorder="little").view(_LE_U64)


def _gate_words(g: Gate, values: dict[str, np.ndarray], words: int) -> np.ndarray:
    if g.kind is Kind.CONST or not g.weights:
        return np.full(words, _ONES if g.fires(0) else 0, dtype=_LE_U64)
    # word-parallel paths: unit-weight threshold gates that reduce to OR/AND
    if not g.is_modular and all(w == 1 for _, w in g.weights):
        if g.threshold <= 0 or g.threshold > g.fanin:
            return np.full(words, _ONES if g.threshold <= 0 else 0, dtype=_LE_U64)
        if g.threshold == 1:
            acc = np.zeros(words, dtype=_LE_U64)
            for r in g.refs:
                acc |= values[r]
            return acc
        if g.threshold == g.fanin:
            acc = np.full(words, _ONES, dtype=_LE_U64)
            for r in g.refs:
                acc &= values[r]
            return acc
    if g.kind is Kind.MOD2:
        acc = np.zeros(words, dtype=_LE_U64)
        for r, w in g.weights:
            if w % 2:
                acc ^= values[r]
        if g.accept == frozenset({1}):
            return acc
        if g.accept == frozenset({0}):
            return ~acc
        return np.full(words, _ONES if g.accept else 0, dtype=_LE_U64)
    # blockwise: unpack, exact integer accumulation, repack
    big = _bound((w for _, w in g.weights), g.threshold) >= _INT64_SAFE
    total = np.zeros(words * 64, dtype=object if big else np.int64)
    for r, w in g.weights:
        total += _unpack(values[r]).astype(total.dtype) * w
    return _pack(g.decide(total))


def truth_table(circuit: Circuit, block_bits: int = 18) -> TruthTable:
    """Output column over all 2^n rows.

    Signals are carried as packed 64-bit words; AND/OR/MOD2 gates combine
    64 rows per word operation, arithmetic gates unpack one block at a time.
    """
    n = circuit.num_inputs
    if n > MAX_TABLE_INPUTS:
        raise CapacityError(f"truth table limited to {MAX_TABLE_INPUTS} inputs, got {n}")
    b = max(6, min(n, block_bits))
    words = 1 << (b - 6)
    chunks = []
    for base in range(0, 1 << n, 1 << b):
        values = {input_ref(j): _input_words(j, b, base, words) for j in range(n)}
        for g in circuit.gates:
            values[g.id] = _gate_words(g, values, words)
        chunks.append(values[circuit.output])
    out = np.concatenate(chunks).view(np.uint8)
    if n < 3:
        return TruthTable(n, np.array([int(out[0]) & ((1 << (1 << n)) - 1)], dtype=np.uint8))
    return TruthTable(n, out[: (1 << n) // 8].copy())


def pointwise_table(circuit: Circuit) -> TruthTable:
    """Reference table built row by row with :func:`eval_circuit`."""
    n = circuit.num_inputs
    return TruthTable.from_bits([eval_circuit(circuit, [(i >> j) & 1 for j in range(n)]) for i in range(1 << n)])


def all_inputs(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows start..stop-1 of the input enumeration as a (rows, n) bit matrix."""
    stop = (1 << n) if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.uint8)


# --- text format -------------------------------------------------------------


def serialize(circuit: Circuit) -> str:
    lines = [f"circuit {circuit.name}", f"inputs {circuit.num_inputs}"]
    lines += [g.format() for g in circuit.gates]
    lines.append(f"output {circuit.output}")
    return "\n".join(lines) + "\n"


def parse(text: str) -> Circuit:
    name = None
    n = None
    gates: list[Gate] = []
    output = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "circuit" and len(tok) == 2:
                name = tok[1]
            elif tok[0] == "inputs" and len(tok) == 2:
                n = int(tok[1])
            elif tok[0] == "output" and len(tok) == 2:
                output = tok[1]
            elif tok[0] == "gate" and len(tok) >= 3:
                opts: dict[str, str] = {}
                for item in tok[3:]:
                    key, sep, val = item.partition("=")
                    if not sep or key not in ("t", "accept", "w") or key in opts:
                        raise StructuralError(f"bad gate field {item!r}")
                    opts[key] = val
                weights = []
                if opts.get("w"):
                    for pair in opts["w"].split(","):
                        ref, _, w = pair.rpartition(":")
                        weights.append((ref, int(w)))
                accept = None
                if "accept" in opts:
                    accept = [int(a) for a in opts["accept"].split(",") if a]
                t = int(opts["t"]) if "t" in opts else None
                gates.append(Gate.make(tok[1], tok[2], weights, t, accept))
            else:
                raise StructuralError(f"unrecognized line {raw!r}")
        except (ValueError, KeyError) as exc:
            if isinstance(exc, StructuralError):
                raise StructuralError(f"line {lineno}: {exc}") from None
            raise StructuralError(f"line {lineno}: {exc}") from exc
    if name is None or n is None or output is None:
        raise StructuralError("missing circuit, inputs or output line")
    return Circuit(n, tuple(gates), output, name)
