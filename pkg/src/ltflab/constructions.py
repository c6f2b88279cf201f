"""Andreev's function, its four circuit realizations, and the PARITY approximator.

Input layout for A_n with n = 2 * 2^k: positions 0..2^k-1 hold the
multiplexed bits x, then the k parity blocks of the address string a
follow in order.  When k does not divide 2^k the blocks differ in size
by at most one (earlier blocks are larger).
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .core import (
    CapacityError,
    Circuit,
    Gate,
    Kind,
    StructuralError,
    eval_circuit,
    input_ref,
)

# --- multiplexer and A_n -----------------------------------------------------


def address(a: Sequence[int]) -> int:
    """0-based position selected by address bits a (a[0] most significant).

    The 1-based ``bin(a)`` of the multiplexer is this value plus one, so the
    all-zero address selects x_1.
    """
    v = 0
    for bit in a:
        v = (v << 1) | (int(bit) & 1)
    return v


def multiplexer_eval(x: Sequence[int], a: Sequence[int]) -> int:
    if len(x) != 1 << len(a):
        raise ValueError(f"multiplexer needs |x| = 2^|a|; got |x|={len(x)}, |a|={len(a)}")
    return int(x[address(a)])


@dataclass(frozen=True)
class AndreevLayout:
    n: int
    k: int
    blocks: tuple[tuple[int, ...], ...]  # input positions of each parity block

    @property
    def x_len(self) -> int:
        return 1 << self.k

    def x_pos(self, v: int) -> int:
        return v


def andreev_layout(n: int) -> AndreevLayout:
    k = n.bit_length() - 2
    if n < 4 or n != 2 << k:
        raise ValueError(f"Andreev's function needs n = 2 * 2^k with k >= 1, got {n}")
    m = 1 << k
    q, rem = divmod(m, k)
    blocks, start = [], m
    for i in range(k):
        size = q + (1 if i < rem else 0)
        blocks.append(tuple(range(start, start + size)))
        start += size
    return AndreevLayout(n, k, tuple(blocks))


def andreev_eval(n: int, bits: Sequence[int]) -> int:
    lay = andreev_layout(n)
    if len(bits) != n:
        raise ValueError(f"expected {n} input bits, got {len(bits)}")
    z = [sum(int(bits[j]) for j in blk) % 2 for blk in lay.blocks]
    return multiplexer_eval(bits[: lay.x_len], z)


def andreev_batch(n: int, bits: np.ndarray) -> np.ndarray:
    """Vectorized A_n over the rows of a (rows, n) bit matrix."""
    lay = andreev_layout(n)
    bits = np.asarray(bits, dtype=np.uint8)
    addr = np.zeros(bits.shape[0], dtype=np.int64)
    for blk in lay.blocks:
        addr = (addr << 1) | (bits[:, list(blk)].sum(axis=1, dtype=np.int64) & 1)
    return bits[np.arange(bits.shape[0]), addr]


def parity_batch(bits: np.ndarray) -> np.ndarray:
    return (np.asarray(bits, dtype=np.uint8).sum(axis=1) & 1).astype(np.uint8)


def majority_batch(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    return (bits.sum(axis=1) >= -(-bits.shape[1] // 2)).astype(np.uint8)


# --- shared gadget -------------------------------------------------------------


def ladder(prefix: str, refs: Sequence[str]) -> list[Gate]:
    """Threshold-at-least-j gates L_1..L_m over ``refs``."""
    return [Gate.make(f"{prefix}_{j}", Kind.LTF, {r: 1 for r in refs}, j) for j in range(1, len(refs) + 1)]


def parity_from_ladder(ladder_gates: Sequence[Gate]) -> dict[str, int]:
    """Weights w with parity = sum_j w_j L_j, namely w_j = (-1)^(j+1)."""
    return {g.id: (1 if j % 2 else -1) for j, g in enumerate(ladder_gates, 1)}


def signed_parity_from_ladder(ladder_gates: Sequence[Gate]) -> tuple[int, dict[str, int]]:
    """(offset, weights) with offset + sum_j w_j L_j = (-1)^parity in {-1, +1}."""
    return 1, {g.id: 2 * (-1) ** j for j, g in enumerate(ladder_gates, 1)}


# --- PARITY approximation --------------------------------------------------------


def parity_approx_window(n: int, c: float) -> list[int]:
    """Even k with n/2 - c sqrt(n) <= k <= n/2 + c sqrt(n), clipped to [0, n]."""
    lo = max(0, math.ceil(n / 2 - c * math.sqrt(n)))
    hi = min(n, math.floor(n / 2 + c * math.sqrt(n)))
    return [k for k in range(lo, hi + 1) if k % 2 == 0]


def parity_approx_circuit(n: int, c: float = 2) -> Circuit:
    """Two-layer circuit agreeing with PARITY when |sum x - n/2| <= c sqrt(n).

    Bottom gates are L_k and L_{k+1} for each even k in the window, so
    sum_k (L_k - L_{k+1}) indicates "weight is even and in the window".
    The top gate fires when that indicator is 0, i.e. it is
    [sum_k (L_{k+1} - L_k) >= 0].
    """
    if n < 4:
        raise ValueError("parity approximator needs n >= 4")
    xs = [input_ref(j) for j in range(n)]
    gates, top = [], {}
    for k in parity_approx_window(n, c):
        for kk, sign in ((k, -1), (k + 1, 1)):
            g = Gate.make(f"L{kk}", Kind.LTF, {r: 1 for r in xs}, kk)
            gates.append(g)
            top[g.id] = sign
    gates.append(Gate.make("top", Kind.LTF, top, 0))
    return Circuit(n, tuple(gates), "top", f"parity_approx_n{n}")


def symmetric_agreement(circuit: Circuit, target) -> Fraction:
    """Exact agreement with a symmetric target, by binomial summation.

    The circuit must itself be symmetric; it is evaluated once per Hamming
    weight.  ``target`` maps a weight to the target's output.
    """
    n = circuit.num_inputs
    good = 0
    for w in range(n + 1):
        if eval_circuit(circuit, [1] * w + [0] * (n - w)) == target(w):
            good += comb(n, w)
    return Fraction(good, 1 << n)


# --- Andreev circuits ---------------------------------------------------------


def _literal_terms(lay: AndreevLayout, ladders, v: int):
    """Weights and constant of sum_i [z_i = v_i] in terms of ladder outputs."""
    weights: dict[str, int] = {}
    const = 0
    for i, lad in enumerate(ladders):
        vi = (v >> (lay.k - 1 - i)) & 1
        sign = 1 if vi else -1
        const += 0 if vi else 1
        for gid, w in parity_from_ladder(lad).items():
            weights[gid] = sign * w
    return weights, const


def andreev_tc03_circuit(n: int) -> Circuit:
    """Depth-3 circuit of n + 1 unit-weight threshold gates computing A_n.

    Layer 1 holds the ladders L_j of every parity block.  Layer 2 has one
    AND per address v over x_v and the k literals [z_i = v_i], each literal
    written as a signed sum of its block's ladder.  Layer 3 is an OR.
    """
    lay = andreev_layout(n)
    ladders = [ladder(f"p{i}", [input_ref(j) for j in blk]) for i, blk in enumerate(lay.blocks)]
    gates = [g for lad in ladders for g in lad]
    ands = []
    for v in range(lay.x_len):
        weights, const = _literal_terms(lay, ladders, v)
        weights[input_ref(lay.x_pos(v))] = 1
        g = Gate.make(f"and{v}", Kind.LTF, weights, lay.k + 1 - const)
        gates.append(g)
        ands.append(g.id)
    gates.append(Gate.make("out", Kind.OR, {a: 1 for a in ands}))
    return Circuit(n, tuple(gates), "out", f"andreev_tc03_n{n}")


def andreev_parity_expansion(n: int) -> tuple[int, dict[tuple[int, ...], int]]:
    """Integer expansion A_n = [offset + sum_P c_P chi_P >= 0] over +-1 parities.

    chi_P = (-1)^(parity of the input positions in P).  Expanding
    AND_v = prod_j (1 - chi_j)/2 over the k+1 literals of address v and
    summing over v gives 2^(k+1) A_n exactly; the constant part cancels
    against the threshold 2^k.  Returns (offset, {sorted positions: c_P}).
    """
    lay = andreev_layout(n)
    coeffs: dict[tuple[int, ...], int] = {}
    offset = -(1 << lay.k)  # 2^(k+1) A - 2^k >= 0
    for v in range(lay.x_len):
        # factors: (1 - X_v) and (1 + s_i Z_i) with s_i = (-1)^{v_i}
        terms: dict[frozenset[int], int] = {frozenset(): 1}
        factors = [(frozenset({lay.x_pos(v)}), -1)]
        for i, blk in enumerate(lay.blocks):
            vi = (v >> (lay.k - 1 - i)) & 1
            factors.append((frozenset(blk), -1 if vi else 1))
        for mono, coef in factors:
            nxt: dict[frozenset[int], int] = {}
            for s, c in terms.items():
                nxt[s] = nxt.get(s, 0) + c
                key = s ^ mono
                nxt[key] = nxt.get(key, 0) + c * coef
            terms = nxt
        for s, c in terms.items():
            if not s:
                offset += c
            else:
                key = tuple(sorted(s))
                coeffs[key] = coeffs.get(key, 0) + c
    return offset, {p: c for p, c in coeffs.items() if c}


def andreev_ltf2_circuit(n: int, max_gates: int = 200_000) -> Circuit:
    """Depth-2 threshold circuit for A_n.

    Each parity chi_P of the Fourier expansion becomes a ladder over P whose
    signed sum 1 + sum_j 2(-1)^j L_j equals chi_P; all ladders feed a single
    top gate with integer weights.
    """
    offset, coeffs = andreev_parity_expansion(n)
    total = sum(len(p) for p in coeffs)
    if total + 1 > max_gates:
        raise CapacityError(f"ltf2 circuit for n={n} needs {total + 1} gates (bound {max_gates})")
    gates: list[Gate] = []
    top: dict[str, int] = {}
    const = offset
    for idx, (p, c) in enumerate(sorted(coeffs.items())):
        lad = ladder(f"q{idx}", [input_ref(j) for j in p])
        gates.extend(lad)
        base, ws = signed_parity_from_ladder(lad)
        const += c * base
        for gid, w in ws.items():
            top[gid] = c * w
    gates.append(Gate.make("out", Kind.LTF, top, -const))
    return Circuit(n, tuple(gates), "out", f"andreev_ltf2_n{n}")


# --- parity decision tree -----------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    value: int


@dataclass(frozen=True)
class Query:
    """Branch on the parity of ``subset``: ``zero`` if even, ``one`` if odd."""

    subset: frozenset[int]
    zero: "Leaf | Query"
    one: "Leaf | Query"


@dataclass(frozen=True)
class ParityDecisionTree:
    n: int
    root: Leaf | Query

    @property
    def depth(self) -> int:
        def d(node):
            return 0 if isinstance(node, Leaf) else 1 + max(d(node.zero), d(node.one))
        return d(self.root)

    def evaluate(self, bits: Sequence[int]) -> int:
        node = self.root
        while isinstance(node, Query):
            node = node.one if sum(int(bits[j]) for j in node.subset) % 2 else node.zero
        return node.value

    def evaluate_batch(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        out = np.zeros(bits.shape[0], dtype=np.uint8)

        def walk(node, rows):
            if rows.size == 0:
                return
            if isinstance(node, Leaf):
                out[rows] = node.value
                return
            par = bits[np.ix_(rows, sorted(node.subset))].sum(axis=1) & 1
            walk(node.zero, rows[par == 0])
            walk(node.one, rows[par == 1])

        walk(self.root, np.arange(bits.shape[0]))
        return out

    def path(self, bits: Sequence[int]) -> list[frozenset[int]]:
        node, seen = self.root, []
        while isinstance(node, Query):
            seen.append(node.subset)
            node = node.one if sum(int(bits[j]) for j in node.subset) % 2 else node.zero
        return seen


def andreev_pdt(n: int) -> ParityDecisionTree:
    """Query the k block parities in order, then the selected x-bit."""
    lay = andreev_layout(n)

    def build(i: int, v: int):
        if i == lay.k:
            return Query(frozenset({lay.x_pos(v)}), Leaf(0), Leaf(1))
        return Query(frozenset(lay.blocks[i]), build(i + 1, v << 1), build(i + 1, (v << 1) | 1))

    return ParityDecisionTree(n, build(0, 0))


# --- MOD3 of MOD2 ----------------------------------------------------------------

_INV2_MOD3 = 2


class F3Poly:
    """Multilinear polynomial over F_3 in +-1 variables y_j (so y_j^2 = 1)."""

    def __init__(self, terms: dict[frozenset[int], int] | None = None):
        self.terms = {m: c % 3 for m, c in (terms or {}).items() if c % 3}

    @classmethod
    def const(cls, c: int) -> "F3Poly":
        return cls({frozenset(): c})

    @classmethod
    def monomial(cls, variables, c: int = 1) -> "F3Poly":
        return cls({frozenset(variables): c})

    def __add__(self, other: "F3Poly") -> "F3Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return F3Poly(out)

    def __mul__(self, other: "F3Poly | int") -> "F3Poly":
        if isinstance(other, int):
            return F3Poly({m: c * other for m, c in self.terms.items()})
        out: dict[frozenset[int], int] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 ^ m2
                out[m] = out.get(m, 0) + c1 * c2
        return F3Poly(out)

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.terms)


def andreev_f3_polynomial(n: int) -> F3Poly:
    """p(y) = A_n - 1 over F_3, with y_j = (-1)^{bit j}; zero exactly when A_n = 1.

    A_n = sum_v x_v prod_i [z_i = v_i], x_v = (1 - y_v)/2 and
    [z_i = v_i] = (1 + (-1)^{v_i} prod_{j in block i} y_j)/2.
    """
    lay = andreev_layout(n)
    p = F3Poly.const(-1)
    for v in range(lay.x_len):
        term = (F3Poly.const(1) + F3Poly.monomial({lay.x_pos(v)}, -1)) * _INV2_MOD3
        for i, blk in enumerate(lay.blocks):
            vi = (v >> (lay.k - 1 - i)) & 1
            term = term * ((F3Poly.const(1) + F3Poly.monomial(blk, -1 if vi else 1)) * _INV2_MOD3)
        p = p + term
    return p


def andreev_mod3mod2(n: int) -> Circuit:
    """MOD3 (accepting residue 0) over one MOD2 gate per monomial of p.

    Mod 3 a monomial prod_{j in M} y_j equals 1 + PARITY_M, so
    c * monomial = c + c * PARITY_M; the constants collect into a single
    CONST-1 input of the top gate.
    """
    poly = andreev_f3_polynomial(n)
    gates: list[Gate] = []
    top: dict[str, int] = {}
    const = 0
    for idx, (mono, c) in enumerate(sorted(poly.terms.items(), key=lambda mc: (len(mc[0]), sorted(mc[0])))):
        const += c
        if mono:
            g = Gate.make(f"m{idx}", Kind.MOD2, {input_ref(j): 1 for j in sorted(mono)}, accept=[1])
            gates.append(g)
            top[g.id] = c
    if const % 3:
        gates.append(Gate.const("one", 1))
        top["one"] = const % 3
    gates.append(Gate.make("out", Kind.MOD3, top, accept=[0]))
    return Circuit(n, tuple(gates), "out", f"andreev_mod3mod2_n{n}")


def check_depth2_ltf(circuit: Circuit) -> None:
    """Raise unless the circuit is threshold gates in exactly two layers."""
    depths = circuit.depths()
    for g in circuit.gates:
        if g.is_modular or g.kind is Kind.CONST:
            raise StructuralError(f"gate {g.id} is not a threshold gate")
        if depths[g.id] > 2:
            raise StructuralError(f"gate {g.id} sits at layer {depths[g.id]}")
    if depths[circuit.output] != 2:
        raise StructuralError("output is not at layer 2")
