"""Chow parameters, exact LTF recognition, LTF enumeration and depth-2 signatures."""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import CapacityError, LinearThresholdGate, TruthTable, all_inputs, weighted_sums

MAX_CHOW_INPUTS = 20
MAX_LTF_INPUTS = 6
MAX_ENUM_INPUTS = 4


@dataclass(frozen=True)
class ChowVector:
    """2^n times (F^(empty), F^(1), ..., F^(n)) with F = 1 - 2f and chi_i = 1 - 2x_i."""

    n: int
    scaled: tuple[int, ...]

    def coefficients(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c, 1 << self.n) for c in self.scaled)


def chow_vector(table: TruthTable) -> ChowVector:
    n = table.num_inputs
    if n > MAX_CHOW_INPUTS:
        raise CapacityError(f"Chow vector needs n <= {MAX_CHOW_INPUTS}, got {n}")
    f = table.bits().astype(np.int64)
    sums = np.zeros(n + 1, dtype=np.int64)
    step = 1 << 16
    for lo in range(0, f.size, step):
        hi = min(f.size, lo + step)
        F = 1 - 2 * f[lo:hi]
        chi = 1 - 2 * all_inputs(n, lo, hi).astype(np.int64)
        sums[0] += F.sum()
        sums[1:] += F @ chi
    return ChowVector(n, tuple(int(c) for c in sums))


# --- exact feasibility ----------------------------------------------------------------------


def _simplex_phase1(A: list[list[Fraction]], b: list[Fraction]) -> tuple[list[Fraction] | None, list[Fraction]]:
    """Find x >= 0 with A x = b (b >= 0) by Phase I simplex with Bland's rule.

    Returns (x, y): x is a feasible point or None, y the final simplex
    multipliers.  When x is None, y satisfies y A <= 0 and y b > 0.
    """
    m, k = len(A), len(A[0])
    # tableau columns: k structural, m artificial, then rhs
    T = [list(A[i]) + [Fraction(int(i == j)) for j in range(m)] + [b[i]] for i in range(m)]
    # reduced-cost row for minimizing the sum of artificials
    z = [-sum(T[i][j] for i in range(m)) for j in range(k)] + [Fraction(0)] * m + [-sum(b)]
    basis = [k + i for i in range(m)]
    while True:
        enter = next((j for j in range(k + m) if z[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            if T[i][enter] > 0:
                ratio = T[i][-1] / T[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        piv = T[leave][enter]
        row = [v / piv for v in T[leave]]
        T[leave] = row
        for i in range(m):
            f = T[i][enter]
            if i != leave and f:
                T[i] = [a - f * c if c else a for a, c in zip(T[i], row)]
        f = z[enter]
        z = [a - f * c if c else a for a, c in zip(z, row)]
        basis[leave] = enter
    # artificial column j has unit cost, so its reduced cost is 1 - y_j
    y = [1 - z[k + j] for j in range(m)]
    if -z[-1] > 0:
        return None, y
    x = [Fraction(0)] * k
    for i, j in enumerate(basis):
        if j < k:
            x[j] = T[i][-1]
    return x, y


@dataclass(frozen=True)
class LtfDecision:
    """Either a realizing gate or a Farkas certificate.

    The certificate maps input rows to nonnegative multipliers with equal
    total on true and false rows and equal weighted sums of the row
    vectors.  No LTF can exist then: summing w.a >= t over the true rows
    and w.a <= t-1 over the false rows gives a contradiction.
    """

    gate: LinearThresholdGate | None
    certificate: dict[int, Fraction] | None = None


def _rows(n: int) -> list[tuple[int, ...]]:
    return [tuple((r >> i) & 1 for i in range(n)) for r in range(1 << n)]


def _unate_certificate(bits: Sequence[int], n: int) -> dict[int, Fraction] | None:
    """Four-point certificate when some variable is neither monotone up nor down."""
    for i in range(n):
        up = down = None
        for r in range(1 << n):
            if r >> i & 1:
                continue
            lo, hi = bits[r], bits[r | 1 << i]
            if lo < hi and up is None:
                up = r
            elif lo > hi and down is None:
                down = r
            if up is not None and down is not None:
                # true: down, up|e_i ; false: down|e_i, up ; both sums are down + up + e_i
                one = Fraction(1)
                return {down: one, up | 1 << i: one, down | 1 << i: one, up: one}
    return None


def check_certificate(bits: Sequence[int], n: int, cert: dict[int, Fraction]) -> bool:
    rows = _rows(n)
    if not cert or any(v < 0 for v in cert.values()) or sum(cert.values()) <= 0:
        return False
    true_mass = sum(v for r, v in cert.items() if bits[r])
    false_mass = sum(v for r, v in cert.items() if not bits[r])
    if true_mass != false_mass:
        return False
    for i in range(n):
        if sum(v * rows[r][i] * (1 if bits[r] else -1) for r, v in cert.items()) != 0:
            return False
    return True


def _integer_gate(z: list[Fraction], n: int) -> LinearThresholdGate:
    """From w.a - theta >= 1 (true) / <= -1 (false) to integer [W.a >= t]."""
    D = math.lcm(*(v.denominator for v in z))
    W = [int(v * D) for v in z[:n]]
    theta = int(z[n] * D)
    t = theta + 1
    g = math.gcd(*W) if any(W) else 0
    if g > 1:
        W = [w // g for w in W]
        t = -(-t // g)
    if not any(W):
        t = 0 if t <= 0 else 1
    return LinearThresholdGate(tuple(W), t)


def decide_ltf(table: TruthTable) -> LtfDecision:
    """Exact decision: realizing integer gate or an infeasibility certificate."""
    n = table.num_inputs
    if n > MAX_LTF_INPUTS:
        raise CapacityError(f"exact LTF test needs n <= {MAX_LTF_INPUTS}, got {n}")
    bits = [int(b) for b in table.bits()]
    cert = _unate_certificate(bits, n)
    if cert is not None:
        return LtfDecision(None, cert)
    rows = _rows(n)
    # M z >= 1 with z = (w, theta): sign * (w.a - theta) >= 1.  Write z = p - u*1
    # with p, u >= 0 and subtract a surplus per row to get equalities.
    M = [[Fraction(s * a) for a in row] + [Fraction(-s)] for row, s in
         ((row, 1 if bits[r] else -1) for r, row in enumerate(rows))]
    m = len(M)
    A = [M[i] + [-sum(M[i])] + [Fraction(-int(i == j)) for j in range(m)] for i in range(m)]
    x, y = _simplex_phase1(A, [Fraction(1)] * m)
    if x is None:
        cert = {r: v for r, v in enumerate(y) if v}
        if not check_certificate(bits, n, cert):
            raise AssertionError("simplex produced an invalid infeasibility certificate")
        return LtfDecision(None, cert)
    u = x[n + 1]
    z = [x[j] - u for j in range(n + 1)]
    gate = _integer_gate(z, n)
    if gate.table() != table:
        raise AssertionError("simplex produced a gate that does not realize the table")
    return LtfDecision(gate)


def is_ltf(table: TruthTable) -> LinearThresholdGate | None:
    return decide_ltf(table).gate


def enumerate_ltfs(n: int, order: Sequence[int] | None = None) -> list[tuple[TruthTable, LinearThresholdGate]]:
    """Every LTF on n declared inputs with a witness, sorted by table value.

    ``order`` permutes the sweep over the 2^(2^n) tables; the result is the same.
    """
    if not 0 <= n <= MAX_ENUM_INPUTS:
        raise CapacityError(f"enumeration needs 0 <= n <= {MAX_ENUM_INPUTS}, got {n}")
    sweep = range(1 << (1 << n)) if order is None else order
    found = {}
    for value in sweep:
        table = TruthTable.from_int(n, value)
        gate = is_ltf(table)
        if gate is not None:
            found[value] = (table, gate)
    return [found[v] for v in sorted(found)]


# --- depth-2 signature -----------------------------------------------------------------------


@dataclass(frozen=True)
class Depth2Signature:
    s: int
    cardinality: int
    sigma: tuple[int, ...]


def bottom_image(bottoms: Sequence, n: int) -> np.ndarray:
    """Distinct rows of x -> (f_1(x), ..., f_s(x)) over all x in {0,1}^n, as (k, s) uint8."""
    if n > 16 or len(bottoms) > 16:
        raise CapacityError(f"signature needs n <= 16 and s <= 16, got n={n}, s={len(bottoms)}")
    x = all_inputs(n)
    outs = np.stack([np.asarray(_batch(f)(x), dtype=np.uint8) for f in bottoms], axis=1)
    return np.unique(outs, axis=0)


def _top_batch(top, s: int) -> Callable[[np.ndarray], np.ndarray]:
    """Batch evaluator for a top function on s inputs: an LTF, or any truth table (for controls)."""
    if isinstance(top, TruthTable):
        if top.num_inputs != s:
            raise ValueError(f"top table reads {top.num_inputs} inputs, got {s} bottom gates")
        bits = top.bits()
        place = np.left_shift(np.ones(s, dtype=np.int64), np.arange(s))
        return lambda y: bits[y.astype(np.int64) @ place]
    if top.n != s:
        raise ValueError(f"top gate reads {top.n} inputs, got {s} bottom gates")
    return top.evaluate_batch


def depth2_signature(top: LinearThresholdGate | TruthTable, bottoms: Sequence, n: int) -> Depth2Signature:
    """(|S(g)|, Sigma(g)) where S(g) is the set of image points accepted by ``top``."""
    top_fn = _top_batch(top, len(bottoms))
    image = bottom_image(bottoms, n)
    accepted = image[top_fn(image).astype(bool)]
    return Depth2Signature(len(bottoms), len(accepted), tuple(int(v) for v in accepted.sum(axis=0, dtype=np.int64)))


def compose(top: LinearThresholdGate | TruthTable, bottoms: Sequence, n: int) -> TruthTable:
    x = all_inputs(n)
    ys = np.stack([np.asarray(_batch(f)(x), dtype=np.uint8) for f in bottoms], axis=1)
    return TruthTable.from_bits(_top_batch(top, len(bottoms))(ys))


def _batch(f) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, LinearThresholdGate):
        return lambda x: f.decide(weighted_sums(x[:, : f.n], f.weights))
    if hasattr(f, "evaluate_batch"):
        return f.evaluate_batch
    return f
