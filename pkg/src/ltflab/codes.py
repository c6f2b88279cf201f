"""GF(2^r) arithmetic, the powering small-bias matrix, and the functions built on it."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .constructions import address
from .core import CapacityError

# Irreducible moduli, bit d is the coefficient of X^d.  Checked on construction.
IRREDUCIBLE = {
    2: 0x7, 3: 0xB, 4: 0x13, 5: 0x25, 6: 0x43, 7: 0x83, 8: 0x11B, 9: 0x211, 10: 0x409,
    11: 0x805, 12: 0x1053, 13: 0x201B, 14: 0x4443, 15: 0x8003, 16: 0x1100B,
}
MAX_COLUMN_R = 12  # materialize whole columns only up to 2^24 rows
MAX_EXHAUSTIVE_T = 20


def clmul(a: int, b: int) -> int:
    """Carryless product of two GF(2) polynomials."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def is_irreducible(m: int) -> bool:
    """Trial division by every polynomial of degree 1..deg(m)/2."""
    d = m.bit_length() - 1
    if d < 1:
        return False
    for q in range(2, 1 << (d // 2 + 1)):
        if poly_mod(m, q) == 0:
            return False
    return True


@dataclass(frozen=True)
class BinaryField:
    r: int
    modulus: int = field(default=0)

    def __post_init__(self):
        if not 2 <= self.r <= 16:
            raise ValueError(f"field degree must lie in 2..16, got {self.r}")
        mod = self.modulus or IRREDUCIBLE[self.r]
        if mod.bit_length() - 1 != self.r or not is_irreducible(mod):
            raise ValueError(f"modulus {mod:#x} is not an irreducible polynomial of degree {self.r}")
        object.__setattr__(self, "modulus", mod)

    @property
    def order(self) -> int:
        return 1 << self.r

    def add(self, a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        return poly_mod(clmul(a, b), self.modulus)

    def pow(self, a: int, e: int) -> int:
        out = 1
        while e:
            if e & 1:
                out = self.mul(out, a)
            a = self.mul(a, a)
            e >>= 1
        return out

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return self.pow(a, self.order - 2)

    def powers(self, a: int, t: int) -> list[int]:
        out, cur = [], 1
        for _ in range(t):
            out.append(cur)
            cur = self.mul(cur, a)
        return out


def _parity(v: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(v) & 1).astype(np.uint8)


@dataclass(frozen=True)
class BiasedMatrix:
    """m = 2^(2r) rows indexed alpha * 2^r + beta; entry (row, i) = <alpha^i, beta> over GF(2).

    Rows are computed on demand; :attr:`columns` materializes the whole
    matrix column-wise for r <= 12.
    """

    t: int
    r: int

    def __post_init__(self):
        if self.t < 1:
            raise ValueError(f"need t >= 1, got {self.t}")
        if not 2 <= self.r <= 16:
            raise ValueError(f"field degree must lie in 2..16, got {self.r}")

    @cached_property
    def field(self) -> BinaryField:
        return BinaryField(self.r)

    @property
    def m(self) -> int:
        return 1 << (2 * self.r)

    @property
    def epsilon(self) -> Fraction:
        """Declared bias bound (t - 1) / 2^r."""
        return Fraction(self.t - 1, 1 << self.r)

    @cached_property
    def power_table(self) -> np.ndarray:
        """(2^r, t) table of alpha^i."""
        return np.array([self.field.powers(a, self.t) for a in range(self.field.order)], dtype=np.int64)

    def split(self, row: int) -> tuple[int, int]:
        if not 0 <= row < self.m:
            raise IndexError(f"row {row} outside 0..{self.m - 1}")
        return row >> self.r, row & ((1 << self.r) - 1)

    def row(self, row: int) -> tuple[int, ...]:
        alpha, beta = self.split(row)
        return tuple((p & beta).bit_count() & 1 for p in self.field.powers(alpha, self.t))

    def codeword_bit(self, row: int, x: Sequence[int]) -> int:
        """(A x)[row] without forming the row: parity(beta & sum_{x_i=1} alpha^i)."""
        if len(x) != self.t:
            raise ValueError(f"x has length {len(x)}, matrix has {self.t} columns")
        alpha, beta = self.split(row)
        acc = 0
        for xi, p in zip(x, self.field.powers(alpha, self.t)):
            if xi:
                acc ^= p
        return (acc & beta).bit_count() & 1

    @cached_property
    def columns(self) -> tuple[int, ...]:
        """Column i as a Python int whose bit ``row`` is entry (row, i)."""
        if self.r > MAX_COLUMN_R:
            raise CapacityError(f"materializing columns needs r <= {MAX_COLUMN_R}, got {self.r}")
        rows = np.arange(self.m, dtype=np.int64)
        alpha, beta = rows >> self.r, rows & ((1 << self.r) - 1)
        cols = []
        for i in range(self.t):
            bits = _parity(self.power_table[alpha, i] & beta)
            cols.append(int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little"))
        return tuple(cols)

    def bits(self) -> np.ndarray:
        """Dense (m, t) uint8 matrix."""
        if self.m * self.t > 1 << 26:
            raise CapacityError(f"dense matrix of {self.m} x {self.t} is too large")
        rows = np.arange(self.m, dtype=np.int64)
        alpha, beta = rows >> self.r, rows & ((1 << self.r) - 1)
        return _parity(self.power_table[alpha] & beta[:, None])

    def codeword(self, x: Sequence[int]) -> int:
        """A x as an int whose bit ``row`` is (A x)[row]."""
        acc = 0
        for xi, col in zip(x, self.columns):
            if xi:
                acc ^= col
        return acc

    def export(self) -> str:
        """Header line, then one hex line per row (column 0 is the high bit of the first digit)."""
        width = (self.t + 3) // 4
        dense = self.bits()
        pad = np.zeros((self.m, 4 * width - self.t), dtype=np.uint8)
        nibbles = np.concatenate([dense, pad], axis=1).reshape(self.m, width, 4)
        digits = nibbles @ np.array([8, 4, 2, 1], dtype=np.uint8)
        lines = [f"biased t={self.t} r={self.r} m={self.m} poly={self.field.modulus:x}"]
        lines += ["".join("0123456789abcdef"[d] for d in row) for row in digits]
        return "\n".join(lines) + "\n"


def build_biased_matrix(t: int, r: int) -> BiasedMatrix:
    return BiasedMatrix(t, r)


@lru_cache(maxsize=32)
def _cached_matrix(t: int, r: int) -> BiasedMatrix:
    return BiasedMatrix(t, r)


def _gray_codewords(columns: Sequence[int]):
    """Yield (v, A v) for every nonzero v, walking a Gray code."""
    acc = 0
    for step in range(1, 1 << len(columns)):
        bit = (step & -step).bit_length() - 1
        acc ^= columns[bit]
        yield step ^ (step >> 1), acc


def bias_of(matrix: BiasedMatrix | np.ndarray, mode: str = "exhaustive", samples: int = 1000,
            seed: int = 0) -> Fraction:
    """max over nonzero v of |Pr_row[<row, v> = 1] - 1/2|, exactly.

    ``matrix`` may also be a dense (m, t) 0/1 array.
    """
    if isinstance(matrix, BiasedMatrix):
        columns, m, t = matrix.columns, matrix.m, matrix.t
    else:
        dense = np.asarray(matrix, dtype=np.uint8)
        m, t = dense.shape
        columns = tuple(int.from_bytes(np.packbits(dense[:, i], bitorder="little").tobytes(), "little")
                        for i in range(t))
    half = Fraction(1, 2)
    if mode == "exhaustive":
        if t > MAX_EXHAUSTIVE_T:
            raise CapacityError(f"exhaustive bias needs t <= {MAX_EXHAUSTIVE_T}, got {t}")
        worst = max(abs(2 * w.bit_count() - m) for _, w in _gray_codewords(columns))
        return Fraction(worst, 2 * m)
    if mode != "sampled":
        raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {mode!r}")
    rng = np.random.default_rng(seed)
    worst = Fraction(0)
    for v in rng.integers(1, 1 << t, size=samples).tolist():
        acc = 0
        for i in range(t):
            if v >> i & 1:
                acc ^= columns[i]
        worst = max(worst, abs(Fraction(acc.bit_count(), m) - half))
    return worst


def F_eval(matrix: BiasedMatrix, z: Sequence[int], x: Sequence[int]) -> int:
    """(A x)[bin(z)]: the codeword bit addressed by z, computed from that row alone."""
    if len(z) != 2 * matrix.r:
        raise ValueError(f"z has length {len(z)}, expected {2 * matrix.r}")
    if len(x) != matrix.t:
        raise ValueError(f"x has length {len(x)}, matrix has {matrix.t} columns")
    return matrix.codeword_bit(address(z), x)


def block_parities(a: Sequence[int], k: int) -> list[int]:
    """z_i = parity of the i-th of k contiguous blocks of a."""
    size = len(a) // k
    return [sum(a[i * size:(i + 1) * size]) & 1 for i in range(k)]


def B_eval(n: int, k: int, x: Sequence[int], a: Sequence[int]) -> int:
    """Multiplex the codeword A x with the block parities of a, using an (n, k/2) matrix."""
    if k < 1 or n % k:
        raise ValueError(f"k must divide n, got n={n}, k={k}")
    if k % 2:
        raise ValueError(f"k must be even, got {k}")
    if len(x) != n or len(a) != n:
        raise ValueError(f"x and a must both have length {n}")
    return F_eval(_cached_matrix(n, k // 2), block_parities(a, k), x)


def correlation_profile(matrix: BiasedMatrix, T: Sequence[int] | int, theta: float, mode: str = "exhaustive",
                        samples: int = 1000, seed: int = 0) -> float:
    """Number of nonzero x with |rh(T, A x) - 1/2| > theta.

    rh is the fraction of agreeing positions.  Exhaustive mode returns the exact
    count; sampled mode scales the sampled fraction by 2^t - 1.
    """
    m = matrix.m
    if isinstance(T, int):
        target = T
    else:
        if len(T) != m:
            raise ValueError(f"T has length {len(T)}, expected {m}")
        target = int.from_bytes(np.packbits(np.asarray(T, dtype=np.uint8), bitorder="little").tobytes(), "little")
    # |agree/m - 1/2| > theta  <=>  |2 * agree - m| > 2 * theta * m
    bound = 2 * Fraction(theta) * m

    def exceeds(word: int) -> bool:
        agree = m - (word ^ target).bit_count()
        return abs(2 * agree - m) > bound

    if mode == "exhaustive":
        if matrix.t > MAX_EXHAUSTIVE_T:
            raise CapacityError(f"exhaustive profile needs t <= {MAX_EXHAUSTIVE_T}, got {matrix.t}")
        return sum(exceeds(w) for _, w in _gray_codewords(matrix.columns))
    if mode != "sampled":
        raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {mode!r}")
    rng = np.random.default_rng(seed)
    xs = rng.integers(1, 1 << matrix.t, size=samples).tolist()
    hits = sum(exceeds(matrix.codeword([v >> i & 1 for i in range(matrix.t)])) for v in xs)
    return hits / samples * ((1 << matrix.t) - 1)
