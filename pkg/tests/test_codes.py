import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltflab.codes import (
    IRREDUCIBLE,
    B_eval,
    BinaryField,
    F_eval,
    bias_of,
    block_parities,
    build_biased_matrix,
    clmul,
    correlation_profile,
    is_irreducible,
)
from ltflab.core import CapacityError
from oracles import gf4_reference_table

PROFILE_C = 1  # recorded envelope: count <= PROFILE_C / eps


def test_irreducible_table():
    for r, m in IRREDUCIBLE.items():
        assert m.bit_length() - 1 == r and is_irreducible(m)
    assert not is_irreducible(0b101)  # X^2 + 1 = (X + 1)^2
    with pytest.raises(ValueError):
        BinaryField(4, 0b10101)
    with pytest.raises(ValueError):
        BinaryField(17)


def test_known_products():
    aes = BinaryField(8)
    assert aes.mul(0x57, 0x83) == 0xC1
    assert aes.mul(0x57, 0x13) == 0xFE
    assert clmul(0b11, 0b11) == 0b101


@pytest.mark.parametrize("r", range(2, 9))
def test_field_axioms(r):
    f = BinaryField(r)
    rng = np.random.default_rng(r)
    for a, b, c in rng.integers(0, f.order, size=(10_000, 3)).tolist():
        assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))
        assert f.mul(a, b ^ c) == f.mul(a, b) ^ f.mul(a, c)
        assert f.mul(a, b) == f.mul(b, a)
        if a:
            assert f.mul(a, f.inv(a)) == 1


def test_matrix_shape_and_rows():
    m = build_biased_matrix(5, 3)
    dense = m.bits()
    assert dense.shape == (64, 5) and m.m == 64 and m.m & (m.m - 1) == 0
    for row in (0, 1, 17, 63):
        assert tuple(dense[row]) == m.row(row)
    with pytest.raises(ValueError):
        build_biased_matrix(0, 3)
    with pytest.raises(ValueError):
        build_biased_matrix(3, 1)


def test_bias_examples():
    assert bias_of(build_biased_matrix(1, 3)) == 0
    assert bias_of(np.zeros((8, 2), dtype=np.uint8)) == Fraction(1, 2)
    for t, r in ((4, 4), (8, 6)):
        m = build_biased_matrix(t, r)
        b = bias_of(m)
        assert b <= m.epsilon == Fraction(t - 1, 2 ** r)
        # a nonzero polynomial of degree < t has at most t - 1 roots
        assert b <= Fraction(t - 1, 2 ** (r + 1))
        assert bias_of(m.bits()) == b
        assert bias_of(m, "sampled", samples=40, seed=1) <= b


def test_bias_capacity():
    with pytest.raises(CapacityError):
        bias_of(build_biased_matrix(21, 5))


def test_export_format():
    m = build_biased_matrix(4, 2)
    lines = m.export().splitlines()
    assert lines[0] == "biased t=4 r=2 m=16 poly=7"
    assert len(lines) == 17
    dense = m.bits()
    assert all(int(line, 16) == int("".join(map(str, row)), 2) for line, row in zip(lines[1:], dense))
    assert m.export() == build_biased_matrix(4, 2).export()


def test_f_eval_examples_and_linearity():
    m = build_biased_matrix(4, 4)
    zs = list(itertools.product((0, 1), repeat=8))
    assert all(F_eval(m, z, (0, 0, 0, 0)) == 0 for z in zs)
    rng = np.random.default_rng(0)
    for _ in range(200):
        x, y = rng.integers(0, 2, size=(2, 4)).tolist()
        z = zs[int(rng.integers(256))]
        xy = [a ^ b for a, b in zip(x, y)]
        assert F_eval(m, z, x) ^ F_eval(m, z, y) == F_eval(m, z, xy)
    with pytest.raises(ValueError):
        F_eval(m, zs[0][:7], (0, 0, 0, 0))


def test_code_distance_exhaustive():
    m = build_biased_matrix(4, 4)
    words = {x: m.codeword(x) for x in itertools.product((0, 1), repeat=4)}
    lo, hi = Fraction(1, 2) - m.epsilon, Fraction(1, 2) + m.epsilon
    for x, y in itertools.combinations(words, 2):
        agree = Fraction(m.m - (words[x] ^ words[y]).bit_count(), m.m)
        assert lo <= agree <= hi
    # the same pairs through F_eval on every z
    x, y = (1, 0, 1, 1), (0, 1, 1, 0)
    agree = sum(F_eval(m, z, x) == F_eval(m, z, y) for z in itertools.product((0, 1), repeat=8))
    assert lo <= Fraction(agree, 256) <= hi


def test_b_eval_examples():
    m = build_biased_matrix(8, 2)
    x = (1, 0, 1, 1, 0, 1, 0, 0)
    assert B_eval(8, 4, x, (0,) * 8) == m.codeword_bit(0, x)
    with pytest.raises(ValueError):
        B_eval(8, 3, x, (0,) * 8)
    with pytest.raises(ValueError):
        B_eval(12, 6 // 2 * 2 + 2, x + (0,) * 4, (0,) * 12)


@given(st.lists(st.integers(0, 1), min_size=8, max_size=8), st.integers(0, 7))
def test_flipping_one_address_bit_flips_one_parity(a, j):
    flipped = list(a)
    flipped[j] ^= 1
    diff = [u ^ v for u, v in zip(block_parities(a, 4), block_parities(flipped, 4))]
    assert sum(diff) == 1 and diff[j // 2] == 1


@settings(max_examples=100)
@given(st.lists(st.integers(0, 1), min_size=16, max_size=16), st.lists(st.integers(0, 1), min_size=16, max_size=16),
       st.lists(st.integers(0, 1), min_size=16, max_size=16))
def test_b_eval_linear_in_x_for_fixed_a(x, y, a):
    xy = [u ^ v for u, v in zip(x, y)]
    assert B_eval(16, 4, x, a) ^ B_eval(16, 4, y, a) == B_eval(16, 4, xy, a)


def test_b84_matches_reference():
    got = np.array([B_eval(8, 4, [(i >> b) & 1 for b in range(8)], [(i >> (8 + b)) & 1 for b in range(8)])
                    for i in range(1 << 16)], dtype=np.uint8)
    assert np.array_equal(got, gf4_reference_table())


def test_profile_examples():
    m = build_biased_matrix(4, 4)
    x0 = (1, 1, 0, 1)
    word = m.codeword(x0)
    assert correlation_profile(m, word, 0.49) >= 1
    complement = word ^ ((1 << m.m) - 1)
    assert correlation_profile(m, complement, 0.49) >= 1
    bits = [(word >> i) & 1 for i in range(m.m)]
    assert correlation_profile(m, bits, 0.49) == correlation_profile(m, word, 0.49)


def test_profile_envelope():
    m = build_biased_matrix(8, 6)
    eps = float(m.epsilon)
    rng = np.random.default_rng(1)
    counts = [correlation_profile(m, rng.integers(0, 2, m.m), 2 * eps ** 0.5) for _ in range(100)]
    assert max(counts) <= PROFILE_C / eps
    # targets built from codewords: majority of three codewords correlates with each of them
    theta = eps ** 0.5 / 2
    for _ in range(20):
        xs = rng.integers(0, 2, size=(3, 8)).tolist()
        words = [m.codeword(x) for x in xs]
        maj = (words[0] & words[1]) | (words[0] & words[2]) | (words[1] & words[2])
        assert 1 <= correlation_profile(m, maj, theta) <= PROFILE_C / eps


def test_profile_sampled_mode():
    m = build_biased_matrix(6, 4)
    word = m.codeword((1, 0, 0, 1, 1, 0))
    est = correlation_profile(m, word, 0.3, mode="sampled", samples=500, seed=2)
    assert 0 <= est <= 63
