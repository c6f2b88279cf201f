import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltflab.core import (
    CapacityError,
    Circuit,
    Gate,
    Kind,
    LinearThresholdGate,
    all_inputs,
    eval_circuit,
    evaluate_batch,
    input_ref,
)
from ltflab.restrictions import (
    STAR,
    Forced,
    ForcingOutcome,
    OutcomeKind,
    Partition,
    Restriction,
    apply_restriction,
    classify_batch,
    forced_constant,
    forced_single_input,
    restricted_oracle_table,
    sample_block,
    sample_restriction,
    sample_restrictions,
)
from oracles import exhaustive_outcome


@st.composite
def gate_and_restriction(draw, max_n=10, max_weight=20):
    n = draw(st.integers(1, max_n))
    w = draw(st.lists(st.integers(-max_weight, max_weight), min_size=n, max_size=n))
    t = draw(st.integers(-2 * max_weight, 2 * max_weight))
    vals = draw(st.lists(st.sampled_from([0, 1, STAR]), min_size=n, max_size=n))
    return LinearThresholdGate(tuple(w), t), Restriction(tuple(vals))


def test_partition_equal_and_validation():
    p = Partition.equal(10, 3)
    assert [len(x) for x in p.parts] == [4, 3, 3]
    assert Partition.equal(6, 3).parts == ((0, 1), (2, 3), (4, 5))
    with pytest.raises(ValueError):
        Partition(3, ((0, 1), (1, 2)))
    with pytest.raises(ValueError):
        Partition(4, ((0, 1, 2), (3,)))
    with pytest.raises(ValueError):
        Partition.equal(3, 4)


def test_restriction_string_round_trip():
    r = Restriction.parse("01*1*")
    assert str(r) == "01*1*" and r.free == (2, 4)
    with pytest.raises(ValueError):
        Restriction.parse("01x")


def test_sampling_examples():
    singletons = Partition(2, ((0,), (1,)))
    assert all(str(sample_restriction(singletons, 3, i)) == "**" for i in range(20))
    p = Partition.equal(6, 3)
    vals = sample_restrictions(p, 9, 0, 2000)
    assert np.all((vals == STAR).sum(axis=1) == 3)
    for part in p.parts:
        assert np.all((vals[:, list(part)] == STAR).sum(axis=1) == 1)


def test_star_frequency_within_binomial_band():
    vals = sample_restrictions(Partition(2, ((0, 1),)), 17, 0, 10_000)
    freq = (vals[:, 0] == STAR).mean()
    sigma = math.sqrt(0.25 / 10_000)
    assert abs(freq - 0.5) <= 3 * sigma


def test_fixed_bits_are_fair_and_independent_of_stars():
    vals = sample_restrictions(Partition.equal(12, 4), 5, 0, 20_000)
    fixed = vals[vals != STAR]
    sigma = math.sqrt(0.25 / fixed.size)
    assert abs(fixed.mean() - 0.5) <= 4 * sigma


def test_sampling_is_order_independent():
    p = Partition.equal(9, 3)
    whole = sample_restrictions(p, 42, 0, 3000)
    assert np.array_equal(whole[1500:2500], sample_restrictions(p, 42, 1500, 2500))
    assert str(sample_restriction(p, 42, 2049)) == str(Restriction(tuple(whole[2049])))
    assert not np.array_equal(whole, sample_restrictions(p, 43, 0, 3000))


def test_forced_constant_examples():
    maj = LinearThresholdGate.majority(3)
    assert forced_constant(maj, Restriction.parse("11*")) is Forced.ONE
    assert forced_constant(maj, Restriction.parse("00*")) is Forced.ZERO
    assert forced_constant(maj, Restriction.parse("10*")) is Forced.NOT_FORCED


def test_forced_single_input_examples():
    out = forced_single_input(LinearThresholdGate((5, 1), 5), Restriction.parse("**"))
    assert out == ForcingOutcome(OutcomeKind.SINGLE_INPUT, 0, False)
    maj = LinearThresholdGate.majority(3)
    assert forced_single_input(maj, Restriction.parse("10*")) == ForcingOutcome(OutcomeKind.SINGLE_INPUT, 2, False)
    assert forced_single_input(maj, Restriction.parse("***")).kind is OutcomeKind.MANY_INPUTS
    neg = forced_single_input(LinearThresholdGate((-1, 1), 0), Restriction.parse("*0"))
    assert neg == ForcingOutcome(OutcomeKind.SINGLE_INPUT, 0, True)


def test_forced_single_input_capacity():
    with pytest.raises(CapacityError):
        forced_single_input(LinearThresholdGate.majority(25), Restriction((STAR,) * 25))


@settings(max_examples=400, deadline=None)
@given(gate_and_restriction(max_n=12))
def test_forcing_matches_exhaustive(case):
    gate, rho = case
    want = exhaustive_outcome(gate, rho)
    assert forced_single_input(gate, rho) == want
    fc = forced_constant(gate, rho)
    assert (fc is Forced.ONE) == (want.kind is OutcomeKind.FORCED_ONE)
    assert (fc is Forced.ZERO) == (want.kind is OutcomeKind.FORCED_ZERO)


@settings(max_examples=200, deadline=None)
@given(gate_and_restriction(max_n=8), st.data())
def test_forcing_is_monotone_in_information(case, data):
    gate, rho = case
    before = forced_constant(gate, rho)
    vals = [v if v != STAR or data.draw(st.booleans()) else data.draw(st.integers(0, 1)) for v in rho.values]
    after = forced_constant(gate, Restriction(tuple(vals)))
    if before is not Forced.NOT_FORCED:
        assert after is before


def test_classify_batch_matches_single():
    rng = np.random.default_rng(3)
    part = Partition.equal(12, 4)
    for _ in range(20):
        w = tuple(int(v) for v in rng.integers(-6, 7, size=12))
        gate = LinearThresholdGate(w, int(rng.integers(-10, 10)))
        bits, stars = sample_block(part, int(rng.integers(1 << 30)), 0)
        bits, stars = bits[:200], stars[:200]
        kind, idx, neg, _ = classify_batch(gate.weights, gate.decide, bits, stars)
        for row in range(200):
            vals = bits[row].copy()
            vals[stars[row]] = STAR
            ref = forced_single_input(gate, Restriction(tuple(vals)))
            assert int(kind[row]) == ref.kind
            if ref.kind is OutcomeKind.SINGLE_INPUT:
                assert idx[row] == ref.index and bool(neg[row]) == ref.negated


@st.composite
def depth2_circuit_and_restriction(draw, max_n=10):
    n = draw(st.integers(1, max_n))
    gates = []
    for j in range(draw(st.integers(1, 5))):
        chosen = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
        kind = draw(st.sampled_from([Kind.LTF, Kind.LTF, Kind.MOD2, Kind.MOD3]))
        w = {input_ref(i): draw(st.integers(-4, 4)) for i in chosen}
        if kind is Kind.LTF:
            gates.append(Gate.make(f"g{j}", kind, w, draw(st.integers(-4, 6))))
        else:
            gates.append(Gate.make(f"g{j}", kind, w, accept=[draw(st.integers(0, kind.modulus - 1))]))
    top_w = {g.id: draw(st.integers(-3, 3)) for g in gates}
    top_w[input_ref(draw(st.integers(0, n - 1)))] = draw(st.integers(-2, 2))
    top = Gate.make("top", Kind.LTF, top_w, draw(st.integers(-3, 3)))
    rho = Restriction(tuple(draw(st.lists(st.sampled_from([0, 1, STAR]), min_size=n, max_size=n))))
    return Circuit(n, tuple(gates) + (top,), "top"), rho


@settings(max_examples=300, deadline=None)
@given(depth2_circuit_and_restriction())
def test_apply_restriction_preserves_semantics(case):
    circuit, rho = case
    simple = apply_restriction(circuit, rho)
    assert simple.num_inputs == len(rho.free)
    assert all(g.kind is not Kind.CONST for g in simple.gates) or len(simple.gates) == 1
    got = evaluate_batch(simple, all_inputs(simple.num_inputs))
    assert np.array_equal(got, restricted_oracle_table(circuit, rho))


def test_apply_restriction_full_assignment_is_const():
    circuit = Circuit(3, (Gate.make("a", Kind.MAJ, {"x0": 1, "x1": 1, "x2": 1}),
                          Gate.make("o", Kind.OR, {"a": 1, "x2": 1})), "o")
    for x in all_inputs(3):
        simple = apply_restriction(circuit, Restriction(tuple(int(v) for v in x)))
        assert [g.kind for g in simple.gates] == [Kind.CONST]
        assert eval_circuit(simple, []) == eval_circuit(circuit, x)


def test_apply_restriction_all_bottoms_forced_gives_depth_one():
    xs = {input_ref(i): 1 for i in range(4)}
    g1 = Gate.make("g1", Kind.LTF, xs, 2)
    g2 = Gate.make("g2", Kind.LTF, {"x0": 1, "x1": 1}, 1)
    top = Gate.make("top", Kind.LTF, {"g1": 2, "g2": 1, "x3": 1}, 2)
    rho = Restriction.parse("11**")
    simple = apply_restriction(Circuit(4, (g1, g2, top), "top"), rho)
    assert simple.depth <= 1
    assert np.array_equal(evaluate_batch(simple, all_inputs(2)),
                          restricted_oracle_table(Circuit(4, (g1, g2, top), "top"), rho))


def test_negated_literal_becomes_wire():
    g = Gate.make("g", Kind.LTF, {"x0": -1, "x1": 1}, 0)
    top = Gate.make("top", Kind.LTF, {"g": 1, "x2": 1}, 2)
    c = Circuit(3, (g, top), "top")
    rho = Restriction.parse("*0*")
    simple = apply_restriction(c, rho)
    assert [x.id for x in simple.gates] == ["top"]
    assert np.array_equal(evaluate_batch(simple, all_inputs(2)), restricted_oracle_table(c, rho))
