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
    StructuralError,
    TruthTable,
    all_inputs,
    eval_circuit,
    eval_gate,
    evaluate_batch,
    input_ref,
    parse,
    pointwise_table,
    serialize,
    size_metrics,
    truth_table,
)


@st.composite
def circuits(draw, max_inputs=8, max_gates=6):
    """Random layered circuits mixing every gate kind."""
    n = draw(st.integers(1, max_inputs))
    gates = []
    refs = [input_ref(i) for i in range(n)]
    for j in range(draw(st.integers(1, max_gates))):
        kind = draw(st.sampled_from([Kind.LTF, Kind.LTF, Kind.MAJ, Kind.AND, Kind.OR, Kind.MOD2, Kind.MOD3]))
        chosen = draw(st.lists(st.sampled_from(refs), min_size=1, max_size=min(len(refs), 6), unique=True))
        gid = f"g{j}"
        if kind is Kind.LTF:
            w = {r: draw(st.integers(-5, 5)) for r in chosen}
            g = Gate.make(gid, kind, w, draw(st.integers(-6, 6)))
        elif kind.modulus:
            w = {r: draw(st.integers(-3, 3)) for r in chosen}
            acc = draw(st.sets(st.integers(0, kind.modulus - 1), min_size=1))
            g = Gate.make(gid, kind, w, accept=acc)
        else:
            g = Gate.make(gid, kind, {r: 1 for r in chosen})
        gates.append(g)
        refs.append(gid)
    if draw(st.booleans()):
        gates.append(Gate.const("c", draw(st.integers(0, 1))))
        top = Gate.make("top", Kind.LTF, {g.id: draw(st.integers(-2, 2)) or 1 for g in gates}, draw(st.integers(-2, 2)))
        gates.append(top)
    return Circuit(n, tuple(gates), gates[-1].id, "random")


def test_eval_gate_examples():
    assert eval_gate(LinearThresholdGate((2, -3, 1), 0), (1, 1, 1)) == 1
    assert eval_gate(LinearThresholdGate((1, 1), 2), (1, 0)) == 0
    assert eval_gate(LinearThresholdGate.majority(3), (1, 1, 0)) == 1


def test_eval_gate_short_assignment_is_structural_error():
    with pytest.raises(StructuralError):
        eval_gate(LinearThresholdGate((1, 1, 1), 1), (1, 0))


def test_eval_circuit_examples():
    ident = Circuit(1, (Gate.make("g", Kind.LTF, {"x0": 1}, 1),), "g")
    assert eval_circuit(ident, [1]) == 1
    g1 = Gate.make("o1", Kind.OR, {"x0": 1, "x1": 1})
    g2 = Gate.make("o2", Kind.OR, {"x2": 1, "x3": 1})
    top = Gate.make("a", Kind.AND, {"o1": 1, "o2": 1})
    assert eval_circuit(Circuit(4, (g1, g2, top), "a"), [0, 1, 1, 0]) == 1
    one = Circuit(3, (Gate.const("c", 1),), "c")
    assert all(eval_circuit(one, x) == 1 for x in all_inputs(3))


def test_derived_thresholds():
    assert Gate.make("m", Kind.MAJ, {"x0": 1, "x1": 1, "x2": 1}).threshold == 2
    assert Gate.make("m", Kind.MAJ, {"x0": 1, "x1": 1, "x2": 1, "x3": 1}).threshold == 2
    assert Gate.make("a", Kind.AND, {"x0": 1, "x1": 1}).threshold == 2
    assert Gate.make("o", Kind.OR, {"x0": 1, "x1": 1}).threshold == 1
    with pytest.raises(StructuralError):
        Gate.make("m", Kind.MAJ, {"x0": 2})


def test_structural_validation():
    with pytest.raises(StructuralError):
        Circuit(2, (Gate.make("g", Kind.LTF, {"x5": 1}, 1),), "g")
    with pytest.raises(StructuralError):
        Circuit(2, (Gate.make("g", Kind.LTF, {"h": 1}, 1), Gate.make("h", Kind.LTF, {"x0": 1}, 1)), "g")
    with pytest.raises(StructuralError):
        Circuit(2, (Gate.make("g", Kind.LTF, {"x0": 1}, 1),), "missing")
    with pytest.raises(StructuralError):
        Gate.make("g", Kind.LTF, [("x0", 1), ("x0", 2)], 1)


def test_truth_table_examples():
    and2 = LinearThresholdGate((1, 1), 2).to_circuit()
    assert truth_table(and2).bits().tolist() == [0, 0, 0, 1]
    xor = Circuit(2, (Gate.make("p", Kind.MOD2, {"x0": 1, "x1": 1}, accept=[1]),), "p")
    assert truth_table(xor).bits().tolist() == [0, 1, 1, 0]


def test_truth_table_capacity():
    big = LinearThresholdGate.majority(29).to_circuit()
    with pytest.raises(CapacityError):
        truth_table(big)


def test_size_metrics_examples():
    assert size_metrics(LinearThresholdGate.majority(3).to_circuit()) == (1, 3)
    assert size_metrics(Circuit(2, (Gate.const("c", 0),), "c")) == (0, 0)


def test_zero_weight_edges_dropped():
    g = Gate.make("g", Kind.LTF, {"x0": 1, "x1": 0, "x2": 2}, 2)
    assert g.refs == ("x0", "x2")
    c = Circuit(3, (g,), "g")
    assert size_metrics(c) == (1, 2)


@settings(max_examples=150, deadline=None)
@given(circuits(max_inputs=10))
def test_truth_table_matches_pointwise(c):
    assert truth_table(c) == pointwise_table(c)
    assert truth_table(c, block_bits=3) == pointwise_table(c)
    assert np.array_equal(evaluate_batch(c, all_inputs(c.num_inputs)), truth_table(c).bits())


@settings(max_examples=100, deadline=None)
@given(circuits())
def test_serialize_round_trip(c):
    text = serialize(c)
    again = parse(text)
    assert serialize(again) == text
    assert truth_table(again) == truth_table(c)


def test_parse_comments_and_whitespace():
    text = "# a comment\ncircuit demo\ninputs 2\n\ngate g LTF t=2 w=x0:1,x1:1  # AND\noutput g\n"
    c = parse(text)
    assert c.name == "demo" and truth_table(c).bits().tolist() == [0, 0, 0, 1]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=1, max_size=7), st.integers(-30, 30), st.data())
def test_negating_an_input(weights, t, data):
    # a_i x_i -> a_i (1 - x_i): negate the weight, move the threshold by -a_i
    i = data.draw(st.integers(0, len(weights) - 1))
    g = LinearThresholdGate(tuple(weights), t)
    flipped = list(weights)
    flipped[i] = -weights[i]
    h = LinearThresholdGate(tuple(flipped), t - weights[i])
    x = all_inputs(len(weights))
    xf = x.copy()
    xf[:, i] ^= 1
    assert np.array_equal(g.evaluate_batch(xf), h.evaluate_batch(x))


def test_large_weights_exact():
    big = 1 << 70
    g = LinearThresholdGate((big, big, -1), 2 * big)
    assert g((1, 1, 0)) == 1 and g((1, 1, 1)) == 0
    assert truth_table(g.to_circuit()).bits().tolist() == [0, 0, 0, 1, 0, 0, 0, 0]


def test_hex_round_trip_and_convention():
    t = TruthTable.from_bits([0, 0, 0, 1])
    assert t.to_hex() == "1"
    t3 = TruthTable.from_bits([1, 0, 0, 0, 0, 0, 0, 1])
    assert t3.to_hex() == "81"
    assert TruthTable.from_hex(3, "81") == t3
    with pytest.raises(ValueError):
        TruthTable.from_hex(3, "8")


@given(st.integers(1, 10), st.data())
def test_table_int_round_trip(n, data):
    v = data.draw(st.integers(0, (1 << (1 << n)) - 1))
    t = TruthTable.from_int(n, v)
    assert t.to_int() == v
    assert TruthTable.from_hex(n, t.to_hex()) == t
    assert (~t).count_ones() == (1 << n) - t.count_ones()
