import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtraffic.benchgen import BenchSpec, Family
from qtraffic.circuit import (COMPUTE, IDLE, Circuit, CircuitError, Gate, GateKind, cnot, depth_lower_bound,
                              h, measure, rx, slice_circuit, virtual_trace)


def ghz4():
    return Circuit("ghz4", 4, (h(0), cnot(0, 1), cnot(0, 2), cnot(0, 3)))


def test_gate_validation():
    with pytest.raises(CircuitError):
        Gate(GateKind.CNOT, (1, 1))
    with pytest.raises(CircuitError):
        Gate(GateKind.H, (0, 1))
    with pytest.raises(CircuitError):
        Gate(GateKind.RX, (0,))  # missing angle
    with pytest.raises(CircuitError):
        Circuit("c", 2, (cnot(0, 2),))
    assert GateKind.MEASURE.arity == 1
    assert GateKind.CPHASE.parametric and not GateKind.CNOT.parametric


def test_ghz4_slices_one_gate_each():
    s = slice_circuit(ghz4())
    assert s.depth == 4
    assert [len(sl.gates) for sl in s.slices] == [1, 1, 1, 1]


def test_empty_circuit():
    s = slice_circuit(Circuit("e", 3, ()))
    assert s.depth == 0
    assert virtual_trace(s).shape == (3, 0)


def test_parallel_then_joined():
    s = slice_circuit(Circuit("c", 2, (h(0), h(1), cnot(0, 1))))
    assert [sl.gates for sl in s.slices] == [(0, 1), (2,)]
    tr = virtual_trace(s)
    assert all(tr.cell(q, t) == "compute" for q in (0, 1) for t in (0, 1))


def test_virtual_trace_ghz4():
    tr = virtual_trace(slice_circuit(ghz4()))
    assert [tr.cell(0, t) for t in range(4)] == ["compute"] * 4
    assert [tr.cell(3, t) for t in range(4)] == ["idle", "idle", "idle", "compute"]
    assert tr.cells[3, 3] == COMPUTE and tr.cells[3, 0] == IDLE


def test_interaction_symmetric():
    s = slice_circuit(ghz4())
    assert s.interaction(0, 2, 2) and s.interaction(2, 0, 2)
    assert not s.interaction(0, 2, 1)


@st.composite
def circuits(draw):
    n = draw(st.integers(1, 6))
    gates = []
    for _ in range(draw(st.integers(0, 25))):
        if n >= 2 and draw(st.booleans()):
            a, b = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
            gates.append(cnot(a, b))
        else:
            q = draw(st.integers(0, n - 1))
            gates.append(draw(st.sampled_from([h(q), measure(q), rx(0.25, q)])))
    return Circuit("hyp", n, tuple(gates))


def _check_slices(s):
    c = s.circuit
    assert sorted(i for sl in s.slices for i in sl.gates) == list(range(len(c.gates)))
    for sl in s.slices:
        touched = [q for i in sl.gates for q in c.gates[i].qubits]
        assert len(touched) == len(set(touched))
    last = {}
    for i, g in enumerate(c.gates):
        for q in g.qubits:
            if q in last:
                assert s.slice_of[last[q]] < s.slice_of[i]
            last[q] = i
    # ASAP: each gate sits right after its latest predecessor
    ready = [0] * c.width
    for i, g in enumerate(c.gates):
        t = max(ready[q] for q in g.qubits)
        assert s.slice_of[i] == t
        for q in g.qubits:
            ready[q] = t + 1


@settings(max_examples=150, deadline=None)
@given(circuits())
def test_slicing_properties(c):
    s = slice_circuit(c)
    _check_slices(s)
    assert sum(len(sl.gates) for sl in s.slices) == len(c.gates)
    assert s.depth >= depth_lower_bound(c)
    again = slice_circuit(s.flatten())
    assert [len(sl.gates) for sl in again.slices] == [len(sl.gates) for sl in s.slices]
    assert again.depth == s.depth


@pytest.mark.parametrize("family", list(Family))
def test_generated_benchmarks_have_disjoint_slices(family):
    c = BenchSpec(family, 16).build()
    _check_slices(slice_circuit(c))


def test_depth_lower_bound():
    assert depth_lower_bound(ghz4()) == 4
    assert depth_lower_bound(Circuit("e", 2, ())) == 0


def test_gates_per_qubit_measure_flag():
    c = Circuit("m", 2, (h(0), measure(0), measure(1)))
    assert c.gates_per_qubit().tolist() == [2, 1]
    assert c.gates_per_qubit(count_measure=False).tolist() == [1, 0]


def test_pair_arrays_match_interacting_pairs():
    c = BenchSpec(Family.QFT, 6).build()
    s = slice_circuit(c)
    ptr, u, v = s.pair_arrays()
    for t in range(s.depth):
        got = list(zip(u[ptr[t]:ptr[t + 1]].tolist(), v[ptr[t]:ptr[t + 1]].tolist()))
        assert got == s.interacting_pairs(t)
    assert np.all(u < v)
    assert math.isclose(c.gates[1].theta, math.pi / 2)
