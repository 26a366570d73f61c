import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from qtraffic import metrics, trace_io
from qtraffic.benchgen import BenchSpec, Family, gen_ghz, gen_qft
from qtraffic.circuit import Circuit, cnot, h, measure, slice_circuit
from qtraffic.mapper import Architecture, map_circuit, schedule_assignment
from qtraffic.metrics import MetricUndefined


def mapped(c, cores, cap, **kw):
    return map_circuit(slice_circuit(c), Architecture(cores, cap), **kw)


# pure helpers

def test_ccr_examples():
    assert metrics.ccr_from_means(3, 1) == 0.5
    assert metrics.ccr_from_means(4, 0) == 1.0
    assert metrics.ccr_from_means(0, 2) == -1.0
    with pytest.raises(MetricUndefined):
        metrics.ccr_from_means(0, 0)


@pytest.mark.parametrize("values, expect", [
    ([2, 2, 2, 2], 0.0), ([4, 0], 2.0), ([3, 1, 3, 1], 0.5),
    ([5, 5, 5, 5], 0.0), ([8, 0, 0, 0], 6.0), ([0, 4], 2.0),
])
def test_var_over_mean_examples(values, expect):
    assert metrics.var_over_mean(values) == pytest.approx(expect, abs=1e-12)
    assert metrics.var_over_mean(values) == pytest.approx(oracles.var_over_mean(values), abs=1e-12)


def test_var_over_mean_undefined():
    with pytest.raises(MetricUndefined):
        metrics.var_over_mean([0, 0, 0])
    with pytest.raises(MetricUndefined):
        metrics.var_over_mean([])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=1, max_size=30).filter(any), st.randoms(), st.integers(1, 9))
def test_var_over_mean_properties(values, rnd, c):
    base = metrics.var_over_mean(values)
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert metrics.var_over_mean(shuffled) == pytest.approx(base, rel=1e-9, abs=1e-12)
    # variance scales by c^2 and mean by c
    assert metrics.var_over_mean([c * v for v in values]) == pytest.approx(c * base, rel=1e-9, abs=1e-12)
    assert base >= 0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6), st.floats(0.01, 100))
def test_ccr_bounds_and_scale(ops, tel, c):
    if ops + tel == 0:
        return
    r = metrics.ccr_from_means(ops, tel)
    assert -1 <= r <= 1
    assert metrics.ccr_from_means(c * ops, c * tel) == pytest.approx(r, abs=1e-9)


def test_spatial_locality_midpoint_toy():
    # a qubit moving at the midpoint of a unit-length run, another that stays put
    assert metrics.spatial_locality_from_intervals([1, 0.5, 0.5], 1) == pytest.approx(2 / 3)
    with pytest.raises(MetricUndefined):
        metrics.spatial_locality_from_intervals([], 4)


def test_lifespan_helper():
    assert metrics.lifespan_from_times([[0, 3], [1], []]) == 3
    assert metrics.lifespan_from_times([]) == 0


# metrics on mapped programs

def test_no_teleports_ccr_one():
    mp = mapped(gen_ghz(8), 1, 8)
    assert metrics.compute_ccr(mp) == 1.0
    r = metrics.analyze(mp)
    assert r.ccr == 1.0
    assert r.core_hotspotness is None and r.burstiness is None
    assert r.temporal_locality == 0
    assert r.spatial_locality == 1.0


def test_single_core_core_hotspotness_na():
    r = metrics.analyze(mapped(gen_qft(6), 1, 6))
    assert r.core_hotspotness is None


def test_ccr_by_hand():
    mp = mapped(gen_ghz(8), 2, 4)
    ops = mp.compute_per_physical().mean()
    tel = mp.n_teleports / mp.arch.n_physical
    assert metrics.compute_ccr(mp) == pytest.approx((ops - tel) / (ops + tel))
    assert mp.compute_per_physical().sum() == sum(len(g.qubits) for g in mp.circuit.gates)


def test_hotspotness_by_hand():
    mp = mapped(gen_qft(8), 2, 4)
    per = mp.compute_per_physical() + mp.teleports_per_physical
    assert metrics.qubit_hotspotness(mp) == pytest.approx(oracles.var_over_mean(per.tolist()))
    core = mp.teleports_per_core
    assert metrics.core_hotspotness(mp) == pytest.approx(oracles.var_over_mean(core.tolist()))


def test_hotspotness_excluding_idle_qubits():
    # 6 qubits on 2x4: two physical slots never hold anything
    c = Circuit("c", 6, tuple(h(q) for q in range(6)))
    mp = mapped(c, 2, 4)
    assert metrics.qubit_hotspotness(mp, include_idle_qubits=False) == 0.0
    assert metrics.qubit_hotspotness(mp) == pytest.approx(oracles.var_over_mean([1] * 6 + [0] * 2))


def test_longest_gate_sequence():
    assert metrics.longest_gate_sequence(gen_ghz(8)) == 8
    assert metrics.longest_gate_sequence(gen_qft(4)) == 5
    assert metrics.longest_gate_sequence(Circuit("e", 3, ())) == 0
    m = Circuit("m", 2, (h(0), measure(0)))
    assert metrics.longest_gate_sequence(m) == 2
    assert metrics.longest_gate_sequence(m, count_measure=False) == 1


def test_lifespan_examples():
    assert metrics.qubit_lifespan(mapped(gen_ghz(4), 1, 4)) == 3
    one = mapped(Circuit("c", 2, (cnot(0, 1),)), 1, 2)
    assert metrics.qubit_lifespan(one) == 0
    with pytest.raises(ValueError):
        metrics.qubit_lifespan(one, "wall")


def test_lifespan_physical_at_least_virtual():
    mp = mapped(gen_qft(10), 2, 6, tau=4)
    assert mp.n_teleports > 0
    assert metrics.qubit_lifespan(mp) > metrics.qubit_lifespan(mp, "virtual")


def test_burstiness_by_hand():
    mp = mapped(gen_qft(8), 2, 4)
    per = mp.teleports_per_time
    assert per.sum() == mp.n_teleports
    assert metrics.burstiness(mp) == pytest.approx(oracles.var_over_mean(per.tolist()))
    assert oracles.var_over_mean([0, 4]) == 2.0


def test_spatial_locality_by_hand():
    mp = mapped(gen_ghz(8), 2, 4, tau=2)
    lengths = []
    for q in range(8):
        start = 0
        for e in sorted((e for e in mp.events if e.qubit == q), key=lambda e: e.time):
            lengths.append(e.time + mp.tau - start)
            start = e.time + mp.tau
        lengths.append(mp.t_exec - start)
    assert metrics.spatial_locality(mp) == pytest.approx(np.mean(lengths) / mp.t_exec)


def test_workload_categories():
    mp = mapped(gen_qft(8), 2, 4, tau=2)
    work = metrics.workload_series(mp)
    assert len(work) == mp.t_exec
    comp = mp.compute_per_time() > 0
    comm = np.zeros(mp.t_exec, dtype=bool)
    for e in mp.events:
        comm[e.time:e.time + mp.tau] = True
    for t, w in enumerate(work):
        expect = {(True, True): "parallel", (True, False): "computation",
                  (False, True): "communication", (False, False): "idle"}[(bool(comp[t]), bool(comm[t]))]
        assert w == expect
    r = metrics.analyze(mp)
    assert r.communication_slices + r.parallel_slices + r.computation_slices == mp.t_exec - work.count("idle")


def _layered(width, body):
    return (*(h(q) for q in range(width)), *body, *(h(q) for q in range(width)))


def test_temporal_locality_is_additive():
    a_gates = _layered(8, [cnot(0, 5), cnot(1, 6), cnot(2, 7)])
    b_gates = _layered(8, [cnot(0, 4), cnot(3, 7), cnot(1, 5)])
    arch = Architecture(2, 4)
    sa = slice_circuit(Circuit("a", 8, a_gates))
    sb = slice_circuit(Circuit("b", 8, b_gates))
    sab = slice_circuit(Circuit("ab", 8, a_gates + b_gates))
    assert sab.depth == sa.depth + sb.depth
    ma, mb = map_circuit(sa, arch), map_circuit(sb, arch)
    joined = schedule_assignment(sab, arch, np.vstack([ma.assignment, mb.assignment]))
    joined.check()
    identity = np.arange(8) // 4
    boundary = int((ma.assignment[-1] != mb.assignment[0]).sum()) - int((identity != mb.assignment[0]).sum())
    got = metrics.temporal_locality(joined)
    assert got == metrics.temporal_locality(ma) + metrics.temporal_locality(mb) + boundary
    if (ma.assignment[-1] == identity).all():
        assert got == metrics.temporal_locality(ma) + metrics.temporal_locality(mb)


def test_report_survives_trace_round_trip():
    mp = mapped(BenchSpec(Family.QAOA_ER, 16, seed=3).build(), 4, 4)
    back = trace_io.loads(trace_io.dumps(mp))
    assert metrics.analyze(back) == metrics.analyze(mp)


def test_report_json_round_trip():
    r = metrics.analyze(mapped(gen_qft(8), 2, 4))
    again = metrics.MetricsReport.from_dict(json.loads(r.to_json()))
    assert again == r
    assert set(r.row()) == set(metrics.CSV_COLUMNS)


def test_csv_round_trip_and_na():
    rows = [metrics.analyze(mapped(gen_ghz(8), 1, 8)).row(), metrics.analyze(mapped(gen_qft(8), 2, 4)).row()]
    text = metrics.csv_text(rows)
    assert text.splitlines()[0] == ",".join(metrics.CSV_COLUMNS)
    assert metrics.read_csv(text) == rows
    assert metrics.read_csv(text)[0]["core_hotspotness"] is None
    with pytest.raises(ValueError):
        metrics.format_cell(math.nan)
