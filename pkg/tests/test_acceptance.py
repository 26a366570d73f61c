"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``CRITERION <n> PASS|FAIL <summary>`` line to the
terminal (outside pytest's capture) so the run log doubles as a report.
"""

import json
import math
import random
import time

import numpy as np
import pytest

import oracles
from qtraffic import metrics, qasm, trace_io
from qtraffic.benchgen import BenchSpec, Family, gen_ghz, gen_vqe_hea
from qtraffic.circuit import Circuit, cnot, cz, h, slice_circuit
from qtraffic.mapper import Architecture, InfeasibleError, map_circuit
from qtraffic.sweep import SweepPlan, run_sweep

SIZES = (4, 8, 16, 32, 64)
SLOPE_SIZES = (16, 32, 64, 128, 256, 512)
CAPACITY = 16
STRONG_CORES = (4, 16)
WEAK_CORES = (4, 16, 32)
WEAK_TOTAL = 512


@pytest.fixture
def report(capsys, request):
    """Print the criterion's verdict line whatever the outcome."""
    lines = []
    yield lines.append
    failed = getattr(request.node, "_failed", True)
    with capsys.disabled():
        summary = "; ".join(lines)
        print(f"\nCRITERION {request.node.get_closest_marker('criterion').args[0]} "
              f"{'FAIL' if failed else 'PASS'} {summary}")


def _verdict(request):
    request.node._failed = False


# 1. exact gate counts

@pytest.mark.criterion(1)
def test_criterion_1_gate_counts(report, request):
    start = time.perf_counter()
    checked = 0
    for n in SIZES:
        assert len(BenchSpec(Family.GHZ, n).build().gates) == oracles.ghz_count(n) == n
        assert len(BenchSpec(Family.QFT, n).build().gates) == n + n * (n - 1) // 2 + n // 2
        assert len(BenchSpec(Family.CUCCARO, n).build().gates) == oracles.cuccaro_count(n)
        assert len(BenchSpec(Family.GROVER, n).build().gates) == oracles.grover_count(n, 1)
        for fam in (Family.VQE_HEA1, Family.VQE_HEA2):
            assert len(BenchSpec(fam, n).build().gates) == oracles.vqe_count(n, 1)
        er = BenchSpec(Family.QAOA_ER, n).build()
        edges = sum(1 for g in er.two_qubit_gates()) // 2
        assert len(er.gates) == oracles.qaoa_count(n, edges, 1)
        if n > 4:
            ws = BenchSpec(Family.QAOA_WS, n).build()
            assert len(ws.two_qubit_gates()) == 2 * n * 2  # kws/2 * N edges, two CNOTs each
            assert len(ws.gates) == oracles.qaoa_count(n, n * 2, 1)
        checked += 8
    elapsed = time.perf_counter() - start
    report(f"{checked} family/size counts exact, {elapsed:.2f} s")
    assert elapsed < 1.0
    _verdict(request)


# 2. scaling exponents

@pytest.mark.criterion(2)
def test_criterion_2_scaling_exponents(report, request):
    start = time.perf_counter()
    expect = {Family.GHZ: 1.0, Family.CUCCARO: 1.0, Family.VQE_HEA1: 1.0, Family.VQE_HEA2: 1.0,
              Family.QAOA_WS: 1.0, Family.GROVER: 1.0, Family.QFT: 2.0}
    slopes = {}
    for fam, e in expect.items():
        counts = [len(BenchSpec(fam, n).build().gates) for n in SLOPE_SIZES]
        slopes[fam.value] = oracles.loglog_slope(SLOPE_SIZES, counts)
    elapsed = time.perf_counter() - start
    report(", ".join(f"{k}={v:.3f}" for k, v in slopes.items()) + f", {elapsed:.2f} s")
    for fam, e in expect.items():
        assert abs(slopes[fam.value] - e) <= 0.15, fam
    assert elapsed < 10.0
    _verdict(request)


# 3 and 6 share the desk-scale grid

@pytest.fixture(scope="module")
def grid():
    start = time.perf_counter()
    rows = []
    for fam in Family:
        points = [("strong", c, CAPACITY) for c in STRONG_CORES] + \
                 [("weak", c, WEAK_TOTAL // c) for c in WEAK_CORES]
        for regime, cores, cap in points:
            n = cores * cap
            mp = map_circuit(slice_circuit(BenchSpec(fam, n).build()), Architecture(cores, cap))
            try:
                mp.check()
                ok = True
            except AssertionError:
                ok = False
            rows.append(dict(metrics.analyze(mp).row(), family=fam.value, regime=regime, valid=ok))
    return rows, time.perf_counter() - start


@pytest.mark.criterion(3)
def test_criterion_3_mapper_validity(report, request, grid):
    rows, elapsed = grid
    bad = [(r["family"], r["regime"], r["cores"]) for r in rows if not r["valid"]]
    report(f"{len(rows)} runs, {len(bad)} invariant violations, {elapsed:.1f} s")
    assert len(rows) == 8 * 5
    assert not bad
    assert elapsed < 600
    _verdict(request)


# 4. brute-force equivalence

def _suite():
    out = [("GHZ(8) 2x4", gen_ghz(8), 2, 4), ("VQE_HEA2(8) 2x4", gen_vqe_hea(8, 1, "parallel"), 2, 4)]
    for fam in Family:
        for n in (4, 6):
            c = BenchSpec(fam, n, kws=2, seed=1).build()
            if slice_circuit(c).depth <= 6:
                out.append((f"{fam.value}({n})", c, 2, n // 2))
    rng = random.Random(2024)
    while len(out) < 120:
        n = rng.randint(3, 8)
        cores = rng.choice([2, 3])
        cap = rng.randint(-(-n // cores), -(-n // cores) + 1)
        if cores == 3 and n == 8:
            cap = 3
        gates = []
        for _ in range(rng.randint(1, 12)):
            a, b = rng.sample(range(n), 2)
            gates.append(rng.choice([cnot, cz])(a, b))
            if rng.random() < 0.3:
                gates.append(h(rng.randrange(n)))
        c = Circuit(f"r{len(out)}", n, tuple(gates))
        if slice_circuit(c).depth <= 6:
            out.append((c.name, c, cores, cap))
    # identity-separable instances must never move
    for i in range(10):
        cap = 2 + i % 3
        gates = []
        for k in range(cap - 1):
            gates += [cnot(k, k + 1), cnot(cap + k + 1, cap + k)]
        out.append((f"sep{i}", Circuit(f"sep{i}", 2 * cap, tuple(gates * (1 + i % 2))), 2, cap))
    return out


@pytest.mark.criterion(4)
def test_criterion_4_brute_force(report, request):
    start = time.perf_counter()
    suite = _suite()
    below, sep_moves, mismatched_infeasible, optimal, separable = [], [], [], 0, 0
    for name, c, cores, cap in suite:
        pairs = [tuple(g.qubits) for g in c.gates]
        opt = oracles.min_movements(c.width, cores, cap, pairs)
        try:
            got = map_circuit(slice_circuit(c), Architecture(cores, cap)).n_teleports
        except InfeasibleError:
            if opt != math.inf:
                mismatched_infeasible.append(name)
            continue
        if got < opt:
            below.append((name, got, opt))
        optimal += got == opt
        if oracles.separable_under_identity(c.width, cap, pairs):
            separable += 1
            if got:
                sep_moves.append(name)
    elapsed = time.perf_counter() - start
    report(f"{len(suite)} instances, {optimal} at optimum, {separable} separable, "
           f"{len(below)} below optimum, {len(mismatched_infeasible)} spurious infeasible, {elapsed:.1f} s")
    assert len(suite) >= 50
    assert not below and not sep_moves and not mismatched_infeasible
    assert elapsed < 120
    _verdict(request)


# 5. metric unit oracles

@pytest.mark.criterion(5)
def test_criterion_5_metric_units(report, request):
    tol = 1e-12
    cases = [
        (metrics.ccr_from_means(3, 1), 0.5),
        (metrics.ccr_from_means(1, 0), 1.0),
        (metrics.ccr_from_means(0, 1), -1.0),
        (metrics.var_over_mean([4, 0]), 2.0),
        (metrics.var_over_mean([2, 2, 2, 2]), 0.0),
        (metrics.var_over_mean([3, 1, 3, 1]), 0.5),
        (metrics.var_over_mean([5, 5, 5, 5]), 0.0),
        (metrics.var_over_mean([8, 0, 0, 0]), 6.0),
        (metrics.var_over_mean([0, 4]), 2.0),
        (metrics.spatial_locality_from_intervals([1, 0.5, 0.5], 1), 2 / 3),
        (metrics.longest_gate_sequence(gen_ghz(8)), 8),
        (metrics.longest_gate_sequence(BenchSpec(Family.QFT, 4).build()), 5),
        (metrics.lifespan_from_times([[0, 3], [1]]), 3),
    ]
    bad = [(got, want) for got, want in cases if abs(got - want) > tol]
    singles = []
    for fam in Family:
        r = metrics.analyze(map_circuit(slice_circuit(BenchSpec(fam, 8).build()), Architecture(1, 8)))
        singles.append((r.ccr, r.temporal_locality, r.spatial_locality, r.core_hotspotness))
    report(f"{len(cases) - len(bad)}/{len(cases)} unit examples exact, "
           f"{sum(s[:3] == (1.0, 0, 1.0) for s in singles)}/{len(singles)} single-core runs give CCR=1 T=0 S=1")
    assert not bad
    assert all(s == (1.0, 0, 1.0, None) for s in singles)
    _verdict(request)


# 6. directional trends

@pytest.mark.criterion(6)
def test_criterion_6_trends(report, request, grid):
    rows, _ = grid
    strong = {(r["family"], r["cores"]): r for r in rows if r["regime"] == "strong"}
    weak = {(r["family"], r["cores"]): r for r in rows if r["regime"] == "weak"}
    t_qft = [strong[("QFT", c)]["temporal_locality"] for c in STRONG_CORES]
    t_cuc = [strong[("Cuccaro", c)]["temporal_locality"] for c in STRONG_CORES]
    qft_up = all(a < b for a, b in zip(t_qft, t_qft[1:]))
    qft_over_cuccaro = all(q > c for q, c in zip(t_qft, t_cuc))
    s_ok = {f.value: weak[(f.value, 4)]["spatial_locality"] >= weak[(f.value, 32)]["spatial_locality"]
            for f in Family}
    ghz_ns = [16, 32, 64, 128, 256, 512]
    ghz_lgs = [metrics.longest_gate_sequence(gen_ghz(n)) for n in ghz_ns]
    ghz_mapped = [strong[("GHZ", c)]["longest_gate_sequence"] for c in STRONG_CORES]
    ghz_slope = oracles.loglog_slope(ghz_ns, ghz_lgs)
    ghz_linear = (abs(ghz_slope - 1.0) < 1e-9 and all(b > a for a, b in zip(ghz_lgs, ghz_lgs[1:]))
                  and ghz_mapped == [c * CAPACITY for c in STRONG_CORES])
    report(f"T(QFT)={t_qft} T(Cuccaro)={t_cuc}; S weak C=4 >= C=32 for {sum(s_ok.values())}/8 families; "
           f"GHZ longest sequence slope {ghz_slope:.3f}")
    assert qft_up and qft_over_cuccaro
    assert all(s_ok.values()), s_ok
    assert ghz_linear
    _verdict(request)


# 7. determinism and round trips

@pytest.mark.criterion(7)
def test_criterion_7_determinism(report, request, tmp_path):
    plan = SweepPlan("strong", tuple(f.value for f in Family), cores=(2, 4), capacity=8, seeds=(0, 1),
                     timeout=None)
    run_sweep(plan, tmp_path / "a")
    run_sweep(plan, tmp_path / "b")
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("metrics.csv", "metrics.json"))
    traces_a = sorted((tmp_path / "a" / "traces").iterdir())
    same &= all(p.read_bytes() == (tmp_path / "b" / "traces" / p.name).read_bytes() for p in traces_a)
    lossless = 0
    total = 0
    for fam in Family:
        for n in (8, 16, 64):
            c = BenchSpec(fam, n, seed=3).build()
            text = qasm.dumps(c)
            back = qasm.loads(text)
            mp = map_circuit(slice_circuit(c), Architecture(4, n // 4 + 2))
            doc = trace_io.dumps(mp)
            again = trace_io.loads(doc)
            ok = (back == c and qasm.dumps(back) == text and trace_io.dumps(again) == doc
                  and json.loads(doc)["events"]["qubit"] == [e.qubit for e in mp.events]
                  and np.array_equal(again.trace.cells, mp.trace.cells))
            lossless += ok
            total += 1
    report(f"{len(traces_a)} traces and CSV/JSON byte-identical across runs: {same}; "
           f"{lossless}/{total} QASM and trace round trips lossless")
    assert same and len(traces_a) > 0
    assert lossless == total
    _verdict(request)
