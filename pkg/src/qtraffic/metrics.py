"""Spatio-temporal traffic metrics of a mapped program.

Variances are population variances.  A ratio whose denominator is zero is
reported as ``None`` (not applicable) in a :class:`MetricsReport`; the
stand-alone helpers raise :class:`MetricUndefined` instead.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .circuit import COMMUNICATE, COMPUTE, Circuit
from .mapper import MappedProgram


class MetricUndefined(ArithmeticError):
    """A metric's defining ratio has a zero denominator."""


# Pure helpers over plain sequences.

def var_over_mean(values: Sequence[float] | np.ndarray) -> float:
    """Population variance divided by mean."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise MetricUndefined("empty population")
    mu = float(v.mean())
    if mu == 0.0:
        raise MetricUndefined("zero mean")
    return float(((v - mu) ** 2).mean()) / mu


def ccr_from_means(n_ops: float, n_telep: float) -> float:
    """(n_ops - n_telep) / (n_ops + n_telep)."""
    den = n_ops + n_telep
    if den == 0:
        raise MetricUndefined("no computation and no communication")
    return (n_ops - n_telep) / den


def spatial_locality_from_intervals(lengths: Iterable[float], t_exec: float) -> float:
    """Mean residency-interval length over the execution length."""
    lens = [float(x) for x in lengths]
    if t_exec <= 0:
        raise MetricUndefined("empty execution")
    if not lens:
        raise MetricUndefined("no residency intervals")
    return (sum(lens) / len(lens)) / t_exec


def lifespan_from_times(times_per_qubit: Iterable[Sequence[int]]) -> int:
    """Largest ``last - first`` over qubits; qubits without gates contribute 0."""
    best = 0
    for times in times_per_qubit:
        if len(times):
            best = max(best, int(max(times)) - int(min(times)))
    return best


def _or_none(fn, *args):
    try:
        return fn(*args)
    except MetricUndefined:
        return None


# Metrics on a mapped program.

def ops_per_physical(mp: MappedProgram, count_measure: bool = True) -> np.ndarray:
    """Computation operations per physical qubit (teleportations excluded)."""
    return mp.compute_per_physical(count_measure)


def _population(mp: MappedProgram, values: np.ndarray, include_idle_qubits: bool) -> np.ndarray:
    if include_idle_qubits:
        return values
    used = np.zeros(mp.arch.n_physical, dtype=bool)
    used[: mp.sliced.width] = True  # initial slots
    for e in mp.events:
        used[e.to_slot] = True
    return values[used]


def compute_ccr(mp: MappedProgram, count_measure: bool = True) -> float:
    n_ops = float(ops_per_physical(mp, count_measure).mean()) if mp.arch.n_physical else 0.0
    n_tel = float(mp.teleports_per_physical.mean()) if mp.arch.n_physical else 0.0
    return ccr_from_means(n_ops, n_tel)


def qubit_hotspotness(mp: MappedProgram, count_measure: bool = True,
                      include_idle_qubits: bool = True) -> float:
    per = ops_per_physical(mp, count_measure) + mp.teleports_per_physical
    return var_over_mean(_population(mp, per, include_idle_qubits))


def core_hotspotness(mp: MappedProgram) -> float:
    return var_over_mean(mp.teleports_per_core)


def longest_gate_sequence(src: MappedProgram | Circuit, count_measure: bool = True) -> int:
    circuit = src if isinstance(src, Circuit) else src.circuit
    counts = circuit.gates_per_qubit(count_measure)
    return int(counts.max()) if counts.size else 0


def qubit_lifespan(mp: MappedProgram, timeline: str = "physical") -> int:
    """Longest first-to-last gate span of a virtual qubit.

    ``timeline="physical"`` measures on the communication-inclusive schedule,
    ``"virtual"`` on the circuit's own timeslices.
    """
    if timeline == "physical":
        when = mp.gate_time
    elif timeline == "virtual":
        when = mp.sliced.slice_of
    else:
        raise ValueError(f"timeline must be 'physical' or 'virtual', got {timeline!r}")
    times: list[list[int]] = [[] for _ in range(mp.sliced.width)]
    for g, gate in enumerate(mp.circuit.gates):
        for q in gate.qubits:
            times[q].append(int(when[g]))
    return lifespan_from_times(times)


def burstiness(mp: MappedProgram) -> float:
    return var_over_mean(mp.teleports_per_time)


def temporal_locality(mp: MappedProgram) -> int:
    return int(mp.teleports_per_time.sum())


def spatial_locality(mp: MappedProgram) -> float:
    return spatial_locality_from_intervals((r.length for r in mp.residencies), mp.t_exec)


COMMUNICATION = "communication"
PARALLEL = "parallel"
COMPUTATION = "computation"
IDLE_SLICE = "idle"


def workload_series(mp: MappedProgram) -> list[str]:
    """Category of every physical timeslice."""
    cells = mp.trace.cells
    comp = (cells == COMPUTE).any(axis=0)
    comm = (cells == COMMUNICATE).any(axis=0)
    out = []
    for c, m in zip(comp.tolist(), comm.tolist()):
        out.append(PARALLEL if c and m else COMPUTATION if c else COMMUNICATION if m else IDLE_SLICE)
    return out


@dataclass(frozen=True)
class MetricsReport:
    """Per-run metric values plus the raw series they derive from."""

    name: str
    width: int
    cores: int
    capacity: int
    sigma: float
    tau: int
    depth: int
    t_exec: int
    n_gates: int
    ccr: float | None
    qubit_hotspotness: float | None
    core_hotspotness: float | None
    longest_gate_sequence: int
    qubit_lifespan: int
    burstiness: float | None
    temporal_locality: int
    spatial_locality: float | None
    communication_slices: int
    parallel_slices: int
    computation_slices: int
    ops_per_qubit: tuple[int, ...] = field(repr=False)
    teleports_per_qubit: tuple[int, ...] = field(repr=False)
    teleports_per_core: tuple[int, ...] = field(repr=False)
    teleports_per_slice: tuple[int, ...] = field(repr=False)
    ops_per_slice: tuple[int, ...] = field(repr=False)
    workload: tuple[str, ...] = field(repr=False)
    flags: dict = field(default_factory=dict, repr=False)

    def row(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        kw = dict(d)
        for name in SERIES_FIELDS:
            kw[name] = tuple(kw[name])
        return cls(**kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=False)


SERIES_FIELDS = ("ops_per_qubit", "teleports_per_qubit", "teleports_per_core",
                 "teleports_per_slice", "ops_per_slice", "workload")

#: Fixed CSV layout, one row per run.  Not-applicable values are empty cells.
CSV_COLUMNS = (
    "name", "width", "cores", "capacity", "sigma", "tau", "depth", "t_exec", "n_gates",
    "ccr", "qubit_hotspotness", "core_hotspotness", "longest_gate_sequence",
    "qubit_lifespan", "burstiness", "temporal_locality", "spatial_locality",
    "communication_slices", "parallel_slices", "computation_slices",
)


def analyze(mp: MappedProgram, count_measure: bool = True, include_idle_qubits: bool = True,
            lifespan_timeline: str = "physical") -> MetricsReport:
    """Every metric and series for one mapped program."""
    ops = ops_per_physical(mp, count_measure)
    work = workload_series(mp)
    return MetricsReport(
        name=mp.circuit.name,
        width=mp.sliced.width,
        cores=mp.arch.cores,
        capacity=mp.arch.capacity,
        sigma=float(mp.sigma),
        tau=int(mp.tau),
        depth=mp.sliced.depth,
        t_exec=int(mp.t_exec),
        n_gates=len(mp.circuit.gates),
        ccr=_or_none(compute_ccr, mp, count_measure),
        qubit_hotspotness=_or_none(qubit_hotspotness, mp, count_measure, include_idle_qubits),
        core_hotspotness=_or_none(core_hotspotness, mp),
        longest_gate_sequence=longest_gate_sequence(mp, count_measure),
        qubit_lifespan=qubit_lifespan(mp, lifespan_timeline),
        burstiness=_or_none(burstiness, mp),
        temporal_locality=temporal_locality(mp),
        spatial_locality=_or_none(spatial_locality, mp),
        communication_slices=work.count(COMMUNICATION),
        parallel_slices=work.count(PARALLEL),
        computation_slices=work.count(COMPUTATION),
        ops_per_qubit=tuple(int(v) for v in ops),
        teleports_per_qubit=tuple(int(v) for v in mp.teleports_per_physical),
        teleports_per_core=tuple(int(v) for v in mp.teleports_per_core),
        teleports_per_slice=tuple(int(v) for v in mp.teleports_per_time),
        ops_per_slice=tuple(int(v) for v in mp.compute_per_time(count_measure)),
        workload=tuple(work),
        flags={"count_measure": count_measure, "include_idle_qubits": include_idle_qubits,
               "lifespan_timeline": lifespan_timeline},
    )


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            raise ValueError(f"non-finite metric {v}")
        return repr(v)
    return str(v)


def csv_text(rows: Iterable[dict], columns: Sequence[str] = CSV_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def parse_cell(column: str, text: str):
    if text == "":
        return None
    if column in ("name", "status", "family", "regime", "error"):
        return text
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    return [{k: parse_cell(k, v) for k, v in row.items()} for row in reader]
