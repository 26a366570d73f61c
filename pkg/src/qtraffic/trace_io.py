"""Versioned JSON documents for mapped programs.

Layout (version 1)::

    {"format": "qtraffic-trace", "version": 1,
     "circuit": {"name", "width", "gates": {"kind", "q0", "q1", "theta"}},
     "architecture": {"cores", "capacity"},
     "mapper": {"sigma", "tau", "horizon", "move_cost"},
     "assignment": depth x width core indices,
     "events": {"qubit", "from_core", "to_core", "slice", "from_slot",
                "to_slot", "wave", "time", "partner", "kind"},
     "schedule": {"t_exec", "gate_time", "slot0", "slot1", "waves"},
     "trace": {"shape": [rows, cols], "codes": {...}, "rle": per-row [code, run, ...]},
     "counters": {...}}

Gate and event tables are stored column-wise.  ``q1`` and ``slot1`` hold -1
and ``theta`` holds null where a gate has no second qubit or angle.  Loading
re-derives the schedule from the circuit and assignment and rejects a
document whose stored schedule, trace or counters disagree.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .circuit import CELL_NAMES, Circuit, Gate, GateKind, slice_circuit
from .mapper import Architecture, MappedProgram, TeleportEvent, schedule_assignment

FORMAT = "qtraffic-trace"
VERSION = 1
EVENT_FIELDS = ("qubit", "from_core", "to_core", "slice", "from_slot", "to_slot",
                "wave", "time", "partner", "kind")


class TraceFormatError(ValueError):
    """A trace document is malformed or internally inconsistent."""


def rle_encode(row: np.ndarray) -> list[int]:
    """``[code, run, code, run, ...]`` for one row of cell codes."""
    row = np.asarray(row)
    if row.size == 0:
        return []
    cut = np.flatnonzero(np.diff(row)) + 1
    starts = np.concatenate([[0], cut])
    runs = np.diff(np.concatenate([starts, [row.size]]))
    out = np.empty(2 * starts.size, dtype=np.int64)
    out[0::2] = row[starts]
    out[1::2] = runs
    return out.tolist()


def rle_decode(pairs: list[int], length: int) -> np.ndarray:
    codes = np.asarray(pairs[0::2], dtype=np.uint8)
    runs = np.asarray(pairs[1::2], dtype=np.int64)
    if int(runs.sum()) != length or (runs <= 0).any():
        raise TraceFormatError("run lengths do not cover the row")
    return np.repeat(codes, runs)


def circuit_to_dict(circuit: Circuit) -> dict:
    gates = circuit.gates
    return {
        "name": circuit.name,
        "width": circuit.width,
        "gates": {
            "kind": [g.kind.value for g in gates],
            "q0": [g.qubits[0] for g in gates],
            "q1": [g.qubits[1] if len(g.qubits) > 1 else -1 for g in gates],
            "theta": [g.theta for g in gates],
        },
    }


def circuit_from_dict(d: dict) -> Circuit:
    cols = d["gates"]
    gates = []
    for kind, q0, q1, theta in zip(cols["kind"], cols["q0"], cols["q1"], cols["theta"], strict=True):
        qubits = (q0,) if q1 < 0 else (q0, q1)
        gates.append(Gate(GateKind(kind), qubits, theta))
    return Circuit(d["name"], int(d["width"]), tuple(gates))


def _counters(mp: MappedProgram) -> dict:
    return {
        "ops_per_physical": mp.compute_per_physical().tolist(),
        "teleports_per_physical": mp.teleports_per_physical.tolist(),
        "teleports_per_qubit": mp.teleports_per_qubit.tolist(),
        "teleports_per_core": mp.teleports_per_core.tolist(),
        "teleports_per_time": mp.teleports_per_time.tolist(),
    }


def to_dict(mp: MappedProgram) -> dict:
    cells = mp.trace.cells
    return {
        "format": FORMAT,
        "version": VERSION,
        "circuit": circuit_to_dict(mp.circuit),
        "architecture": {"cores": mp.arch.cores, "capacity": mp.arch.capacity},
        "mapper": {"sigma": mp.sigma, "tau": mp.tau, "horizon": mp.horizon,
                   "move_cost": mp.move_cost},
        "assignment": mp.assignment.tolist(),
        "events": {f: [getattr(e, f) for e in mp.events] for f in EVENT_FIELDS},
        "schedule": {
            "t_exec": int(mp.t_exec),
            "gate_time": mp.gate_time.tolist(),
            "slot0": mp.gate_slots[:, 0].tolist(),
            "slot1": mp.gate_slots[:, 1].tolist(),
            "waves": mp.waves.tolist(),
        },
        "trace": {
            "shape": list(cells.shape),
            "codes": {str(k): v for k, v in CELL_NAMES.items()},
            "rle": [rle_encode(r) for r in cells],
        },
        "counters": _counters(mp),
    }


def dumps(mp: MappedProgram) -> str:
    return json.dumps(to_dict(mp), sort_keys=True, separators=(",", ":"))


def from_dict(d: dict) -> MappedProgram:
    if d.get("format") != FORMAT:
        raise TraceFormatError(f"not a {FORMAT} document")
    if d.get("version") != VERSION:
        raise TraceFormatError(f"unsupported trace version {d.get('version')!r}")
    try:
        circuit = circuit_from_dict(d["circuit"])
        arch = Architecture(int(d["architecture"]["cores"]), int(d["architecture"]["capacity"]))
        knobs = d["mapper"]
        sliced = slice_circuit(circuit)
        assignment = np.asarray(d["assignment"], dtype=np.int64).reshape(sliced.depth, circuit.width)
        mp = schedule_assignment(sliced, arch, assignment, tau=int(knobs["tau"]),
                                 sigma=float(knobs["sigma"]), horizon=knobs["horizon"],
                                 move_cost=float(knobs["move_cost"]))
        ev = d["events"]
        events = tuple(TeleportEvent(**{f: ev[f][i] for f in EVENT_FIELDS})
                       for i in range(len(ev["qubit"])))
        sched = d["schedule"]
        rows, cols = d["trace"]["shape"]
        cells = np.stack([rle_decode(r, cols) for r in d["trace"]["rle"]]) if rows else \
            np.zeros((0, cols), dtype=np.uint8)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, TraceFormatError):
            raise
        raise TraceFormatError(f"malformed trace document: {exc}") from exc
    if events != mp.events:
        raise TraceFormatError("stored teleport events disagree with the assignment")
    if (sched["t_exec"] != mp.t_exec or sched["gate_time"] != mp.gate_time.tolist()
            or sched["slot0"] != mp.gate_slots[:, 0].tolist()
            or sched["slot1"] != mp.gate_slots[:, 1].tolist()
            or sched["waves"] != mp.waves.tolist()):
        raise TraceFormatError("stored schedule disagrees with the assignment")
    if cells.shape != mp.trace.cells.shape or not np.array_equal(cells, mp.trace.cells):
        raise TraceFormatError("stored trace grid disagrees with the schedule")
    if d["counters"] != _counters(mp):
        raise TraceFormatError("stored counters disagree with the events")
    return mp


def loads(text: str) -> MappedProgram:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise TraceFormatError("trace document must be a JSON object")
    return from_dict(d)


def load(path: str | os.PathLike) -> MappedProgram:
    return loads(Path(path).read_text())


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump(mp: MappedProgram, path: str | os.PathLike) -> None:
    atomic_write(path, dumps(mp))
