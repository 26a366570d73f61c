"""Gate-level circuit IR and ASAP timeslicing."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class GateKind(enum.Enum):
    H = "h"
    X = "x"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    PHASE = "p"
    CNOT = "cx"
    CZ = "cz"
    CPHASE = "cp"
    SWAP = "swap"
    MEASURE = "measure"

    @property
    def arity(self) -> int:
        return 2 if self in _TWO_QUBIT else 1

    @property
    def parametric(self) -> bool:
        return self in _PARAMETRIC


_TWO_QUBIT = frozenset({GateKind.CNOT, GateKind.CZ, GateKind.CPHASE, GateKind.SWAP})
_PARAMETRIC = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.PHASE, GateKind.CPHASE})


class CircuitError(ValueError):
    """Raised for malformed gates or circuits."""


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self) -> None:
        if len(self.qubits) != self.kind.arity:
            raise CircuitError(f"{self.kind.name} expects {self.kind.arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated qubit in {self.kind.name}{self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {self.kind.name}{self.qubits}")
        if self.kind.parametric and self.theta is None:
            raise CircuitError(f"{self.kind.name} requires an angle")
        if not self.kind.parametric and self.theta is not None:
            raise CircuitError(f"{self.kind.name} takes no angle")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind.arity == 2

    def __str__(self) -> str:
        args = ",".join(map(str, self.qubits))
        if self.theta is None:
            return f"{self.kind.name}({args})"
        return f"{self.kind.name}[{self.theta:.6g}]({args})"


# Convenience constructors used by the generators and tests.
def h(q: int) -> Gate:
    return Gate(GateKind.H, (q,))


def x(q: int) -> Gate:
    return Gate(GateKind.X, (q,))


def rx(theta: float, q: int) -> Gate:
    return Gate(GateKind.RX, (q,), float(theta))


def ry(theta: float, q: int) -> Gate:
    return Gate(GateKind.RY, (q,), float(theta))


def rz(theta: float, q: int) -> Gate:
    return Gate(GateKind.RZ, (q,), float(theta))


def phase(theta: float, q: int) -> Gate:
    return Gate(GateKind.PHASE, (q,), float(theta))


def cnot(c: int, t: int) -> Gate:
    return Gate(GateKind.CNOT, (c, t))


def cz(a: int, b: int) -> Gate:
    return Gate(GateKind.CZ, (a, b))


def cphase(theta: float, a: int, b: int) -> Gate:
    return Gate(GateKind.CPHASE, (a, b), float(theta))


def swap(a: int, b: int) -> Gate:
    return Gate(GateKind.SWAP, (a, b))


def measure(q: int) -> Gate:
    return Gate(GateKind.MEASURE, (q,))


@dataclass(frozen=True)
class Circuit:
    """An ordered list of one- and two-qubit gates over ``width`` virtual qubits.

    Per-qubit program order is the gate order, so any list is a valid
    topological order of its own dependency DAG.
    """

    name: str
    width: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self) -> None:
        if self.width < 0:
            raise CircuitError("circuit width must be non-negative")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.width:
                raise CircuitError(f"{g} exceeds circuit width {self.width}")

    def __len__(self) -> int:
        return len(self.gates)

    def two_qubit_gates(self) -> list[Gate]:
        return [g for g in self.gates if g.is_two_qubit]

    def gates_per_qubit(self, count_measure: bool = True) -> np.ndarray:
        counts = np.zeros(self.width, dtype=np.int64)
        for g in self.gates:
            if not count_measure and g.kind is GateKind.MEASURE:
                continue
            for q in g.qubits:
                counts[q] += 1
        return counts


@dataclass(frozen=True)
class Timeslice:
    index: int
    gates: tuple[int, ...]  # indices into Circuit.gates, ascending


@dataclass(frozen=True)
class SlicedCircuit:
    circuit: Circuit
    slices: tuple[Timeslice, ...]
    slice_of: np.ndarray = field(repr=False)  # slice index per gate

    @property
    def depth(self) -> int:
        return len(self.slices)

    @property
    def width(self) -> int:
        return self.circuit.width

    def slice_gates(self, t: int) -> list[Gate]:
        return [self.circuit.gates[i] for i in self.slices[t].gates]

    def interacting_pairs(self, t: int) -> list[tuple[int, int]]:
        """Sorted (i, j), i < j, of qubits sharing a two-qubit gate in slice ``t``."""
        out = []
        for i in self.slices[t].gates:
            g = self.circuit.gates[i]
            if g.is_two_qubit:
                a, b = g.qubits
                out.append((min(a, b), max(a, b)))
        return sorted(out)

    def interaction(self, i: int, j: int, t: int) -> bool:
        key = (min(i, j), max(i, j))
        return key in self.interacting_pairs(t)

    def pair_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Two-qubit interactions as CSR-by-slice arrays ``(ptr, u, v)`` with u < v."""
        ptr = np.zeros(self.depth + 1, dtype=np.int64)
        us: list[int] = []
        vs: list[int] = []
        for t in range(self.depth):
            for a, b in self.interacting_pairs(t):
                us.append(a)
                vs.append(b)
            ptr[t + 1] = len(us)
        return ptr, np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64)

    def flatten(self) -> Circuit:
        """The circuit with gates reordered slice by slice."""
        order = [i for sl in self.slices for i in sl.gates]
        return Circuit(self.circuit.name, self.circuit.width, tuple(self.circuit.gates[i] for i in order))


def slice_circuit(circuit: Circuit) -> SlicedCircuit:
    """ASAP layering: each gate lands one slice after the latest gate on any of its qubits."""
    ready = [0] * circuit.width
    slice_of = np.empty(len(circuit.gates), dtype=np.int64)
    buckets: list[list[int]] = []
    for i, g in enumerate(circuit.gates):
        t = max(ready[q] for q in g.qubits)
        slice_of[i] = t
        for q in g.qubits:
            ready[q] = t + 1
        if t == len(buckets):
            buckets.append([])
        buckets[t].append(i)
    slices = tuple(Timeslice(t, tuple(b)) for t, b in enumerate(buckets))
    slice_of.setflags(write=False)
    return SlicedCircuit(circuit, slices, slice_of)


# Trace cell codes shared by the virtual and physical traces.
IDLE = 0
COMPUTE = 1
COMMUNICATE = 2
CELL_NAMES = {IDLE: "idle", COMPUTE: "compute", COMMUNICATE: "communicate"}


@dataclass(frozen=True)
class TraceGrid:
    """Qubit rows by timeslice columns of cell codes."""

    cells: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape  # type: ignore[return-value]

    def cell(self, q: int, t: int) -> str:
        return CELL_NAMES[int(self.cells[q, t])]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TraceGrid) and np.array_equal(self.cells, other.cells)

    def __hash__(self) -> int:
        return hash(self.cells.tobytes())


def virtual_trace(sliced: SlicedCircuit) -> TraceGrid:
    cells = np.full((sliced.width, sliced.depth), IDLE, dtype=np.uint8)
    for i, g in enumerate(sliced.circuit.gates):
        t = sliced.slice_of[i]
        for q in g.qubits:
            cells[q, t] = COMPUTE
    return TraceGrid(cells)


def depth_lower_bound(circuit: Circuit) -> int:
    if circuit.width == 0 or not circuit.gates:
        return 0
    return int(circuit.gates_per_qubit().max())

