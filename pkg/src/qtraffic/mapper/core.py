"""Time-sliced qubit-to-core mapping with exponentially decaying lookahead."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..circuit import COMMUNICATE, COMPUTE, IDLE, GateKind, SlicedCircuit, TraceGrid
from . import _backend
from .teleport import Move, TeleportEvent, teleport_schedule

DEFAULT_SIGMA = 0.5
DEFAULT_TAU = 1
DEFAULT_HORIZON = 16
DEFAULT_MOVE_COST = 1.0
GAIN_TOL = 1e-9


class InfeasibleError(RuntimeError):
    """No capacity-respecting map co-locates every must-link pair of a slice."""

    def __init__(self, message: str, slice_index: int | None = None,
                 component: tuple[int, ...] | None = None):
        super().__init__(message)
        self.slice_index = slice_index
        self.component = component


@dataclass(frozen=True)
class Architecture:
    cores: int
    capacity: int

    def __post_init__(self) -> None:
        if self.cores < 1 or self.capacity < 1:
            raise ValueError(f"need cores >= 1 and capacity >= 1, got {self.cores} x {self.capacity}")

    @property
    def n_physical(self) -> int:
        return self.cores * self.capacity

    def core_of_slot(self, p: int) -> int:
        return p // self.capacity

    def check_width(self, n: int) -> None:
        if n > self.n_physical:
            raise InfeasibleError(f"{n} qubits do not fit on {self.cores} cores x {self.capacity}")


@dataclass(frozen=True)
class Csr:
    ptr: np.ndarray
    idx: np.ndarray
    val: np.ndarray


def _symmetric_csr(n: int, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> Csr:
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    vals = np.concatenate([w, w])
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=ptr[1:])
    return Csr(ptr, cols.astype(np.int64), vals.astype(np.float64))


@dataclass(frozen=True)
class LookaheadWeights:
    """Decayed future-interaction weights for one slice plus its must-link pairs."""

    n: int
    slice_index: int
    weights: Csr
    must_link: Csr

    def weight(self, i: int, j: int) -> float:
        row = slice(self.weights.ptr[i], self.weights.ptr[i + 1])
        hit = np.flatnonzero(self.weights.idx[row] == j)
        return float(self.weights.val[row][hit[0]]) if hit.size else 0.0

    def is_must_link(self, i: int, j: int) -> bool:
        row = self.must_link.idx[self.must_link.ptr[i]:self.must_link.ptr[i + 1]]
        return bool(np.any(row == j))

    def pairs(self) -> dict[tuple[int, int], float]:
        out = {}
        for i in range(self.n):
            for k in range(self.weights.ptr[i], self.weights.ptr[i + 1]):
                j = int(self.weights.idx[k])
                if i < j:
                    out[(i, j)] = float(self.weights.val[k])
        return out

    def must_link_pairs(self) -> list[tuple[int, int]]:
        out = []
        for i in range(self.n):
            for k in range(self.must_link.ptr[i], self.must_link.ptr[i + 1]):
                j = int(self.must_link.idx[k])
                if i < j:
                    out.append((i, j))
        return out

    @classmethod
    def from_pairs(cls, n: int, weights: dict[tuple[int, int], float],
                   must_link: list[tuple[int, int]] = (), slice_index: int = 0) -> "LookaheadWeights":
        keys = sorted((min(a, b), max(a, b)) for a, b in weights)
        w = {(min(a, b), max(a, b)): float(x) for (a, b), x in weights.items()}
        u = np.array([k[0] for k in keys], dtype=np.int64)
        v = np.array([k[1] for k in keys], dtype=np.int64)
        wv = np.array([w[k] for k in keys], dtype=np.float64)
        ml = sorted({(min(a, b), max(a, b)) for a, b in must_link})
        mu = np.array([k[0] for k in ml], dtype=np.int64)
        mv = np.array([k[1] for k in ml], dtype=np.int64)
        return cls(n, slice_index, _symmetric_csr(n, u, v, wv),
                   _symmetric_csr(n, mu, mv, np.ones(len(ml))))


class _PairIndex:
    """Per-slice two-qubit interactions flattened for fast window queries."""

    def __init__(self, sliced: SlicedCircuit):
        self.n = sliced.width
        self.depth = sliced.depth
        self.ptr, self.u, self.v = sliced.pair_arrays()
        self.slice_of = np.repeat(np.arange(self.depth, dtype=np.int64), np.diff(self.ptr))

    def weights(self, t: int, sigma: float, horizon: int | None) -> LookaheadWeights:
        hi = self.depth if horizon is None else min(self.depth, t + horizon)
        lo_k, hi_k = self.ptr[t], self.ptr[hi]
        u, v = self.u[lo_k:hi_k], self.v[lo_k:hi_k]
        w = sigma ** (self.slice_of[lo_k:hi_k] - t).astype(np.float64)
        keys, inv = np.unique(u * self.n + v, return_inverse=True)
        wsum = np.bincount(inv.ravel(), weights=w, minlength=keys.size)
        weights = _symmetric_csr(self.n, keys // self.n, keys % self.n, wsum)
        mu, mv = self.u[self.ptr[t]:self.ptr[t + 1]], self.v[self.ptr[t]:self.ptr[t + 1]]
        must = _symmetric_csr(self.n, mu, mv, np.ones(mu.size))
        return LookaheadWeights(self.n, t, weights, must)


def lookahead_weights(sliced: SlicedCircuit, t: int, sigma: float = DEFAULT_SIGMA,
                      horizon: int | None = None) -> LookaheadWeights:
    """weight(i, j) = sum over m >= t of [i, j interact in slice m] * sigma ** (m - t).

    ``horizon`` truncates the sum to slices ``t .. t + horizon - 1``; ``None``
    keeps every remaining slice.
    """
    if not 0.0 < sigma <= 1.0:
        raise ValueError(f"lookahead decay must lie in (0, 1], got {sigma}")
    if not 0 <= t < sliced.depth:
        raise IndexError(f"slice {t} outside 0..{sliced.depth - 1}")
    return _PairIndex(sliced).weights(t, sigma, horizon)


def _components(n: int, must: Csr) -> list[list[int]]:
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for k in range(must.ptr[i], must.ptr[i + 1]):
            ra, rb = find(i), find(int(must.idx[k]))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for q in range(n):
        groups.setdefault(find(q), []).append(q)
    return [g for g in groups.values() if len(g) > 1]


def _violations(core: np.ndarray, must: Csr) -> int:
    rows = np.repeat(np.arange(len(core)), np.diff(must.ptr))
    return int(np.count_nonzero(core[rows] != core[must.idx])) // 2


def _repack(core: np.ndarray, comps: list[list[int]], arch: Architecture) -> np.ndarray | None:
    """First-fit-decreasing placement of must-link components, keeping loose qubits in place."""
    new = np.full(len(core), -1, dtype=np.int64)
    room = np.full(arch.cores, arch.capacity, dtype=np.int64)
    for comp in sorted(comps, key=lambda c: (-len(c), c[0])):
        here = np.bincount(core[comp], minlength=arch.cores)
        order = sorted(range(arch.cores), key=lambda c: (-here[c], c))
        target = next((c for c in order if room[c] >= len(comp)), None)
        if target is None:
            return None
        new[comp] = target
        room[target] -= len(comp)
    for q in np.flatnonzero(new < 0):
        c = int(core[q])
        if room[c] == 0:
            c = int(np.argmax(room))
        new[q] = c
        room[c] -= 1
    return new


def partition_slice(prev: np.ndarray, weights: LookaheadWeights, arch: Architecture,
                    move_cost: float = DEFAULT_MOVE_COST, refine=None) -> tuple[np.ndarray, int]:
    """Capacity-respecting map co-locating every must-link pair, seeded from ``prev``.

    Each relocated qubit adds ``move_cost`` to a candidate's cut-weight delta.
    Returns the new map and the number of single-qubit relocations made by the
    local search.  Raises ``InfeasibleError`` naming the slice and component
    when no placement exists.
    """
    refine = refine or _backend.refine
    prev = np.asarray(prev, dtype=np.int64)
    t = weights.slice_index
    comps = _components(weights.n, weights.must_link)
    for comp in comps:
        if len(comp) > arch.capacity:
            raise InfeasibleError(
                f"slice {t}: must-link component {comp} exceeds core capacity {arch.capacity}",
                t, tuple(comp))
    w, m = weights.weights, weights.must_link
    core, moves, viol = refine(prev, arch.cores, arch.capacity, w.ptr, w.idx, w.val,
                               m.ptr, m.idx, GAIN_TOL, move_cost)
    if viol > 0:
        packed = _repack(np.asarray(core), comps, arch)
        if packed is None:
            raise InfeasibleError(f"slice {t}: must-link components cannot be packed into "
                                  f"{arch.cores} cores x {arch.capacity}", t, tuple(comps[0]))
        core, more, viol = refine(packed, arch.cores, arch.capacity, w.ptr, w.idx, w.val,
                                  m.ptr, m.idx, GAIN_TOL, move_cost)
        moves += more + int(np.count_nonzero(packed != np.asarray(prev)))
    core = np.asarray(core, dtype=np.int64)
    if viol > 0 or _violations(core, m) > 0:
        raise InfeasibleError(f"slice {t}: local search left {viol} must-link violations", t)
    return core, moves


@dataclass(frozen=True)
class Residency:
    qubit: int
    core: int
    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class MappedProgram:
    """Per-slice placement, scheduled teleports and the resulting physical timeline.

    ``gate_time[g]`` is the physical timeslice of gate ``g`` and
    ``gate_slots[g]`` the physical qubits it ran on (second entry -1 for
    single-qubit gates).
    """

    sliced: SlicedCircuit
    arch: Architecture
    sigma: float
    tau: int
    horizon: int | None
    move_cost: float
    initial: np.ndarray
    assignment: np.ndarray
    events: tuple[TeleportEvent, ...]
    waves: np.ndarray
    gate_time: np.ndarray
    gate_slots: np.ndarray
    t_exec: int

    @property
    def circuit(self):
        return self.sliced.circuit

    @property
    def n_teleports(self) -> int:
        return len(self.events)

    @cached_property
    def trace(self) -> TraceGrid:
        cells = np.full((self.arch.n_physical, self.t_exec), IDLE, dtype=np.uint8)
        for e in self.events:
            cells[e.from_slot, e.time:e.time + self.tau] = COMMUNICATE
            cells[e.to_slot, e.time:e.time + self.tau] = COMMUNICATE
        for g in range(len(self.gate_time)):
            for p in self.gate_slots[g]:
                if p >= 0:
                    cells[p, self.gate_time[g]] = COMPUTE
        cells.setflags(write=False)
        return TraceGrid(cells)

    def compute_per_physical(self, count_measure: bool = True) -> np.ndarray:
        slots = self.gate_slots
        if not count_measure:
            keep = np.array([g.kind is not GateKind.MEASURE for g in self.circuit.gates], dtype=bool)
            slots = slots[keep] if len(slots) else slots
        flat = slots.ravel()
        return np.bincount(flat[flat >= 0], minlength=self.arch.n_physical).astype(np.int64)

    @cached_property
    def teleports_per_physical(self) -> np.ndarray:
        out = np.zeros(self.arch.n_physical, dtype=np.int64)
        for e in self.events:
            out[e.from_slot] += 1
        return out

    @cached_property
    def teleports_per_qubit(self) -> np.ndarray:
        out = np.zeros(self.sliced.width, dtype=np.int64)
        for e in self.events:
            out[e.qubit] += 1
        return out

    @cached_property
    def teleports_per_core(self) -> np.ndarray:
        out = np.zeros(self.arch.cores, dtype=np.int64)
        for e in self.events:
            out[e.from_core] += 1
            out[e.to_core] += 1
        return out

    @cached_property
    def teleports_per_time(self) -> np.ndarray:
        out = np.zeros(self.t_exec, dtype=np.int64)
        for e in self.events:
            out[e.time] += 1
        return out

    def compute_per_time(self, count_measure: bool = True) -> np.ndarray:
        out = np.zeros(self.t_exec, dtype=np.int64)
        for g, gate in enumerate(self.circuit.gates):
            if not count_measure and gate.kind is GateKind.MEASURE:
                continue
            out[self.gate_time[g]] += len(gate.qubits)
        return out

    @cached_property
    def residencies(self) -> tuple[Residency, ...]:
        """Core-residency intervals per virtual qubit; a move lands when its wave ends."""
        by_qubit: dict[int, list[TeleportEvent]] = {}
        for e in self.events:
            by_qubit.setdefault(e.qubit, []).append(e)
        out = []
        for q in range(self.sliced.width):
            start, core = 0, int(self.initial[q])
            for e in sorted(by_qubit.get(q, ()), key=lambda e: e.time):
                end = e.time + self.tau
                out.append(Residency(q, core, start, end))
                start, core = end, e.to_core
            out.append(Residency(q, core, start, self.t_exec))
        return tuple(out)

    def moves_between(self, t: int) -> int:
        """Qubits whose core differs between slice ``t - 1`` (initial map for t = 0) and ``t``."""
        before = self.initial if t == 0 else self.assignment[t - 1]
        return int(np.count_nonzero(before != self.assignment[t]))

    def check(self) -> None:
        """Raise AssertionError if any mapping invariant fails."""
        a = self.assignment
        for t in range(self.sliced.depth):
            occ = np.bincount(a[t], minlength=self.arch.cores)
            assert occ.max(initial=0) <= self.arch.capacity, f"capacity exceeded in slice {t}"
            for g in self.sliced.slice_gates(t):
                if g.is_two_qubit:
                    i, j = g.qubits
                    assert a[t, i] == a[t, j], f"{g} split across cores in slice {t}"
        moved = sum(self.moves_between(t) for t in range(self.sliced.depth))
        assert moved == len(self.events), f"{moved} core changes vs {len(self.events)} events"
        for g, gate in enumerate(self.circuit.gates):
            t = int(self.sliced.slice_of[g])
            for q, p in zip(gate.qubits, self.gate_slots[g]):
                assert p // self.arch.capacity == a[t, q], f"gate {g} ran off its core"
        assert int(self.teleports_per_time.sum()) == len(self.events)
        assert int(self.teleports_per_core.sum()) == 2 * len(self.events)
        cells = self.trace.cells
        comm = np.zeros_like(cells, dtype=bool)
        for e in self.events:
            comm[e.from_slot, e.time:e.time + self.tau] = True
            comm[e.to_slot, e.time:e.time + self.tau] = True
        assert np.array_equal(comm, cells == COMMUNICATE), "communicate cells disagree with events"


def map_circuit(sliced: SlicedCircuit, arch: Architecture, sigma: float = DEFAULT_SIGMA,
                tau: int = DEFAULT_TAU, horizon: int | None = DEFAULT_HORIZON,
                move_cost: float = DEFAULT_MOVE_COST, refine=None) -> MappedProgram:
    """Map every slice onto ``arch`` and lay out the physical timeline.

    Qubit ``i`` starts on core ``i // Q``.  Slice 0 keeps that placement unless
    it splits a slice-0 gate; every later slice is refined from its
    predecessor.  Moves ahead of a slice run as teleport waves of ``tau``
    timeslices each; gates of the slice whose qubits do not move execute
    alongside the first wave.
    """
    if not 0.0 < sigma <= 1.0:
        raise ValueError(f"lookahead decay must lie in (0, 1], got {sigma}")
    if tau < 1:
        raise ValueError(f"communication duration must be >= 1 timeslice, got {tau}")
    n = sliced.width
    arch.check_width(n)
    index = _PairIndex(sliced)
    initial = np.arange(n, dtype=np.int64) // arch.capacity
    assignment = np.empty((sliced.depth, n), dtype=np.int64)
    prev = initial
    for t in range(sliced.depth):
        w = index.weights(t, sigma, horizon)
        if t == 0 and _violations(initial, w.must_link) == 0:
            cur = initial.copy()
        else:
            cur, _ = partition_slice(prev, w, arch, move_cost, refine)
        assignment[t] = cur
        prev = cur
    assignment.setflags(write=False)
    return _lay_out(sliced, arch, sigma, tau, horizon, move_cost, initial, assignment)


def schedule_assignment(sliced: SlicedCircuit, arch: Architecture, assignment: np.ndarray,
                        tau: int = DEFAULT_TAU, sigma: float = DEFAULT_SIGMA,
                        horizon: int | None = DEFAULT_HORIZON,
                        move_cost: float = DEFAULT_MOVE_COST) -> MappedProgram:
    """Lay out a given per-slice assignment (depth x N) on the physical timeline.

    The mapper knobs are only recorded on the result.  Raises ValueError if a
    slice overfills a core or splits a two-qubit gate.
    """
    if tau < 1:
        raise ValueError(f"communication duration must be >= 1 timeslice, got {tau}")
    n = sliced.width
    arch.check_width(n)
    assignment = np.array(assignment, dtype=np.int64).reshape(sliced.depth, n)
    if assignment.size and (assignment.min() < 0 or assignment.max() >= arch.cores):
        raise ValueError("assignment names a core outside the architecture")
    for t in range(sliced.depth):
        if np.bincount(assignment[t], minlength=arch.cores).max(initial=0) > arch.capacity:
            raise ValueError(f"assignment overfills a core in slice {t}")
        for g in sliced.slice_gates(t):
            if g.is_two_qubit and assignment[t, g.qubits[0]] != assignment[t, g.qubits[1]]:
                raise ValueError(f"assignment splits {g} in slice {t}")
    assignment.setflags(write=False)
    initial = np.arange(n, dtype=np.int64) // arch.capacity
    return _lay_out(sliced, arch, sigma, tau, horizon, move_cost, initial, assignment)


def _lay_out(sliced: SlicedCircuit, arch: Architecture, sigma: float, tau: int,
             horizon: int | None, move_cost: float, initial: np.ndarray, assignment: np.ndarray) -> MappedProgram:
    n = sliced.width
    gates = sliced.circuit.gates
    slots = np.full(arch.n_physical, -1, dtype=np.int64)
    slots[:n] = np.arange(n)
    loc = np.arange(n, dtype=np.int64)
    gate_time = np.zeros(len(gates), dtype=np.int64)
    gate_slots = np.full((len(gates), 2), -1, dtype=np.int64)
    waves = np.zeros(sliced.depth, dtype=np.int64)
    events: list[TeleportEvent] = []
    now = 0
    prev = initial
    for t in range(sliced.depth):
        cur = assignment[t]
        movers = np.flatnonzero(prev != cur)
        moved = set(movers.tolist())
        block = 0
        if movers.size:
            moves = [Move(int(q), int(prev[q]), int(cur[q])) for q in movers]
            evs, slots, n_waves = teleport_schedule(moves, slots, arch.capacity, tau, t, now)
            events.extend(evs)
            for e in evs:
                loc[e.qubit] = e.to_slot
            waves[t] = n_waves
            block = n_waves * tau
        late = False
        for g in sliced.slices[t].gates:
            qs = gates[g].qubits
            if block and any(q in moved for q in qs):
                gate_time[g] = now + block
                late = True
            else:
                gate_time[g] = now
            gate_slots[g, :len(qs)] = loc[list(qs)]
        now += block + 1 if (late or not block) else block
        prev = cur
    for a in (initial, waves, gate_time, gate_slots):
        a.setflags(write=False)
    return MappedProgram(sliced, arch, sigma, tau, horizon, move_cost, initial, assignment, tuple(events),
                         waves, gate_time, gate_slots, now)
