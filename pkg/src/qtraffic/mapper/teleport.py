"""Packing of inter-core moves into parallel teleportation waves."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

SWAP = "swap"
IDLE = "idle"
CYCLE = "cycle"


@dataclass(frozen=True)
class TeleportEvent:
    """One virtual qubit moving between cores ahead of ``slice``.

    ``partner`` is the virtual qubit travelling the opposite way (teleport-swap),
    the next qubit of a rotation cycle, or -1 when an idle physical qubit at the
    destination receives the state.
    """

    qubit: int
    from_core: int
    to_core: int
    slice: int
    from_slot: int
    to_slot: int
    wave: int
    time: int
    partner: int
    kind: str

    def __post_init__(self) -> None:
        if self.from_core == self.to_core:
            raise ValueError(f"teleport of qubit {self.qubit} within core {self.from_core}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Move:
    qubit: int
    from_core: int
    to_core: int


def teleport_schedule(moves: list[Move], slots: np.ndarray, capacity: int,
                      tau: int = 1, slice_index: int = 0, start_time: int = 0
                      ) -> tuple[list[TeleportEvent], np.ndarray, int]:
    """Greedy wave packing of ``moves`` against the physical occupancy ``slots``.

    ``slots[p]`` is the virtual qubit held by physical qubit ``p`` (core
    ``p // capacity``) or -1 when idle.  Per wave a physical qubit takes part
    in at most one teleportation.  Opposite movers between the same two cores
    are paired first; remaining movers take idle slots free at wave start; if a
    wave would otherwise be empty, one rotation cycle among full cores runs.

    Returns the events, the updated occupancy and the number of waves; the
    communication block lasts ``waves * tau`` timeslices.
    """
    slots = np.array(slots, dtype=np.int64, copy=True)
    loc = {int(v): p for p, v in enumerate(slots.tolist()) if v >= 0}
    pending = sorted(moves, key=lambda m: m.qubit)
    for m in pending:
        if loc[m.qubit] // capacity != m.from_core:
            raise ValueError(f"qubit {m.qubit} is not on core {m.from_core}")
    events: list[TeleportEvent] = []
    wave = 0

    def emit(m: Move, src: int, dst: int, partner: int, kind: str) -> None:
        events.append(TeleportEvent(m.qubit, m.from_core, m.to_core, slice_index, src, dst,
                                    wave, start_time + wave * tau, partner, kind))

    while pending:
        busy: set[int] = set()
        done: set[int] = set()
        by_route: dict[tuple[int, int], list[Move]] = {}
        for m in pending:
            by_route.setdefault((m.from_core, m.to_core), []).append(m)

        for a in pending:
            if a.qubit in done:
                continue
            back = by_route.get((a.to_core, a.from_core), ())
            b = next((m for m in back if m.qubit not in done), None)
            if b is None:
                continue
            pa, pb = loc[a.qubit], loc[b.qubit]
            emit(a, pa, pb, b.qubit, SWAP)
            emit(b, pb, pa, a.qubit, SWAP)
            slots[pa], slots[pb] = b.qubit, a.qubit
            loc[a.qubit], loc[b.qubit] = pb, pa
            busy.update((pa, pb))
            done.update((a.qubit, b.qubit))

        free: dict[int, list[int]] = {}
        for p in np.flatnonzero(slots < 0).tolist():
            if p not in busy:
                free.setdefault(p // capacity, []).append(p)
        for a in pending:
            if a.qubit in done or not free.get(a.to_core):
                continue
            dst = free[a.to_core].pop(0)
            src = loc[a.qubit]
            emit(a, src, dst, -1, IDLE)
            slots[dst], slots[src] = a.qubit, -1
            loc[a.qubit] = dst
            busy.update((src, dst))
            done.add(a.qubit)

        if not done:
            cycle = _find_cycle(pending)
            targets = [loc[m.qubit] for m in cycle]
            for i, m in enumerate(cycle):
                nxt = cycle[(i + 1) % len(cycle)]
                emit(m, targets[i], targets[(i + 1) % len(cycle)], nxt.qubit, CYCLE)
            for i, m in enumerate(cycle):
                dst = targets[(i + 1) % len(cycle)]
                slots[dst] = m.qubit
                loc[m.qubit] = dst
                done.add(m.qubit)

        pending = [m for m in pending if m.qubit not in done]
        wave += 1
    return events, slots, wave


def _find_cycle(pending: list[Move]) -> list[Move]:
    """Movers ``m1: A->B, m2: B->C, ..., mk: X->A`` with each step the lowest-index leaver."""
    leaving: dict[int, Move] = {}
    for m in pending:
        leaving.setdefault(m.from_core, m)
    chain = [pending[0]]
    seen = {pending[0].from_core: 0}
    while True:
        nxt = leaving.get(chain[-1].to_core)
        if nxt is None:
            raise RuntimeError("teleport deadlock: destination full with no departing qubit")
        if nxt.from_core in seen:
            return chain[seen[nxt.from_core]:]
        seen[nxt.from_core] = len(chain)
        chain.append(nxt)
