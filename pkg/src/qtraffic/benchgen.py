"""Deterministic generators for the benchmark circuit families.

Random problem graphs use ``numpy.random.Generator(PCG64(seed))``.  Stream
discipline: Erdos-Renyi draws one uniform per vertex pair in lexicographic
(i < j) order; Watts-Strogatz draws, for each ring offset ``j = 1..k/2`` and
each vertex ``u`` ascending, one uniform for the rewiring decision and, when
rewiring, one integer for the new endpoint (redrawn until valid).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .circuit import (
    Circuit,
    Gate,
    cnot,
    cphase,
    cz,
    h,
    phase,
    rx,
    ry,
    rz,
    swap,
    x,
)


class BenchError(ValueError):
    """Invalid generator parameters."""


class Family(str, enum.Enum):
    CUCCARO = "Cuccaro"
    GROVER = "Grover"
    GHZ = "GHZ"
    QFT = "QFT"
    QAOA_ER = "QAOA_ER"
    QAOA_WS = "QAOA_WS"
    VQE_HEA1 = "VQE_HEA1"
    VQE_HEA2 = "VQE_HEA2"

    @classmethod
    def parse(cls, name: str) -> "Family":
        for f in cls:
            if f.value.lower() == name.lower() or f.name.lower() == name.lower():
                return f
        raise BenchError(f"unknown benchmark family {name!r}")


@dataclass(frozen=True)
class ProblemGraph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        canon = sorted({(min(u, v), max(u, v)) for u, v in self.edges})
        for u, v in canon:
            if u == v:
                raise BenchError(f"self-loop on vertex {u}")
            if v >= self.n or u < 0:
                raise BenchError(f"edge ({u}, {v}) outside 0..{self.n - 1}")
        object.__setattr__(self, "edges", tuple(canon))

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def _check_width(n: int, minimum: int, family: str) -> None:
    if n < minimum:
        raise BenchError(f"{family} needs at least {minimum} qubits, got {n}")


def gen_ghz(n: int) -> Circuit:
    _check_width(n, 2, "GHZ")
    gates = [h(0)] + [cnot(0, i) for i in range(1, n)]
    return Circuit(f"GHZ_{n}", n, tuple(gates))


def gen_qft(n: int) -> Circuit:
    _check_width(n, 2, "QFT")
    gates: list[Gate] = []
    for q in range(n):
        gates.append(h(q))
        for m in range(q + 1, n):
            gates.append(cphase(math.pi / 2 ** (m - q), q, m))
    for i in range(n // 2):
        gates.append(swap(i, n - 1 - i))
    return Circuit(f"QFT_{n}", n, tuple(gates))


_T = math.pi / 4


def toffoli(a: int, b: int, c: int) -> list[Gate]:
    """Controls ``a``, ``b``, target ``c``: 6 CNOTs and 9 single-qubit gates (T as phase(pi/4))."""
    return [
        h(c),
        cnot(b, c),
        phase(-_T, c),
        cnot(a, c),
        phase(_T, c),
        cnot(b, c),
        phase(-_T, c),
        cnot(a, c),
        phase(_T, b),
        phase(_T, c),
        h(c),
        cnot(a, b),
        phase(_T, a),
        phase(-_T, b),
        cnot(a, b),
    ]


def _maj(c: int, b: int, a: int) -> list[Gate]:
    return [cnot(a, b), cnot(a, c)] + toffoli(c, b, a)


def _uma(c: int, b: int, a: int) -> list[Gate]:
    return toffoli(c, b, a) + [cnot(a, c), cnot(c, b)]


def gen_cuccaro(n: int) -> Circuit:
    """Ripple-carry adder on ``n = 2k + 2`` qubits.

    Layout: ancilla at 0, then interleaved ``b_i = 2i + 1``, ``a_i = 2i + 2``,
    carry-out at ``n - 1``.  Every two-qubit gate spans at most two indices.
    """
    if n < 4 or (n - 2) % 2:
        raise BenchError(f"Cuccaro needs N = 2k + 2 qubits with k >= 1, got {n}")
    k = (n - 2) // 2

    def carry(i: int) -> int:
        return 0 if i == 0 else 2 * i

    gates: list[Gate] = []
    for i in range(k):
        gates += _maj(carry(i), 2 * i + 1, 2 * i + 2)
    gates.append(cnot(2 * k, n - 1))
    for i in reversed(range(k)):
        gates += _uma(carry(i), 2 * i + 1, 2 * i + 2)
    return Circuit(f"Cuccaro_{n}", n, tuple(gates))


def grover_pattern(n: int) -> list[int]:
    """Qubits flipped around the oracle's CZ layer (the marked bitstring's zeros)."""
    return list(range(1, n, 2))


def gen_grover(n: int, k: int = 1) -> Circuit:
    if n < 4 or n % 2:
        raise BenchError(f"Grover needs an even N >= 4, got {n}")
    if k < 1:
        raise BenchError(f"Grover needs k >= 1 iterations, got {k}")
    half = n // 2
    pattern = grover_pattern(n)
    pairs = [cz(i, i + half) for i in range(half)]
    every = range(n)
    gates: list[Gate] = [h(q) for q in every]
    for _ in range(k):
        gates += [x(q) for q in pattern]
        gates += pairs
        gates += [x(q) for q in pattern]
        gates += [h(q) for q in every]
        gates += [x(q) for q in every]
        gates += pairs
        gates += [x(q) for q in every]
        gates += [h(q) for q in every]
    return Circuit(f"Grover_{n}_k{k}", n, tuple(gates))


def gen_qaoa(graph: ProblemGraph, layers: int = 1, gamma: float = math.pi / 8,
             beta: float = math.pi / 4, name: str | None = None) -> Circuit:
    if graph.n < 1:
        raise BenchError("QAOA needs a nonempty graph")
    if layers < 1:
        raise BenchError(f"QAOA needs l >= 1 layers, got {layers}")
    n = graph.n
    gates: list[Gate] = [h(q) for q in range(n)]
    for _ in range(layers):
        for u, v in graph.edges:
            gates += [cnot(u, v), rz(2 * gamma, v), cnot(u, v)]
        gates += [rx(2 * beta, q) for q in range(n)]
    return Circuit(name or f"QAOA_{n}_l{layers}", n, tuple(gates))


def gen_vqe_hea(n: int, layers: int = 1, variant: str = "sequential", seed: int = 0) -> Circuit:
    """Hardware-efficient ansatz: RX, RY on every qubit then a CNOT entangler per layer.

    ``sequential`` chains CNOT(i, i+1); ``parallel`` applies even pairs then odd pairs.
    Rotation angles are drawn uniformly in [0, 2*pi) from ``seed``.
    """
    _check_width(n, 2, "VQE")
    if layers < 1:
        raise BenchError(f"VQE needs l >= 1 layers, got {layers}")
    if variant not in ("sequential", "parallel"):
        raise BenchError(f"unknown HEA variant {variant!r}")
    angles = np.random.Generator(np.random.PCG64(seed)).uniform(0.0, 2 * math.pi, size=(layers, 2, n))
    if variant == "sequential":
        pairs = [(i, i + 1) for i in range(n - 1)]
    else:
        pairs = [(i, i + 1) for i in range(0, n - 1, 2)] + [(i, i + 1) for i in range(1, n - 1, 2)]
    gates: list[Gate] = []
    for layer in range(layers):
        gates += [rx(float(angles[layer, 0, q]), q) for q in range(n)]
        gates += [ry(float(angles[layer, 1, q]), q) for q in range(n)]
        gates += [cnot(a, b) for a, b in pairs]
    tag = "HEA1" if variant == "sequential" else "HEA2"
    return Circuit(f"VQE_{tag}_{n}_l{layers}", n, tuple(gates))


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_graph_er(n: int, p: float = 0.2, seed: int = 0) -> ProblemGraph:
    _check_width(n, 2, "Erdos-Renyi graph")
    if not 0.0 <= p <= 1.0:
        raise BenchError(f"edge probability must lie in [0, 1], got {p}")
    iu, ju = np.triu_indices(n, k=1)
    draws = _rng(seed).random(iu.size)
    keep = draws < p
    return ProblemGraph(n, tuple(zip(iu[keep].tolist(), ju[keep].tolist())))


def gen_graph_ws(n: int, k: int = 4, beta: float = 0.1, seed: int = 0) -> ProblemGraph:
    _check_width(n, 2, "Watts-Strogatz graph")
    if k % 2 or k < 0 or k >= n:
        raise BenchError(f"ring degree must be even and < N, got k={k}, N={n}")
    if not 0.0 <= beta <= 1.0:
        raise BenchError(f"rewiring probability must lie in [0, 1], got {beta}")
    rng = _rng(seed)
    adj: list[set[int]] = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if rng.random() >= beta or v not in adj[u]:
                continue
            if len(adj[u]) >= n - 1:
                continue
            w = int(rng.integers(n))
            while w == u or w in adj[u]:
                w = int(rng.integers(n))
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    return ProblemGraph(n, tuple(edges))


@dataclass(frozen=True)
class BenchSpec:
    family: Family
    n: int
    k: int = 1
    layers: int = 1
    seed: int = 0
    p: float = 0.2
    kws: int = 4
    beta: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family.parse(self.family) if isinstance(self.family, str) else self.family)
        if self.k < 1:
            raise BenchError(f"k must be >= 1, got {self.k}")
        if self.layers < 1:
            raise BenchError(f"l must be >= 1, got {self.layers}")
        if not 0.0 <= self.p <= 1.0 or not 0.0 <= self.beta <= 1.0:
            raise BenchError("probabilities must lie in [0, 1]")

    def build(self) -> Circuit:
        return generate(self)

    def to_dict(self) -> dict:
        return {"family": self.family.value, "n": self.n, "k": self.k, "layers": self.layers,
                "seed": self.seed, "p": self.p, "kws": self.kws, "beta": self.beta}


def generate(spec: BenchSpec) -> Circuit:
    f = spec.family
    if f is Family.GHZ:
        return gen_ghz(spec.n)
    if f is Family.QFT:
        return gen_qft(spec.n)
    if f is Family.CUCCARO:
        return gen_cuccaro(spec.n)
    if f is Family.GROVER:
        return gen_grover(spec.n, spec.k)
    if f is Family.QAOA_ER:
        g = gen_graph_er(spec.n, spec.p, spec.seed)
        return gen_qaoa(g, spec.layers, name=f"QAOA_ER_{spec.n}_l{spec.layers}_s{spec.seed}")
    if f is Family.QAOA_WS:
        g = gen_graph_ws(spec.n, spec.kws, spec.beta, spec.seed)
        return gen_qaoa(g, spec.layers, name=f"QAOA_WS_{spec.n}_l{spec.layers}_s{spec.seed}")
    if f is Family.VQE_HEA1:
        return gen_vqe_hea(spec.n, spec.layers, "sequential", spec.seed)
    if f is Family.VQE_HEA2:
        return gen_vqe_hea(spec.n, spec.layers, "parallel", spec.seed)
    raise BenchError(f"unhandled family {f}")


def all_families() -> Iterable[Family]:
    return list(Family)
