"""Time the refinement kernel: compiled extension vs pure Python.

Two levels are measured:

* ``kernel``: refine() alone on every slice of a circuit, fed identical
  inputs for both backends;
* ``map``: the whole map_circuit() call with each backend injected.

Usage::

    python3 benchmarks/bench_refine.py [--family QFT] [--sizes 64 128 256] [--repeat 3] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time

import numpy as np

from qtraffic.benchgen import BenchSpec, Family
from qtraffic.circuit import slice_circuit
from qtraffic.mapper import Architecture, map_circuit
from qtraffic.mapper import _backend
from qtraffic.mapper.core import GAIN_TOL, _PairIndex


def _kernel_inputs(sliced, arch, sigma=0.5, horizon=16):
    index = _PairIndex(sliced)
    prev = np.arange(sliced.width, dtype=np.int64) // arch.capacity
    out = []
    for t in range(sliced.depth):
        w = index.weights(t, sigma, horizon)
        out.append((prev, arch.cores, arch.capacity, w.weights.ptr, w.weights.idx, w.weights.val,
                    w.must_link.ptr, w.must_link.idx, GAIN_TOL, 1.0))
    return out


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(family: Family, sizes: list[int], capacity: int, repeat: int) -> list[dict]:
    rows = []
    for n in sizes:
        cores = -(-n // capacity)
        arch = Architecture(cores, capacity)
        sliced = slice_circuit(BenchSpec(family, n).build())
        inputs = _kernel_inputs(sliced, arch)
        row = {"family": family.value, "n": n, "cores": cores, "depth": sliced.depth}
        for name, fn in (("python", _backend.python_refine), ("cython", _backend.compiled_refine)):
            if fn is None:
                continue
            row[f"kernel_{name}_s"] = _best_of(lambda: [fn(*a) for a in inputs], repeat)
            row[f"map_{name}_s"] = _best_of(lambda: map_circuit(sliced, arch, refine=fn), repeat)
        if "kernel_cython_s" in row:
            row["kernel_speedup"] = row["kernel_python_s"] / row["kernel_cython_s"]
            row["map_speedup"] = row["map_python_s"] / row["map_cython_s"]
            a = map_circuit(sliced, arch, refine=_backend.python_refine)
            b = map_circuit(sliced, arch, refine=_backend.compiled_refine)
            row["identical"] = bool(np.array_equal(a.assignment, b.assignment) and a.events == b.events)
        rows.append(row)
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="QFT")
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--capacity", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the rows here")
    args = ap.parse_args(argv)
    if _backend.compiled_refine is None:
        print("compiled kernel not importable; timing the Python backend only", file=sys.stderr)
    rows = bench(Family.parse(args.family), args.sizes, args.capacity, args.repeat)
    cols = ["family", "n", "cores", "depth", "kernel_python_s", "kernel_cython_s", "kernel_speedup",
            "map_python_s", "map_cython_s", "map_speedup", "identical"]
    cols = [c for c in cols if any(c in r for r in rows)]
    print("  ".join(f"{c:>15}" for c in cols))
    for r in rows:
        cells = []
        for c in cols:
            v = r.get(c, "")
            cells.append(f"{v:>15.4f}" if isinstance(v, float) else f"{v!s:>15}")
        print("  ".join(cells))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"python": platform.python_version(), "rows": rows}, fh, indent=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
