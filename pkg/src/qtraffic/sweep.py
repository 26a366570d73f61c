"""Strong- and weak-scaling experiment grids.

A plan file (YAML or JSON) looks like::

    version: 1
    regime: strong          # or weak
    capacity: 16            # strong: qubits per core
    total_qubits: 512       # weak: qubits in every circuit
    cores: [4, 16, 60]
    families:               # BenchSpec templates; n is filled in per point
      - family: QFT
      - {family: Grover, k: 1}
      - {family: QAOA_WS, kws: 4, beta: 0.1}
    seeds: [0]
    sigma: 0.5
    tau: 1
    horizon: 16
    move_cost: 1.0
    timeout: 600            # seconds per point; null disables
    workers: 1
    traces: true

Every (family, cores, seed) point is generated, sliced, mapped and measured
independently.  Rows come back in grid order whatever the worker count.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import multiprocessing as mp_
import os
import platform
import signal
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from . import __version__, metrics, trace_io
from .benchgen import BenchError, BenchSpec, Family
from .circuit import slice_circuit
from .mapper import (BACKEND, DEFAULT_HORIZON, DEFAULT_MOVE_COST, DEFAULT_SIGMA, DEFAULT_TAU,
                     Architecture, InfeasibleError, map_circuit)

PLAN_VERSION = 1
STRONG = "strong"
WEAK = "weak"
OK = "ok"
INFEASIBLE = "infeasible"
TIMEOUT = "timeout"
ERROR = "error"

DEFAULT_STRONG_CORES = (4, 16, 60)
DEFAULT_WEAK_CORES = (4, 16, 32)
DEFAULT_CAPACITY = 16
DEFAULT_TOTAL_QUBITS = 512
DEFAULT_TIMEOUT = 600.0

SWEEP_COLUMNS = ("family", "regime", "seed", "status") + metrics.CSV_COLUMNS + ("error",)
_TEMPLATE_KEYS = ("family", "k", "layers", "p", "kws", "beta")


class PlanError(ValueError):
    """A sweep plan violates its schema or the regime invariants."""


@dataclass(frozen=True)
class SweepPlan:
    regime: str
    families: tuple[dict, ...]
    cores: tuple[int, ...] = ()
    capacity: int = DEFAULT_CAPACITY
    total_qubits: int = DEFAULT_TOTAL_QUBITS
    seeds: tuple[int, ...] = (0,)
    sigma: float = DEFAULT_SIGMA
    tau: int = DEFAULT_TAU
    horizon: int | None = DEFAULT_HORIZON
    move_cost: float = DEFAULT_MOVE_COST
    timeout: float | None = DEFAULT_TIMEOUT
    workers: int = 1
    traces: bool = True

    def __post_init__(self) -> None:
        if self.regime not in (STRONG, WEAK):
            raise PlanError(f"regime must be 'strong' or 'weak', got {self.regime!r}")
        fams = []
        for f in self.families:
            f = {"family": f} if isinstance(f, str) else dict(f)
            unknown = set(f) - set(_TEMPLATE_KEYS)
            if unknown:
                raise PlanError(f"unknown family template keys {sorted(unknown)}")
            if "family" not in f:
                raise PlanError("family template without a 'family' name")
            try:
                f["family"] = Family.parse(str(f["family"])).value
            except BenchError as exc:
                raise PlanError(str(exc)) from exc
            fams.append(f)
        object.__setattr__(self, "families", tuple(fams))
        cores = tuple(int(c) for c in (self.cores or
                                        (DEFAULT_STRONG_CORES if self.regime == STRONG else DEFAULT_WEAK_CORES)))
        object.__setattr__(self, "cores", cores)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if any(c < 1 for c in cores):
            raise PlanError("core counts must be >= 1")
        if self.capacity < 1 or self.total_qubits < 1:
            raise PlanError("capacity and total_qubits must be >= 1")
        if self.regime == WEAK:
            bad = [c for c in cores if self.total_qubits % c]
            if bad:
                raise PlanError(f"weak scaling needs total_qubits divisible by cores; {bad} do not divide "
                                f"{self.total_qubits}")
        if not 0.0 < self.sigma <= 1.0:
            raise PlanError(f"sigma must lie in (0, 1], got {self.sigma}")
        if self.tau < 1:
            raise PlanError(f"tau must be >= 1, got {self.tau}")
        if self.workers < 1:
            raise PlanError(f"workers must be >= 1, got {self.workers}")
        if self.timeout is not None and self.timeout <= 0:
            raise PlanError("timeout must be positive or null")
        if not self.seeds:
            raise PlanError("at least one seed is required")

    def points(self) -> list["Point"]:
        out = []
        for f in self.families:
            for c in self.cores:
                q = self.capacity if self.regime == STRONG else self.total_qubits // c
                for s in self.seeds:
                    out.append(Point(len(out), f, c, q, c * q, s))
        return out

    def to_dict(self) -> dict:
        return {"version": PLAN_VERSION, "regime": self.regime, "families": [dict(f) for f in self.families],
                "cores": list(self.cores), "capacity": self.capacity, "total_qubits": self.total_qubits,
                "seeds": list(self.seeds), "sigma": self.sigma, "tau": self.tau, "horizon": self.horizon,
                "move_cost": self.move_cost, "timeout": self.timeout, "workers": self.workers,
                "traces": self.traces}

    @classmethod
    def from_dict(cls, d: dict) -> "SweepPlan":
        if not isinstance(d, dict):
            raise PlanError("plan must be a mapping")
        d = dict(d)
        version = d.pop("version", PLAN_VERSION)
        if version != PLAN_VERSION:
            raise PlanError(f"unsupported plan version {version!r}")
        allowed = set(cls.__dataclass_fields__)
        unknown = set(d) - allowed
        if unknown:
            raise PlanError(f"unknown plan keys {sorted(unknown)}")
        if "regime" not in d:
            raise PlanError("plan needs a 'regime'")
        for key in ("families", "cores", "seeds"):
            if key in d:
                if d[key] is None:
                    d[key] = ()
                elif not isinstance(d[key], (list, tuple)):
                    raise PlanError(f"'{key}' must be a list")
                d[key] = tuple(d[key])
        d.setdefault("families", ())
        try:
            return cls(**d)
        except TypeError as exc:
            raise PlanError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | os.PathLike) -> "SweepPlan":
        try:
            data = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise PlanError(f"{path}: {exc}") from exc
        return cls.from_dict(data or {})


@dataclass(frozen=True)
class Point:
    index: int
    template: dict
    cores: int
    capacity: int
    n: int
    seed: int

    def spec(self) -> BenchSpec:
        kw = {k: v for k, v in self.template.items() if k != "family"}
        return BenchSpec(self.template["family"], self.n, seed=self.seed, **kw)

    @property
    def label(self) -> str:
        return f"{self.index:04d}_{self.template['family']}_N{self.n}_C{self.cores}_s{self.seed}"


@dataclass
class PointResult:
    point: Point
    status: str
    row: dict
    report: dict | None = None
    trace: str | None = None
    wall_clock: float = 0.0
    error: str = ""


@dataclass
class SweepResult:
    plan: SweepPlan
    results: list[PointResult] = field(default_factory=list)

    @property
    def rows(self) -> list[dict]:
        return [r.row for r in self.results]

    def csv(self) -> str:
        return metrics.csv_text(self.rows, SWEEP_COLUMNS)

    def metrics_json(self) -> str:
        doc = {"plan": self.plan.to_dict(),
               "rows": [dict(r.row, report=r.report, label=r.point.label) for r in self.results]}
        return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False)


class _Timeout(Exception):
    pass


def _on_alarm(signum, frame):
    raise _Timeout()


def run_point(plan: SweepPlan, point: Point) -> PointResult:
    """generate, slice, map, measure; failures come back as a status, never raised."""
    base = {"family": point.template["family"], "regime": plan.regime, "seed": point.seed,
            "width": point.n, "cores": point.cores, "capacity": point.capacity,
            "sigma": plan.sigma, "tau": plan.tau}
    use_alarm = (plan.timeout is not None and hasattr(signal, "setitimer")
                 and threading.current_thread() is threading.main_thread())
    old = None
    start = time.perf_counter()
    try:
        if use_alarm:
            old = signal.signal(signal.SIGALRM, _on_alarm)
            signal.setitimer(signal.ITIMER_REAL, float(plan.timeout))
        circuit = point.spec().build()
        mp = map_circuit(slice_circuit(circuit), Architecture(point.cores, point.capacity),
                         sigma=plan.sigma, tau=plan.tau, horizon=plan.horizon, move_cost=plan.move_cost)
        report = metrics.analyze(mp)
        trace = trace_io.dumps(mp) if plan.traces else None
        status, err = OK, ""
    except _Timeout:
        report = trace = None
        status, err = TIMEOUT, f"exceeded {plan.timeout:g} s"
    except InfeasibleError as exc:
        report = trace = None
        status, err = INFEASIBLE, str(exc)
    except (BenchError, ValueError) as exc:
        report = trace = None
        status, err = ERROR, f"{type(exc).__name__}: {exc}"
    finally:
        if use_alarm:
            signal.setitimer(signal.ITIMER_REAL, 0)
            signal.signal(signal.SIGALRM, old)
    wall = time.perf_counter() - start
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(base)
    if report is not None:
        row.update(report.row())
    row["status"] = status
    row["error"] = err
    return PointResult(point, status, row, report.to_dict() if report else None, trace, wall, err)


def _work(args):
    plan, point = args
    return run_point(plan, point)


def run_sweep(plan: SweepPlan, out_dir: str | os.PathLike | None = None) -> SweepResult:
    """Run every grid point and, if ``out_dir`` is given, write the result files.

    Files: ``metrics.csv``, ``metrics.json``, ``metadata.json`` (timestamps,
    wall-clock times, environment) and ``traces/<label>.json`` per ok point.
    Everything except ``metadata.json`` is a pure function of the plan.
    """
    started = _dt.datetime.now(_dt.timezone.utc)
    points = plan.points()
    if plan.workers > 1 and len(points) > 1:
        ctx = mp_.get_context("fork") if "fork" in mp_.get_all_start_methods() else mp_.get_context()
        with ctx.Pool(min(plan.workers, len(points))) as pool:
            results = pool.map(_work, [(plan, p) for p in points], chunksize=1)
    else:
        results = [run_point(plan, p) for p in points]
    results.sort(key=lambda r: r.point.index)
    result = SweepResult(plan, results)
    if out_dir is not None:
        write_result(result, out_dir, started)
    return result


def write_result(result: SweepResult, out_dir: str | os.PathLike,
                 started: _dt.datetime | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if result.plan.traces:
        for r in result.results:
            if r.trace is not None:
                trace_io.atomic_write(out / "traces" / f"{r.point.label}.json", r.trace)
    trace_io.atomic_write(out / "metrics.csv", result.csv())
    trace_io.atomic_write(out / "metrics.json", result.metrics_json())
    meta = {
        "started": (started or _dt.datetime.now(_dt.timezone.utc)).isoformat(),
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "version": __version__,
        "backend": BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "points": [{"label": r.point.label, "status": r.status, "wall_clock_s": r.wall_clock}
                   for r in result.results],
    }
    trace_io.atomic_write(out / "metadata.json", json.dumps(meta, indent=1, sort_keys=True))


# Declarative trend assertions over result rows.

class TrendError(ValueError):
    """An assertion names an unknown column or is malformed."""


@dataclass(frozen=True)
class TrendOutcome:
    name: str
    passed: bool
    detail: str


_OPS = {
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "==": lambda a, b: a == b,
}


def _select(rows: Sequence[dict], where: dict | None) -> list[dict]:
    where = where or {}
    return [r for r in rows if r.get("status", OK) == OK and all(r.get(k) == v for k, v in where.items())]


def _check_columns(rows: Sequence[dict], names: Sequence[str]) -> None:
    known = set(SWEEP_COLUMNS)
    for r in rows:
        known.update(r)
    for n in names:
        if n not in known:
            raise TrendError(f"unknown column {n!r}")


def _group(rows: Sequence[dict], keys: Sequence[str]) -> dict[tuple, list[dict]]:
    out: dict[tuple, list[dict]] = {}
    for r in rows:
        out.setdefault(tuple(r.get(k) for k in keys), []).append(r)
    return out


def trend_check(rows: Sequence[dict], assertions: Sequence[dict]) -> list[TrendOutcome]:
    """Evaluate assertions; only rows with status ``ok`` take part.

    Kinds:

    * ``range``: every selected ``column`` value lies in ``[min, max]``.
    * ``monotone``: within each ``group``, ``column`` sorted by ``by`` is
      ``increasing`` or ``decreasing`` (``strict`` optional, default true).
    * ``compare``: for rows matching ``left`` and ``right`` that agree on
      the ``match`` columns, ``left.column <op> right.column``.
    * ``slope``: log-log (or linear with ``log: false``) least-squares slope
      of ``column`` against ``by`` within ``expect +- tol``.

    ``where`` filters rows for every kind.  An assertion that selects no
    rows fails rather than passing vacuously.
    """
    out = []
    for i, a in enumerate(assertions):
        a = dict(a)
        kind = a.get("kind")
        name = a.get("name") or f"{kind}#{i}:{a.get('column')}"
        col = a.get("column")
        if col is None:
            raise TrendError(f"{name}: missing 'column'")
        cols = [col] + [a[k] for k in ("by",) if k in a] + list(a.get("group", ())) + list(a.get("match", ()))
        cols += list((a.get("where") or {}).keys()) + list((a.get("left") or {}).keys()) \
            + list((a.get("right") or {}).keys())
        _check_columns(rows, cols)
        sel = _select(rows, a.get("where"))
        if kind == "range":
            lo, hi = a.get("min", -math.inf), a.get("max", math.inf)
            vals = [r[col] for r in sel if r.get(col) is not None]
            bad = [v for v in vals if not lo <= v <= hi]
            ok = bool(vals) and not bad
            out.append(TrendOutcome(name, ok, f"{len(vals)} values, {len(bad)} outside [{lo}, {hi}]"))
        elif kind == "monotone":
            by = a.get("by")
            if by is None:
                raise TrendError(f"{name}: monotone needs 'by'")
            direction = a.get("direction", "increasing")
            if direction not in ("increasing", "decreasing"):
                raise TrendError(f"{name}: direction must be increasing or decreasing")
            strict = a.get("strict", True)
            ok, notes = bool(sel), []
            for key, grp in sorted(_group(sel, a.get("group", ())).items(), key=lambda kv: str(kv[0])):
                seq = [r[col] for r in sorted(grp, key=lambda r: r[by])]
                if direction == "decreasing":
                    seq = [-v for v in seq]
                good = all((x < y) if strict else (x <= y) for x, y in zip(seq, seq[1:]))
                ok &= good and len(seq) >= 2
                notes.append(f"{key}: {[r[col] for r in sorted(grp, key=lambda r: r[by])]}")
            out.append(TrendOutcome(name, ok, "; ".join(notes)))
        elif kind == "compare":
            op = a.get("op", ">")
            if op not in _OPS:
                raise TrendError(f"{name}: unknown operator {op!r}")
            left, right = _select(sel, a.get("left")), _select(sel, a.get("right"))
            match = tuple(a.get("match", ()))
            rmap = _group(right, match)
            pairs = [(l, r) for l in left for r in rmap.get(tuple(l.get(k) for k in match), ())]
            bad = [(l[col], r[col]) for l, r in pairs if not _OPS[op](l[col], r[col])]
            ok = bool(pairs) and not bad
            out.append(TrendOutcome(name, ok, f"{len(pairs)} pairs, failing {bad}"))
        elif kind == "slope":
            by = a.get("by")
            if by is None:
                raise TrendError(f"{name}: slope needs 'by'")
            xs = np.array([r[by] for r in sel], dtype=float)
            ys = np.array([r[col] for r in sel], dtype=float)
            if xs.size < 2 or np.unique(xs).size < 2:
                out.append(TrendOutcome(name, False, "fewer than two distinct points"))
                continue
            if a.get("log", True):
                xs, ys = np.log(xs), np.log(ys)
            slope = float(np.polyfit(xs, ys, 1)[0])
            expect, tol = float(a["expect"]), float(a.get("tol", 0.15))
            out.append(TrendOutcome(name, abs(slope - expect) <= tol, f"slope {slope:.4f}"))
        else:
            raise TrendError(f"{name}: unknown assertion kind {kind!r}")
    return out


def with_overrides(plan: SweepPlan, **kw: Any) -> SweepPlan:
    """Copy of ``plan`` with the non-None keyword values replaced."""
    return replace(plan, **{k: v for k, v in kw.items() if v is not None})
