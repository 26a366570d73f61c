"""``qtraffic`` command line: generate, map, analyze, sweep, render.

Exit codes: 0 ok, 1 trend assertions failed, 2 usage or malformed input,
3 infeasible mapping, 4 I/O failure.  Errors go to stderr as a single JSON
line ``{"error": kind, "exit": code, "message": text}``.

Each subcommand accepts ``--config FILE`` (YAML or JSON mapping of option
names, optionally with ``version: 1``); explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import __version__, metrics, qasm, render, sweep, trace_io
from .benchgen import BenchError, BenchSpec, Family
from .circuit import CircuitError, slice_circuit
from .mapper import (DEFAULT_HORIZON, DEFAULT_MOVE_COST, DEFAULT_SIGMA, DEFAULT_TAU, Architecture,
                     InfeasibleError, map_circuit)

EXIT_OK = 0
EXIT_TREND = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4
CONFIG_VERSION = 1

log = logging.getLogger("qtraffic")


class CliError(Exception):
    def __init__(self, kind: str, code: int, message: str):
        super().__init__(message)
        self.kind = kind
        self.code = code


def _usage(msg: str) -> CliError:
    return CliError("usage", EXIT_USAGE, msg)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise _usage(f"{self.prog}: {message}")


# Option defaults live here rather than in argparse so a config file can tell
# "flag given" from "flag omitted".
DEFAULTS: dict[str, dict[str, Any]] = {
    "generate": {"family": None, "n": None, "k": 1, "layers": 1, "seed": 0, "p": 0.2, "kws": 4,
                 "beta": 0.1, "output": None},
    "map": {"k": 1, "layers": 1, "seed": 0, "p": 0.2, "kws": 4, "beta": 0.1, "cores": 1, "capacity": None,
            "sigma": DEFAULT_SIGMA, "tau": DEFAULT_TAU, "horizon": DEFAULT_HORIZON,
            "move_cost": DEFAULT_MOVE_COST, "trace": None, "metrics": None, "input": None,
            "family": None, "n": None, "json": False},
    "analyze": {"output": None, "json": False, "count_measure": True, "include_idle_qubits": True,
                "lifespan_timeline": "physical"},
    "sweep": {"out": None, "workers": None, "timeout": None, "check": None},
    "render": {"output": None, "cell": 6.0, "title": None},
}


def _bench_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", help="benchmark family (" + ", ".join(f.value for f in Family) + ")")
    p.add_argument("-n", "--n", type=int, help="total qubits N")
    p.add_argument("--k", type=int, help="Grover iterations (default 1)")
    p.add_argument("--layers", "-l", type=int, help="QAOA/VQE layers (default 1)")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p.add_argument("--p", type=float, help="Erdos-Renyi edge probability (default 0.2)")
    p.add_argument("--kws", type=int, help="Watts-Strogatz ring degree (default 4)")
    p.add_argument("--beta", type=float, help="Watts-Strogatz rewiring probability (default 0.1)")


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="qtraffic", description="Benchmark circuits, multi-core mapping and traffic metrics.")
    root.add_argument("--version", action="version", version=f"qtraffic {__version__}")
    root.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = root.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="write a benchmark circuit as OpenQASM 2.0")
    _bench_flags(g)
    g.add_argument("-o", "--output", help="QASM output path (default stdout)")
    g.add_argument("--config", help="YAML/JSON option file")

    m = sub.add_parser("map", help="map a circuit onto C cores of Q qubits")
    m.add_argument("input", nargs="?", help="QASM circuit (or use --family/--n)")
    _bench_flags(m)
    m.add_argument("-C", "--cores", type=int, help="number of cores (default 1)")
    m.add_argument("-Q", "--capacity", type=int, help="qubits per core (default ceil(N/C))")
    m.add_argument("--sigma", type=float, help=f"lookahead decay in (0,1] (default {DEFAULT_SIGMA})")
    m.add_argument("--tau", type=int, help=f"timeslices per teleport wave (default {DEFAULT_TAU})")
    m.add_argument("--horizon", type=int, help=f"lookahead slices, 0 = unbounded (default {DEFAULT_HORIZON})")
    m.add_argument("--move-cost", type=float, dest="move_cost",
                   help=f"cut-weight charge per relocation (default {DEFAULT_MOVE_COST})")
    m.add_argument("--trace", help="write the mapped program JSON here")
    m.add_argument("--metrics", help="write the metrics CSV row here (default stdout)")
    m.add_argument("--json", action="store_const", const=True, help="emit the metrics report as JSON")
    m.add_argument("--config", help="YAML/JSON option file")

    a = sub.add_parser("analyze", help="metrics of a saved trace")
    a.add_argument("trace", help="trace JSON written by 'map'")
    a.add_argument("-o", "--output", help="output path (default stdout)")
    a.add_argument("--json", action="store_const", const=True, help="emit the full JSON report")
    a.add_argument("--no-count-measure", dest="count_measure", action="store_const", const=False,
                   help="exclude measurements from operation counts")
    a.add_argument("--exclude-idle-qubits", dest="include_idle_qubits", action="store_const", const=False,
                   help="leave never-used physical qubits out of qubit hotspotness")
    a.add_argument("--lifespan-timeline", dest="lifespan_timeline", choices=["physical", "virtual"])
    a.add_argument("--config", help="YAML/JSON option file")

    s = sub.add_parser("sweep", help="run a strong/weak scaling plan")
    s.add_argument("plan", help="plan file (YAML or JSON)")
    s.add_argument("--out", help="output directory (default: no files)")
    s.add_argument("--workers", type=int, help="override plan worker count")
    s.add_argument("--timeout", type=float, help="override per-point timeout in seconds")
    s.add_argument("--check", help="YAML/JSON list of trend assertions to evaluate")
    s.add_argument("--config", help="YAML/JSON option file")

    r = sub.add_parser("render", help="SVG heatmap of a saved trace")
    r.add_argument("trace", help="trace JSON written by 'map'")
    r.add_argument("-o", "--output", help="SVG path (default stdout)")
    r.add_argument("--cell", type=float, help="cell size in px (default 6)")
    r.add_argument("--title", help="figure title")
    r.add_argument("--config", help="YAML/JSON option file")
    return root


def _read_yaml(path: str) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError("io", EXIT_IO, f"{path}: {exc.strerror or exc}") from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise _usage(f"{path}: {exc}".replace("\n", " ")) from exc


def resolve(command: str, ns: argparse.Namespace) -> dict[str, Any]:
    """Merge built-in defaults < config file < explicit flags."""
    opts = dict(DEFAULTS[command])
    cfg_path = getattr(ns, "config", None)
    if cfg_path:
        cfg = _read_yaml(cfg_path) or {}
        if not isinstance(cfg, dict):
            raise _usage(f"{cfg_path}: config must be a mapping")
        cfg = {str(k).replace("-", "_"): v for k, v in cfg.items()}
        version = cfg.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise _usage(f"{cfg_path}: unsupported config version {version!r}")
        known = set(DEFAULTS[command])
        if command in ("generate", "map"):
            known |= {"family", "n"}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise _usage(f"{cfg_path}: unknown option(s) for '{command}': {', '.join(unknown)}")
        opts.update(cfg)
    for k, v in vars(ns).items():
        if k in ("command", "config", "log_level"):
            continue
        if v is not None:
            opts[k] = v
    return opts


def _spec_from(opts: dict) -> BenchSpec:
    if opts.get("family") is None or opts.get("n") is None:
        raise _usage("need --family and --n")
    return BenchSpec(str(opts["family"]), int(opts["n"]), k=int(opts["k"]), layers=int(opts["layers"]),
                     seed=int(opts["seed"]), p=float(opts["p"]), kws=int(opts["kws"]), beta=float(opts["beta"]))


def _check_input(path: str) -> None:
    if not os.path.isfile(path):
        raise CliError("io", EXIT_IO, f"{path}: no such file")


def _check_output(path: str | None) -> None:
    if path is None:
        return
    parent = Path(path).resolve().parent
    probe = parent
    while not probe.exists():
        probe = probe.parent
    if not probe.is_dir() or not os.access(probe, os.W_OK):
        raise CliError("io", EXIT_IO, f"{path}: directory is not writable")


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        trace_io.atomic_write(path, text)
    except OSError as exc:
        raise CliError("io", EXIT_IO, f"{path}: {exc.strerror or exc}") from exc


def cmd_generate(opts: dict) -> int:
    _check_output(opts["output"])
    circuit = _spec_from(opts).build()
    _emit(qasm.dumps(circuit), opts["output"])
    return EXIT_OK


def cmd_map(opts: dict) -> int:
    for key in ("trace", "metrics"):
        _check_output(opts[key])
    if opts["input"]:
        _check_input(opts["input"])
        circuit = qasm.load(opts["input"])
    else:
        circuit = _spec_from(opts).build()
    cores = int(opts["cores"])
    if cores < 1:
        raise _usage("--cores must be >= 1")
    capacity = opts["capacity"]
    capacity = int(capacity) if capacity is not None else max(1, math.ceil(circuit.width / cores))
    horizon = opts["horizon"]
    horizon = None if horizon in (None, 0) else int(horizon)
    try:
        arch = Architecture(cores, capacity)
    except ValueError as exc:
        raise _usage(str(exc)) from exc
    mp = map_circuit(slice_circuit(circuit), arch, sigma=float(opts["sigma"]), tau=int(opts["tau"]),
                     horizon=horizon, move_cost=float(opts["move_cost"]))
    report = metrics.analyze(mp)
    if opts["trace"]:
        try:
            trace_io.dump(mp, opts["trace"])
        except OSError as exc:
            raise CliError("io", EXIT_IO, f"{opts['trace']}: {exc.strerror or exc}") from exc
    text = report.to_json() + "\n" if opts["json"] else metrics.csv_text([report.row()])
    _emit(text, opts["metrics"])
    return EXIT_OK


def _load_trace(path: str):
    _check_input(path)
    try:
        return trace_io.load(path)
    except OSError as exc:
        raise CliError("io", EXIT_IO, f"{path}: {exc.strerror or exc}") from exc


def cmd_analyze(opts: dict) -> int:
    _check_output(opts["output"])
    mp = _load_trace(opts["trace"])
    report = metrics.analyze(mp, count_measure=bool(opts["count_measure"]),
                             include_idle_qubits=bool(opts["include_idle_qubits"]),
                             lifespan_timeline=str(opts["lifespan_timeline"]))
    text = report.to_json() + "\n" if opts["json"] else metrics.csv_text([report.row()])
    _emit(text, opts["output"])
    return EXIT_OK


def cmd_sweep(opts: dict) -> int:
    _check_input(opts["plan"])
    if opts["out"]:
        _check_output(os.path.join(opts["out"], "metrics.csv"))
    assertions = None
    if opts["check"]:
        _check_input(opts["check"])
        assertions = _read_yaml(opts["check"])
        if not isinstance(assertions, list):
            raise _usage(f"{opts['check']}: trend assertions must be a list")
    plan = sweep.SweepPlan.load(opts["plan"])
    plan = sweep.with_overrides(plan, workers=opts["workers"], timeout=opts["timeout"])
    try:
        result = sweep.run_sweep(plan, opts["out"])
    except OSError as exc:
        raise CliError("io", EXIT_IO, f"{exc.filename or opts['out']}: {exc.strerror or exc}") from exc
    if opts["out"] is None:
        sys.stdout.write(result.csv())
    code = EXIT_OK
    if assertions is not None:
        for o in sweep.trend_check(result.rows, assertions):
            print(f"{'PASS' if o.passed else 'FAIL'} {o.name}: {o.detail}")
            if not o.passed:
                code = EXIT_TREND
    return code


def cmd_render(opts: dict) -> int:
    _check_output(opts["output"])
    mp = _load_trace(opts["trace"])
    _emit(render.render_svg(mp, cell=float(opts["cell"]), title=opts["title"]), opts["output"])
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "map": cmd_map, "analyze": cmd_analyze,
            "sweep": cmd_sweep, "render": cmd_render}


def _fail(err: CliError) -> int:
    msg = " ".join(str(err).split())
    sys.stderr.write(json.dumps({"error": err.kind, "exit": err.code, "message": msg}) + "\n")
    return err.code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        logging.basicConfig(level=getattr(logging, ns.log_level), format="%(levelname)s %(name)s: %(message)s")
        if ns.command is None:
            raise _usage("missing subcommand (generate, map, analyze, sweep, render)")
        opts = resolve(ns.command, ns)
        return COMMANDS[ns.command](opts)
    except CliError as err:
        return _fail(err)
    except InfeasibleError as exc:
        return _fail(CliError("infeasible", EXIT_INFEASIBLE, str(exc)))
    except qasm.QasmError as exc:
        return _fail(CliError("parse", EXIT_USAGE, str(exc)))
    except trace_io.TraceFormatError as exc:
        return _fail(CliError("parse", EXIT_USAGE, str(exc)))
    except (sweep.PlanError, sweep.TrendError) as exc:
        return _fail(CliError("usage", EXIT_USAGE, str(exc)))
    except (BenchError, CircuitError, ValueError) as exc:
        return _fail(CliError("usage", EXIT_USAGE, str(exc)))
    except OSError as exc:
        return _fail(CliError("io", EXIT_IO, f"{exc.filename or ''}: {exc.strerror or exc}"))


if __name__ == "__main__":
    sys.exit(main())
