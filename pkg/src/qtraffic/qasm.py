"""OpenQASM 2.0 subset reader/writer.

Supported statements: ``qreg``, ``creg``, ``h``, ``x``, ``rx``, ``ry``, ``rz``,
``p``/``u1``, ``cx``, ``cz``, ``cp``/``cu1``, ``swap``, ``measure``.  Anything
else is rejected with the offending line number.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from pathlib import Path

from .circuit import Circuit, Gate, GateKind

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'

_NAME_TAG = "// circuit: "

_ALIASES = {
    "h": GateKind.H,
    "x": GateKind.X,
    "rx": GateKind.RX,
    "ry": GateKind.RY,
    "rz": GateKind.RZ,
    "p": GateKind.PHASE,
    "u1": GateKind.PHASE,
    "cx": GateKind.CNOT,
    "CX": GateKind.CNOT,
    "cz": GateKind.CZ,
    "cp": GateKind.CPHASE,
    "cu1": GateKind.CPHASE,
    "swap": GateKind.SWAP,
}

_GATE_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s+(.+)$")
_QREG_RE = re.compile(r"^qreg\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")
_CREG_RE = re.compile(r"^creg\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")
_MEASURE_RE = re.compile(r"^measure\s+(.+?)\s*->\s*(.+)$")
_REF_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")


class QasmError(ValueError):
    def __init__(self, line: int, message: str, source: str = "<qasm>"):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line
        self.source = source


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def _eval_angle(expr: str) -> float:
    def ev(node: ast.AST) -> float:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"unsupported angle expression {expr!r}")

    return ev(ast.parse(expr.strip(), mode="eval"))


def loads(text: str, source: str = "<qasm>") -> Circuit:
    name = Path(source).stem if source != "<qasm>" else "qasm"
    qreg: str | None = None
    width = 0
    cregs: dict[str, int] = {}
    gates: list[Gate] = []

    def qubit(ref: str, lineno: int) -> int:
        m = _REF_RE.match(ref.strip())
        if not m or m.group(1) != qreg:
            raise QasmError(lineno, f"bad qubit reference {ref.strip()!r}", source)
        idx = int(m.group(2))
        if idx >= width:
            raise QasmError(lineno, f"qubit index {idx} out of range for {qreg}[{width}]", source)
        return idx

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.startswith(_NAME_TAG):
            name = raw[len(_NAME_TAG):].strip()
            continue
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        if not line.endswith(";"):
            raise QasmError(lineno, "missing ';'", source)
        stmt = line[:-1].strip()
        if stmt.startswith("OPENQASM"):
            if stmt.split()[-1] != "2.0":
                raise QasmError(lineno, f"unsupported version in {stmt!r}", source)
            continue
        if stmt.startswith("include"):
            continue
        m = _QREG_RE.match(stmt)
        if m:
            if qreg is not None:
                raise QasmError(lineno, "only one qreg is supported", source)
            qreg, width = m.group(1), int(m.group(2))
            continue
        m = _CREG_RE.match(stmt)
        if m:
            cregs[m.group(1)] = int(m.group(2))
            continue
        if qreg is None:
            raise QasmError(lineno, "statement before qreg declaration", source)
        m = _MEASURE_RE.match(stmt)
        if m:
            target = _REF_RE.match(m.group(2).strip())
            if not target or target.group(1) not in cregs:
                raise QasmError(lineno, f"bad classical target {m.group(2).strip()!r}", source)
            gates.append(Gate(GateKind.MEASURE, (qubit(m.group(1), lineno),)))
            continue
        m = _GATE_RE.match(stmt)
        if not m or m.group(1) not in _ALIASES:
            raise QasmError(lineno, f"unsupported statement {stmt!r}", source)
        kind = _ALIASES[m.group(1)]
        qubits = tuple(qubit(r, lineno) for r in m.group(3).split(","))
        theta = None
        if kind.parametric:
            if m.group(2) is None:
                raise QasmError(lineno, f"{m.group(1)} requires an angle", source)
            try:
                theta = _eval_angle(m.group(2))
            except (ValueError, SyntaxError, ZeroDivisionError) as exc:
                raise QasmError(lineno, str(exc), source) from None
        elif m.group(2) is not None:
            raise QasmError(lineno, f"{m.group(1)} takes no angle", source)
        try:
            gates.append(Gate(kind, qubits, theta))
        except ValueError as exc:
            raise QasmError(lineno, str(exc), source) from None
    if qreg is None:
        raise QasmError(max(1, len(text.splitlines())), "no qreg declaration", source)
    return Circuit(name, width, tuple(gates))


def load(path: str | Path) -> Circuit:
    path = Path(path)
    return loads(path.read_text(), source=str(path))


def _gate_line(g: Gate) -> str:
    args = ",".join(f"q[{q}]" for q in g.qubits)
    if g.kind is GateKind.MEASURE:
        return f"measure q[{g.qubits[0]}] -> c[{g.qubits[0]}];"
    if g.theta is not None:
        return f"{g.kind.value}({g.theta!r}) {args};"
    return f"{g.kind.value} {args};"


def dumps(circuit: Circuit) -> str:
    lines = [HEADER.rstrip("\n"), f"{_NAME_TAG}{circuit.name}", f"qreg q[{circuit.width}];"]
    if any(g.kind is GateKind.MEASURE for g in circuit.gates):
        lines.append(f"creg c[{circuit.width}];")
    lines.extend(_gate_line(g) for g in circuit.gates)
    return "\n".join(lines) + "\n"


def dump(circuit: Circuit, path: str | Path) -> None:
    Path(path).write_text(dumps(circuit))
