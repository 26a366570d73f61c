import math

import pytest

from qtraffic import qasm
from qtraffic.benchgen import BenchSpec, Family
from qtraffic.circuit import Circuit, GateKind, cnot, cphase, h, measure, rz


@pytest.mark.parametrize("family", list(Family))
@pytest.mark.parametrize("n", [6, 10])
def test_round_trip_byte_identical(family, n):
    c = BenchSpec(family, n, seed=3).build()
    text = qasm.dumps(c)
    back = qasm.loads(text)
    assert back == c
    assert qasm.dumps(back) == text


def test_ghz4_body_is_four_lines():
    text = qasm.dumps(BenchSpec(Family.GHZ, 4).build())
    body = [ln for ln in text.splitlines() if not ln.startswith(("OPENQASM", "include", "//", "qreg", "creg"))]
    assert body == ["h q[0];", "cx q[0],q[1];", "cx q[0],q[2];", "cx q[0],q[3];"]


def test_measure_emits_creg():
    c = Circuit("m", 2, (h(0), cnot(0, 1), measure(0), measure(1)))
    text = qasm.dumps(c)
    assert "creg c[2];" in text
    assert qasm.loads(text) == c


def test_parse_aliases_and_angles():
    text = """OPENQASM 2.0;
include "qelib1.inc";
qreg r[3];
creg c[3];
u1(pi/4) r[0];
cu1(-pi/2) r[0], r[2];
CX r[1],r[2];  // trailing comment
rz(2*pi**2) r[1];
measure r[2] -> c[2];
"""
    c = qasm.loads(text, source="demo.qasm")
    assert c.name == "demo"
    kinds = [g.kind for g in c.gates]
    assert kinds == [GateKind.PHASE, GateKind.CPHASE, GateKind.CNOT, GateKind.RZ, GateKind.MEASURE]
    assert math.isclose(c.gates[0].theta, math.pi / 4)
    assert math.isclose(c.gates[1].theta, -math.pi / 2)
    assert math.isclose(c.gates[3].theta, 2 * math.pi ** 2)


@pytest.mark.parametrize("body, line, needle", [
    ("qreg q[2];\nccx q[0],q[1],q[0];\n", 2, "unsupported statement"),
    ("qreg q[2];\nh q[5];\n", 2, "out of range"),
    ("h q[0];\n", 1, "before qreg"),
    ("qreg q[2];\nrx q[0];\n", 2, "requires an angle"),
    ("qreg q[2];\nh(0.1) q[0];\n", 2, "takes no angle"),
    ("qreg q[2];\nrx(__import__) q[0];\n", 2, "unsupported angle"),
    ("qreg q[2];\nh q[0]\n", 2, "missing ';'"),
    ("qreg q[2];\nqreg r[2];\n", 2, "only one qreg"),
    ("qreg q[2];\ncx q[1],q[1];\n", 2, "repeated qubit"),
    ("OPENQASM 3.0;\n", 1, "unsupported version"),
    ("// nothing\n", 1, "no qreg"),
])
def test_parse_errors_name_the_line(body, line, needle):
    with pytest.raises(qasm.QasmError) as info:
        qasm.loads(body, source="bad.qasm")
    assert info.value.line == line
    assert str(info.value).startswith(f"bad.qasm:{line}: ")
    assert needle in str(info.value)


def test_file_round_trip(tmp_path):
    c = Circuit("f", 3, (h(0), cphase(0.1, 0, 2), rz(-1e-9, 1)))
    path = tmp_path / "c.qasm"
    qasm.dump(c, path)
    assert qasm.load(path) == c
