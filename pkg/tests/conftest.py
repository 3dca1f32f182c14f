import itertools

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

_I = np.eye(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]])
_Z = np.diag([1.0, -1.0]).astype(complex)
_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
_P0 = np.diag([1.0, 0.0])
_P1 = np.diag([0.0, 1.0])
PAULIS = (_I, _X, _Y, _Z)


def embed(matrix, qubit, n):
    """Kronecker-embed a one-qubit matrix; qubit 0 is the least significant."""
    out = np.array([[1.0 + 0j]])
    for k in reversed(range(n)):
        out = np.kron(out, matrix if k == qubit else _I)
    return out


def gate_matrix(gate, n):
    q = gate.qubits
    if gate.kind == "H":
        return embed(_H, q[0], n)
    if gate.kind == "X":
        return embed(_X, q[0], n)
    if gate.kind == "RY":
        c, s = np.cos(gate.angle / 2), np.sin(gate.angle / 2)
        return embed(np.array([[c, -s], [s, c]]), q[0], n)
    if gate.kind == "RZ":
        t = gate.angle / 2
        return embed(np.diag([np.exp(-1j * t), np.exp(1j * t)]), q[0], n)
    if gate.kind == "CX":
        return embed(_P0, q[0], n) + embed(_P1, q[0], n) @ embed(_X, q[1], n)
    if gate.kind == "CZ":
        return np.eye(2 ** n) - 2 * embed(_P1, q[0], n) @ embed(_P1, q[1], n)
    raise ValueError(gate.kind)


def dense_state(circuit):
    """Reference statevector by explicit matrix products."""
    n = circuit.width
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1
    for g in circuit.gates:
        psi = gate_matrix(g, n) @ psi
    return psi


def density_marginal(circuit, p2q):
    """Exact output distribution under two-qubit depolarising noise."""
    n = circuit.width
    rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
    rho[0, 0] = 1
    for g in circuit.gates:
        u = gate_matrix(g, n)
        rho = u @ rho @ u.conj().T
        if g.is_two_qubit and p2q > 0:
            acc = np.zeros_like(rho)
            for i, j in itertools.product(range(4), repeat=2):
                if i == j == 0:
                    continue
                p = embed(PAULIS[i], g.qubits[0], n) @ embed(PAULIS[j], g.qubits[1], n)
                acc += p @ rho @ p.conj().T
            rho = (1 - p2q) * rho + p2q / 15 * acc
    diag = np.real(np.diag(rho))
    out = np.zeros(2 ** len(circuit.measured_qubits))
    for idx, p in enumerate(diag):
        key = sum(((idx >> q) & 1) << k for k, q in enumerate(circuit.measured_qubits))
        out[key] += p
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
