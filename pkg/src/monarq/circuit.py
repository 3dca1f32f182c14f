"""Gate-level circuits and a dense statevector simulator.

Conventions used throughout the package:

* qubit 0 is the least-significant bit of the amplitude index;
* bitstrings are printed with the first measured qubit as the rightmost
  character, so measuring ``[0, 1, ..., n-1]`` gives the usual binary
  rendering of the basis index;
* ``RY(t) = exp(-i t Y / 2)`` and ``RZ(t) = exp(-i t Z / 2)``;
* ``CX`` lists the control first.
"""

from __future__ import annotations

import math
import os
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError

DEFAULT_MAX_QUBITS = 22
ONE_QUBIT_KINDS = frozenset({"H", "X", "RY", "RZ"})
TWO_QUBIT_KINDS = frozenset({"CX", "CZ"})

# amplitudes held per simulation batch (trajectories x 2**width)
_BATCH_AMPLITUDES = 1 << 22


def max_qubits() -> int:
    """Capacity guard, overridable through ``MONARQ_MAX_QUBITS``."""
    value = os.environ.get("MONARQ_MAX_QUBITS")
    return int(value) if value else DEFAULT_MAX_QUBITS


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind in ONE_QUBIT_KINDS:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} acts on one qubit, got {self.qubits}")
        elif self.kind in TWO_QUBIT_KINDS:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.kind} needs two distinct qubits, got {self.qubits}")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")
        if self.kind in ("RY", "RZ"):
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle, got {self.angle}")
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT_KINDS


@dataclass
class Circuit:
    """Ordered gate list on a fixed register plus the qubits to measure.

    A circuit is built by appending gates and is treated as read-only once
    handed to a simulator.
    """

    width: int
    gates: list[Gate] = field(default_factory=list)
    measured_qubits: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("circuit width must be at least 1")
        for gate in self.gates:
            self._check(gate.qubits)
        self.measure(self.measured_qubits)

    def _check(self, qubits):
        for q in qubits:
            if not 0 <= q < self.width:
                raise ValueError(f"qubit {q} outside register of width {self.width}")

    def append(self, gate: Gate) -> Circuit:
        self._check(gate.qubits)
        self.gates.append(gate)
        return self

    def h(self, q):
        return self.append(Gate("H", (q,)))

    def x(self, q):
        return self.append(Gate("X", (q,)))

    def ry(self, theta, q):
        return self.append(Gate("RY", (q,), float(theta)))

    def rz(self, theta, q):
        return self.append(Gate("RZ", (q,), float(theta)))

    def cx(self, control, target):
        return self.append(Gate("CX", (control, target)))

    def cz(self, a, b):
        return self.append(Gate("CZ", (a, b)))

    def measure(self, qubits) -> Circuit:
        qubits = [int(q) for q in qubits]
        self._check(qubits)
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate measured qubits {qubits}")
        self.measured_qubits = qubits
        return self

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    @property
    def two_qubit_count(self) -> int:
        return sum(1 for g in self.gates if g.is_two_qubit)

    def depth(self, two_qubit_only: bool = False) -> int:
        """Layered depth, optionally counting only CX/CZ layers."""
        level = [0] * self.width
        for g in self.gates:
            if two_qubit_only and not g.is_two_qubit:
                continue
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level)

    def gate_counts(self) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        for g in self.gates:
            out[g.kind] += 1
        return dict(sorted(out.items()))


class StateVector:
    """Dense state of ``width`` qubits; amplitude index bit q is qubit q."""

    def __init__(self, amplitudes, width: int | None = None):
        amplitudes = np.asarray(amplitudes)
        if width is None:
            width = int(round(math.log2(amplitudes.size)))
        if amplitudes.size != 1 << width:
            raise ValueError(f"expected {1 << width} amplitudes, got {amplitudes.size}")
        self.amplitudes = amplitudes.reshape(-1)
        self.width = width

    def __repr__(self):
        return f"StateVector(width={self.width})"

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def marginal(self, qubits) -> np.ndarray:
        """Marginal distribution; bit k of the returned index is ``qubits[k]``."""
        return _marginal(self.probabilities()[:, None], self.width, list(qubits))[:, 0]

    def expectation_z(self, qubit: int) -> float:
        p = self.marginal([qubit])
        return float(p[0] - p[1])


def _marginal(probs: np.ndarray, n: int, qubits: list[int]) -> np.ndarray:
    """Batched marginal: ``probs`` has shape (2**n, B), result (2**k, B)."""
    batch = probs.shape[1]
    tensor = probs.reshape((2,) * n + (batch,))
    # tensor axis n - 1 - q belongs to qubit q
    keep = [n - 1 - q for q in qubits]
    drop = tuple(ax for ax in range(n) if ax not in keep)
    reduced = tensor.sum(axis=drop) if drop else tensor
    # remaining axes are in ascending axis order; reorder to qubits[-1]..qubits[0]
    remaining = sorted(keep)
    order = [remaining.index(ax) for ax in reversed(keep)] + [len(keep)]
    return np.transpose(reduced, order).reshape(-1, batch)


# ---------------------------------------------------------------------------
# gate kernels on a (2**n, B) batch of states, applied in place; keeping the
# batch axis last leaves contiguous runs of 2**q * B elements per slice


def _reshaped(psi, shape):
    # assigning .shape raises instead of silently copying a strided array
    v = psi.view()
    v.shape = shape
    return v


def _view1(psi, n, q):
    return _reshaped(psi, (1 << (n - q - 1), 2, (1 << q) * psi.shape[1]))


def _view2(psi, n, q1, q2):
    hi, lo = max(q1, q2), min(q1, q2)
    v = _reshaped(psi, (1 << (n - hi - 1), 2, 1 << (hi - lo - 1), 2, (1 << lo) * psi.shape[1]))
    axis = {hi: 1, lo: 3}
    return v, axis[q1], axis[q2]


def _swap(a, b):
    tmp = a.copy()
    a[...] = b
    b[...] = tmp


def _rotate(a0, a1, m00, m01, m10, m11):
    tmp = a0.copy()
    a0 *= m00
    a0 += m01 * a1
    a1 *= m11
    a1 += m10 * tmp


def _apply_1q(psi, n, kind, q, angle=None):
    v = _view1(psi, n, q)
    a0, a1 = v[:, 0, :], v[:, 1, :]
    if kind == "X":
        _swap(a0, a1)
    elif kind == "H":
        r = 1 / math.sqrt(2)
        _rotate(a0, a1, r, r, r, -r)
    elif kind == "RY":
        c, s = math.cos(angle / 2), math.sin(angle / 2)
        _rotate(a0, a1, c, -s, s, c)
    elif kind == "RZ":
        a0 *= np.exp(-0.5j * angle)
        a1 *= np.exp(0.5j * angle)
    elif kind == "Z":
        a1 *= -1
    elif kind == "Y":
        # i * Y; the global phase is irrelevant and keeps real states real
        _rotate(a0, a1, 0.0, -1.0, 1.0, 0.0)
    else:
        raise ValueError(kind)


def _apply_2q(psi, n, kind, q1, q2):
    v, ax1, ax2 = _view2(psi, n, q1, q2)
    idx = [slice(None)] * 5
    if kind == "CX":
        idx[ax1] = 1
        idx[ax2] = 0
        a = v[tuple(idx)]
        idx[ax2] = 1
        _swap(a, v[tuple(idx)])
    elif kind == "CZ":
        idx[ax1] = 1
        idx[ax2] = 1
        v[tuple(idx)] *= -1
    else:
        raise ValueError(kind)


def _apply(psi, n, gate):
    if gate.is_two_qubit:
        _apply_2q(psi, n, gate.kind, *gate.qubits)
    else:
        _apply_1q(psi, n, gate.kind, gate.qubits[0], gate.angle)


_PAULI_NAMES = (None, "X", "Y", "Z")


def _apply_pauli_pair(psi, n, qubits, code):
    """Apply two-qubit Pauli ``code`` in 1..15 (base-4 digits, I X Y Z)."""
    first, second = divmod(code, 4)
    for q, p in zip(qubits, (first, second)):
        if p:
            _apply_1q(psi, n, _PAULI_NAMES[p], q)


def _check_capacity(width, limit=None):
    limit = max_qubits() if limit is None else limit
    if width > limit:
        raise CapacityError(
            f"circuit needs {width} qubits but the simulator is limited to {limit} "
            "(set MONARQ_MAX_QUBITS to raise the limit)"
        )


def _evolve(circuit: Circuit, batch: int = 1, faults=None) -> np.ndarray:
    """Run ``batch`` copies of ``circuit`` from |0...0>; returns (2**n, batch).

    ``faults`` maps gate index -> list of (column, pauli code) inserted
    right after that gate. The state stays real until the first RZ.
    """
    n = circuit.width
    psi = np.zeros((1 << n, batch), dtype=np.float64)
    psi[0, :] = 1.0
    for k, gate in enumerate(circuit.gates):
        if gate.kind == "RZ" and not np.iscomplexobj(psi):
            psi = psi.astype(np.complex128)
        _apply(psi, n, gate)
        if faults and k in faults:
            by_code = defaultdict(list)
            for col, code in faults[k]:
                by_code[code].append(col)
            for code, cols in sorted(by_code.items()):
                sub = np.ascontiguousarray(psi[:, cols])
                _apply_pauli_pair(sub, n, gate.qubits, code)
                psi[:, cols] = sub
    return psi


def run_statevector(circuit: Circuit, max_width: int | None = None) -> StateVector:
    """Exact final state of ``circuit`` started from |0...0>."""
    _check_capacity(circuit.width, max_width)
    psi = _evolve(circuit)[:, 0]
    return StateVector(psi.astype(np.complex128, copy=False), circuit.width)


# ---------------------------------------------------------------------------
# measurement


@dataclass
class CountsTable:
    """Shot counts keyed by bitstring (first measured qubit rightmost)."""

    counts: dict[str, int]
    num_bits: int

    def __post_init__(self):
        for key, value in self.counts.items():
            if len(key) != self.num_bits or set(key) - {"0", "1"}:
                raise ValueError(f"bad bitstring {key!r} for {self.num_bits} bits")
            if value < 0:
                raise ValueError(f"negative count for {key!r}")

    @property
    def shots(self) -> int:
        return sum(self.counts.values())

    def to_array(self) -> np.ndarray:
        arr = np.zeros(1 << self.num_bits, dtype=np.int64)
        for key, value in self.counts.items():
            arr[int(key, 2)] += value
        return arr

    @classmethod
    def from_array(cls, arr, num_bits: int) -> CountsTable:
        arr = np.asarray(arr)
        return cls(
            {format(int(i), f"0{num_bits}b"): int(arr[i]) for i in np.flatnonzero(arr)},
            num_bits,
        )

    def __eq__(self, other):
        if not isinstance(other, CountsTable):
            return NotImplemented
        return self.num_bits == other.num_bits and self.counts == other.counts


def _multinomial(rng, shots, probs):
    probs = np.clip(probs, 0.0, None)
    return rng.multinomial(shots, probs / probs.sum())


def sample_counts(state: StateVector, measured_qubits, shots: int, seed) -> CountsTable:
    """Draw ``shots`` outcomes from the marginal over ``measured_qubits``."""
    measured_qubits = list(measured_qubits)
    if not measured_qubits:
        raise ValueError("measured_qubits must not be empty")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    probs = state.marginal(measured_qubits)
    return CountsTable.from_array(_multinomial(rng, shots, probs), len(measured_qubits))


def conditional_z_arrays(state: StateVector, data_qubit: int, address_qubits):
    """Vectorised conditional <Z>.

    Returns ``(values, weights)`` indexed by address integer; ``values`` is
    NaN wherever the address has zero probability.
    """
    address_qubits = list(address_qubits)
    if data_qubit in address_qubits:
        raise ValueError("data qubit cannot also be an address qubit")
    p = state.marginal(address_qubits + [data_qubit])
    p = p.reshape(2, 1 << len(address_qubits))
    total = p[0] + p[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.where(total > 0, (p[0] - p[1]) / total, np.nan)
    return values, total


def conditional_expectation_z(state: StateVector, data_qubit: int, address_qubits) -> dict[str, float]:
    """Map address bitstring -> 1 - 2 p(data=1 | address).

    Addresses that cannot occur are left out. An empty address list gives
    the unconditioned value under the key ``""``.
    """
    address_qubits = list(address_qubits)
    values, weights = conditional_z_arrays(state, data_qubit, address_qubits)
    width = len(address_qubits)
    return {
        (format(i, f"0{width}b") if width else ""): float(values[i])
        for i in range(values.size)
        if weights[i] > 0
    }


# ---------------------------------------------------------------------------
# stochastic noise


@dataclass(frozen=True)
class NoiseConfig:
    """Two-qubit depolarizing noise: after each CX/CZ, with probability
    ``p2q`` a uniformly random non-identity Pauli pair hits its qubits."""

    p2q: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p2q <= 1.0:
            raise ValueError(f"p2q must lie in [0, 1], got {self.p2q}")


def _draw_faults(rng, gate_ids, p2q, shots):
    """Per-shot fault signatures, grouped: signature -> shot count."""
    per_shot = defaultdict(list)
    for k in gate_ids:
        hits = rng.binomial(shots, p2q)
        if hits == 0:
            continue
        rows = rng.choice(shots, size=hits, replace=False)
        codes = rng.integers(1, 16, size=hits)
        for r, c in zip(rows.tolist(), codes.tolist()):
            per_shot[r].append((k, c))
    groups = defaultdict(int)
    for sig in per_shot.values():
        groups[tuple(sig)] += 1
    clean = shots - len(per_shot)
    if clean:
        groups[()] += clean
    return dict(sorted(groups.items()))


def run_noisy_trajectories(
    circuit: Circuit, noise: NoiseConfig, shots: int, max_width: int | None = None
) -> CountsTable:
    """Shot-by-shot Pauli trajectories, measured on ``circuit.measured_qubits``.

    Shots sharing the same fault pattern share one simulated trajectory;
    each shot is then sampled from its trajectory's output distribution,
    which is distributionally identical to simulating every shot alone.
    """
    _check_capacity(circuit.width, max_width)
    if not circuit.measured_qubits:
        raise ValueError("circuit has no measured qubits")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(noise.seed)
    gate_ids = [k for k, g in enumerate(circuit.gates) if g.is_two_qubit]
    groups = _draw_faults(rng, gate_ids, noise.p2q, shots) if noise.p2q > 0 else {(): shots}

    nbits = len(circuit.measured_qubits)
    total = np.zeros(1 << nbits, dtype=np.int64)
    sigs = list(groups)
    chunk = max(1, _BATCH_AMPLITUDES >> circuit.width)
    for start in range(0, len(sigs), chunk):
        block = sigs[start:start + chunk]
        faults = defaultdict(list)
        for col, sig in enumerate(block):
            for k, code in sig:
                faults[k].append((col, code))
        psi = _evolve(circuit, len(block), faults)
        probs = _marginal(np.abs(psi) ** 2, circuit.width, circuit.measured_qubits)
        for col, sig in enumerate(block):
            total += _multinomial(rng, groups[sig], probs[:, col])
    return CountsTable.from_array(total, nbits)
