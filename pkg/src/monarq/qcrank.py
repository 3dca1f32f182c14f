"""QCrank: Hadamard-addressed data with one uniformly controlled RY per channel.

Address qubits occupy indices ``0 .. n_a-1`` (address bit k on qubit k),
data channel j sits on qubit ``n_a + j``. Each channel's multiplexed RY is
synthesised as 2**n_a rounds of ``RY(phi_m)`` followed by a CX whose
control follows the Gray-code bit changes. Channels relabel the address
bits (and, past n_a channels, the starting round) so their CX gates can
run in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, CountsTable, StateVector, conditional_z_arrays
from .even import EvenEstimates, conditional_tallies, value_to_angle
from .errors import DomainError


@dataclass(frozen=True)
class QcrankLayout:
    n_a: int
    n_d: int
    length: int
    pad_value: float = 0.0

    def __post_init__(self):
        if self.length < 1 or self.n_d < 1:
            raise ValueError("length and n_d must be >= 1")
        if self.n_a != address_bits_for(self.length):
            raise ValueError(f"n_a={self.n_a} inconsistent with length {self.length}")
        if not abs(self.pad_value) <= 1:
            raise DomainError(f"pad value {self.pad_value} outside [-1, 1]")

    @property
    def n_addresses(self) -> int:
        return 1 << self.n_a

    @property
    def n_qubits(self) -> int:
        return self.n_a + self.n_d

    @property
    def address_qubits(self) -> list[int]:
        return list(range(self.n_a))

    def data_qubit(self, channel: int) -> int:
        if not 0 <= channel < self.n_d:
            raise IndexError(f"channel {channel} outside 0..{self.n_d - 1}")
        return self.n_a + channel

    @property
    def data_qubits(self) -> list[int]:
        return [self.n_a + j for j in range(self.n_d)]

    def pad(self, data) -> np.ndarray:
        """Return an (n_d, 2**n_a) matrix, padding columns past ``length``."""
        data = np.atleast_2d(np.asarray(data, dtype=float))
        if data.shape[0] != self.n_d or data.shape[1] not in (self.length, self.n_addresses):
            raise ValueError(
                f"data shape {data.shape} does not match layout "
                f"({self.n_d}, {self.length}) or ({self.n_d}, {self.n_addresses})"
            )
        if data.shape[1] == self.n_addresses:
            return data.copy()
        out = np.full((self.n_d, self.n_addresses), self.pad_value)
        out[:, : self.length] = data
        return out

    def summary(self) -> dict:
        return {"n_a": self.n_a, "n_d": self.n_d, "length": self.length,
                "pad_value": self.pad_value, "qubits": self.n_qubits}


def address_bits_for(length: int) -> int:
    return max(1, math.ceil(math.log2(max(length, 2))))


def plan_layout(length: int, n_d: int = 1, pad_value: float = 0.0) -> QcrankLayout:
    """Smallest address register holding ``length`` values per channel."""
    if length < 1:
        raise ValueError("length must be >= 1")
    return QcrankLayout(address_bits_for(length), n_d, length, pad_value)


# ---------------------------------------------------------------------------
# uniformly controlled rotations


def gray(k):
    return k ^ (k >> 1)


def fwht(values) -> np.ndarray:
    """Unnormalised fast Walsh-Hadamard transform (natural ordering)."""
    a = np.array(values, dtype=float)
    n = a.shape[-1]
    if n & (n - 1) or n == 0:
        raise ValueError(f"length {n} is not a power of two")
    h = 1
    while h < n:
        a = a.reshape(a.shape[:-1] + (n // (2 * h), 2, h))
        lo, hi = a[..., 0, :].copy(), a[..., 1, :].copy()
        a[..., 0, :] = lo + hi
        a[..., 1, :] = lo - hi
        a = a.reshape(a.shape[:-3] + (n,))
        h *= 2
    return a


def gray_controls(n_a: int, offset: int = 0) -> list[int]:
    """Address bit used as CX control in each round of a UCR."""
    size = 1 << n_a
    return [
        (gray((offset + m) % size) ^ gray((offset + m + 1) % size)).bit_length() - 1
        for m in range(size)
    ]


def ucr_angles(thetas, offset: int = 0) -> np.ndarray:
    """Per-round RY angles of a multiplexed rotation.

    Round m applies ``RY(phi[m])`` and then a CX from address bit
    ``gray_controls(n_a, offset)[m]``. Before round m the target has been
    flipped by the parity of ``address & mask_m`` with
    ``mask_m = gray(offset + m) ^ gray(offset)``, so address i receives
    ``sum_m (-1)**popcount(i & mask_m) * phi[m]``; inverting that
    Walsh-Hadamard system gives ``phi[m] = WH(theta)[mask_m] / 2**n_a``.
    """
    thetas = np.asarray(thetas, dtype=float)
    size = thetas.shape[-1]
    if size < 1 or size & (size - 1):
        raise ValueError(f"number of angles ({size}) is not a power of two")
    spectrum = fwht(thetas) / size
    masks = [gray((offset + m) % size) ^ gray(offset % size) for m in range(size)]
    return spectrum[..., masks]


def _relabel(thetas, shift):
    """Reindex a multiplexed angle table for address bits rotated by ``shift``."""
    size = thetas.shape[-1]
    n_a = size.bit_length() - 1
    if n_a == 0 or shift % n_a == 0:
        return thetas
    idx = np.arange(size)
    source = np.zeros(size, dtype=np.int64)
    for k in range(n_a):
        source |= ((idx >> k) & 1) << ((k + shift) % n_a)
    return thetas[..., source]


def append_ucr_rounds(circuit: Circuit, targets, thetas, address_qubits):
    """Append one multiplexed RY per target, interleaved round by round.

    Target j sees the address register with its bit labels rotated by j,
    so the busiest Gray-code control (bit 0) lands on a different address
    qubit for each of the first n_a targets; targets beyond that also
    shift their starting round. All CX gates of one round then touch
    distinct controls where possible.
    """
    n_a = len(address_qubits)
    schedule = []
    for j, (target, theta) in enumerate(zip(targets, thetas)):
        shift, offset = j % n_a, j // n_a
        rotated = [address_qubits[(k + shift) % n_a] for k in range(n_a)]
        phis = ucr_angles(_relabel(np.asarray(theta, dtype=float), shift), offset)
        controls = [rotated[b] for b in gray_controls(n_a, offset)]
        schedule.append((target, phis, controls))
    for m in range(1 << n_a):
        for target, phis, _ in schedule:
            circuit.ry(phis[m], target)
        for target, _, controls in schedule:
            circuit.cx(controls[m], target)
    return circuit


def build_qcrank(layout: QcrankLayout, data, width: int | None = None) -> Circuit:
    """QCrank state preparation; ``width`` may add spare qubits on top."""
    matrix = layout.pad(data)
    thetas = value_to_angle(matrix)
    circuit = Circuit(width or layout.n_qubits)
    for q in layout.address_qubits:
        circuit.h(q)
    append_ucr_rounds(
        circuit,
        layout.data_qubits,
        thetas,
        layout.address_qubits,
    )
    circuit.measure(layout.address_qubits + layout.data_qubits)
    return circuit


# ---------------------------------------------------------------------------
# decoding


def decode_qcrank(counts: CountsTable, layout: QcrankLayout, measured_qubits=None) -> EvenEstimates:
    """Per-address, per-channel estimates of shape (2**n_a, n_d).

    ``measured_qubits`` is the order the counts were recorded in; it
    defaults to the order ``build_qcrank`` sets. Addresses without shots
    come back NaN with ``missing`` set.
    """
    if measured_qubits is None:
        measured_qubits = layout.address_qubits + layout.data_qubits
    measured_qubits = list(measured_qubits)
    position = {q: k for k, q in enumerate(measured_qubits)}
    try:
        address_bits = [position[q] for q in layout.address_qubits]
        data_bits = [position[q] for q in layout.data_qubits]
    except KeyError as exc:
        raise ValueError(f"qubit {exc.args[0]} was not measured") from None
    totals, hits = [], []
    for bit in data_bits:
        total, hit = conditional_tallies(counts, bit, address_bits)
        totals.append(total)
        hits.append(hit)
    return EvenEstimates.from_tallies(np.stack(totals, axis=1), np.stack(hits, axis=1))


def decode_qcrank_exact(state: StateVector, layout: QcrankLayout) -> np.ndarray:
    """Exact conditional expectations, shape (2**n_a, n_d)."""
    cols = [conditional_z_arrays(state, q, layout.address_qubits)[0] for q in layout.data_qubits]
    return np.stack(cols, axis=1)
