"""Expectation-value encoding: x in [-1, 1] <-> RY(arccos x)|0>, <Z> = x."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import CountsTable
from .errors import DomainError, MissingAddressError


def value_to_angle(x):
    """Rotation angle arccos(x) in [0, pi]. Works on scalars and arrays.

    Values outside [-1, 1] raise instead of being clamped.
    """
    arr = np.asarray(x, dtype=float)
    bad = ~(np.abs(arr) <= 1.0)
    if bad.any():
        offending = arr[bad].flat[0] if arr.ndim else float(arr)
        raise DomainError(f"value {offending!r} is outside [-1, 1]")
    out = np.arccos(arr)
    return float(out) if out.ndim == 0 else out


def angle_to_value(theta):
    return np.cos(theta)


def binomial_std_err(x_hat, shots):
    """Plug-in standard error of 1 - 2p from ``shots`` Bernoulli trials."""
    p = (1.0 - np.asarray(x_hat, dtype=float)) / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        return 2.0 * np.sqrt(np.clip(p * (1.0 - p), 0.0, None) / shots)


@dataclass(frozen=True)
class EvenEstimate:
    x_hat: float
    std_err: float
    shots_used: int

    @property
    def degenerate(self) -> bool:
        """True when every shot gave the same data bit (std_err is then 0)."""
        return abs(self.x_hat) == 1.0

    @classmethod
    def from_tally(cls, ones: int, total: int) -> EvenEstimate:
        x_hat = 1.0 - 2.0 * ones / total
        return cls(x_hat, float(binomial_std_err(x_hat, total)), int(total))


def _split_positions(num_bits, data_bit, address_bits):
    if address_bits is None:
        address_bits = [b for b in range(num_bits) if b != data_bit]
    address_bits = list(address_bits)
    if data_bit in address_bits:
        raise ValueError("data bit cannot be part of the address")
    for b in address_bits + [data_bit]:
        if not 0 <= b < num_bits:
            raise ValueError(f"bit position {b} outside {num_bits}-bit outcomes")
    return address_bits


def conditional_tallies(counts: CountsTable, data_bit: int, address_bits=None):
    """Per-address (total shots, shots with data bit 1).

    Bit positions count from the right of the bitstring. The address
    integer has ``address_bits[k]`` as its bit k. Returns two int arrays of
    length ``2**len(address_bits)``.
    """
    address_bits = _split_positions(counts.num_bits, data_bit, address_bits)
    arr = counts.to_array()
    outcomes = np.arange(arr.size)
    addr = np.zeros(arr.size, dtype=np.int64)
    for k, b in enumerate(address_bits):
        addr |= ((outcomes >> b) & 1) << k
    ones = (outcomes >> data_bit) & 1
    size = 1 << len(address_bits)
    total = np.bincount(addr, weights=arr, minlength=size).astype(np.int64)
    hit = np.bincount(addr, weights=arr * ones, minlength=size).astype(np.int64)
    return total, hit


def estimate_from_counts(counts: CountsTable, address: str, data_bit_position: int,
                         address_bits=None) -> EvenEstimate:
    """Estimate x = 1 - 2 p(data=1 | address) from measured counts.

    ``address`` is a bitstring over ``address_bits`` (default: every other
    position, in ascending order), written with ``address_bits[0]`` as the
    rightmost character. Pass ``""`` with ``address_bits=[]`` for the
    unconditioned estimate.
    """
    address_bits = _split_positions(counts.num_bits, data_bit_position, address_bits)
    if len(address) != len(address_bits):
        raise ValueError(f"address {address!r} does not have {len(address_bits)} bits")
    total, hit = conditional_tallies(counts, data_bit_position, address_bits)
    index = int(address, 2) if address else 0
    if total[index] == 0:
        raise MissingAddressError(address)
    return EvenEstimate.from_tally(int(hit[index]), int(total[index]))


@dataclass
class EvenEstimates:
    """Arrays of estimates; entries with no shots are NaN and flagged missing."""

    x_hat: np.ndarray
    std_err: np.ndarray
    shots_used: np.ndarray

    @property
    def missing(self) -> np.ndarray:
        return self.shots_used == 0

    @property
    def degenerate(self) -> np.ndarray:
        return ~self.missing & (np.abs(self.x_hat) == 1.0)

    @classmethod
    def from_tallies(cls, total, hit) -> EvenEstimates:
        total = np.asarray(total)
        with np.errstate(invalid="ignore", divide="ignore"):
            x_hat = np.where(total > 0, 1.0 - 2.0 * hit / np.maximum(total, 1), np.nan)
        std_err = np.where(total > 0, binomial_std_err(x_hat, np.maximum(total, 1)), np.nan)
        return cls(x_hat, std_err, total)

    @classmethod
    def exact(cls, values) -> EvenEstimates:
        """Wrap exact expectation values (zero error, infinite shots)."""
        values = np.asarray(values, dtype=float)
        shots = np.where(np.isnan(values), 0, np.iinfo(np.int64).max)
        return cls(values, np.where(np.isnan(values), np.nan, 0.0), shots)

    def __getitem__(self, idx) -> EvenEstimate:
        if self.shots_used[idx] == 0:
            raise MissingAddressError(idx)
        return EvenEstimate(float(self.x_hat[idx]), float(self.std_err[idx]), int(self.shots_used[idx]))

    @property
    def shape(self):
        return self.x_hat.shape

