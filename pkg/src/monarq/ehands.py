"""Arithmetic on EVEN-encoded qubits: product, weighted sum, negation.

Each ``append_*`` helper adds gates to a circuit under construction and
returns an :class:`ArithmeticTap` naming the qubit whose <Z> carries the
result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuit import Circuit

PRODUCT = "product"
WEIGHTED_SUM = "weighted_sum"
NEGATION = "negation"
ENCODED = "encoded"


@dataclass(frozen=True)
class ArithmeticTap:
    result_qubit: int
    semantic: str
    memory_qubit: int | None = None
    weight: float | None = None

    def __post_init__(self):
        if self.semantic not in (PRODUCT, WEIGHTED_SUM, NEGATION, ENCODED):
            raise ValueError(f"unknown semantic {self.semantic!r}")
        if self.weight is not None and not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight {self.weight} outside [0, 1]")


@dataclass(frozen=True)
class ResourceReference:
    """Cost of a degree-d polynomial built from these primitives."""

    degree: int
    qubits: int
    two_qubit_gates: int
    depth: int


def resource_reference(d: int) -> ResourceReference:
    if d < 1:
        raise ValueError(f"degree must be >= 1, got {d}")
    return ResourceReference(d, 3 * d, 5 * d - 2, 4 * d)


def alpha_of_weight(w: float) -> float:
    """Rotation angle giving weight ``w`` on the top input: w = sin^2(alpha/2)."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"weight {w} outside [0, 1]")
    return 2.0 * math.asin(math.sqrt(w))


def _distinct(a, b):
    if a == b:
        raise ValueError(f"operands must sit on different qubits (both {a})")


def append_product(circuit: Circuit, memory_qubit: int, operand_qubit: int) -> ArithmeticTap:
    """<Z> of ``operand_qubit`` becomes x*y; the memory qubit is left as is
    and can feed further products."""
    _distinct(memory_qubit, operand_qubit)
    circuit.rz(math.pi / 2, operand_qubit)
    circuit.cx(memory_qubit, operand_qubit)
    return ArithmeticTap(operand_qubit, PRODUCT, memory_qubit=memory_qubit)


def append_weighted_sum(circuit: Circuit, top_qubit: int, bottom_qubit: int, w: float) -> ArithmeticTap:
    """<Z> of ``top_qubit`` becomes w*x + (1-w)*y (x on top, y on bottom)."""
    _distinct(top_qubit, bottom_qubit)
    alpha = alpha_of_weight(w)
    circuit.rz(math.pi / 2, bottom_qubit)
    circuit.cx(top_qubit, bottom_qubit)
    circuit.ry(alpha / 2, top_qubit)
    circuit.cx(bottom_qubit, top_qubit)
    circuit.ry(-alpha / 2, top_qubit)
    return ArithmeticTap(top_qubit, WEIGHTED_SUM, weight=float(w))


def append_negation(circuit: Circuit, qubit: int) -> ArithmeticTap:
    circuit.x(qubit)
    return ArithmeticTap(qubit, NEGATION)
