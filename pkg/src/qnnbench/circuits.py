"""Parameterized circuits, parameter binding and entanglement topologies.

A circuit carries two disjoint slot families: data slots (feature values,
written ``x0, x1, ...``) and weight slots (trainable angles, written
``w0, w1, ...``). Angle expressions are restricted to the two shapes the
circuit library needs: affine terms over slots, plus an optional product
term ``c * prod(pi - slot_i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .simulator import GateKind

TOPOLOGIES = ("full", "linear", "circular", "sca", "pairwise")

DATA = "x"
WEIGHT = "w"

# A slot is ("x"|"w", index).
Slot = tuple


@dataclass(frozen=True)
class ParamExpression:
    """constant + sum(coeff * slot) + product_coeff * prod(pi - slot)."""

    constant: float = 0.0
    linear: tuple = ()          # ((slot, coeff), ...)
    product_coeff: float = 0.0
    product_slots: tuple = ()   # (slot, ...)

    @classmethod
    def fixed(cls, value: float) -> "ParamExpression":
        return cls(constant=float(value))

    @classmethod
    def of_slot(cls, slot: Slot, coeff: float = 1.0) -> "ParamExpression":
        return cls(linear=((slot, float(coeff)),))

    @classmethod
    def pi_product(cls, slots, coeff: float) -> "ParamExpression":
        return cls(product_coeff=float(coeff), product_slots=tuple(slots))

    def slots(self):
        for slot, _ in self.linear:
            yield slot
        yield from self.product_slots

    def evaluate(self, data, weights) -> float:
        value = self.constant
        for (kind, idx), coeff in self.linear:
            value += coeff * (data[idx] if kind == DATA else weights[idx])
        if self.product_slots:
            prod = 1.0
            for kind, idx in self.product_slots:
                prod *= math.pi - (data[idx] if kind == DATA else weights[idx])
            value += self.product_coeff * prod
        return value

    def __str__(self) -> str:
        parts = []
        if self.constant:
            parts.append(f"{self.constant:g}")
        for (kind, idx), coeff in self.linear:
            name = f"{kind}{idx}"
            parts.append(name if coeff == 1 else f"{coeff:g}*{name}")
        if self.product_slots:
            prod = "*".join(f"(pi-{kind}{idx})" for kind, idx in self.product_slots)
            parts.append(prod if self.product_coeff == 1 else f"{self.product_coeff:g}*{prod}")
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class Instruction:
    gate: GateKind
    qubits: tuple
    param: ParamExpression | None = None


@dataclass(frozen=True)
class BoundCircuit:
    """A circuit whose every angle is a concrete float; ready to simulate."""

    n_qubits: int
    ops: tuple  # ((GateKind, qubits, float|None), ...)


@dataclass(frozen=True)
class ParamCircuit:
    n_qubits: int
    instructions: tuple = field(default_factory=tuple)
    n_data: int = 0
    n_weights: int = 0

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        for ins in self.instructions:
            if len(ins.qubits) != ins.gate.arity:
                raise ValueError(f"{ins.gate.name} arity mismatch: {ins.qubits}")
            if len(set(ins.qubits)) != len(ins.qubits):
                raise ValueError(f"duplicate qubits in {ins}")
            for q in ins.qubits:
                if not 0 <= q < self.n_qubits:
                    raise ValueError(f"qubit {q} out of range (n={self.n_qubits})")
            if ins.gate.takes_angle != (ins.param is not None):
                raise ValueError(f"{ins.gate.name}: angle expression mismatch")
            if ins.param is not None:
                for kind, idx in ins.param.slots():
                    limit = self.n_data if kind == DATA else self.n_weights
                    if not 0 <= idx < limit:
                        raise ValueError(
                            f"slot {kind}{idx} not declared (have {limit} {kind!r} slots)"
                        )

    def bind(self, data, weights) -> BoundCircuit:
        """Evaluate every angle expression to a float."""
        data = tuple(float(v) for v in data)
        weights = tuple(float(v) for v in weights)
        if len(data) != self.n_data:
            raise ValueError(f"expected {self.n_data} data values, got {len(data)}")
        if len(weights) != self.n_weights:
            raise ValueError(f"expected {self.n_weights} weights, got {len(weights)}")
        for v in data + weights:
            if not math.isfinite(v):
                raise ValueError("non-finite parameter value")
        ops = tuple(
            (
                ins.gate,
                ins.qubits,
                None if ins.param is None else ins.param.evaluate(data, weights),
            )
            for ins in self.instructions
        )
        return BoundCircuit(self.n_qubits, ops)

    def depth(self) -> int:
        """Longest gate chain over any qubit (greedy layering)."""
        level = [0] * self.n_qubits
        for ins in self.instructions:
            layer = 1 + max(level[q] for q in ins.qubits)
            for q in ins.qubits:
                level[q] = layer
        return max(level, default=0)

    def to_text(self) -> str:
        """Plain-text dump, one instruction per line."""
        lines = [f"qubits: {self.n_qubits}"]
        for ins in self.instructions:
            qs = ",".join(f"q{q}" for q in ins.qubits)
            if ins.param is None:
                lines.append(f"{ins.gate.name} {qs}")
            else:
                lines.append(f"{ins.gate.name}({ins.param}) {qs}")
        return "\n".join(lines)


def bind(circuit: ParamCircuit, data, weights) -> BoundCircuit:
    return circuit.bind(data, weights)


def weight_count(circuit: ParamCircuit) -> int:
    return circuit.n_weights


def compose(encoder: ParamCircuit, ansatz: ParamCircuit) -> ParamCircuit:
    """Concatenate a data-only circuit with a weight-only circuit."""
    if encoder.n_qubits != ansatz.n_qubits:
        raise ValueError(
            f"qubit counts differ: {encoder.n_qubits} vs {ansatz.n_qubits}"
        )
    if encoder.n_weights or ansatz.n_data:
        raise ValueError("compose expects (data-only, weight-only) circuits")
    return ParamCircuit(
        n_qubits=encoder.n_qubits,
        instructions=encoder.instructions + ansatz.instructions,
        n_data=encoder.n_data,
        n_weights=ansatz.n_weights,
    )


def entanglement_pairs(topology: str, n: int, block_index: int = 0) -> list:
    """Ordered (control, target) pairs for one entanglement block.

    ``full``, ``linear`` and ``circular`` ignore the block index. ``sca``
    places the (n-1, 0) pair at position ``block_index mod n`` within the
    otherwise ascending pair list and swaps control/target roles on odd
    blocks. ``pairwise`` alternates between even pairs (0,1),(2,3),... and
    odd pairs (1,2),(3,4),... by block parity.
    """
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}; expected one of {TOPOLOGIES}")
    if n < 2:
        raise ValueError("entanglement needs at least 2 qubits")
    if block_index < 0:
        raise ValueError("block_index must be >= 0")

    ascending = [(i, i + 1) for i in range(n - 1)]
    if topology == "linear":
        return ascending
    if topology == "circular":
        return [(n - 1, 0)] + ascending
    if topology == "full":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    if topology == "sca":
        pos = block_index % n
        pairs = ascending[:pos] + [(n - 1, 0)] + ascending[pos:]
        if block_index % 2 == 1:
            pairs = [(b, a) for a, b in pairs]
        return pairs
    start = 0 if block_index % 2 == 0 else 1
    return [(i, i + 1) for i in range(start, n - 1, 2)]
