"""Feature-map and ansatz constructors.

Feature maps produce circuits with data slots only, ansatzes with weight
slots only. Encoding angles carry the conventional factor 2, i.e. the
single-feature rotation is Phase(2*x_i) and the pair rotation is
Phase(2*(pi-x_i)*(pi-x_j)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import (
    DATA,
    TOPOLOGIES,
    Instruction,
    ParamCircuit,
    ParamExpression,
    WEIGHT,
    entanglement_pairs,
)
from .simulator import GateKind

FEATURE_MAP_KINDS = ("z", "zz")
ANSATZ_KINDS = ("real_amplitudes", "efficient_su2", "two_local", "pauli_two_design")

# Ansatz kinds whose entanglement block may use the pairwise topology.
_PAIRWISE_ANSATZE = ("two_local",)
_ROTATIONS = (GateKind.RX, GateKind.RY, GateKind.RZ)

DEFAULT_FEATURE_MAP_REPS = 2
DEFAULT_ANSATZ_REPS = 3


@dataclass(frozen=True)
class FeatureMapSpec:
    """Z (k=1) or ZZ (k=2) Pauli-expansion encoder, one qubit per feature."""

    kind: str
    n_features: int
    reps: int = DEFAULT_FEATURE_MAP_REPS
    entanglement: str | None = None

    def __post_init__(self):
        if self.kind not in FEATURE_MAP_KINDS:
            raise ValueError(f"unknown feature map kind {self.kind!r}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.kind == "z":
            if self.n_features < 1:
                raise ValueError("z feature map needs n_features >= 1")
            if self.entanglement is not None:
                raise ValueError("z feature map takes no entanglement topology")
        else:
            if self.n_features < 2:
                raise ValueError("zz feature map needs n_features >= 2")
            if self.entanglement not in TOPOLOGIES:
                raise ValueError(
                    f"zz feature map needs a topology from {TOPOLOGIES}, "
                    f"got {self.entanglement!r}"
                )

    @property
    def k(self) -> int:
        return 1 if self.kind == "z" else 2


@dataclass(frozen=True)
class AnsatzSpec:
    kind: str
    n_qubits: int
    reps: int = DEFAULT_ANSATZ_REPS
    entanglement: str | None = None
    structure_seed: int = 0  # pauli_two_design rotation-axis draw

    def __post_init__(self):
        if self.kind not in ANSATZ_KINDS:
            raise ValueError(f"unknown ansatz kind {self.kind!r}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.kind == "pauli_two_design":
            if self.entanglement is not None:
                raise ValueError("pauli_two_design has a fixed entanglement structure")
            if self.n_qubits < 2:
                raise ValueError("pauli_two_design needs n_qubits >= 2")
            return
        if self.n_qubits < 2:
            raise ValueError(f"{self.kind} needs n_qubits >= 2")
        if self.entanglement not in TOPOLOGIES:
            raise ValueError(
                f"{self.kind} needs a topology from {TOPOLOGIES}, "
                f"got {self.entanglement!r}"
            )
        if self.entanglement == "pairwise" and self.kind not in _PAIRWISE_ANSATZE:
            raise ValueError(
                f"pairwise entanglement is only supported by the two_local "
                f"ansatz (got ansatz={self.kind}, entanglement=pairwise)"
            )

    def layer_count(self) -> int:
        """Depth in rotation/entanglement repetitions (used for 1/L scaling)."""
        return self.reps


def weight_count_for(spec: AnsatzSpec) -> int:
    per_layer = 2 * spec.n_qubits if spec.kind == "efficient_su2" else spec.n_qubits
    return (spec.reps + 1) * per_layer


def build_feature_map(spec: FeatureMapSpec) -> ParamCircuit:
    """Per repetition: H on all qubits, Phase(2*x_i) on each qubit, and for
    ZZ a CX / Phase(2*(pi-x_i)*(pi-x_j)) / CX block per topology pair."""
    n = spec.n_features
    ins = []
    for rep in range(spec.reps):
        for q in range(n):
            ins.append(Instruction(GateKind.H, (q,)))
        for q in range(n):
            expr = ParamExpression.of_slot((DATA, q), coeff=2.0)
            ins.append(Instruction(GateKind.PHASE, (q,), expr))
        if spec.kind == "zz":
            for a, b in entanglement_pairs(spec.entanglement, n, rep):
                pair = ParamExpression.pi_product(((DATA, a), (DATA, b)), coeff=2.0)
                ins.append(Instruction(GateKind.CX, (a, b)))
                ins.append(Instruction(GateKind.PHASE, (b,), pair))
                ins.append(Instruction(GateKind.CX, (a, b)))
    return ParamCircuit(n_qubits=n, instructions=ins, n_data=n, n_weights=0)


def _rotation_layer(ins, gates, n, next_w):
    for q in range(n):
        ins.append(
            Instruction(gates[q], (q,), ParamExpression.of_slot((WEIGHT, next_w)))
        )
        next_w += 1
    return next_w


def build_ansatz(spec: AnsatzSpec) -> ParamCircuit:
    """Alternating rotation and entanglement blocks with a final rotation layer.

    real_amplitudes / two_local: RY layers with CX entanglement,
    (reps+1)*n weights. efficient_su2: RY+RZ layers with CX entanglement,
    2*(reps+1)*n weights. pauli_two_design: fixed RY(pi/4) prelude, then
    seeded random {RX,RY,RZ} layers with staggered CZ pairs, (reps+1)*n
    weights.
    """
    n = spec.n_qubits
    ins = []
    w = 0
    if spec.kind == "pauli_two_design":
        rng = np.random.default_rng(spec.structure_seed)
        axis = rng.integers(0, 3, size=(spec.reps + 1, n))
        for q in range(n):
            ins.append(
                Instruction(GateKind.RY, (q,), ParamExpression.fixed(np.pi / 4))
            )
        for block in range(spec.reps):
            gates = [_ROTATIONS[a] for a in axis[block]]
            w = _rotation_layer(ins, gates, n, w)
            for start in (0, 1):
                for i in range(start, n - 1, 2):
                    ins.append(Instruction(GateKind.CZ, (i, i + 1)))
        gates = [_ROTATIONS[a] for a in axis[spec.reps]]
        w = _rotation_layer(ins, gates, n, w)
    elif spec.kind == "efficient_su2":
        for block in range(spec.reps):
            w = _rotation_layer(ins, [GateKind.RY] * n, n, w)
            w = _rotation_layer(ins, [GateKind.RZ] * n, n, w)
            for a, b in entanglement_pairs(spec.entanglement, n, block):
                ins.append(Instruction(GateKind.CX, (a, b)))
        w = _rotation_layer(ins, [GateKind.RY] * n, n, w)
        w = _rotation_layer(ins, [GateKind.RZ] * n, n, w)
    else:  # real_amplitudes and two_local share the RY + CX structure
        for block in range(spec.reps):
            w = _rotation_layer(ins, [GateKind.RY] * n, n, w)
            for a, b in entanglement_pairs(spec.entanglement, n, block):
                ins.append(Instruction(GateKind.CX, (a, b)))
        w = _rotation_layer(ins, [GateKind.RY] * n, n, w)
    return ParamCircuit(n_qubits=n, instructions=ins, n_data=0, n_weights=w)
