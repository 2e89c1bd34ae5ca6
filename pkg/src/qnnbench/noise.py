"""Device-noise descriptions consumed by the trajectory sampler.

The model is intentionally small: one depolarizing probability for all
single-qubit gates, one for all two-qubit gates, and a per-qubit readout
flip matrix. The bundled "perth-like" preset uses order-of-magnitude
values for a 7-qubit superconducting device; it is an engineering default,
not calibration data.

File format (JSON, exactly these keys):

    {"n_qubits": 7, "p1": 5e-4, "p2": 1e-2,
     "readout": [[p_flip_0to1, p_flip_1to0], ...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

_REQUIRED_KEYS = {"n_qubits", "p1", "p2", "readout"}

PERTH_LIKE = {"n_qubits": 7, "p1": 5e-4, "p2": 1e-2, "readout_flip": 2e-2}


@dataclass(eq=False)
class NoiseModel:
    n_qubits: int
    p1: float
    p2: float
    readout: np.ndarray  # shape (n_qubits, 2): columns (p 0->1, p 1->0)

    def __post_init__(self):
        self.readout = np.asarray(self.readout, dtype=float)
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.readout.shape != (self.n_qubits, 2):
            raise ValueError(
                f"readout must have shape ({self.n_qubits}, 2), got {self.readout.shape}"
            )
        for name, value in (("p1", self.p1), ("p2", self.p2)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        if ((self.readout < 0) | (self.readout > 1)).any():
            raise ValueError("readout probabilities outside [0, 1]")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NoiseModel)
            and self.n_qubits == other.n_qubits
            and self.p1 == other.p1
            and self.p2 == other.p2
            and np.array_equal(self.readout, other.readout)
        )

    @classmethod
    def zero(cls, n_qubits: int) -> "NoiseModel":
        return cls(n_qubits, 0.0, 0.0, np.zeros((n_qubits, 2)))

    @classmethod
    def perth_like(cls, n_qubits: int = 7) -> "NoiseModel":
        flip = PERTH_LIKE["readout_flip"]
        return cls(
            n_qubits,
            PERTH_LIKE["p1"],
            PERTH_LIKE["p2"],
            np.full((n_qubits, 2), flip),
        )

    def has_gate_noise(self) -> bool:
        return self.p1 > 0 or self.p2 > 0

    def has_readout_noise(self) -> bool:
        return bool((self.readout > 0).any())

    def is_zero(self) -> bool:
        return not self.has_gate_noise() and not self.has_readout_noise()

    def validate_for(self, circuit_qubits: int) -> None:
        if self.n_qubits < circuit_qubits:
            raise ValueError(
                f"noise model covers {self.n_qubits} qubits, "
                f"circuit needs {circuit_qubits}"
            )

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "p1": self.p1,
            "p2": self.p2,
            "readout": [[float(a), float(b)] for a, b in self.readout],
        }


def load_noise_model(path) -> NoiseModel:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("noise file must contain a JSON object")
    keys = set(raw)
    if keys != _REQUIRED_KEYS:
        unknown = sorted(keys - _REQUIRED_KEYS)
        missing = sorted(_REQUIRED_KEYS - keys)
        detail = []
        if unknown:
            detail.append(f"unknown keys {unknown}")
        if missing:
            detail.append(f"missing keys {missing}")
        raise ValueError(f"bad noise file: {'; '.join(detail)}")
    return NoiseModel(
        n_qubits=int(raw["n_qubits"]),
        p1=float(raw["p1"]),
        p2=float(raw["p2"]),
        readout=raw["readout"],
    )


def save_noise_model(model: NoiseModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
