"""Dense state-vector simulator with shot sampling and stochastic Pauli noise.

Conventions (pinned here and relied on by every other module):

* qubit 0 is the least-significant bit of the basis-state index,
* measured bitstrings are printed most-significant qubit first, so the
  string ``"10"`` on two qubits means qubit 1 is |1> and qubit 0 is |0>.

Gates are applied as in-place amplitude-pair updates (diagonal and
permutation gates get dedicated kernels); no 2^n x 2^n matrix is ever
built outside of test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

# Max allowed drift of the state norm after any instruction sequence.
NORM_ATOL = 1e-9

_SQRT2_INV = 1.0 / math.sqrt(2.0)


class GateKind(Enum):
    """The gate set: fixed Paulis/H, single-qubit rotations, CX and CZ."""

    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    PHASE = "p"
    CX = "cx"
    CZ = "cz"

    @property
    def arity(self) -> int:
        return 2 if self in (GateKind.CX, GateKind.CZ) else 1

    @property
    def takes_angle(self) -> bool:
        return self in (GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.PHASE)

    def matrix(self, theta: float | None = None) -> np.ndarray:
        """Unitary matrix of the gate (2x2, or 4x4 in |control,target> order)."""
        if self.takes_angle:
            if theta is None:
                raise ValueError(f"gate {self.name} requires an angle")
            t = float(theta)
            if self is GateKind.RX:
                c, s = math.cos(t / 2), math.sin(t / 2)
                return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
            if self is GateKind.RY:
                c, s = math.cos(t / 2), math.sin(t / 2)
                return np.array([[c, -s], [s, c]], dtype=complex)
            if self is GateKind.RZ:
                return np.array(
                    [[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex
                )
            return np.array([[1, 0], [0, np.exp(1j * t)]], dtype=complex)
        if theta is not None:
            raise ValueError(f"gate {self.name} takes no angle")
        return _FIXED_MATRICES[self].copy()


_FIXED_MATRICES = {
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.CX: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    GateKind.CZ: np.diag([1, 1, 1, -1]).astype(complex),
}

# Single-qubit Paulis used by the depolarizing trajectory sampler,
# indexed 0..3 as I, X, Y, Z.
_PAULI_1Q = (None, GateKind.X, GateKind.Y, GateKind.Z)


@dataclass
class StateVector:
    """Unit-norm complex amplitudes of an n-qubit register (length 2^n)."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes for "
                f"{self.n_qubits} qubits, got {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        total = p.sum()
        if total <= 0:
            raise ValueError("state has zero norm")
        return p / total


@lru_cache(maxsize=32)
def _basis_indices(n_qubits: int) -> np.ndarray:
    return np.arange(1 << n_qubits)


def index_to_bitstring(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def bitstring_to_index(bits: str) -> int:
    return int(bits, 2)


# ---------------------------------------------------------------------------
# in-place gate kernels


def _apply_dense_1q(amps: np.ndarray, mat: np.ndarray, qubit: int) -> None:
    view = amps.reshape(-1, 2, 1 << qubit)
    a0 = view[:, 0, :]
    a1 = view[:, 1, :]
    new0 = mat[0, 0] * a0 + mat[0, 1] * a1
    new1 = mat[1, 0] * a0 + mat[1, 1] * a1
    view[:, 0, :] = new0
    view[:, 1, :] = new1


def _apply_diag_1q(amps: np.ndarray, d0: complex, d1: complex, qubit: int) -> None:
    view = amps.reshape(-1, 2, 1 << qubit)
    if d0 != 1:
        view[:, 0, :] *= d0
    view[:, 1, :] *= d1


def _apply_cx(amps: np.ndarray, n: int, control: int, target: int) -> None:
    idx = _basis_indices(n)
    sel = idx[(((idx >> control) & 1) == 1) & (((idx >> target) & 1) == 0)]
    partner = sel | (1 << target)
    tmp = amps[sel].copy()
    amps[sel] = amps[partner]
    amps[partner] = tmp


def _apply_cz(amps: np.ndarray, n: int, a: int, b: int) -> None:
    idx = _basis_indices(n)
    both = (((idx >> a) & 1) & ((idx >> b) & 1)).astype(bool)
    amps[both] *= -1


def _apply_inplace(
    amps: np.ndarray, n: int, gate: GateKind, qubits: tuple[int, ...], theta: float | None
) -> None:
    if gate is GateKind.CX:
        _apply_cx(amps, n, qubits[0], qubits[1])
    elif gate is GateKind.CZ:
        _apply_cz(amps, n, qubits[0], qubits[1])
    elif gate is GateKind.Z:
        _apply_diag_1q(amps, 1, -1, qubits[0])
    elif gate is GateKind.PHASE:
        _apply_diag_1q(amps, 1, np.exp(1j * theta), qubits[0])
    elif gate is GateKind.RZ:
        _apply_diag_1q(amps, np.exp(-0.5j * theta), np.exp(0.5j * theta), qubits[0])
    else:
        _apply_dense_1q(amps, gate.matrix(theta), qubits[0])


def _validate_instruction(
    n: int, gate: GateKind, qubits: tuple[int, ...], theta: float | None
) -> None:
    if len(qubits) != gate.arity:
        raise ValueError(
            f"gate {gate.name} acts on {gate.arity} qubit(s), got {len(qubits)}"
        )
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"qubit indices must be distinct, got {qubits}")
    for q in qubits:
        if not 0 <= q < n:
            raise ValueError(f"qubit index {q} out of range for {n} qubits")
    if gate.takes_angle and theta is None:
        raise ValueError(f"gate {gate.name} requires an angle")
    if not gate.takes_angle and theta is not None:
        raise ValueError(f"gate {gate.name} takes no angle")


def apply_instruction(
    state: StateVector,
    gate: GateKind,
    qubits: tuple[int, ...] | list[int],
    theta: float | None = None,
) -> StateVector:
    """Apply one gate to the designated qubits, returning a new state."""
    qubits = tuple(qubits)
    _validate_instruction(state.n_qubits, gate, qubits, theta)
    amps = state.amplitudes.copy()
    _apply_inplace(amps, state.n_qubits, gate, qubits, theta)
    return StateVector(state.n_qubits, amps)


# ---------------------------------------------------------------------------
# circuit execution


def _run_ops(n: int, ops) -> np.ndarray:
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    for gate, qubits, theta in ops:
        _apply_inplace(amps, n, gate, qubits, theta)
    return amps


def run_statevector(circuit) -> StateVector:
    """Execute a fully bound circuit on |0...0>.

    Accepts a ``BoundCircuit``, or a ``ParamCircuit`` with no parameter
    slots (anything with unbound slots is rejected).
    """
    bound = _as_bound(circuit)
    return StateVector(bound.n_qubits, _run_ops(bound.n_qubits, bound.ops))


def _as_bound(circuit):
    if hasattr(circuit, "ops"):
        return circuit
    if circuit.n_data or circuit.n_weights:
        raise ValueError(
            f"circuit has unbound parameter slots "
            f"({circuit.n_data} data, {circuit.n_weights} weight); bind it first"
        )
    return circuit.bind((), ())


def _sample_index_counts(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    p = np.clip(probs, 0.0, None)
    p = p / p.sum()
    return rng.multinomial(shots, p)


def _counts_to_histogram(counts: np.ndarray, n_qubits: int) -> dict[str, int]:
    return {
        index_to_bitstring(i, n_qubits): int(c)
        for i, c in enumerate(counts)
        if c > 0
    }


def sample_counts(state: StateVector, shots: int, rng: np.random.Generator) -> dict[str, int]:
    """Draw Born-rule measurement samples; deterministic for a fixed stream."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    counts = _sample_index_counts(state.probabilities(), shots, rng)
    return _counts_to_histogram(counts, state.n_qubits)


# ---------------------------------------------------------------------------
# noisy trajectory execution


def _sample_pauli_error(rng: np.random.Generator, qubits: tuple[int, ...]):
    """Pick a Pauli uniformly over all 4^k on the acted qubits (0 = identity).

    Sampling the identity with equal weight makes the per-gate channel the
    exact depolarizing map rho -> (1-p) rho + p I/2^k, so p=1 yields the
    maximally mixed state on the acted qubits.
    """
    if len(qubits) == 1:
        k = int(rng.integers(4))
        return () if k == 0 else ((_PAULI_1Q[k], qubits[0]),)
    k = int(rng.integers(16))
    pa, pb = divmod(k, 4)
    out = []
    if pa:
        out.append((_PAULI_1Q[pa], qubits[0]))
    if pb:
        out.append((_PAULI_1Q[pb], qubits[1]))
    return tuple(out)


def _noisy_index_counts(bound, noise, shots: int, rng: np.random.Generator) -> np.ndarray:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = bound.n_qubits
    noise.validate_for(n)
    ops = bound.ops
    n_ops = len(ops)

    gate_p = np.array(
        [noise.p1 if len(qubits) == 1 else noise.p2 for _, qubits, _ in ops]
    )
    gate_noise = n_ops > 0 and bool((gate_p > 0).any())
    readout_noise = noise.has_readout_noise()

    # Ideal evolution; the per-gate prefix states let an error trajectory
    # resume from the first corrupted gate instead of replaying the circuit.
    dim = 1 << n
    prefixes = np.empty((n_ops + 1, dim), dtype=complex)
    prefixes[0] = 0.0
    prefixes[0][0] = 1.0
    for j, (gate, qubits, theta) in enumerate(ops):
        amps = prefixes[j].copy()
        _apply_inplace(amps, n, gate, qubits, theta)
        prefixes[j + 1] = amps
    ideal_probs = np.abs(prefixes[-1]) ** 2
    ideal_probs /= ideal_probs.sum()

    if not gate_noise and not readout_noise:
        # Consumes the stream exactly like the noiseless sampler, so an
        # all-zero model reproduces sample_counts bit for bit.
        return _sample_index_counts(ideal_probs, shots, rng)

    outcomes = np.empty(shots, dtype=np.int64)
    if gate_noise:
        err = rng.random((shots, n_ops)) < gate_p
        err_any = err.any(axis=1)
    else:
        err = None
        err_any = np.zeros(shots, dtype=bool)

    cum_ideal = np.cumsum(ideal_probs)
    cum_ideal[-1] = 1.0
    clean = np.nonzero(~err_any)[0]
    if clean.size:
        outcomes[clean] = np.searchsorted(cum_ideal, rng.random(clean.size), side="right")

    for s in np.nonzero(err_any)[0]:
        hit = np.nonzero(err[s])[0]
        first = hit[0]
        amps = prefixes[first + 1].copy()
        for gate, q in _sample_pauli_error(rng, ops[first][1]):
            _apply_inplace(amps, n, gate, (q,), None)
        for j in range(first + 1, n_ops):
            gate, qubits, theta = ops[j]
            _apply_inplace(amps, n, gate, qubits, theta)
            if err[s, j]:
                for pg, q in _sample_pauli_error(rng, qubits):
                    _apply_inplace(amps, n, pg, (q,), None)
        p = np.abs(amps) ** 2
        cum = np.cumsum(p / p.sum())
        cum[-1] = 1.0
        outcomes[s] = np.searchsorted(cum, rng.random(), side="right")

    if readout_noise:
        qs = np.arange(n)
        bits = (outcomes[:, None] >> qs) & 1
        p_flip = np.where(bits == 1, noise.readout[:, 1], noise.readout[:, 0])
        bits = bits ^ (rng.random((shots, n)) < p_flip)
        outcomes = bits @ (1 << qs)

    return np.bincount(outcomes, minlength=dim)


def run_noisy_trajectories(
    circuit, noise, shots: int, rng: np.random.Generator
) -> dict[str, int]:
    """Sample measurement outcomes under per-gate depolarizing + readout noise.

    Each shot is an independent trajectory: after every gate a Pauli error
    may be inserted (probability p1/p2 by gate arity), and the final
    bitstring passes through per-qubit readout flips. All randomness comes
    from the supplied stream.
    """
    bound = _as_bound(circuit)
    counts = _noisy_index_counts(bound, noise, shots, rng)
    return _counts_to_histogram(counts, bound.n_qubits)
