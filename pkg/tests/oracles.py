"""Independent reference implementations used as test oracles.

Everything here is deliberately brute force and shares no code with the
package's production paths: full Kronecker-product matrices for circuit
simulation, explicit enumeration for the exact rank tests, and
definition-level metric recomputation.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from qnnbench.circuits import BoundCircuit
from qnnbench.simulator import GateKind

_I2 = np.eye(2, dtype=complex)
_P0 = np.array([[1, 0], [0, 0]], dtype=complex)
_P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def embed_single(mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Kronecker-expand a 2x2 matrix onto the full register, qubit 0 = LSB."""
    out = np.array([[1.0 + 0j]])
    for q in range(n - 1, -1, -1):
        out = np.kron(out, mat if q == qubit else _I2)
    return out


def embed_controlled(target_mat: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    return embed_single(_P0, control, n) + embed_single(_P1, control, n) @ embed_single(
        target_mat, target, n
    )


def full_matrix(gate: GateKind, qubits, theta, n: int) -> np.ndarray:
    if gate is GateKind.CX:
        return embed_controlled(GateKind.X.matrix(), qubits[0], qubits[1], n)
    if gate is GateKind.CZ:
        return embed_controlled(GateKind.Z.matrix(), qubits[0], qubits[1], n)
    return embed_single(gate.matrix(theta), qubits[0], n)


def oracle_statevector(bound: BoundCircuit) -> np.ndarray:
    """Run a bound circuit by explicit dense matrix products."""
    n = bound.n_qubits
    state = np.zeros(1 << n, dtype=complex)
    state[0] = 1.0
    for gate, qubits, theta in bound.ops:
        state = full_matrix(gate, qubits, theta, n) @ state
    return state


def random_bound_circuit(rng: np.random.Generator, n: int, depth: int) -> BoundCircuit:
    """Random circuit over the whole gate set with random angles."""
    single = [
        GateKind.H,
        GateKind.X,
        GateKind.Y,
        GateKind.Z,
        GateKind.RX,
        GateKind.RY,
        GateKind.RZ,
        GateKind.PHASE,
    ]
    ops = []
    for _ in range(depth):
        if n >= 2 and rng.random() < 0.3:
            gate = GateKind.CX if rng.random() < 0.5 else GateKind.CZ
            a, b = rng.choice(n, size=2, replace=False)
            ops.append((gate, (int(a), int(b)), None))
        else:
            gate = single[rng.integers(len(single))]
            theta = float(rng.uniform(-2 * math.pi, 2 * math.pi)) if gate.takes_angle else None
            ops.append((gate, (int(rng.integers(n)),), theta))
    return BoundCircuit(n, tuple(ops))


# ---------------------------------------------------------------------------
# statistics oracles


def _average_ranks(values) -> list:
    """Fractional ranks computed from scratch (ties get the mean rank)."""
    pairs = sorted(enumerate(values), key=lambda kv: kv[1])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(pairs):
        j = i
        while j + 1 < len(pairs) and pairs[j + 1][1] == pairs[i][1]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[pairs[k][0]] = mean_rank
        i = j + 1
    return ranks


def wilcoxon_enum_p(a, b) -> float:
    """Two-sided exact p by enumerating every sign pattern of the nonzero
    paired differences."""
    diffs = [x - y for x, y in zip(a, b) if x != y]
    n = len(diffs)
    ranks = _average_ranks([abs(d) for d in diffs])
    total = sum(ranks)
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    t_obs = min(w_plus, total - w_plus)
    hits = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        if min(w, total - w) <= t_obs + 1e-12:
            hits += 1
    return hits / 2**n


def mann_whitney_enum_p(a, b) -> float:
    """Two-sided exact p by enumerating group assignments; U is recomputed
    from its defining pairwise comparisons for every arrangement."""
    pooled = list(a) + list(b)
    n1 = len(a)
    n = len(pooled)
    mu = n1 * (n - n1) / 2.0

    def u_of(group1):
        rest = [pooled[i] for i in range(n) if i not in group1]
        u = 0.0
        for i in group1:
            for y in rest:
                if pooled[i] > y:
                    u += 1.0
                elif pooled[i] == y:
                    u += 0.5
        return u

    u_obs = u_of(tuple(range(n1)))
    gap = abs(u_obs - mu)
    hits = 0
    count = 0
    for combo in itertools.combinations(range(n), n1):
        count += 1
        if abs(u_of(combo) - mu) >= gap - 1e-12:
            hits += 1
    return hits / count


def kruskal_h_by_hand(groups) -> float:
    """H from the textbook formula with fractional ranks, no tie correction
    shortcuts (correction applied explicitly)."""
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    ranks = _average_ranks(pooled)
    h = 0.0
    offset = 0
    for g in groups:
        r = sum(ranks[offset : offset + len(g)])
        h += r * r / len(g)
        offset += len(g)
    h = 12.0 / (n * (n + 1)) * h - 3 * (n + 1)
    counts = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    ties = sum(c**3 - c for c in counts.values())
    return h / (1.0 - ties / (n**3 - n))


def weighted_f1_by_hand(y_true, y_pred) -> float:
    classes = sorted(set(y_true))
    total = 0.0
    for c in classes:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 0.0
        if precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        total += (tp + fn) / len(y_true) * f1
    return total


def fisher_direction(X, y) -> np.ndarray:
    """Two-class Fisher discriminant S_W^-1 (mu1 - mu0)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    mu0 = X[y == 0].mean(axis=0)
    mu1 = X[y == 1].mean(axis=0)
    s_w = np.zeros((X.shape[1], X.shape[1]))
    for c, mu in ((0, mu0), (1, mu1)):
        rows = X[y == c] - mu
        s_w += rows.T @ rows
    return np.linalg.solve(s_w + 1e-6 * np.eye(X.shape[1]), mu1 - mu0)
