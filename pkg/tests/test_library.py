import math

import numpy as np
import pytest

from qnnbench.circuits import DATA, WEIGHT
from qnnbench.library import (
    AnsatzSpec,
    FeatureMapSpec,
    build_ansatz,
    build_feature_map,
    weight_count_for,
)
from qnnbench.simulator import GateKind, run_statevector

from oracles import oracle_statevector


class TestFeatureMapSpec:
    def test_z_rejects_topology(self):
        with pytest.raises(ValueError):
            FeatureMapSpec("z", 3, entanglement="full")

    def test_zz_requires_topology_and_two_qubits(self):
        with pytest.raises(ValueError):
            FeatureMapSpec("zz", 3)
        with pytest.raises(ValueError):
            FeatureMapSpec("zz", 1, entanglement="linear")

    def test_connectivity_degree(self):
        assert FeatureMapSpec("z", 3).k == 1
        assert FeatureMapSpec("zz", 3, entanglement="linear").k == 2


class TestBuildFeatureMap:
    def test_z_gate_sequence_two_reps(self):
        circuit = build_feature_map(FeatureMapSpec("z", 2, reps=2))
        kinds = [ins.gate for ins in circuit.instructions]
        assert kinds == [
            GateKind.H,
            GateKind.H,
            GateKind.PHASE,
            GateKind.PHASE,
        ] * 2
        # every phase angle is 2 * x_i on qubit i
        phases = [ins for ins in circuit.instructions if ins.gate is GateKind.PHASE]
        for ins in phases:
            ((kind, idx), coeff), = ins.param.linear
            assert kind == DATA and coeff == 2.0 and idx == ins.qubits[0]

    def test_only_data_slots(self):
        circuit = build_feature_map(FeatureMapSpec("zz", 3, reps=2, entanglement="linear"))
        assert circuit.n_weights == 0
        assert circuit.n_data == 3
        for ins in circuit.instructions:
            if ins.param is not None:
                assert all(kind == DATA for kind, _ in ins.param.slots())

    def test_single_feature_angle_identity(self):
        circuit = build_feature_map(FeatureMapSpec("z", 2, reps=1))
        bound = circuit.bind((0.7, 1.3), ())
        angles = [theta for gate, _, theta in bound.ops if gate is GateKind.PHASE]
        assert angles == [pytest.approx(1.4), pytest.approx(2.6)]

    def test_pair_angle_formula(self):
        circuit = build_feature_map(FeatureMapSpec("zz", 2, reps=1, entanglement="linear"))
        x = (0.4, 2.0)
        bound = circuit.bind(x, ())
        pair_angle = bound.ops[-2][2]
        assert pair_angle == pytest.approx(2 * (math.pi - 0.4) * (math.pi - 2.0))

    def test_pair_angle_vanishes_at_pi(self):
        circuit = build_feature_map(FeatureMapSpec("zz", 2, reps=1, entanglement="linear"))
        bound = circuit.bind((math.pi, math.pi), ())
        # entangling block reduces to CX . P(0) . CX = identity; state equals
        # the Z feature map on the same input
        z_bound = build_feature_map(FeatureMapSpec("z", 2, reps=1)).bind(
            (math.pi, math.pi), ()
        )
        assert np.allclose(
            run_statevector(bound).amplitudes, run_statevector(z_bound).amplitudes
        )

    def test_zz_entangling_block_shape(self):
        circuit = build_feature_map(FeatureMapSpec("zz", 4, reps=1, entanglement="linear"))
        cx = [ins for ins in circuit.instructions if ins.gate is GateKind.CX]
        assert len(cx) == 2 * 3  # CX sandwich per linear pair
        # sandwich structure: CX(a,b), PHASE on b, CX(a,b)
        seq = circuit.instructions
        for i, ins in enumerate(seq[:-2]):
            if ins.gate is GateKind.CX and seq[i + 1].gate is GateKind.PHASE:
                assert seq[i + 2].gate is GateKind.CX
                assert seq[i + 2].qubits == ins.qubits
                assert seq[i + 1].qubits == (ins.qubits[1],)

    def test_zz_uses_block_index_for_pairwise(self):
        circuit = build_feature_map(
            FeatureMapSpec("zz", 4, reps=2, entanglement="pairwise")
        )
        cx = [ins.qubits for ins in circuit.instructions if ins.gate is GateKind.CX]
        # rep 0 pairs (0,1),(2,3) each doubled; rep 1 pair (1,2) doubled
        assert cx == [(0, 1), (0, 1), (2, 3), (2, 3), (1, 2), (1, 2)]

    def test_matches_oracle(self):
        rng = np.random.default_rng(5)
        circuit = build_feature_map(FeatureMapSpec("zz", 3, reps=2, entanglement="circular"))
        x = rng.uniform(0, math.pi, size=3)
        bound = circuit.bind(x, ())
        assert (
            np.max(np.abs(run_statevector(bound).amplitudes - oracle_statevector(bound)))
            < 1e-10
        )


class TestBuildAnsatz:
    def test_real_amplitudes_structure(self):
        circuit = build_ansatz(AnsatzSpec("real_amplitudes", 7, reps=3, entanglement="linear"))
        assert circuit.n_weights == 28
        cx = [ins for ins in circuit.instructions if ins.gate is GateKind.CX]
        assert len(cx) == 3 * 6
        assert circuit.n_data == 0

    @pytest.mark.parametrize(
        "kind,expected",
        [
            ("real_amplitudes", 28),
            ("two_local", 28),
            ("efficient_su2", 56),
            ("pauli_two_design", 28),
        ],
    )
    def test_weight_count_law(self, kind, expected):
        ent = None if kind == "pauli_two_design" else "linear"
        spec = AnsatzSpec(kind, 7, reps=3, entanglement=ent)
        assert build_ansatz(spec).n_weights == expected
        assert weight_count_for(spec) == expected

    def test_efficient_su2_doubles_real_amplitudes(self):
        ra = build_ansatz(AnsatzSpec("real_amplitudes", 7, reps=3, entanglement="sca"))
        su2 = build_ansatz(AnsatzSpec("efficient_su2", 7, reps=3, entanglement="sca"))
        assert su2.n_weights == 2 * ra.n_weights

    def test_only_weight_slots(self):
        circuit = build_ansatz(AnsatzSpec("efficient_su2", 3, reps=2, entanglement="full"))
        assert circuit.n_data == 0
        for ins in circuit.instructions:
            if ins.param is not None:
                assert all(kind == WEIGHT for kind, _ in ins.param.slots())

    def test_pairwise_only_on_two_local(self):
        build_ansatz(AnsatzSpec("two_local", 4, reps=1, entanglement="pairwise"))
        with pytest.raises(ValueError, match="pairwise.*two_local"):
            AnsatzSpec("real_amplitudes", 4, reps=1, entanglement="pairwise")
        with pytest.raises(ValueError, match="pairwise.*two_local"):
            AnsatzSpec("efficient_su2", 4, reps=1, entanglement="pairwise")

    def test_pauli_two_design_deterministic(self):
        a = build_ansatz(AnsatzSpec("pauli_two_design", 4, reps=2, structure_seed=9))
        b = build_ansatz(AnsatzSpec("pauli_two_design", 4, reps=2, structure_seed=9))
        assert a.instructions == b.instructions
        c = build_ansatz(AnsatzSpec("pauli_two_design", 4, reps=2, structure_seed=10))
        assert c.instructions != a.instructions

    def test_pauli_two_design_structure(self):
        circuit = build_ansatz(AnsatzSpec("pauli_two_design", 4, reps=2, structure_seed=0))
        # fixed RY(pi/4) prelude on every qubit, no slot attached
        prelude = circuit.instructions[:4]
        for ins in prelude:
            assert ins.gate is GateKind.RY
            assert ins.param.constant == pytest.approx(math.pi / 4)
            assert not list(ins.param.slots())
        cz = [ins for ins in circuit.instructions if ins.gate is GateKind.CZ]
        assert len(cz) == 2 * 3  # (0,1),(2,3) then (1,2) per block
        rotations = [
            ins
            for ins in circuit.instructions[4:]
            if ins.gate in (GateKind.RX, GateKind.RY, GateKind.RZ) and ins.param.linear
        ]
        assert len(rotations) == 12

    def test_sca_orientation_changes_by_block(self):
        circuit = build_ansatz(AnsatzSpec("real_amplitudes", 3, reps=2, entanglement="sca"))
        cx = [ins.qubits for ins in circuit.instructions if ins.gate is GateKind.CX]
        assert cx[:3] == [(2, 0), (0, 1), (1, 2)]
        assert cx[3:] == [(1, 0), (0, 2), (2, 1)]


class TestDepthOrdering:
    def test_zz_deeper_than_z(self):
        for n in (2, 4, 7):
            z = build_feature_map(FeatureMapSpec("z", n, reps=2))
            zz = build_feature_map(FeatureMapSpec("zz", n, reps=2, entanglement="linear"))
            assert zz.depth() > z.depth()
