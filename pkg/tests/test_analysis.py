import math

import numpy as np
import pytest

from qnnbench.analysis import (
    PairwiseMatrix,
    accuracy,
    best_set,
    friedman,
    kruskal_wallis,
    mann_whitney_u,
    pairwise_matrix,
    weighted_f1,
    wilcoxon_signed_rank,
    worst_set,
)

from oracles import (
    kruskal_h_by_hand,
    mann_whitney_enum_p,
    weighted_f1_by_hand,
    wilcoxon_enum_p,
)


class TestMetrics:
    def test_perfect_predictions(self):
        y = [0, 1, 2, 1, 0]
        assert accuracy(y, y) == 1.0
        assert weighted_f1(y, y) == 1.0

    def test_weighted_f1_worked_example(self):
        # both class F1 values are 2/3, supports 2/3 and 1/3
        y_true = [0, 0, 1]
        y_pred = [0, 1, 1]
        assert weighted_f1(y_pred, y_true) == pytest.approx(2 / 3)
        assert weighted_f1(y_pred, y_true) == pytest.approx(
            weighted_f1_by_hand(y_true, y_pred)
        )

    def test_all_wrong_binary(self):
        y_true = [0, 1, 0, 1]
        y_pred = [1, 0, 1, 0]
        assert accuracy(y_pred, y_true) == 0.0
        assert weighted_f1(y_pred, y_true) == 0.0

    def test_matches_hand_oracle_random(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            y_true = rng.integers(0, 4, size=30)
            y_pred = rng.integers(0, 4, size=30)
            assert weighted_f1(y_pred, y_true) == pytest.approx(
                weighted_f1_by_hand(list(y_true), list(y_pred))
            )

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            accuracy([], [])


class TestBestWorstSets:
    def test_threshold_arithmetic(self):
        records = [{"accuracy": a} for a in (0.972, 0.91, 0.88, 0.70)]
        chosen = {r["accuracy"] for r in best_set(records, band=0.10)}
        assert chosen == {0.972, 0.91, 0.88}

    def test_single_record(self):
        records = [{"accuracy": 0.5}]
        assert best_set(records) == records
        assert worst_set(records) == records

    def test_worst_set(self):
        records = [{"accuracy": a} for a in (0.972, 0.91, 0.30, 0.25)]
        chosen = {r["accuracy"] for r in worst_set(records, band=0.10)}
        assert chosen == {0.30, 0.25}

    def test_monotone_in_band(self):
        records = [{"accuracy": a} for a in np.linspace(0, 1, 21)]
        sizes = [len(best_set(records, band=b)) for b in (0.05, 0.10, 0.20)]
        assert sizes == sorted(sizes)


class TestWilcoxon:
    def test_all_positive_n5(self):
        res = wilcoxon_signed_rank([2, 3, 4, 5, 6], [1, 2, 3, 4, 5])
        assert res.statistic == 0
        assert res.p_value == pytest.approx(2 / 32)
        assert res.method == "exact"

    def test_degenerate_all_zero(self):
        with pytest.raises(ValueError, match="zero"):
            wilcoxon_signed_rank([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])

    def test_exact_matches_enumeration_small(self):
        rng = np.random.default_rng(1)
        checked = 0
        while checked < 60:
            n = int(rng.integers(5, 11))
            a = rng.integers(0, 6, size=n).astype(float)
            b = rng.integers(0, 6, size=n).astype(float)
            if np.count_nonzero(a - b) < 5:
                continue
            res = wilcoxon_signed_rank(a, b)
            assert res.method == "exact"
            assert abs(res.p_value - wilcoxon_enum_p(a, b)) < 1e-9
            checked += 1

    def test_exact_vs_approx_at_crossover(self):
        rng = np.random.default_rng(2)
        for _ in range(60):
            a = rng.normal(size=12)
            b = a + rng.normal(scale=rng.uniform(0.2, 2.0), size=12)
            exact = wilcoxon_signed_rank(a, b, method="exact").p_value
            approx = wilcoxon_signed_rank(a, b, method="approximate").p_value
            assert abs(exact - approx) < 0.01

    def test_large_sample_uses_approximation(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=40)
        b = a + 0.5 + rng.normal(size=40)
        res = wilcoxon_signed_rank(a, b)
        assert res.method == "approximate"
        assert 0.0 <= res.p_value <= 1.0


class TestMannWhitney:
    def test_separated_groups(self):
        res = mann_whitney_u([1, 2, 3], [4, 5, 6])
        assert res.statistic == 0
        assert res.p_value == pytest.approx(0.10)
        assert res.method == "exact"

    def test_identical_groups(self):
        res = mann_whitney_u([1, 2, 3], [1, 2, 3])
        assert res.p_value == pytest.approx(1.0)

    def test_symmetry_under_swap(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            a = list(rng.normal(size=int(rng.integers(3, 7))))
            b = list(rng.normal(size=int(rng.integers(3, 7))))
            assert mann_whitney_u(a, b).p_value == pytest.approx(
                mann_whitney_u(b, a).p_value
            )

    def test_exact_matches_enumeration_small(self):
        rng = np.random.default_rng(5)
        for _ in range(60):
            n1 = int(rng.integers(2, 7))
            n2 = int(rng.integers(2, min(11 - n1, 7)))
            a = rng.integers(0, 8, size=n1).astype(float)
            b = rng.integers(0, 8, size=n2).astype(float)
            res = mann_whitney_u(list(a), list(b))
            assert res.method == "exact"
            assert abs(res.p_value - mann_whitney_enum_p(list(a), list(b))) < 1e-9

    def test_exact_vs_approx_at_crossover(self):
        rng = np.random.default_rng(6)
        for _ in range(60):
            n1 = int(rng.integers(3, 10))
            a = list(rng.normal(size=n1))
            b = list(rng.normal(loc=rng.uniform(-1.5, 1.5), size=12 - n1))
            exact = mann_whitney_u(a, b, method="exact").p_value
            approx = mann_whitney_u(a, b, method="approximate").p_value
            assert abs(exact - approx) < 0.01

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mann_whitney_u([], [1.0])


class TestKruskalWallisFriedman:
    def test_identical_groups_degenerate(self):
        res = kruskal_wallis([[1, 1], [1, 1], [1, 1]])
        assert res.statistic == 0.0
        assert res.p_value == 1.0

    def test_h_value_against_hand_oracle(self):
        groups = [[1, 2], [3, 4], [5, 6]]
        res = kruskal_wallis(groups)
        assert res.statistic == pytest.approx(kruskal_h_by_hand(groups))
        assert res.statistic == pytest.approx(4.5714285714)
        assert res.p_value == pytest.approx(math.exp(-res.statistic / 2), rel=1e-9)

    def test_needs_three_groups(self):
        with pytest.raises(ValueError):
            kruskal_wallis([[1, 2], [3, 4]])

    def test_friedman_constant_matrix(self):
        res = friedman(np.full((5, 4), 2.0))
        assert res.statistic == 0.0
        assert res.p_value == 1.0

    def test_friedman_strong_effect(self):
        blocks = np.array([[1.0, 2.0, 3.0]] * 8)
        res = friedman(blocks)
        assert res.p_value < 0.05

    def test_friedman_shape_contracts(self):
        with pytest.raises(ValueError):
            friedman(np.ones((1, 3)))
        with pytest.raises(ValueError):
            friedman(np.ones((4, 2)))


def _fake_record(level, key_id, acc, factor="initializer"):
    carrier = "initializer" if factor == "optimizer" else "optimizer"
    config = {
        "dataset": "synthetic",
        "preprocessing": "pca",
        "feature_map": "z",
        "feature_map_entanglement": None,
        "ansatz": "real_amplitudes",
        "ansatz_entanglement": "linear",
        "optimizer": "cobyla",
        "initializer": "beta",
        "noise": None,
        "seed": 1,
        carrier: f"level{key_id}",
    }
    config[factor] = level
    return {"config": config, "accuracy": acc, "weighted_f1": acc}


class TestPairwiseMatrix:
    def test_identical_levels_no_difference(self):
        records = []
        for key in range(8):
            for level in ("beta", "uniform"):
                records.append(_fake_record(level, key, 0.7))
        matrix = pairwise_matrix(records, "initializer")
        p, verdict = matrix.cells[("beta", "uniform")]
        assert verdict == "no_difference"
        assert p == pytest.approx(1.0)

    def test_planted_gap_detected(self):
        rng = np.random.default_rng(7)
        records = []
        for key in range(12):
            base = rng.uniform(0.4, 0.6)
            records.append(_fake_record("beta", key, base + 0.2))
            records.append(_fake_record("uniform", key, base))
        matrix = pairwise_matrix(records, "initializer")
        p, verdict = matrix.cells[("beta", "uniform")]
        assert verdict == "better"
        # all 12 differences positive: the exact two-sided floor for n pairs
        assert p == pytest.approx(2 / 2**12, abs=1e-4)
        p_rev, verdict_rev = matrix.cells[("uniform", "beta")]
        assert verdict_rev == "worse"
        assert p_rev == p

    def test_antisymmetry_random(self):
        rng = np.random.default_rng(8)
        records = []
        for key in range(10):
            for level in ("a", "b", "c"):
                records.append(
                    _fake_record(level, key, float(rng.uniform(0.3, 0.9)), factor="optimizer")
                )
        matrix = pairwise_matrix(records, "optimizer")
        flip = {"better": "worse", "worse": "better"}
        for (row, col), (p, verdict) in matrix.cells.items():
            p2, verdict2 = matrix.cells[(col, row)]
            assert p2 == p
            assert verdict2 == flip.get(verdict, verdict)

    def test_insufficient_levels(self):
        records = [_fake_record("beta", k, 0.5) for k in range(4)]
        with pytest.raises(ValueError, match="insufficient levels"):
            pairwise_matrix(records, "initializer")

    def test_missing_partners_dropped_and_counted(self):
        records = []
        for key in range(8):
            records.append(_fake_record("beta", key, 0.6 + 0.01 * key))
        for key in range(6):  # two keys have no uniform partner
            records.append(_fake_record("uniform", key, 0.5 + 0.01 * key))
        matrix = pairwise_matrix(records, "initializer")
        assert matrix.dropped == 2
        assert ("beta", "uniform") in matrix.cells
