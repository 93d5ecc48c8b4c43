"""Inequality checks and the brute-force optimality oracle."""

import numpy as np
import pytest

from threshcast.core import (
    CapacityError,
    ComputationState,
    InputError,
    ProbabilityProfile,
    ThresholdSpec,
    validate_tree,
)
from threshcast.dp import _T_SHIFT, CostTable
from threshcast.verify import (
    FAMILIES,
    LemmaViolation,
    check_lemma_inequalities,
    compute_S1,
    compute_S2,
    compute_T,
    enumerate_trees,
    exhaustive_strategy_check,
    lemma_report_rows,
)


def table_for(probs):
    return CostTable(ProbabilityProfile(probs))


class TestGapQuantities:
    """Hand-checked values on the two-node profile (0.3, 0.6).

    At k=0 (t=2): starting at node 1 costs 1 + 0.7*1 = 1.7, at node 2
    costs 1 + 0.4*1 = 1.4 (shifted terms -0.7 and -0.4), so T = -0.3.
    At k=1 (t=1) the roles flip and T(1,1) = -0.6 - (-0.3) = -0.3.
    """

    def test_T_frozen_value(self):
        assert compute_T(table_for((0.3, 0.6)), 0, 2) == pytest.approx(-0.3, abs=1e-15)
        assert compute_T(table_for((0.3, 0.6)), 1, 1) == pytest.approx(-0.3, abs=1e-15)

    def test_T_is_exactly_zero_at_reference_node(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            m = int(rng.integers(2, 8))
            probs = tuple(sorted(float(p) for p in rng.uniform(0.02, 0.98, m)))
            table = table_for(probs)
            for k in range(m):
                assert compute_T(table, k, k + 1) == 0.0  # exact, not approx

    def test_S1_frozen_value(self):
        assert compute_S1(table_for((0.3, 0.6)), 0, 2) == pytest.approx(-0.3, abs=1e-15)

    def test_S2_frozen_value(self):
        assert compute_S2(table_for((0.3, 0.6)), 1, 1) == pytest.approx(-0.3, abs=1e-15)

    def test_domain_validation(self):
        table = table_for((0.3, 0.5, 0.6))
        with pytest.raises(InputError):
            compute_T(table, 3, 1)  # k must stay below m
        with pytest.raises(InputError):
            compute_T(table, -1, 1)
        with pytest.raises(InputError):
            compute_T(table, 0, 4)  # i above m
        with pytest.raises(InputError):
            compute_S1(table, 1, 2)  # S1 needs i >= k+2
        with pytest.raises(InputError):
            compute_S2(table, 1, 2)  # S2 needs i <= k


class TestLemmaReport:
    def test_report_shape(self):
        report = check_lemma_inequalities(ProbabilityProfile((0.2, 0.5, 0.7)))
        assert report.m == 3
        assert len(report.records) == 9
        for rec in report.records:
            assert (rec.S1 is not None) == (rec.i >= rec.k + 2)
            assert (rec.S2 is not None) == (rec.i <= rec.k)
        assert report.passed
        assert report.violations == []
        assert set(report.worst) == set(FAMILIES)
        assert report.worst["T=0@i=k+1"] == 0.0
        for family in ("T<=0", "S1<=0", "S2<=0", "T<=S1", "T<=S2"):
            assert report.worst[family] <= 1e-9

    def test_random_profiles_pass(self):
        rng = np.random.default_rng(43)
        for _ in range(40):
            m = int(rng.integers(2, 8))
            probs = tuple(sorted(float(p) for p in rng.uniform(0.01, 0.99, m)))
            assert check_lemma_inequalities(ProbabilityProfile(probs)).passed, probs

    def test_equal_probabilities_pass(self):
        assert check_lemma_inequalities(ProbabilityProfile((0.5,) * 6)).passed

    def test_csv_rows(self):
        report = check_lemma_inequalities(ProbabilityProfile((0.3, 0.6)))
        rows = lemma_report_rows(report)
        assert rows[0] == ["k", "i", "T", "S1", "S2"]
        assert len(rows) == 1 + 4
        by_ki = {(r[0], r[1]): r for r in rows[1:]}
        assert by_ki[("0", "2")][2] == "-0.3"
        assert by_ki[("0", "1")][3] == ""  # S1 undefined at i = k+1

    def test_detects_corrupted_cost_table(self):
        # bump one interior entry; every inequality that routes through the
        # state must move, while the exact-zero family is structurally immune
        profile = ProbabilityProfile((0.4, 0.4, 0.4))
        table = CostTable(profile)
        state = ComputationState(frozenset({1, 3}), 2)
        table.cost(state)  # force the memo entry into existence
        key = (0b101 << _T_SHIFT) | 2
        assert key in table._memo
        table._memo[key] += 1.0
        report = check_lemma_inequalities(profile, table=table)
        assert not report.passed
        families = {v.family for v in report.violations}
        assert "T<=0" in families
        assert "T=0@i=k+1" not in families
        worst_T = max(v.value for v in report.violations if v.family == "T<=0")
        assert worst_T == pytest.approx(0.6, abs=1e-12)

    def test_negative_tolerance_forces_violations(self):
        report = check_lemma_inequalities(ProbabilityProfile((0.3, 0.6)), tolerance=-1.0)
        assert not report.passed
        assert all(isinstance(v, LemmaViolation) for v in report.violations)


class TestEnumeration:
    def test_counts(self):
        assert len(enumerate_trees(1, 1)) == 1
        assert len(enumerate_trees(2, 1)) == 2
        assert len(enumerate_trees(3, 1)) == 6
        assert len(enumerate_trees(4, 2)) == 288
        assert len(enumerate_trees(5, 1, max_n=5)) == 120

    def test_constant_thresholds(self):
        trees = enumerate_trees(3, 0)
        assert len(trees) == 1

    def test_all_enumerated_trees_are_valid(self):
        spec = ThresholdSpec(3, 2)
        for tree in enumerate_trees(3, 2):
            validate_tree(tree, spec)

    def test_trees_are_distinct(self):
        trees = enumerate_trees(3, 2)
        assert len(set(map(repr, trees))) == len(trees)

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            enumerate_trees(5, 2)


class TestExhaustiveCheck:
    def test_small_profiles_pass(self):
        rng = np.random.default_rng(47)
        for _ in range(10):
            n = int(rng.integers(1, 5))
            probs = tuple(sorted(float(p) for p in rng.uniform(0.05, 0.95, n)))
            profile = ProbabilityProfile(probs)
            for theta in range(1, n + 1):
                report = exhaustive_strategy_check(profile, theta)
                assert report.passed, (probs, theta)
                assert report.witness is None
                assert report.tree_count == len(enumerate_trees(n, theta))
                assert report.best_cost == pytest.approx(report.table_cost, abs=1e-12)
                assert report.best_cost == pytest.approx(report.policy_cost, abs=1e-12)

    def test_catches_overstated_table(self):
        profile = ProbabilityProfile((0.3, 0.5, 0.6))
        table = CostTable(profile)
        spec = ThresholdSpec(3, 2)
        table.cost(spec.initial_state())
        table._memo[(0b111 << _T_SHIFT) | 2] += 1.0
        report = exhaustive_strategy_check(profile, 2, table=table)
        assert not report.passed
        assert report.witness is not None
        assert report.best_cost < report.table_cost - 0.5
