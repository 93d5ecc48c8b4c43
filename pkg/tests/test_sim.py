"""Monte Carlo walker and the lockstep block protocol."""

import numpy as np
import pytest

from threshcast.core import InputError, ProbabilityProfile, walk_tree
from threshcast.dp import optimal_tree, strategy_cost
from threshcast.policy import build_index_tree
from threshcast.sim import (
    BlockExperimentReport,
    draw_measurements,
    run_block_replications,
    run_block_strategy,
    simulate_tree,
)


class TestDrawMeasurements:
    def test_shape_and_dtype(self):
        rng = np.random.default_rng(1)
        X = draw_measurements(ProbabilityProfile((0.2, 0.5, 0.9)), 100, rng)
        assert X.shape == (100, 3)
        assert X.dtype == bool

    def test_deterministic_per_seed(self):
        profile = ProbabilityProfile((0.3, 0.6))
        a = draw_measurements(profile, 50, np.random.default_rng(7))
        b = draw_measurements(profile, 50, np.random.default_rng(7))
        assert (a == b).all()

    def test_column_marginals(self):
        profile = ProbabilityProfile((0.2, 0.8))
        X = draw_measurements(profile, 200_000, np.random.default_rng(11))
        assert X[:, 0].mean() == pytest.approx(0.2, abs=0.01)
        assert X[:, 1].mean() == pytest.approx(0.8, abs=0.01)


class TestSimulateTree:
    def test_seeded_run_matches_expectation(self):
        profile = ProbabilityProfile((0.3, 0.6))
        tree = optimal_tree(profile, 1)
        report = simulate_tree(tree, profile, 1, 20_000, seed=0)
        assert report.error_count == 0
        assert report.expected_bits == pytest.approx(1.4, abs=1e-12)
        assert abs(report.mean_bits - report.expected_bits) < 4 * report.std_error
        assert report.seed == 0 and report.trials == 20_000

    def test_deterministic_per_seed(self):
        profile = ProbabilityProfile((0.2, 0.5, 0.7))
        tree = build_index_tree(3, 2)
        a = simulate_tree(tree, profile, 2, 5_000, seed=42)
        b = simulate_tree(tree, profile, 2, 5_000, seed=42)
        assert a == b

    def test_never_misclassifies(self):
        rng = np.random.default_rng(17)
        for _ in range(8):
            n = int(rng.integers(1, 7))
            probs = tuple(sorted(float(p) for p in rng.uniform(0.05, 0.95, n)))
            profile = ProbabilityProfile(probs)
            theta = int(rng.integers(0, n + 2))
            tree = build_index_tree(n, theta)
            report = simulate_tree(tree, profile, theta, 2_000, seed=int(rng.integers(1 << 20)))
            assert report.error_count == 0

    def test_trial_floor(self):
        profile = ProbabilityProfile((0.3, 0.6))
        with pytest.raises(InputError):
            simulate_tree(build_index_tree(2, 1), profile, 1, 1)

    def test_expected_matches_strategy_cost(self):
        profile = ProbabilityProfile((0.1, 0.4, 0.8))
        tree = build_index_tree(3, 2)
        report = simulate_tree(tree, profile, 2, 100, seed=5)
        assert report.expected_bits == pytest.approx(strategy_cost(tree, profile, 2), abs=1e-15)


class TestBlockProtocol:
    def test_single_instance_degenerates_to_tree_walk(self):
        profile = ProbabilityProfile((0.25, 0.5, 0.65))
        tree = build_index_tree(3, 2)
        for seed in range(50):
            report = run_block_strategy(profile, 2, 1, seed=seed)
            X = draw_measurements(profile, 1, np.random.default_rng(seed))
            value, bits = walk_tree(tree, X[0])
            assert report.total_bits == bits
            assert report.values == (value,)
            assert report.error_count == 0
            assert all(r.code_bits == 1 and r.live_count == 1 for r in report.rounds)

    def test_round_skipped_when_no_instance_needs_it(self):
        # seed 2: all four instances read 1 at the top node, nobody visits
        # the zero branch, so only one block is ever sent
        profile = ProbabilityProfile((0.1, 0.9))
        report = run_block_strategy(profile, 1, 4, seed=2)
        assert len(report.rounds) == 1
        assert report.rounds[0].live_count == 4
        assert report.error_count == 0
        assert report.values == (1, 1, 1, 1)

    def test_shrinking_live_sets(self):
        profile = ProbabilityProfile((0.1, 0.9))
        report = run_block_strategy(profile, 1, 4, seed=0)
        assert [r.live_count for r in report.rounds] == [4, 1]
        assert report.total_bits == sum(r.code_bits for r in report.rounds)
        assert report.first_round_bits == report.rounds[0].code_bits

    def test_batching_beats_single_instance_cost(self):
        profile = ProbabilityProfile((0.3, 0.6))
        report = run_block_strategy(profile, 1, 256, seed=3)
        assert report.error_count == 0
        assert report.bits_per_instance < 1.4  # single-instance optimum

    def test_deterministic_per_seed(self):
        profile = ProbabilityProfile((0.2, 0.5, 0.7))
        a = run_block_strategy(profile, 2, 32, seed=9)
        b = run_block_strategy(profile, 2, 32, seed=9)
        assert a == b
        assert isinstance(a, BlockExperimentReport)

    def test_fixed_transmission_order(self):
        profile = ProbabilityProfile((0.3, 0.6))
        report = run_block_strategy(profile, 1, 16, seed=4, order=(1, 2))
        assert report.rounds[0].transmitter == 1
        assert report.order == "(1, 2)"
        assert report.error_count == 0

    def test_order_validation(self):
        profile = ProbabilityProfile((0.3, 0.6))
        with pytest.raises(InputError):
            run_block_strategy(profile, 1, 4, seed=0, order=(1, 1))
        with pytest.raises(InputError):
            run_block_strategy(profile, 1, 4, seed=0, order=(2, 3))
        with pytest.raises(InputError):
            run_block_strategy(profile, 1, 4, seed=0, order="sideways")

    def test_constant_thresholds_send_nothing(self):
        profile = ProbabilityProfile((0.3, 0.6))
        low = run_block_strategy(profile, 0, 8, seed=1)
        assert low.rounds == () and low.total_bits == 0 and low.values == (1,) * 8
        high = run_block_strategy(profile, 3, 8, seed=1)
        assert high.rounds == () and high.total_bits == 0 and high.values == (0,) * 8

    def test_instance_count_floor(self):
        with pytest.raises(InputError):
            run_block_strategy(ProbabilityProfile((0.3, 0.6)), 1, 0, seed=0)

    def test_decoded_values_match_function_everywhere(self):
        rng = np.random.default_rng(21)
        for _ in range(6):
            n = int(rng.integers(1, 6))
            probs = tuple(sorted(float(p) for p in rng.uniform(0.1, 0.9, n)))
            profile = ProbabilityProfile(probs)
            theta = int(rng.integers(1, n + 1))
            report = run_block_strategy(profile, theta, 64, seed=int(rng.integers(1 << 20)))
            assert report.error_count == 0


class TestReplications:
    def test_summary_statistics(self):
        profile = ProbabilityProfile((0.3, 0.6))
        reports, summary = run_block_replications(profile, 1, 64, reps=6, seed=100)
        assert len(reports) == 6
        per_inst = np.array([r.bits_per_instance for r in reports])
        assert summary.mean_bits_per_instance == pytest.approx(per_inst.mean(), abs=1e-12)
        assert summary.se_bits_per_instance == pytest.approx(
            per_inst.std(ddof=1) / np.sqrt(6), abs=1e-12
        )
        first = np.array([r.first_round_bits / 64 for r in reports])
        assert summary.mean_first_round_per_instance == pytest.approx(first.mean(), abs=1e-12)
        assert summary.error_count == 0
        assert summary.reps == 6 and summary.N == 64 and summary.seed == 100

    def test_deterministic_per_seed(self):
        profile = ProbabilityProfile((0.2, 0.5, 0.7))
        _, a = run_block_replications(profile, 2, 16, reps=3, seed=8)
        _, b = run_block_replications(profile, 2, 16, reps=3, seed=8)
        assert a == b

    def test_replication_floor(self):
        with pytest.raises(InputError):
            run_block_replications(ProbabilityProfile((0.3, 0.6)), 1, 8, reps=1, seed=0)
