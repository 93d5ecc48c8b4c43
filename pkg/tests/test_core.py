"""Domain type behavior: profiles, specs, states, trees."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threshcast.core import (
    ComputationState,
    ContractViolation,
    Determination,
    InputError,
    Leaf,
    Node,
    ProbabilityProfile,
    ThresholdSpec,
    TreeInvalidError,
    apply_transmission,
    classify_state,
    count_internal_nodes,
    eliminate_deterministic,
    evaluate_function,
    tree_depth,
    validate_tree,
    walk_tree,
)
from threshcast.policy import build_index_tree


class TestProbabilityProfile:
    def test_accepts_sorted_open_interval(self):
        p = ProbabilityProfile((0.1, 0.5, 0.5, 0.9))
        assert p.n == 4
        assert p.p(1) == 0.1
        assert p.p(4) == 0.9

    def test_rejects_empty(self):
        with pytest.raises(InputError):
            ProbabilityProfile(())

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_boundary_and_outside(self, bad):
        with pytest.raises(InputError):
            ProbabilityProfile((0.3, bad))
        with pytest.raises(InputError):
            ProbabilityProfile((bad,))

    def test_rejects_unsorted(self):
        with pytest.raises(InputError):
            ProbabilityProfile((0.6, 0.3))

    def test_rank_bounds(self):
        p = ProbabilityProfile((0.3, 0.6))
        with pytest.raises(InputError):
            p.p(0)
        with pytest.raises(InputError):
            p.p(3)


class TestThresholdSpec:
    def test_theta_range_includes_constant_functions(self):
        for theta in range(0, 5):
            ThresholdSpec(3, theta)
        with pytest.raises(InputError):
            ThresholdSpec(3, 5)
        with pytest.raises(InputError):
            ThresholdSpec(3, -1)
        with pytest.raises(InputError):
            ThresholdSpec(0, 0)

    def test_rank_offset(self):
        assert ThresholdSpec(5, 2).k == 3
        assert ThresholdSpec(5, 5).k == 0
        assert ThresholdSpec(5, 1).k == 4

    def test_initial_state(self):
        s = ThresholdSpec(3, 2).initial_state()
        assert s.remaining == frozenset({1, 2, 3})
        assert s.residual_theta == 2


class TestStateClassification:
    def test_one_when_threshold_met(self):
        assert classify_state(ComputationState(frozenset({1, 2}), 0)) is Determination.ONE
        assert classify_state(ComputationState(frozenset(), -1)) is Determination.ONE

    def test_zero_when_threshold_unreachable(self):
        assert classify_state(ComputationState(frozenset({1}), 2)) is Determination.ZERO
        assert classify_state(ComputationState(frozenset(), 1)) is Determination.ZERO

    def test_undetermined_between(self):
        assert classify_state(ComputationState(frozenset({1, 2}), 1)) is Determination.UNDETERMINED
        assert classify_state(ComputationState(frozenset({1, 2}), 2)) is Determination.UNDETERMINED

    def test_apply_transmission(self):
        s = ComputationState(frozenset({1, 2, 3}), 2)
        after1 = apply_transmission(s, 2, 1)
        assert after1 == ComputationState(frozenset({1, 3}), 1)
        after0 = apply_transmission(s, 2, 0)
        assert after0 == ComputationState(frozenset({1, 3}), 2)

    def test_apply_transmission_contract(self):
        determined = ComputationState(frozenset({1}), 0)
        with pytest.raises(ContractViolation):
            apply_transmission(determined, 1, 0)
        s = ComputationState(frozenset({1, 2}), 1)
        with pytest.raises(InputError):
            apply_transmission(s, 3, 0)
        with pytest.raises(InputError):
            apply_transmission(s, 1, 2)


class TestEvaluateFunction:
    def test_threshold_values(self):
        spec = ThresholdSpec(3, 2)
        assert evaluate_function(spec, [1, 0, 1]) == 1
        assert evaluate_function(spec, [1, 0, 0]) == 0
        assert evaluate_function(spec, [1, 1, 1]) == 1

    def test_constant_functions(self):
        assert evaluate_function(ThresholdSpec(2, 0), [0, 0]) == 1
        assert evaluate_function(ThresholdSpec(2, 3), [1, 1]) == 0

    def test_input_validation(self):
        spec = ThresholdSpec(2, 1)
        with pytest.raises(InputError):
            evaluate_function(spec, [1])
        with pytest.raises(InputError):
            evaluate_function(spec, [1, 2])


def test_eliminate_deterministic():
    kept, theta, removed = eliminate_deterministic([0.0, 0.3, 1.0, 0.5], 2)
    assert kept == [0.3, 0.5]
    assert theta == 1
    assert removed == [0, 2]
    kept, theta, removed = eliminate_deterministic([0.3, 0.5], 2)
    assert (kept, theta, removed) == ([0.3, 0.5], 2, [])


class TestTrees:
    def or2_tree(self):
        return Node(2, Node(1, Leaf(0), Leaf(1)), Leaf(1))

    def test_walk_counts_bits(self):
        tree = self.or2_tree()
        assert walk_tree(tree, [0, 1]) == (1, 1)
        assert walk_tree(tree, [1, 0]) == (1, 2)
        assert walk_tree(tree, [0, 0]) == (0, 2)

    def test_leaf_value_validation(self):
        with pytest.raises(InputError):
            Leaf(2)

    def test_validate_accepts_proper_tree(self):
        validate_tree(self.or2_tree(), ThresholdSpec(2, 1))

    def test_validate_rejects_early_leaf(self):
        with pytest.raises(TreeInvalidError):
            validate_tree(Leaf(1), ThresholdSpec(2, 1))

    def test_validate_rejects_wrong_leaf_value(self):
        tree = Node(2, Node(1, Leaf(1), Leaf(1)), Leaf(1))
        with pytest.raises(TreeInvalidError):
            validate_tree(tree, ThresholdSpec(2, 1))

    def test_validate_rejects_repeat_transmitter(self):
        tree = Node(2, Node(2, Leaf(0), Leaf(1)), Leaf(1))
        with pytest.raises(TreeInvalidError):
            validate_tree(tree, ThresholdSpec(2, 1))

    def test_validate_rejects_query_after_determination(self):
        tree = Node(2, Node(1, Leaf(0), Leaf(1)), Node(1, Leaf(1), Leaf(1)))
        with pytest.raises(TreeInvalidError):
            validate_tree(tree, ThresholdSpec(2, 1))

    def test_size_helpers(self):
        tree = self.or2_tree()
        assert tree_depth(tree) == 2
        assert count_internal_nodes(tree) == 2
        assert tree_depth(Leaf(1)) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.data())
def test_index_tree_computes_the_function(n, data):
    """Any policy tree must output the function value on every input."""
    theta = data.draw(st.integers(0, n + 1))
    spec = ThresholdSpec(n, theta)
    tree = build_index_tree(n, theta)
    validate_tree(tree, spec)
    for x in range(1 << n):
        vec = [(x >> j) & 1 for j in range(n)]
        value, bits = walk_tree(tree, vec)
        assert value == evaluate_function(spec, vec)
        assert 0 <= bits <= n
