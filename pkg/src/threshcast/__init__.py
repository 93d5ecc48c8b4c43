"""Minimum-expected-bits computation of Boolean threshold functions.

n nodes share a collision-free broadcast channel; node i holds an
independent Bernoulli(p_i) bit and everyone must learn, with zero error,
whether at least theta of the bits are 1.  This package computes the
cheapest transmission strategy in expectation (an exact subset-table
solver), exposes the closed-form optimal order (it depends only on the
sorted position of each marginal), verifies the inequalities behind that
optimality numerically, and runs single- and multi-instance simulations,
the latter with Huffman-coded blocks that push the cost per instance
below one bit per transmission round.
"""

from .core import (
    CapacityError,
    ComputationState,
    ContractViolation,
    DecisionTree,
    Determination,
    InputError,
    Leaf,
    Node,
    ProbabilityProfile,
    ThresholdSpec,
    TreeInvalidError,
    apply_transmission,
    classify_state,
    eliminate_deterministic,
    evaluate_function,
    tree_internal_states,
    validate_tree,
    walk_tree,
)
from .dp import (
    CostTable,
    optimal_cost,
    optimal_first_transmitters,
    optimal_tree,
    strategy_cost,
)
from .huffman import (
    BernoulliBlockCode,
    HuffmanCode,
    bernoulli_entropy,
    block_distribution,
    build_block_code,
    huffman_build,
)
from .io import (
    IngestedProfile,
    ingest_values,
    load_profile,
    parse_profile_text,
    tree_from_dict,
    tree_from_json,
    tree_to_dict,
    tree_to_dot,
    tree_to_json,
)
from .policy import (
    IntervalState,
    annotate_reachable_states,
    build_index_tree,
    index_policy_cost,
    index_policy_next,
    policy_cost_from_state,
    reachable_interval_states,
)
from .sim import (
    BlockExperimentReport,
    ReplicationSummary,
    RoundRecord,
    SimulationReport,
    draw_measurements,
    run_block_replications,
    run_block_strategy,
    simulate_tree,
)
from .verify import (
    ExhaustiveReport,
    LemmaRecord,
    LemmaReport,
    LemmaViolation,
    check_lemma_inequalities,
    compute_S1,
    compute_S2,
    compute_T,
    enumerate_trees,
    exhaustive_strategy_check,
    lemma_report_rows,
)

__version__ = "0.1.0"

__all__ = [
    "BernoulliBlockCode",
    "BlockExperimentReport",
    "CapacityError",
    "ComputationState",
    "ContractViolation",
    "CostTable",
    "DecisionTree",
    "Determination",
    "ExhaustiveReport",
    "HuffmanCode",
    "IngestedProfile",
    "InputError",
    "IntervalState",
    "Leaf",
    "LemmaRecord",
    "LemmaReport",
    "LemmaViolation",
    "Node",
    "ProbabilityProfile",
    "ReplicationSummary",
    "RoundRecord",
    "SimulationReport",
    "ThresholdSpec",
    "TreeInvalidError",
    "annotate_reachable_states",
    "apply_transmission",
    "bernoulli_entropy",
    "block_distribution",
    "build_block_code",
    "build_index_tree",
    "check_lemma_inequalities",
    "classify_state",
    "compute_S1",
    "compute_S2",
    "compute_T",
    "draw_measurements",
    "eliminate_deterministic",
    "enumerate_trees",
    "evaluate_function",
    "exhaustive_strategy_check",
    "huffman_build",
    "index_policy_cost",
    "index_policy_next",
    "ingest_values",
    "lemma_report_rows",
    "load_profile",
    "optimal_cost",
    "optimal_first_transmitters",
    "optimal_tree",
    "parse_profile_text",
    "policy_cost_from_state",
    "reachable_interval_states",
    "run_block_replications",
    "run_block_strategy",
    "simulate_tree",
    "strategy_cost",
    "tree_from_dict",
    "tree_from_json",
    "tree_internal_states",
    "tree_to_dict",
    "tree_to_dot",
    "tree_to_json",
    "validate_tree",
    "walk_tree",
]
