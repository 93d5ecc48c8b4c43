"""Monte Carlo validation and multi-instance block-coding experiments.

Two layers: a vectorized walker that drives one strategy tree over
millions of independent trials (sample mean must straddle the analytic
expectation, computed value must never disagree with the function), and
a batched protocol where N instances run in lockstep and each scheduled
node sends one Huffman-coded block covering all instances that still
need it.  Batching amortizes the one-bit floor of a single transmission
down to the conditional entropy per instance, which is the whole point
of the experiment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (
    ComputationState,
    Determination,
    InputError,
    Leaf,
    Node,
    DecisionTree,
    ProbabilityProfile,
    ThresholdSpec,
    apply_transmission,
    classify_state,
)
from .dp import strategy_cost
from .huffman import build_block_code
from .policy import index_policy_next


def draw_measurements(
    profile: ProbabilityProfile, trials: int, rng: np.random.Generator
) -> np.ndarray:
    """Boolean (trials, n) matrix; row = one trial, column j ~ Bernoulli(p_{j+1})."""
    return rng.random((trials, profile.n)) < np.asarray(profile.probs)


@dataclass(frozen=True)
class SimulationReport:
    n: int
    theta: int
    trials: int
    seed: Optional[int]
    expected_bits: float
    mean_bits: float
    std_error: float
    error_count: int


def simulate_tree(
    tree: DecisionTree,
    profile: ProbabilityProfile,
    theta: int,
    trials: int,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> SimulationReport:
    """Run `trials` independent walks of `tree` and tally bits and errors.

    Trials are partitioned down the tree as index arrays, so cost is
    O(trials * depth) regardless of tree size.
    """
    if trials < 2:
        raise InputError("at least 2 trials are needed for a standard error")
    if rng is None:
        rng = np.random.default_rng(seed)
    X = draw_measurements(profile, trials, rng)
    bits = np.zeros(trials, dtype=np.int64)
    values = np.zeros(trials, dtype=np.int8)

    def walk(t: DecisionTree, idx: np.ndarray, depth: int) -> None:
        if isinstance(t, Leaf):
            values[idx] = t.value
            bits[idx] = depth
            return
        ones = X[idx, t.transmitter - 1]
        walk(t.on_zero, idx[~ones], depth + 1)
        walk(t.on_one, idx[ones], depth + 1)

    walk(tree, np.arange(trials), 0)
    truth = (X.sum(axis=1) >= theta).astype(np.int8)
    error_count = int((values != truth).sum())
    mean = float(bits.mean())
    se = float(bits.std(ddof=1) / np.sqrt(trials))
    return SimulationReport(
        n=profile.n,
        theta=theta,
        trials=trials,
        seed=seed,
        expected_bits=strategy_cost(tree, profile, theta),
        mean_bits=mean,
        std_error=se,
        error_count=error_count,
    )


# ---------------------------------------------------------------------------
# Lockstep block protocol


OrderSpec = Union[str, Sequence[int]]


def _next_transmitter_fn(order: OrderSpec, n: int) -> Callable[[ComputationState], int]:
    if order == "conjectured":
        return index_policy_next
    if isinstance(order, str):
        raise InputError(f"order must be 'conjectured' or a permutation, got {order!r}")
    perm = tuple(int(r) for r in order)
    if sorted(perm) != list(range(1, n + 1)):
        raise InputError(f"order {perm!r} is not a permutation of 1..{n}")

    def fixed(state: ComputationState) -> int:
        for rank in perm:
            if rank in state.remaining:
                return rank
        raise AssertionError("undetermined state with empty remaining set")

    return fixed


@dataclass(frozen=True)
class RoundRecord:
    """One block transmission: who spoke, for how many instances, at what cost."""

    index: int
    transmitter: int
    live_count: int
    code_bits: int


@dataclass(frozen=True)
class BlockExperimentReport:
    n: int
    theta: int
    N: int
    order: str
    seed: Optional[int]
    total_bits: int
    bits_per_instance: float
    first_round_bits: int
    rounds: tuple[RoundRecord, ...]
    error_count: int
    values: tuple[int, ...] = field(repr=False)


def run_block_strategy(
    profile: ProbabilityProfile,
    theta: int,
    N: int,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    order: OrderSpec = "conjectured",
) -> BlockExperimentReport:
    """Run N instances in lockstep, one Huffman-coded block per scheduled node.

    The schedule walks the strategy's state tree depth first, zero branch
    before one branch.  At each undetermined state the due node encodes
    its bits for exactly the instances still live there, as one iid block
    under its own marginal; states with no live instances transmit
    nothing.  Afterwards the whole run is decoded back from the bit
    stream alone and every instance's value is checked against the
    function, so the protocol is validated end to end, not just costed.
    At N = 1 every block is a single bit and the protocol degenerates to
    the plain single-instance strategy.
    """
    spec = ThresholdSpec(profile.n, theta)
    if N < 1:
        raise InputError(f"N must be positive, got {N}")
    if rng is None:
        rng = np.random.default_rng(seed)
    X = draw_measurements(profile, N, rng)
    next_rank = _next_transmitter_fn(order, profile.n)

    stream_parts: list[str] = []
    rounds: list[RoundRecord] = []
    values = np.full(N, -1, dtype=np.int8)

    def transmit(state: ComputationState, live: np.ndarray) -> None:
        if live.size == 0:
            return
        det = classify_state(state)
        if det is not Determination.UNDETERMINED:
            values[live] = 1 if det is Determination.ONE else 0
            return
        rank = next_rank(state)
        block = X[live, rank - 1]
        code = build_block_code(profile.p(rank), int(live.size))
        cw = code.encode_block(block.astype(int).tolist())
        rounds.append(
            RoundRecord(
                index=len(rounds),
                transmitter=rank,
                live_count=int(live.size),
                code_bits=len(cw),
            )
        )
        stream_parts.append(cw)
        transmit(apply_transmission(state, rank, 0), live[~block])
        transmit(apply_transmission(state, rank, 1), live[block])

    transmit(spec.initial_state(), np.arange(N))
    stream = "".join(stream_parts)

    # decode replay: reconstruct every instance's value from the stream alone
    decoded = np.full(N, -1, dtype=np.int8)
    cursor = 0

    def replay(state: ComputationState, live: list[int]) -> None:
        nonlocal cursor
        if not live:
            return
        det = classify_state(state)
        if det is not Determination.UNDETERMINED:
            for i in live:
                decoded[i] = 1 if det is Determination.ONE else 0
            return
        rank = next_rank(state)
        code = build_block_code(profile.p(rank), len(live))
        block, cursor = code.decode_block(stream, cursor)
        zeros = [i for i, b in zip(live, block) if not b]
        ones = [i for i, b in zip(live, block) if b]
        replay(apply_transmission(state, rank, 0), zeros)
        replay(apply_transmission(state, rank, 1), ones)

    replay(spec.initial_state(), list(range(N)))
    if cursor != len(stream):
        raise AssertionError("decoder did not consume the whole stream")
    truth = (X.sum(axis=1) >= theta).astype(np.int8)
    if int((values != truth).sum()) != 0:
        raise AssertionError("encoder-side values disagree with the function")
    error_count = int((decoded != truth).sum())

    total_bits = len(stream)
    return BlockExperimentReport(
        n=profile.n,
        theta=theta,
        N=N,
        order="conjectured" if order == "conjectured" else str(tuple(order)),
        seed=seed,
        total_bits=total_bits,
        bits_per_instance=total_bits / N,
        first_round_bits=rounds[0].code_bits if rounds else 0,
        rounds=tuple(rounds),
        error_count=error_count,
        values=tuple(int(v) for v in decoded),
    )


@dataclass(frozen=True)
class ReplicationSummary:
    n: int
    theta: int
    N: int
    order: str
    reps: int
    seed: Optional[int]
    mean_bits_per_instance: float
    se_bits_per_instance: float
    mean_first_round_per_instance: float
    se_first_round_per_instance: float
    error_count: int


def run_block_replications(
    profile: ProbabilityProfile,
    theta: int,
    N: int,
    reps: int,
    seed: Optional[int] = None,
    order: OrderSpec = "conjectured",
) -> tuple[list[BlockExperimentReport], ReplicationSummary]:
    """Independent repetitions of the lockstep protocol with spawned substreams."""
    if reps < 2:
        raise InputError("at least 2 replications are needed for a standard error")
    children = np.random.SeedSequence(seed).spawn(reps)
    reports = [
        run_block_strategy(profile, theta, N, rng=np.random.default_rng(child), order=order)
        for child in children
    ]
    per_inst = np.array([r.bits_per_instance for r in reports])
    first = np.array([r.first_round_bits / N for r in reports])
    summary = ReplicationSummary(
        n=profile.n,
        theta=theta,
        N=N,
        order=reports[0].order,
        reps=reps,
        seed=seed,
        mean_bits_per_instance=float(per_inst.mean()),
        se_bits_per_instance=float(per_inst.std(ddof=1) / np.sqrt(reps)),
        mean_first_round_per_instance=float(first.mean()),
        se_first_round_per_instance=float(first.std(ddof=1) / np.sqrt(reps)),
        error_count=sum(r.error_count for r in reports),
    )
    return reports, summary
