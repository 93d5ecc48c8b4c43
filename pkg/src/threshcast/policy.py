"""Closed-form transmission policy and its reachable-state structure.

At an undetermined state with m remaining nodes and residual threshold t,
the policy picks the node at sorted position m - t + 1 (1-based, ranks
ascending).  This choice depends only on the ordering of the marginals,
never their values, so the whole strategy tree is a function of (n,
theta) alone.  Equivalently: starting from node k + 1 with k = n - theta,
each observed 0 steps the transmitter one rank down, each observed 1
steps it one rank up, so the queried nodes always form a contiguous rank
block around k + 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .core import (
    ComputationState,
    ContractViolation,
    DecisionTree,
    Determination,
    InputError,
    Leaf,
    Node,
    ProbabilityProfile,
    ThresholdSpec,
    classify_state,
)


def index_policy_next(state: ComputationState) -> int:
    """Rank the policy transmits next from an undetermined state."""
    if classify_state(state) is not Determination.UNDETERMINED:
        raise ContractViolation("policy queried at a determined state")
    m = len(state.remaining)
    t = state.residual_theta
    return sorted(state.remaining)[m - t]


def build_index_tree(n: int, theta: int) -> DecisionTree:
    """Full strategy tree of the policy, shared as a DAG over equal states."""
    spec = ThresholdSpec(n, theta)
    memo: dict[tuple[frozenset[int], int], DecisionTree] = {}

    def build(remaining: frozenset[int], t: int) -> DecisionTree:
        state = ComputationState(remaining, t)
        det = classify_state(state)
        if det is Determination.ONE:
            return Leaf(1)
        if det is Determination.ZERO:
            return Leaf(0)
        key = (remaining, t)
        node = memo.get(key)
        if node is None:
            rank = index_policy_next(state)
            rest = remaining - {rank}
            node = Node(rank, build(rest, t), build(rest, t - 1))
            memo[key] = node
        return node

    return build(frozenset(range(1, n + 1)), spec.theta)


def policy_cost_from_state(
    profile: ProbabilityProfile,
    state: ComputationState,
    _memo: Optional[dict] = None,
) -> float:
    """Expected remaining bits when the policy plays on from `state`."""
    memo = _memo if _memo is not None else {}

    def rec(remaining: frozenset[int], t: int) -> float:
        s = ComputationState(remaining, t)
        if classify_state(s) is not Determination.UNDETERMINED:
            return 0.0
        key = (remaining, t)
        val = memo.get(key)
        if val is not None:
            return val
        rank = index_policy_next(s)
        p = profile.p(rank)
        rest = remaining - {rank}
        c = 1.0 + p * rec(rest, t - 1) + (1.0 - p) * rec(rest, t)
        memo[key] = c
        return c

    return rec(state.remaining, state.residual_theta)


def index_policy_cost(profile: ProbabilityProfile, theta: int) -> float:
    """Expected bits of the policy strategy, in O(n^2) states.

    States reachable under the policy always have the form
    remaining = {1..lo-1} | {hi+1..n}, and the next transmitter is
    adjacent to the removed block (asserted).  That keeps the recursion
    quadratic instead of exponential, so this scales far past the
    subset-table solver.
    """
    spec = ThresholdSpec(profile.n, theta)
    n = profile.n
    probs = profile.probs
    memo: dict[tuple[int, int, int], float] = {}

    def rec(lo: int, hi: int, t: int) -> float:
        m = (lo - 1) + (n - hi)
        if t <= 0 or t > m:
            return 0.0
        key = (lo, hi, t)
        val = memo.get(key)
        if val is not None:
            return val
        j = m - t + 1
        node = j if j <= lo - 1 else hi + (j - (lo - 1))
        if node not in (lo - 1, hi + 1):
            raise AssertionError(
                f"policy left the contiguous block: picked {node} at lo={lo} hi={hi} t={t}"
            )
        p = probs[node - 1]
        if node == lo - 1:
            c = 1.0 + p * rec(lo - 1, hi, t - 1) + (1.0 - p) * rec(lo - 1, hi, t)
        else:
            c = 1.0 + p * rec(lo, hi + 1, t - 1) + (1.0 - p) * rec(lo, hi + 1, t)
        memo[key] = c
        return c

    k = spec.k
    return rec(k + 1, k, spec.theta)


# ---------------------------------------------------------------------------
# Interval coordinates for reachable decision points


@dataclass(frozen=True)
class IntervalState:
    """Decision point of the policy in (zeros seen, ones seen) coordinates.

    With k = n - theta, the nodes that have spoken plus the one about to
    speak form the contiguous rank block [k+1-z, k+1+o].  The transmitter
    sits at the block end that the last observed bit pushed to (either
    end is possible for the same (z, o), depending on bit order), but the
    set left after it speaks, {1..k-z} | {k+2+o..n}, is the same either
    way.  Only undetermined decision points are representable.
    """

    n: int
    theta: int
    zeros_seen: int
    ones_seen: int

    def __post_init__(self) -> None:
        spec = ThresholdSpec(self.n, self.theta)
        if not 1 <= self.theta <= self.n:
            raise InputError("decision points exist only for 1 <= theta <= n")
        if not 0 <= self.zeros_seen <= spec.k:
            raise InputError(f"zeros_seen {self.zeros_seen} outside 0..{spec.k}")
        if not 0 <= self.ones_seen <= self.theta - 1:
            raise InputError(f"ones_seen {self.ones_seen} outside 0..{self.theta - 1}")

    @property
    def k(self) -> int:
        return self.n - self.theta

    @property
    def block(self) -> tuple[int, int]:
        """Rank block spanned by past transmitters plus the pending one."""
        return (self.k + 1 - self.zeros_seen, self.k + 1 + self.ones_seen)

    @property
    def residual_theta(self) -> int:
        return self.theta - self.ones_seen

    @property
    def remaining_after(self) -> frozenset[int]:
        """Node set still silent once the pending transmitter has spoken."""
        lo, hi = self.block
        return frozenset(range(1, lo)) | frozenset(range(hi + 1, self.n + 1))

    def after_zero(self) -> Optional["IntervalState"]:
        """Next decision point if the pending bit is 0 (None when determined)."""
        if self.zeros_seen == self.k:
            return None
        return IntervalState(self.n, self.theta, self.zeros_seen + 1, self.ones_seen)

    def after_one(self) -> Optional["IntervalState"]:
        if self.ones_seen == self.theta - 1:
            return None
        return IntervalState(self.n, self.theta, self.zeros_seen, self.ones_seen + 1)


def reachable_interval_states(n: int, theta: int) -> Iterator[IntervalState]:
    """All decision points of the policy, in (z, o) lexicographic order."""
    spec = ThresholdSpec(n, theta)
    if not 1 <= theta <= n:
        return
    for z in range(spec.k + 1):
        for o in range(theta):
            yield IntervalState(n, theta, z, o)


@dataclass(frozen=True)
class StateAnnotation:
    """One reachable decision state of the policy with its statistics."""

    remaining: tuple[int, ...]
    residual_theta: int
    transmitter: int
    reach_probability: float
    expected_remaining_cost: float


def annotate_reachable_states(profile: ProbabilityProfile, theta: int) -> list[StateAnnotation]:
    """Reach probability and onward cost for every policy decision state.

    States are keyed by (remaining, residual threshold); distinct bit
    orders that land on the same state pool their path probabilities.
    Output is ordered by transmissions made, then remaining set, then
    residual threshold, which is deterministic.
    """
    spec = ThresholdSpec(profile.n, theta)
    initial = spec.initial_state()
    if classify_state(initial) is not Determination.UNDETERMINED:
        return []
    cost_memo: dict = {}
    reach: dict[tuple[frozenset[int], int], float] = {(initial.remaining, initial.residual_theta): 1.0}
    # process levels by remaining-set size so probabilities are final before use
    levels: dict[int, list[tuple[frozenset[int], int]]] = {profile.n: [(initial.remaining, theta)]}
    out: list[StateAnnotation] = []
    for size in range(profile.n, 0, -1):
        for remaining, t in sorted(levels.get(size, ()), key=lambda kt: (sorted(kt[0]), kt[1])):
            state = ComputationState(remaining, t)
            prob = reach[(remaining, t)]
            rank = index_policy_next(state)
            cost = policy_cost_from_state(profile, state, _memo=cost_memo)
            out.append(
                StateAnnotation(
                    remaining=tuple(sorted(remaining)),
                    residual_theta=t,
                    transmitter=rank,
                    reach_probability=prob,
                    expected_remaining_cost=cost,
                )
            )
            p = profile.p(rank)
            rest = remaining - {rank}
            for bit, q in ((0, 1.0 - p), (1, p)):
                child = ComputationState(rest, t - bit)
                if classify_state(child) is not Determination.UNDETERMINED:
                    continue
                key = (child.remaining, child.residual_theta)
                if key not in reach:
                    reach[key] = 0.0
                    levels.setdefault(size - 1, []).append(key)
                reach[key] += prob * q
    return out
