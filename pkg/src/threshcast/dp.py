"""Exact minimum-expected-bits solver over transmission orderings.

The optimal expected cost satisfies, for any undetermined state with
remaining set R and residual threshold t,

    C(R, t) = min_{i in R} [ 1 + p_i * C(R - {i}, t - 1) + (1 - p_i) * C(R - {i}, t) ]

with C = 0 at determined states.  The table memoizes over (subset mask,
residual threshold), so a single table answers every substate query for
one profile.  Subset enumeration is exponential in n; the cap guards
against accidental huge instances.
"""

from __future__ import annotations

from fractions import Fraction
from math import inf
from typing import Optional

from .core import (
    CapacityError,
    ComputationState,
    DecisionTree,
    InputError,
    Leaf,
    Node,
    ProbabilityProfile,
    ThresholdSpec,
    validate_tree,
)

DEFAULT_NODE_CAP = 20
DEFAULT_TIE_TOL = 1e-12

# residual threshold fits in 5 bits for n <= 30 (t <= n + 1)
_T_SHIFT = 5


def mask_of(remaining: frozenset[int]) -> int:
    mask = 0
    for rank in remaining:
        mask |= 1 << (rank - 1)
    return mask


def set_of(mask: int) -> frozenset[int]:
    out = []
    rank = 1
    while mask:
        if mask & 1:
            out.append(rank)
        mask >>= 1
        rank += 1
    return frozenset(out)


class CostTable:
    """Lazy memoized cost table for one probability profile.

    With exact=True all arithmetic runs in rationals (probabilities taken
    at their exact binary float values), so ties are ties, not artifacts
    of rounding.
    """

    def __init__(
        self,
        profile: ProbabilityProfile,
        node_cap: int = DEFAULT_NODE_CAP,
        exact: bool = False,
    ) -> None:
        if profile.n > node_cap:
            raise CapacityError(
                f"profile has {profile.n} nodes, above the cap of {node_cap}; "
                f"the table enumerates subsets and would need about 2**{profile.n} entries"
            )
        self.profile = profile
        self.exact = exact
        if exact:
            self._probs: tuple = tuple(Fraction(p) for p in profile.probs)
            self._one = Fraction(1)
        else:
            self._probs = profile.probs
            self._one = 1.0
        self._zero = self._one - self._one
        self._memo: dict[int, object] = {}
        self._full_mask = (1 << profile.n) - 1

    def _check_state(self, state: ComputationState) -> tuple[int, int]:
        for rank in state.remaining:
            if not 1 <= rank <= self.profile.n:
                raise InputError(f"rank {rank} outside this profile's 1..{self.profile.n}")
        return mask_of(state.remaining), state.residual_theta

    def cost(self, state: ComputationState):
        """Optimal expected bits from `state` (0 when already determined)."""
        mask, t = self._check_state(state)
        return self.cost_mask(mask, t)

    def cost_mask(self, mask: int, t: int):
        if t <= 0 or t > mask.bit_count():
            return self._zero
        key = (mask << _T_SHIFT) | t
        val = self._memo.get(key)
        if val is not None:
            return val
        probs = self._probs
        one = self._one
        best = inf
        mm = mask
        while mm:
            low = mm & -mm
            mm ^= low
            p = probs[low.bit_length() - 1]
            sub = mask ^ low
            c = one + p * self.cost_mask(sub, t - 1) + (one - p) * self.cost_mask(sub, t)
            if c < best:
                best = c
        self._memo[key] = best
        return best

    def candidate_costs(self, state: ComputationState) -> dict[int, object]:
        """Expected cost of each legal first transmitter at an undetermined state."""
        mask, t = self._check_state(state)
        if t <= 0 or t > mask.bit_count():
            raise InputError("candidate costs are defined only at undetermined states")
        out: dict[int, object] = {}
        one = self._one
        mm = mask
        while mm:
            low = mm & -mm
            mm ^= low
            rank = low.bit_length()
            p = self._probs[rank - 1]
            sub = mask ^ low
            out[rank] = one + p * self.cost_mask(sub, t - 1) + (one - p) * self.cost_mask(sub, t)
        return out

    def minimizers(self, state: ComputationState, tol: float = DEFAULT_TIE_TOL) -> tuple[int, ...]:
        """Sorted ranks whose first-transmission cost is minimal (within tol)."""
        cand = self.candidate_costs(state)
        best = min(cand.values())
        if self.exact:
            return tuple(sorted(r for r, c in cand.items() if c == best))
        return tuple(sorted(r for r, c in cand.items() if c <= best + tol))


def optimal_cost(
    profile: ProbabilityProfile,
    theta: int,
    node_cap: int = DEFAULT_NODE_CAP,
    exact: bool = False,
    table: Optional[CostTable] = None,
):
    spec = ThresholdSpec(profile.n, theta)
    if table is None:
        table = CostTable(profile, node_cap=node_cap, exact=exact)
    return table.cost(spec.initial_state())


def optimal_first_transmitters(
    profile: ProbabilityProfile,
    theta: int,
    tol: float = DEFAULT_TIE_TOL,
    table: Optional[CostTable] = None,
) -> tuple[int, ...]:
    spec = ThresholdSpec(profile.n, theta)
    if table is None:
        table = CostTable(profile)
    return table.minimizers(spec.initial_state(), tol=tol)


def optimal_tree(
    profile: ProbabilityProfile,
    theta: int,
    table: Optional[CostTable] = None,
    tol: float = DEFAULT_TIE_TOL,
) -> DecisionTree:
    """Extract one optimal strategy, breaking ties toward the lowest rank.

    Subtrees are shared across equal states, so the result is a DAG in
    memory even though it serializes as a tree.
    """
    spec = ThresholdSpec(profile.n, theta)
    if table is None:
        table = CostTable(profile)
    memo: dict[int, DecisionTree] = {}

    def build(mask: int, t: int) -> DecisionTree:
        if t <= 0:
            return Leaf(1)
        if t > mask.bit_count():
            return Leaf(0)
        key = (mask << _T_SHIFT) | t
        node = memo.get(key)
        if node is not None:
            return node
        state = ComputationState(set_of(mask), t)
        rank = table.minimizers(state, tol=tol)[0]
        sub = mask ^ (1 << (rank - 1))
        node = Node(rank, build(sub, t), build(sub, t - 1))
        memo[key] = node
        return node

    return build((1 << profile.n) - 1, spec.theta)


def strategy_cost(
    tree: DecisionTree,
    profile: ProbabilityProfile,
    theta: int,
    validate: bool = True,
) -> float:
    """Expected bits transmitted by a given strategy under the profile.

    Shared subtrees are costed once: a subtree's expected remaining cost
    depends only on the subtree, not on how the walk reached it.
    """
    if validate:
        validate_tree(tree, ThresholdSpec(profile.n, theta))
    memo: dict[int, float] = {}

    def cost(t: DecisionTree) -> float:
        if isinstance(t, Leaf):
            return 0.0
        key = id(t)
        val = memo.get(key)
        if val is not None:
            return val
        p = profile.p(t.transmitter)
        c = 1.0 + p * cost(t.on_one) + (1.0 - p) * cost(t.on_zero)
        memo[key] = c
        return c

    return cost(tree)
