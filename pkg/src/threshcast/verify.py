"""Numerical verification of the ordering-optimality induction quantities.

The optimality proof of the fixed transmission order rests on three
expressions per (k, i) pair over an m-node profile, written with the
shifted cost Ct(state) = C(state) - 1:

    T[m,k,i]  = p[k+1]*Ct(rest(k+1), t-1) + (1-p[k+1])*Ct(rest(k+1), t)
              -   p[i]*Ct(rest(i),   t-1) -   (1-p[i])*Ct(rest(i),   t)
    S1[m,k,i] = (p[k+1]-p[i])*C(rest(k+1,i), t-1)
              + (1-p[k+1])*Ct(rest(k+1), t) - (1-p[i])*Ct(rest(i), t)
    S2[m,k,i] = (p[i]-p[k+1])*C(rest(k+1,i), t-1)
              + p[k+1]*Ct(rest(k+1), t-1) - p[i]*Ct(rest(i), t-1)

with t = m - k and rest(j...) the full node set minus the listed ranks.
T is the cost of letting node k+1 speak first minus the cost of letting
node i speak first, so T <= 0 everywhere is exactly the optimality of
the fixed order.  The supporting inequalities are S1 <= 0 (i >= k+2),
S2 <= 0 (i <= k), T <= S1, T <= S2, and T identically 0 at i = k+1;
the last one holds in exact float arithmetic, not just to tolerance.

This module evaluates all of them against the subset cost table and
reports every violation, which also makes it a sharp detector for a
corrupted or miscomputed table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
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
)
from .dp import CostTable, strategy_cost
from .policy import index_policy_cost

DEFAULT_LEMMA_TOL = 1e-9
EXHAUSTIVE_MAX_N = 4

FAMILIES = ("T<=0", "S1<=0", "S2<=0", "T<=S1", "T<=S2", "T=0@i=k+1")


def _check_k_i(m: int, k: int, i: int) -> None:
    if not 0 <= k <= m - 1:
        raise InputError(f"k {k} outside 0..{m - 1}")
    if not 1 <= i <= m:
        raise InputError(f"i {i} outside 1..{m}")


def _shifted(table: CostTable, remaining: frozenset[int], t: int) -> float:
    return table.cost(ComputationState(remaining, t)) - 1.0


def _first_transmission_term(table: CostTable, j: int, t: int, full: frozenset[int]) -> float:
    p = table.profile.p(j)
    rest = full - {j}
    return p * _shifted(table, rest, t - 1) + (1.0 - p) * _shifted(table, rest, t)


def compute_T(table: CostTable, k: int, i: int) -> float:
    """First-transmitter cost gap: node k+1 first minus node i first.

    Both halves are evaluated by the identical operation sequence, so at
    i = k+1 they are the same float and the gap is exactly 0.0, not just
    0 up to rounding.
    """
    m = table.profile.n
    _check_k_i(m, k, i)
    t = m - k
    full = frozenset(range(1, m + 1))
    return _first_transmission_term(table, k + 1, t, full) - _first_transmission_term(
        table, i, t, full
    )


def compute_S1(table: CostTable, k: int, i: int) -> float:
    m = table.profile.n
    _check_k_i(m, k, i)
    if i < k + 2:
        raise InputError(f"S1 is defined for i >= k+2, got k={k}, i={i}")
    t = m - k
    full = frozenset(range(1, m + 1))
    p_k1 = table.profile.p(k + 1)
    p_i = table.profile.p(i)
    both = full - {k + 1, i}
    return (
        (p_k1 - p_i) * table.cost(ComputationState(both, t - 1))
        + (1.0 - p_k1) * _shifted(table, full - {k + 1}, t)
        - (1.0 - p_i) * _shifted(table, full - {i}, t)
    )


def compute_S2(table: CostTable, k: int, i: int) -> float:
    m = table.profile.n
    _check_k_i(m, k, i)
    if i > k:
        raise InputError(f"S2 is defined for i <= k, got k={k}, i={i}")
    t = m - k
    full = frozenset(range(1, m + 1))
    p_k1 = table.profile.p(k + 1)
    p_i = table.profile.p(i)
    both = full - {k + 1, i}
    return (
        (p_i - p_k1) * table.cost(ComputationState(both, t - 1))
        + p_k1 * _shifted(table, full - {k + 1}, t - 1)
        - p_i * _shifted(table, full - {i}, t - 1)
    )


@dataclass(frozen=True)
class LemmaRecord:
    """All quantities evaluated at one (k, i) pair (None where undefined)."""

    k: int
    i: int
    T: float
    S1: Optional[float]
    S2: Optional[float]


@dataclass(frozen=True)
class LemmaViolation:
    family: str
    k: int
    i: int
    value: float


@dataclass
class LemmaReport:
    m: int
    probs: tuple[float, ...]
    tolerance: float
    records: list[LemmaRecord] = field(default_factory=list)
    violations: list[LemmaViolation] = field(default_factory=list)
    worst: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_lemma_inequalities(
    profile: ProbabilityProfile,
    tolerance: float = DEFAULT_LEMMA_TOL,
    table: Optional[CostTable] = None,
) -> LemmaReport:
    """Evaluate every inequality at every legal (k, i) for one profile.

    Families "T<=0", "S1<=0", "S2<=0", "T<=S1", "T<=S2" are violated when
    the checked expression exceeds the tolerance; "T=0@i=k+1" demands
    exact float zero.  `worst` holds each family's largest checked value,
    so a passing report shows how much slack the inequalities had.
    """
    if table is None:
        table = CostTable(profile)
    m = profile.n
    report = LemmaReport(m=m, probs=profile.probs, tolerance=tolerance)
    worst: dict[str, float] = {}

    def consider(family: str, k: int, i: int, value: float, violated: bool) -> None:
        if family not in worst or value > worst[family]:
            worst[family] = value
        if violated:
            report.violations.append(LemmaViolation(family, k, i, value))

    for k in range(m):
        for i in range(1, m + 1):
            T = compute_T(table, k, i)
            S1 = compute_S1(table, k, i) if i >= k + 2 else None
            S2 = compute_S2(table, k, i) if i <= k else None
            report.records.append(LemmaRecord(k=k, i=i, T=T, S1=S1, S2=S2))
            if i == k + 1:
                consider("T=0@i=k+1", k, i, abs(T), T != 0.0)
            else:
                consider("T<=0", k, i, T, T > tolerance)
            if S1 is not None:
                consider("S1<=0", k, i, S1, S1 > tolerance)
                consider("T<=S1", k, i, T - S1, T - S1 > tolerance)
            if S2 is not None:
                consider("S2<=0", k, i, S2, S2 > tolerance)
                consider("T<=S2", k, i, T - S2, T - S2 > tolerance)

    report.worst = worst
    return report


def lemma_report_rows(report: LemmaReport) -> list[list[str]]:
    """Flatten a report into CSV rows (header first, floats at 12 digits)."""

    def fmt(v: Optional[float]) -> str:
        return "" if v is None else "%.12g" % v

    rows = [["k", "i", "T", "S1", "S2"]]
    for rec in report.records:
        rows.append([str(rec.k), str(rec.i), fmt(rec.T), fmt(rec.S1), fmt(rec.S2)])
    return rows


# ---------------------------------------------------------------------------
# Brute-force optimality oracle


def enumerate_trees(n: int, theta: int, max_n: int = EXHAUSTIVE_MAX_N) -> list[DecisionTree]:
    """Every structurally valid strategy tree for (n, theta).

    The count is a product over both branches at every choice, so it
    explodes fast; the cap keeps this an oracle for small cases only.
    """
    spec = ThresholdSpec(n, theta)
    if n > max_n:
        raise CapacityError(f"tree enumeration capped at n={max_n}, got n={n}")
    memo: dict[tuple[frozenset[int], int], list[DecisionTree]] = {}

    def build(remaining: frozenset[int], t: int) -> list[DecisionTree]:
        if t <= 0:
            return [Leaf(1)]
        if t > len(remaining):
            return [Leaf(0)]
        key = (remaining, t)
        got = memo.get(key)
        if got is None:
            got = []
            for rank in sorted(remaining):
                rest = remaining - {rank}
                for on_zero in build(rest, t):
                    for on_one in build(rest, t - 1):
                        got.append(Node(rank, on_zero, on_one))
            memo[key] = got
        return got

    return build(frozenset(range(1, n + 1)), spec.theta)


@dataclass(frozen=True)
class ExhaustiveReport:
    n: int
    theta: int
    tree_count: int
    best_cost: float
    table_cost: float
    policy_cost: float
    tolerance: float
    witness: Optional[DecisionTree]

    @property
    def passed(self) -> bool:
        return self.witness is None


def exhaustive_strategy_check(
    profile: ProbabilityProfile,
    theta: int,
    tolerance: float = DEFAULT_LEMMA_TOL,
    max_n: int = EXHAUSTIVE_MAX_N,
    table: Optional[CostTable] = None,
) -> ExhaustiveReport:
    """Compare the table optimum against a full enumeration of strategies.

    Fails (with the offending tree as witness) if any enumerated tree
    beats the table's value, or if the closed-form policy fails to attain
    the enumerated minimum.
    """
    if table is None:
        table = CostTable(profile)
    trees = enumerate_trees(profile.n, theta, max_n=max_n)
    best_cost = float("inf")
    best_tree: Optional[DecisionTree] = None
    for tree in trees:
        c = strategy_cost(tree, profile, theta, validate=False)
        if c < best_cost:
            best_cost = c
            best_tree = tree
    spec = ThresholdSpec(profile.n, theta)
    table_cost = table.cost(spec.initial_state())
    policy_cost = index_policy_cost(profile, theta)
    witness: Optional[DecisionTree] = None
    if best_cost < table_cost - tolerance:
        witness = best_tree
    elif abs(table_cost - best_cost) > tolerance or abs(policy_cost - best_cost) > tolerance:
        witness = best_tree
    return ExhaustiveReport(
        n=profile.n,
        theta=theta,
        tree_count=len(trees),
        best_cost=best_cost,
        table_cost=table_cost,
        policy_cost=policy_cost,
        tolerance=tolerance,
        witness=witness,
    )
