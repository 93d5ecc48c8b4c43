"""Command line front end.

Subcommands: solve (exact optimum + one optimal tree), policy (the
closed-form order, optionally checked against the exact table), verify
(inequality sweeps and brute-force cross-checks), simulate (Monte Carlo
walks of the policy tree), block (lockstep multi-instance runs with
Huffman-coded blocks).

Output is deterministic byte for byte for a fixed command line: floats
are printed to 12 significant digits, JSON keys are sorted, and nothing
time- or path-dependent is ever emitted.  Exit codes: 0 success, 2 bad
input, 3 capacity exceeded, 4 a verification check failed, 5 a
simulation disagreed with the function.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .core import (
    CapacityError,
    InputError,
    ProbabilityProfile,
    ThresholdSpec,
    tree_internal_states,
)
from .dp import DEFAULT_NODE_CAP, DEFAULT_TIE_TOL, CostTable, optimal_tree, strategy_cost
from .io import IngestedProfile, load_profile, parse_probs_arg, tree_to_dict, tree_to_dot
from .policy import annotate_reachable_states, build_index_tree, index_policy_cost
from .sim import run_block_replications, simulate_tree
from .verify import (
    DEFAULT_LEMMA_TOL,
    EXHAUSTIVE_MAX_N,
    check_lemma_inequalities,
    exhaustive_strategy_check,
    lemma_report_rows,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPACITY = 3
EXIT_VERIFY = 4
EXIT_SIM = 5

SEED_ENV_VAR = "THRESHCAST_SEED"


def fmt(x: float) -> str:
    return "%.12g" % x


def jround(x: float) -> float:
    """Round to the printed precision so JSON numbers match text output."""
    return float(fmt(x))


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    if isinstance(exc, InputError):
        return EXIT_INPUT
    raise exc


class VerificationFailure(Exception):
    """A requested check did not hold; carries the already-rendered output."""

    def __init__(self, text: str):
        super().__init__("verification failed")
        self.text = text


class SimulationFailure(Exception):
    def __init__(self, text: str):
        super().__init__("simulation disagreed with the function")
        self.text = text


# ---------------------------------------------------------------------------
# Configuration resolution: command line > config file > environment > default


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise InputError(f"cannot read config file: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"config file is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise InputError("config file must hold a JSON object of option defaults")
    return data


def resolve(args: argparse.Namespace, config: dict, key: str, default=None):
    v = getattr(args, key, None)
    if v is not None:
        return v
    if key in config:
        return config[key]
    return default


def require_theta(args: argparse.Namespace, config: dict) -> int:
    v = resolve(args, config, "theta")
    if v is None:
        raise InputError("--theta is required")
    return int(v)


def resolve_seed(args: argparse.Namespace, config: dict) -> Optional[int]:
    v = resolve(args, config, "seed")
    if v is not None:
        return int(v)
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as e:
            raise InputError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from e
    return None


def resolve_profile(args: argparse.Namespace, config: dict) -> IngestedProfile:
    if getattr(args, "probs", None) is not None:
        return parse_probs_arg(args.probs)
    if getattr(args, "probs_file", None) is not None:
        return load_profile(args.probs_file)
    if "probs" in config:
        return parse_probs_arg(str(config["probs"]))
    raise InputError("no probabilities given: pass --probs or --probs-file")


def rank_map_items(ingested: IngestedProfile) -> Optional[list[tuple[int, int]]]:
    """(rank, original 0-based position) pairs, or None if input was sorted."""
    items = [(r + 1, pos) for r, pos in enumerate(ingested.original_index)]
    if all(r - 1 == pos for r, pos in items):
        return None
    return items


def rank_labels(ingested: IngestedProfile, labels_arg: Optional[str]) -> Optional[list[str]]:
    """Display names per rank, mapped through the ingestion permutation."""
    if labels_arg is None:
        return None
    labels = [s.strip() for s in labels_arg.split(",")]
    n = ingested.profile.n
    if len(labels) != n:
        raise InputError(f"--labels has {len(labels)} names for {n} probabilities")
    return [labels[ingested.original_position(r)] for r in range(1, n + 1)]


# ---------------------------------------------------------------------------
# Rendering helpers


def render_kv(pairs: list[tuple[str, str]]) -> str:
    return "".join(f"{k}={v}\n" for k, v in pairs)


def render_csv(rows: list[list[str]]) -> str:
    return "".join(",".join(row) + "\n" for row in rows)


def render_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def profile_fields(ingested: IngestedProfile) -> list[tuple[str, str]]:
    pairs = [("probs", ";".join(fmt(p) for p in ingested.profile.probs))]
    rmap = rank_map_items(ingested)
    if rmap is not None:
        pairs.append(("rank_map", ";".join(f"{r}:{pos}" for r, pos in rmap)))
    return pairs


def profile_json(ingested: IngestedProfile) -> dict:
    obj: dict = {"probs": [jround(p) for p in ingested.profile.probs]}
    rmap = rank_map_items(ingested)
    if rmap is not None:
        obj["rank_map"] = {str(r): pos for r, pos in rmap}
    return obj


# ---------------------------------------------------------------------------
# Subcommands


def cmd_solve(args: argparse.Namespace, config: dict) -> str:
    ingested = resolve_profile(args, config)
    profile = ingested.profile
    theta = require_theta(args, config)
    node_cap = int(resolve(args, config, "max_n", DEFAULT_NODE_CAP))
    tol = float(resolve(args, config, "tol", DEFAULT_TIE_TOL))
    exact = bool(resolve(args, config, "exact", False))

    table = CostTable(profile, node_cap=node_cap, exact=exact)
    spec = ThresholdSpec(profile.n, theta)
    cost = table.cost(spec.initial_state())
    cost_f = float(cost)
    tree = optimal_tree(profile, theta, table=table, tol=tol)
    if 1 <= theta <= profile.n:
        first = table.minimizers(spec.initial_state(), tol=tol)
    else:
        first = ()

    out_format = resolve(args, config, "format", "table")
    if out_format == "table":
        pairs = [("n", str(profile.n)), ("theta", str(theta))]
        pairs += profile_fields(ingested)
        pairs.append(("optimal_cost", fmt(cost_f)))
        pairs.append(("optimal_first_transmitters", ";".join(str(r) for r in first)))
        pairs.append(("tree", json.dumps(tree_to_dict(tree), sort_keys=True)))
        return render_kv(pairs)
    if out_format == "json":
        obj = profile_json(ingested)
        obj.update(
            {
                "n": profile.n,
                "theta": theta,
                "optimal_cost": jround(cost_f),
                "optimal_first_transmitters": list(first),
                "tree": tree_to_dict(tree),
            }
        )
        return render_json(obj)
    if out_format == "csv":
        rows = [
            ["n", "theta", "optimal_cost", "optimal_first_transmitters"],
            [str(profile.n), str(theta), fmt(cost_f), ";".join(str(r) for r in first)],
        ]
        return render_csv(rows)
    if out_format == "dot":
        return tree_to_dot(tree, labels=rank_labels(ingested, resolve(args, config, "labels")))
    raise InputError(f"unknown format {out_format!r}")


def cmd_policy(args: argparse.Namespace, config: dict) -> str:
    ingested = resolve_profile(args, config)
    profile = ingested.profile
    theta = require_theta(args, config)
    spec = ThresholdSpec(profile.n, theta)
    cost = index_policy_cost(profile, theta)
    tree = build_index_tree(profile.n, theta)

    check: Optional[dict] = None
    check_failed = False
    if args.check:
        node_cap = int(resolve(args, config, "max_n", DEFAULT_NODE_CAP))
        tol = float(resolve(args, config, "tol", DEFAULT_TIE_TOL))
        table = CostTable(profile, node_cap=node_cap)
        table_cost = table.cost(spec.initial_state())
        cost_ok = abs(table_cost - cost) <= tol
        bad_states = 0
        for state, rank in tree_internal_states(tree, spec):
            if rank not in table.minimizers(state, tol=tol):
                bad_states += 1
        check_failed = not cost_ok or bad_states > 0
        check = {
            "table_cost": table_cost,
            "cost_matches_table": cost_ok,
            "states_off_policy": bad_states,
            "check": "failed" if check_failed else "passed",
        }

    annotations = annotate_reachable_states(profile, theta) if args.annotate else None

    out_format = resolve(args, config, "format", "table")
    if out_format == "table":
        pairs = [("n", str(profile.n)), ("theta", str(theta))]
        pairs += profile_fields(ingested)
        pairs.append(("policy_cost", fmt(cost)))
        if check is not None:
            pairs.append(("table_cost", fmt(check["table_cost"])))
            pairs.append(("cost_matches_table", str(check["cost_matches_table"]).lower()))
            pairs.append(("states_off_policy", str(check["states_off_policy"])))
            pairs.append(("check", check["check"]))
        text = render_kv(pairs)
        if annotations is not None:
            rows = [["remaining", "residual_theta", "transmitter", "reach_probability", "expected_remaining_cost"]]
            for a in annotations:
                rows.append(
                    [
                        "|".join(str(r) for r in a.remaining),
                        str(a.residual_theta),
                        str(a.transmitter),
                        fmt(a.reach_probability),
                        fmt(a.expected_remaining_cost),
                    ]
                )
            text += render_csv(rows)
        if check_failed:
            raise VerificationFailure(text)
        return text
    if out_format == "json":
        obj = profile_json(ingested)
        obj.update({"n": profile.n, "theta": theta, "policy_cost": jround(cost)})
        obj["tree"] = tree_to_dict(tree)
        if check is not None:
            obj["table_cost"] = jround(check["table_cost"])
            obj["cost_matches_table"] = check["cost_matches_table"]
            obj["states_off_policy"] = check["states_off_policy"]
            obj["check"] = check["check"]
        if annotations is not None:
            obj["states"] = [
                {
                    "remaining": list(a.remaining),
                    "residual_theta": a.residual_theta,
                    "transmitter": a.transmitter,
                    "reach_probability": jround(a.reach_probability),
                    "expected_remaining_cost": jround(a.expected_remaining_cost),
                }
                for a in annotations
            ]
        text = render_json(obj)
        if check_failed:
            raise VerificationFailure(text)
        return text
    if out_format == "dot":
        return tree_to_dot(tree, labels=rank_labels(ingested, resolve(args, config, "labels")))
    if out_format == "csv":
        rows = [["n", "theta", "policy_cost"], [str(profile.n), str(theta), fmt(cost)]]
        text = render_csv(rows)
        if check_failed:
            raise VerificationFailure(text)
        return text
    raise InputError(f"unknown format {out_format!r}")


def _sweep_profiles(rng: np.random.Generator, sweeps: int, max_n: int) -> list[ProbabilityProfile]:
    out = []
    for _ in range(sweeps):
        m = int(rng.integers(2, max_n + 1))
        probs = np.sort(rng.uniform(0.01, 0.99, size=m))
        out.append(ProbabilityProfile(tuple(float(p) for p in probs)))
    return out


_WORST_COLUMNS = [
    ("worst_T", "T<=0"),
    ("worst_S1", "S1<=0"),
    ("worst_S2", "S2<=0"),
    ("worst_T_minus_S1", "T<=S1"),
    ("worst_T_minus_S2", "T<=S2"),
    ("worst_T_at_kp1", "T=0@i=k+1"),
]


def cmd_verify(args: argparse.Namespace, config: dict) -> str:
    tolerance = float(resolve(args, config, "tolerance", DEFAULT_LEMMA_TOL))
    explicit = (
        getattr(args, "probs", None) is not None
        or getattr(args, "probs_file", None) is not None
        or "probs" in config
    )
    out_format = resolve(args, config, "format", "table")

    if explicit:
        ingested = resolve_profile(args, config)
        profiles = [ingested.profile]
    else:
        sweeps = int(resolve(args, config, "sweeps", 100))
        max_n = int(resolve(args, config, "max_n", 8))
        seed = resolve_seed(args, config)
        if seed is None:
            raise InputError("sweep mode needs --seed (or the seed env var) for reproducibility")
        profiles = _sweep_profiles(np.random.default_rng(seed), sweeps, max_n)

    total_violations = 0
    exhaustive_failures = 0
    exhaustive_runs = 0
    summary_rows = [
        ["m", "probs", "violations"]
        + [name for name, _ in _WORST_COLUMNS]
        + ["exhaustive_trees", "exhaustive_ok"]
    ]
    reports = []
    for profile in profiles:
        table = CostTable(profile)
        report = check_lemma_inequalities(profile, tolerance=tolerance, table=table)
        reports.append(report)
        total_violations += len(report.violations)
        ex_trees = ""
        ex_ok = ""
        if args.exhaustive:
            if profile.n > EXHAUSTIVE_MAX_N and explicit:
                raise CapacityError(
                    f"--exhaustive enumerates every strategy tree and is capped at "
                    f"n={EXHAUSTIVE_MAX_N}, got n={profile.n}"
                )
            if profile.n <= EXHAUSTIVE_MAX_N:
                trees = 0
                ok = True
                for theta in range(1, profile.n + 1):
                    ex = exhaustive_strategy_check(profile, theta, tolerance=tolerance, table=table)
                    trees += ex.tree_count
                    ok = ok and ex.passed
                    exhaustive_runs += 1
                    if not ex.passed:
                        exhaustive_failures += 1
                ex_trees = str(trees)
                ex_ok = str(ok).lower()
        summary_rows.append(
            [str(report.m), ";".join(fmt(p) for p in report.probs), str(len(report.violations))]
            + [fmt(report.worst.get(fam, 0.0)) for _, fam in _WORST_COLUMNS]
            + [ex_trees, ex_ok]
        )

    passed = total_violations == 0 and exhaustive_failures == 0
    if out_format == "csv" and explicit:
        text = render_csv(lemma_report_rows(reports[0]))
    elif out_format == "csv":
        text = render_csv(summary_rows)
    elif out_format == "json":
        obj = {
            "tolerance": jround(tolerance),
            "profiles": len(profiles),
            "violations": total_violations,
            "exhaustive_checks": exhaustive_runs,
            "exhaustive_failures": exhaustive_failures,
            "passed": passed,
            "worst": {
                name: jround(max((r.worst.get(fam, 0.0) for r in reports), default=0.0))
                for name, fam in _WORST_COLUMNS
            },
        }
        text = render_json(obj)
    elif out_format == "table":
        pairs = [
            ("profiles", str(len(profiles))),
            ("tolerance", fmt(tolerance)),
            ("violations", str(total_violations)),
        ]
        for name, fam in _WORST_COLUMNS:
            pairs.append((name, fmt(max((r.worst.get(fam, 0.0) for r in reports), default=0.0))))
        if args.exhaustive:
            pairs.append(("exhaustive_checks", str(exhaustive_runs)))
            pairs.append(("exhaustive_failures", str(exhaustive_failures)))
        pairs.append(("verify", "passed" if passed else "failed"))
        text = render_kv(pairs)
    else:
        raise InputError(f"unknown format {out_format!r}")

    if not passed:
        raise VerificationFailure(text)
    return text


def cmd_simulate(args: argparse.Namespace, config: dict) -> str:
    ingested = resolve_profile(args, config)
    profile = ingested.profile
    theta = require_theta(args, config)
    trials = int(resolve(args, config, "trials", 10000))
    seed = resolve_seed(args, config)
    tree = build_index_tree(profile.n, theta)
    report = simulate_tree(tree, profile, theta, trials, seed=seed)
    z = (report.mean_bits - report.expected_bits) / report.std_error if report.std_error else 0.0

    out_format = resolve(args, config, "format", "table")
    if out_format == "table":
        pairs = [
            ("n", str(report.n)),
            ("theta", str(report.theta)),
            ("trials", str(report.trials)),
            ("seed", "" if seed is None else str(seed)),
            ("expected_bits", fmt(report.expected_bits)),
            ("mean_bits", fmt(report.mean_bits)),
            ("std_error", fmt(report.std_error)),
            ("z", fmt(z)),
            ("error_count", str(report.error_count)),
        ]
        text = render_kv(pairs)
    elif out_format == "csv":
        rows = [
            ["n", "theta", "trials", "seed", "expected_bits", "mean_bits", "std_error", "z", "error_count"],
            [
                str(report.n),
                str(report.theta),
                str(report.trials),
                "" if seed is None else str(seed),
                fmt(report.expected_bits),
                fmt(report.mean_bits),
                fmt(report.std_error),
                fmt(z),
                str(report.error_count),
            ],
        ]
        text = render_csv(rows)
    elif out_format == "json":
        obj = {
            "n": report.n,
            "theta": report.theta,
            "trials": report.trials,
            "seed": seed,
            "expected_bits": jround(report.expected_bits),
            "mean_bits": jround(report.mean_bits),
            "std_error": jround(report.std_error),
            "z": jround(z),
            "error_count": report.error_count,
        }
        text = render_json(obj)
    else:
        raise InputError(f"unknown format {out_format!r}")

    if report.error_count > 0:
        raise SimulationFailure(text)
    return text


def cmd_block(args: argparse.Namespace, config: dict) -> str:
    ingested = resolve_profile(args, config)
    profile = ingested.profile
    theta = require_theta(args, config)
    N = int(resolve(args, config, "N", 1024))
    reps = int(resolve(args, config, "reps", 10))
    seed = resolve_seed(args, config)
    order_arg = resolve(args, config, "order", "conjectured")
    if order_arg != "conjectured":
        order = tuple(int(s) for s in str(order_arg).split(","))
    else:
        order = "conjectured"

    reports, summary = run_block_replications(profile, theta, N, reps, seed=seed, order=order)
    single = index_policy_cost(profile, theta)

    out_format = resolve(args, config, "format", "table")
    base_pairs = [
        ("n", str(summary.n)),
        ("theta", str(summary.theta)),
        ("N", str(summary.N)),
        ("reps", str(summary.reps)),
        ("seed", "" if seed is None else str(seed)),
        ("order", summary.order),
        ("single_instance_cost", fmt(single)),
        ("mean_bits_per_instance", fmt(summary.mean_bits_per_instance)),
        ("se_bits_per_instance", fmt(summary.se_bits_per_instance)),
        ("mean_first_round_per_instance", fmt(summary.mean_first_round_per_instance)),
        ("se_first_round_per_instance", fmt(summary.se_first_round_per_instance)),
        ("error_count", str(summary.error_count)),
    ]
    if out_format == "table":
        text = render_kv(base_pairs)
    elif out_format == "csv":
        rows = [[k for k, _ in base_pairs], [v for _, v in base_pairs]]
        text = render_csv(rows)
    elif out_format == "json":
        obj = {
            "n": summary.n,
            "theta": summary.theta,
            "N": summary.N,
            "reps": summary.reps,
            "seed": seed,
            "order": summary.order,
            "single_instance_cost": jround(single),
            "mean_bits_per_instance": jround(summary.mean_bits_per_instance),
            "se_bits_per_instance": jround(summary.se_bits_per_instance),
            "mean_first_round_per_instance": jround(summary.mean_first_round_per_instance),
            "se_first_round_per_instance": jround(summary.se_first_round_per_instance),
            "error_count": summary.error_count,
        }
        if args.transcript:
            obj["replications"] = [
                {
                    "total_bits": r.total_bits,
                    "bits_per_instance": jround(r.bits_per_instance),
                    "error_count": r.error_count,
                    "rounds": [
                        {
                            "index": rd.index,
                            "transmitter": rd.transmitter,
                            "live_count": rd.live_count,
                            "code_bits": rd.code_bits,
                        }
                        for rd in r.rounds
                    ],
                }
                for r in reports
            ]
        text = render_json(obj)
    else:
        raise InputError(f"unknown format {out_format!r}")

    if summary.error_count > 0:
        raise SimulationFailure(text)
    return text


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="threshcast",
        description="Minimum-expected-bits threshold computation over a broadcast channel",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, theta: bool = True) -> None:
        p.add_argument("--probs", help="comma separated marginals, e.g. 0.3,0.6")
        p.add_argument("--probs-file", help="JSON array or one-column CSV of marginals")
        p.add_argument("--config", help="JSON file with default option values")
        p.add_argument("--out", help="write output to this file instead of stdout")
        if theta:
            p.add_argument("--theta", type=int, help="threshold: function is 1 iff at least theta ones")

    p_solve = sub.add_parser("solve", help="exact optimal cost and one optimal strategy tree")
    add_common(p_solve)
    p_solve.add_argument("--format", choices=["table", "json", "csv", "dot"])
    p_solve.add_argument("--max-n", dest="max_n", type=int, help="node-count cap for the subset table")
    p_solve.add_argument("--tol", type=float, help="tie tolerance for reporting co-optimal transmitters")
    p_solve.add_argument("--exact", action="store_true", default=None, help="rational arithmetic (exact ties)")
    p_solve.add_argument("--labels", help="comma separated node names, in input order (dot output)")
    p_solve.set_defaults(func=cmd_solve)

    p_policy = sub.add_parser("policy", help="closed-form transmission order and its cost")
    add_common(p_policy)
    p_policy.add_argument("--format", choices=["table", "json", "csv", "dot"])
    p_policy.add_argument("--check", action="store_true", help="verify the order against the exact table")
    p_policy.add_argument("--annotate", action="store_true", help="list reachable states with reach probability and onward cost")
    p_policy.add_argument("--max-n", dest="max_n", type=int)
    p_policy.add_argument("--tol", type=float)
    p_policy.add_argument("--labels", help="comma separated node names, in input order (dot output)")
    p_policy.set_defaults(func=cmd_policy)

    p_verify = sub.add_parser("verify", help="inequality sweeps; optionally brute-force tree enumeration")
    add_common(p_verify, theta=False)
    p_verify.add_argument("--format", choices=["table", "json", "csv"])
    p_verify.add_argument("--sweeps", type=int, help="number of random profiles (when no --probs)")
    p_verify.add_argument("--max-n", dest="max_n", type=int, help="largest random profile size")
    p_verify.add_argument("--seed", type=int, help="sweep RNG seed")
    p_verify.add_argument("--tolerance", type=float, help="inequality slack treated as rounding")
    p_verify.add_argument("--exhaustive", action="store_true", help="also enumerate all trees (n <= 4)")
    p_verify.set_defaults(func=cmd_verify)

    p_sim = sub.add_parser("simulate", help="Monte Carlo walks of the policy strategy")
    add_common(p_sim)
    p_sim.add_argument("--format", choices=["table", "json", "csv"])
    p_sim.add_argument("--trials", type=int)
    p_sim.add_argument("--seed", type=int)
    p_sim.set_defaults(func=cmd_simulate)

    p_block = sub.add_parser("block", help="lockstep multi-instance runs with coded blocks")
    add_common(p_block)
    p_block.add_argument("--format", choices=["table", "json", "csv"])
    p_block.add_argument("--N", type=int, help="instances per replication")
    p_block.add_argument("--reps", type=int)
    p_block.add_argument("--seed", type=int)
    p_block.add_argument("--order", help="'conjectured' or an explicit rank permutation like 2,1")
    p_block.add_argument("--transcript", action="store_true", help="include per-round records (json)")
    p_block.set_defaults(func=cmd_block)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(getattr(args, "config", None))
        text = args.func(args, config)
        code = EXIT_OK
    except VerificationFailure as e:
        text = e.text
        code = EXIT_VERIFY
    except SimulationFailure as e:
        text = e.text
        code = EXIT_SIM
    except (InputError, CapacityError) as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)

    out_path = getattr(args, "out", None)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
