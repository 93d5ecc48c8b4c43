"""Ingestion of probability profiles and (de)serialization of decision trees.

Profiles arrive as a JSON array or a single-column CSV in arbitrary
order.  Solvers require ascending order, so ingestion sorts with a stable
sort and keeps the permutation: rank r (1-based, in sorted order) maps
back to the original 0-based input position.  Ties keep input order.
"""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass
from typing import Sequence

from .core import DecisionTree, InputError, Leaf, Node, ProbabilityProfile


@dataclass(frozen=True)
class IngestedProfile:
    """Sorted profile plus the rank -> original input position map."""

    profile: ProbabilityProfile
    original_index: tuple[int, ...]

    def original_position(self, rank: int) -> int:
        return self.original_index[rank - 1]


def ingest_values(values: Sequence[float]) -> IngestedProfile:
    vals = [float(v) for v in values]
    order = sorted(range(len(vals)), key=lambda i: vals[i])
    profile = ProbabilityProfile(tuple(vals[i] for i in order))
    return IngestedProfile(profile, tuple(order))


def parse_profile_text(text: str) -> IngestedProfile:
    """Parse a profile from JSON-array or single-column CSV text."""
    stripped = text.strip()
    if not stripped:
        raise InputError("empty profile input")
    if stripped.startswith("["):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as e:
            raise InputError(f"invalid JSON profile: {e}") from e
        if not isinstance(data, list) or not all(isinstance(v, (int, float)) for v in data):
            raise InputError("JSON profile must be a flat array of numbers")
        return ingest_values(data)
    values: list[float] = []
    first_row = True
    for row in csv.reader(_io.StringIO(stripped)):
        cells = [c.strip() for c in row if c.strip()]
        if not cells:
            continue
        if len(cells) != 1:
            raise InputError(f"CSV profile must have one column, got row {row!r}")
        try:
            values.append(float(cells[0]))
        except ValueError:
            # A non-numeric first row is tolerated as a header.
            if not first_row:
                raise InputError(f"non-numeric probability {cells[0]!r}")
        first_row = False
    return ingest_values(values)


def load_profile(path: str) -> IngestedProfile:
    with open(path, "r", encoding="utf-8") as f:
        return parse_profile_text(f.read())


def parse_probs_arg(arg: str) -> IngestedProfile:
    """Parse a comma-separated --probs command line value."""
    parts = [s for s in (piece.strip() for piece in arg.split(",")) if s]
    if not parts:
        raise InputError("empty --probs value")
    try:
        values = [float(s) for s in parts]
    except ValueError as e:
        raise InputError(f"invalid --probs value: {e}") from e
    return ingest_values(values)


# ---------------------------------------------------------------------------
# Tree serialization


def tree_to_dict(tree: DecisionTree) -> dict:
    if isinstance(tree, Leaf):
        return {"value": tree.value}
    return {
        "transmitter": tree.transmitter,
        "on_zero": tree_to_dict(tree.on_zero),
        "on_one": tree_to_dict(tree.on_one),
    }


def tree_from_dict(data: object) -> DecisionTree:
    if not isinstance(data, dict):
        raise InputError(f"tree node must be an object, got {type(data).__name__}")
    if "value" in data:
        if set(data) != {"value"}:
            raise InputError(f"leaf object has extra keys: {sorted(set(data) - {'value'})}")
        value = data["value"]
        if value not in (0, 1):
            raise InputError(f"leaf value must be 0 or 1, got {value!r}")
        return Leaf(value)
    want = {"transmitter", "on_zero", "on_one"}
    if set(data) != want:
        raise InputError(f"internal node keys must be {sorted(want)}, got {sorted(data)}")
    transmitter = data["transmitter"]
    if not isinstance(transmitter, int) or transmitter < 1:
        raise InputError(f"transmitter must be a positive integer, got {transmitter!r}")
    return Node(transmitter, tree_from_dict(data["on_zero"]), tree_from_dict(data["on_one"]))


def tree_to_json(tree: DecisionTree, indent: int | None = 2) -> str:
    return json.dumps(tree_to_dict(tree), indent=indent, sort_keys=True)


def tree_from_json(text: str) -> DecisionTree:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"invalid tree JSON: {e}") from e
    return tree_from_dict(data)


def tree_to_dot(tree: DecisionTree, labels: Sequence[str] | None = None) -> str:
    """Render a strategy as Graphviz DOT with deterministic preorder node ids.

    `labels[r-1]` overrides the display name of rank r, which lets callers
    show original input labels on a rank-space tree.
    """
    lines = ["digraph strategy {"]
    counter = 0

    def name(t: DecisionTree) -> str:
        if isinstance(t, Leaf):
            return str(t.value)
        if labels is not None and 1 <= t.transmitter <= len(labels):
            return str(labels[t.transmitter - 1])
        return f"x{t.transmitter}"

    def emit(t: DecisionTree) -> str:
        nonlocal counter
        nid = f"n{counter}"
        counter += 1
        if isinstance(t, Leaf):
            lines.append(f'  {nid} [label="{name(t)}", shape=box];')
            return nid
        lines.append(f'  {nid} [label="{name(t)}", shape=ellipse];')
        zero_id = emit(t.on_zero)
        one_id = emit(t.on_one)
        lines.append(f'  {nid} -> {zero_id} [label="0"];')
        lines.append(f'  {nid} -> {one_id} [label="1"];')
        return nid

    emit(tree)
    lines.append("}")
    return "\n".join(lines) + "\n"
