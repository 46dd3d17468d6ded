"""Structured result records shared by every verification module.

Three record types cover the whole lab: NormReport for plain functional
evaluations, InequalityVerdict for one-sided bounds (possibly with fitted
constants), and OracleReport for dual-path cross-checks.  All of them
serialize to flat JSON objects with sorted keys, so verdict files produced
by identical runs can be compared byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

__all__ = [
    "NormReport",
    "InequalityVerdict",
    "OracleReport",
    "dumps_canonical",
    "to_jsonl",
]


def _plain(value: Any) -> Any:
    """Coerce numpy scalars and nested containers to pure-Python types."""
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


def dumps_canonical(record: Mapping[str, Any]) -> str:
    """One JSON line: sorted keys, compact separators, shortest-roundtrip floats."""
    return json.dumps(_plain(dict(record)), sort_keys=True, separators=(",", ":"))


def to_jsonl(records: Iterable[Mapping[str, Any]]) -> str:
    """Concatenate canonical lines in the given order, trailing newline included."""
    return "".join(dumps_canonical(r) + "\n" for r in records)


@dataclass(frozen=True)
class NormReport:
    """A single functional evaluation with enough metadata to reproduce it.

    kind is one of "moment", "lp_k", "sobolev", "c_alpha"; parameters holds
    the exponents (p, k, alpha, ...) and grid holds (d, N, R).
    """

    kind: str
    value: float
    parameters: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind != "moment" and not math.isnan(self.value) and self.value < 0:
            raise ValueError(f"norm report of kind {self.kind!r} has negative value")

    def to_record(self) -> dict:
        return {
            "record": "norm",
            "kind": self.kind,
            "value": float(self.value),
            "parameters": dict(self.parameters),
            "grid": dict(self.grid),
        }

    def to_json(self) -> str:
        return dumps_canonical(self.to_record())


@dataclass(frozen=True)
class InequalityVerdict:
    """Outcome of one inequality check: lhs <= rhs up to a relative slack.

    margin and passed are derived, never stored, so the defining relation
    passed == (margin >= -slack * |rhs|) cannot drift out of sync.  For
    identity checks the caller stores the relative difference as lhs and the
    tolerance as rhs; the same margin rule then expresses "difference below
    tolerance".  A NaN on either side fails the verdict.
    """

    name: str
    lhs: float
    rhs: float
    slack: float = 0.0
    fitted_constants: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.slack < 0:
            raise ValueError(f"slack must be nonnegative, got {self.slack}")

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        margin = self.margin
        if math.isnan(margin):
            return False
        return margin >= -self.slack * abs(self.rhs)

    def to_record(self) -> dict:
        return {
            "record": "verdict",
            "name": self.name,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "margin": float(self.margin),
            "pass": bool(self.passed),
            "slack": float(self.slack),
            "fitted_constants": dict(self.fitted_constants),
            "provenance": dict(self.provenance),
        }

    def to_json(self) -> str:
        return dumps_canonical(self.to_record())


@dataclass(frozen=True)
class OracleReport:
    """Agreement record between a fast path and its independent oracle."""

    target: str
    oracle_value: float
    fast_value: float
    resolutions: dict = field(default_factory=dict)

    @property
    def rel_error(self) -> float:
        scale = max(abs(self.oracle_value), abs(self.fast_value))
        if scale == 0.0:
            return 0.0
        return abs(self.oracle_value - self.fast_value) / scale

    def to_record(self) -> dict:
        return {
            "record": "oracle",
            "target": self.target,
            "oracle_value": float(self.oracle_value),
            "fast_value": float(self.fast_value),
            "rel_error": float(self.rel_error),
            "resolutions": dict(self.resolutions),
        }

    def to_json(self) -> str:
        return dumps_canonical(self.to_record())
