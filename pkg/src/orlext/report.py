"""Condition reports: verdict, best constant, and witnesses for one check.

Every structural check in the package returns a :class:`ConditionReport`.
A ``verdict`` of True is always certified only on the sample set recorded
in ``samples``; a verdict of False is backed by at least one witness whose
inequality can be re-evaluated independently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA_VERSION = 1


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and (obj != obj or obj in (float("inf"), float("-inf"))):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


@dataclass
class Witness:
    """One sampled violation of an inequality: lhs > rhs (or as documented)."""

    x: Any
    y: Any = None
    t: float | None = None
    lhs: float = float("nan")
    rhs: float = float("nan")
    detail: str = ""

    def violation(self) -> float:
        return float(self.lhs - self.rhs)

    def to_dict(self) -> dict:
        return _jsonable(
            {"x": self.x, "y": self.y, "t": self.t, "lhs": self.lhs,
             "rhs": self.rhs, "detail": self.detail}
        )


@dataclass
class ConditionReport:
    """Outcome of one condition check on a finite sample set.

    ``best_constant`` is the best constant certified by the samples:
    for beta-type conditions the largest beta that would pass, for
    L-type conditions the smallest L that would pass.
    """

    condition: str
    verdict: bool
    best_constant: float
    witnesses: list[Witness] = field(default_factory=list)
    samples: dict[str, int] = field(default_factory=dict)
    parameters: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    notes: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.verdict and not self.witnesses:
            raise AssertionError("a failing report must carry a witness")

    def worst_witness(self) -> Witness | None:
        if not self.witnesses:
            return None
        return max(
            self.witnesses,
            key=lambda w: (w.violation(), tuple(-c for c in np.atleast_1d(w.x))),
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "condition": self.condition,
            "verdict": bool(self.verdict),
            "best_constant": _jsonable(self.best_constant),
            "witnesses": [w.to_dict() for w in self.witnesses],
            "samples": _jsonable(self.samples),
            "parameters": _jsonable(self.parameters),
            "warnings": list(self.warnings),
            "notes": _jsonable(self.notes),
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("sort_keys", True)
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)
