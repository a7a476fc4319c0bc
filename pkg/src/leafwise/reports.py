"""Check reports shared by verifiers, constructions and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from leafwise.tolerances import Tier


def _plain(value: Any) -> Any:
    if isinstance(value, Tier):
        return value.value
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, CheckReport):
        return value.to_dict()
    return value


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one grid check.

    ``value`` is the headline metric described by ``metric`` (for instance
    the minimum contact ratio or the maximum residual) and ``tolerance`` the
    threshold it was compared against.  ``witness`` holds the worst grid
    point when the check fails.
    """

    name: str
    passed: bool
    tier: Tier
    metric: str
    value: float
    tolerance: float
    grid_points: int
    witness: tuple[float, ...] | None = None
    details: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "tier": self.tier.value,
            "metric": self.metric,
            "value": float(self.value),
            "tolerance": float(self.tolerance),
            "grid_points": int(self.grid_points),
            "witness": None if self.witness is None else [float(w) for w in self.witness],
            "details": _plain(dict(self.details)),
        }

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = f"[{status}] {self.name}: {self.metric} = {self.value:.6g} (tol {self.tolerance:g}, {self.tier.value}, {self.grid_points} pts)"
        if self.witness is not None and not self.passed:
            line += f" witness={list(np.round(self.witness, 6))}"
        return line


def witness_of(points: np.ndarray, index: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.asarray(points)[index])
