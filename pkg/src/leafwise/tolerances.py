"""Tolerance tiers and numerical defaults shared by every module."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace


class Tier(str, enum.Enum):
    """Accuracy class of a computed quantity.

    ``EXACT`` values come from closed-form coefficients and exact partial
    derivatives; ``FD`` values involve at least one central finite difference.
    """

    EXACT = "EXACT"
    FD = "FD"

    @classmethod
    def combine(cls, *tiers: "Tier") -> "Tier":
        return cls.FD if any(t is cls.FD for t in tiers) else cls.EXACT


FD_STEP = 1e-5
R_MIN = 1e-6
GRID_POINTS = 17
GRID_CAP = 1_000_000


@dataclass(frozen=True)
class Tolerances:
    exact: float = 1e-12
    fd: float = 1e-4
    positivity: float = 1e-9
    fd_step: float = FD_STEP

    def for_tier(self, tier: Tier) -> float:
        return self.exact if tier is Tier.EXACT else self.fd

    def override(self, **values: float) -> "Tolerances":
        unknown = set(values) - {"exact", "fd", "positivity", "fd_step"}
        if unknown:
            raise KeyError(f"unknown tolerance keys: {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in values.items()})


DEFAULT_TOLERANCES = Tolerances()
