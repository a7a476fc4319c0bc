"""Exception hierarchy."""

from __future__ import annotations

import numpy as np


class LeafwiseError(Exception):
    """Base class for all errors raised by this package."""


class ChartMismatchError(LeafwiseError, ValueError):
    pass


class DegreeError(LeafwiseError, ValueError):
    pass


class DomainError(LeafwiseError, ValueError):
    pass


class _WitnessError(LeafwiseError):
    def __init__(self, message: str, witness=None):
        self.witness = None if witness is None else np.asarray(witness, dtype=float)
        if self.witness is not None:
            message = f"{message} (witness point {np.array2string(self.witness, precision=6)})"
        super().__init__(message)


class DegeneracyError(_WitnessError):
    """A pointwise nondegeneracy invariant fails at some point."""


class RankDeficiencyError(_WitnessError):
    """A pointwise linear system lost full column rank."""


class CertificationError(LeafwiseError):
    """A construction produced an object that fails its own verifier."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class ModelMismatchError(LeafwiseError):
    """Input data does not match the local model a construction requires."""

    def __init__(self, message: str, deviation: float):
        self.deviation = float(deviation)
        super().__init__(f"{message} (max deviation {self.deviation:.3e})")
