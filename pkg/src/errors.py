"""Exception hierarchy for the ladder toolkit.

Input contract violations raise builtin ``ValueError``; the classes below
signal failures of the numerics, the oracle, or the analysis pipeline.
"""

from __future__ import annotations

from typing import Any, Dict, List


class LadderError(Exception):
    """Base class for all domain errors raised by this package."""


class NumericalDegradationError(LadderError):
    """Spectra left the tolerated band while computing the negativity."""

    def __init__(self, message: str, clamp_report: Dict[str, float]) -> None:
        super().__init__(f"{message} (clamp_report={clamp_report})")
        self.message = message
        self.clamp_report = clamp_report

    def __reduce__(self):
        return (self.__class__, (self.message, self.clamp_report))


class ConditioningError(LadderError):
    """The matrix ``1 + Γ₊Γ₋`` is too ill-conditioned to solve against."""


class OracleDisagreementError(LadderError):
    """A replayed outcome has zero Born probability in the Fock oracle."""


class TrajectoryError(LadderError):
    """A single trajectory failed; carries its seed and the failing cycle."""

    def __init__(self, message: str, seed: int, cycle: int) -> None:
        super().__init__(f"trajectory seed={seed} cycle={cycle}: {message}")
        self.message = message
        self.seed = seed
        self.cycle = cycle

    # Failures are shipped back from worker processes.
    def __reduce__(self):
        return (self.__class__, (self.message, self.seed, self.cycle))


class EnsembleError(LadderError):
    def __init__(self, message: str, failures: List[TrajectoryError]) -> None:
        super().__init__(message)
        self.failures = failures


class FitError(LadderError, ValueError):
    """Not enough (or degenerate) data for a least-squares fit."""


class CollapseError(LadderError):
    """Finite-size-scaling collapse could not be performed or did not converge."""


class ConfigError(LadderError, ValueError):
    def __init__(self, key: str, message: str, value: Any = None) -> None:
        detail = f"{key}: {message}"
        if value is not None:
            detail += f" (got {value!r})"
        super().__init__(detail)
        self.key = key


class SchemaError(LadderError, ValueError):
    """A table does not carry the columns an operation requires."""
