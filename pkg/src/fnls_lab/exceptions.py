"""Custom exception hierarchy for the fractional NLS lab.

Maps numerical failures and invalid inputs to typed exceptions so the
command layer can turn them into statuses and exit codes.
"""

from __future__ import annotations


class LabError(Exception):
    """Base exception for all lab errors."""

    def __init__(self, message: str, details: dict | None = None) -> None:
        super().__init__(message)
        self.details = details or {}


class ParameterError(LabError):
    """Raised when parameters are not admissible or an operation precondition fails."""


class NonFiniteFieldError(LabError):
    """Raised when a field carries NaN or infinite values."""


class SymmetryError(LabError):
    """Raised when a field is not invariant under its declared symmetry class."""

    def __init__(self, message: str, deviation: float, details: dict | None = None) -> None:
        super().__init__(message, details)
        self.deviation = deviation


class QuadratureGateError(LabError):
    """Raised when a quadrature rule fails its closed-form gate or self-test."""


class ConvergenceError(LabError):
    """Raised when an iteration diverges or exhausts its iteration budget."""

    def __init__(self, message: str, trace: list[float] | None = None, details: dict | None = None) -> None:
        super().__init__(message, details)
        self.trace = trace or []


class IdentityMismatchError(LabError):
    """Raised when two evaluations of the same quantity disagree beyond tolerance."""


class SamplingError(LabError):
    """Raised when trajectory samples are too few or not uniformly spaced."""


class ScenarioConfigError(LabError):
    """Raised for invalid scenario files, missing referenced files, or bad sweep axes."""


class SnapshotFormatError(LabError):
    """Raised when a binary field snapshot is malformed."""
