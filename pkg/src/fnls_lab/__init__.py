"""Fractional NLS virial lab: pseudospectral blow-up experiments and inequality checks."""

__version__ = "0.1.0"

from fnls_lab.config import LabConfig, get_config
from fnls_lab.exceptions import (
    ConvergenceError,
    IdentityMismatchError,
    LabError,
    NonFiniteFieldError,
    ParameterError,
    QuadratureGateError,
    SamplingError,
    ScenarioConfigError,
    SnapshotFormatError,
    SymmetryError,
)
from fnls_lab.models import (
    EXIT_CODES,
    BlowupVerdict,
    CheckResult,
    CheckStatus,
    CriterionVerdict,
    ModelParams,
    RatioSample,
    RunStatus,
    RunSummary,
    ScenarioConfig,
    VerificationReport,
    VirialReport,
)

__all__ = [
    "__version__",
    "LabConfig",
    "get_config",
    "LabError",
    "ParameterError",
    "NonFiniteFieldError",
    "SymmetryError",
    "QuadratureGateError",
    "IdentityMismatchError",
    "ConvergenceError",
    "SamplingError",
    "ScenarioConfigError",
    "SnapshotFormatError",
    "EXIT_CODES",
    "ModelParams",
    "ScenarioConfig",
    "CheckStatus",
    "CheckResult",
    "RatioSample",
    "VerificationReport",
    "CriterionVerdict",
    "BlowupVerdict",
    "VirialReport",
    "RunStatus",
    "RunSummary",
]
