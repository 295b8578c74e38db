"""Pydantic v2 data models for parameters, scenarios, diagnostics reports and verdicts.

All serializable data structures used throughout the lab live here. Numerical
containers holding arrays (Grid, Field, weights) live next to their operations.
"""

from __future__ import annotations

import math
import uuid
from datetime import UTC, datetime
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

SymmetryClass = Literal["Sigma_N", "Sigma"]
WeightVariant = Literal["phi", "psi"]
CheckStatus = Literal["pass", "fail", "skip", "error"]
RunStatus = Literal["completed", "blowup-detected", "domain-breach", "numerical-failure"]
CriterionBranch = Literal["negative-energy", "threshold-pair", "mass-critical", "sigma-class"]
InitialKind = Literal["gaussian", "ring", "ground-state-multiple", "from-file"]

EXIT_CODES: dict[str, int] = {
    "completed": 0,
    "check-failed": 1,
    "blowup-detected": 2,
    "domain-breach": 3,
    "numerical-failure": 4,
    "config-error": 64,
}

SERIES_COLUMNS: tuple[str, ...] = (
    "t",
    "mass",
    "energy",
    "grad_s_norm",
    "M_phiR",
    "M_psiR",
    "dMdt_fd",
    "rhs_m1_total",
    "rhs_kinetic",
    "rhs_bilap",
    "rhs_nonlinear",
    "boundary_mass",
)

_CRITICAL_TOL = 1e-12


class ModelParams(BaseModel):
    """Dimension, fractional order and nonlinearity power of the equation."""

    model_config = ConfigDict(frozen=True)

    N: int = Field(ge=1)
    s: float = Field(gt=0, lt=1)
    sigma: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_admissible(self) -> ModelParams:
        if self.N > 2 * self.s:
            upper = 2 * self.s / (self.N - 2 * self.s)
            if self.sigma > upper * (1 + _CRITICAL_TOL):
                raise ValueError(
                    f"sigma={self.sigma} exceeds the energy-critical power 2s/(N-2s)={upper:.6g} "
                    f"for N={self.N}, s={self.s}"
                )
        return self

    @computed_field  # type: ignore[prop-decorator]
    @property
    def s_c(self) -> float:
        return self.N / 2 - self.s / self.sigma

    @property
    def mass_critical(self) -> bool:
        return abs(self.sigma - 2 * self.s / self.N) <= _CRITICAL_TOL * max(1.0, self.sigma)

    @property
    def mass_supercritical(self) -> bool:
        return self.s_c > 0 and not self.mass_critical

    @property
    def energy_critical(self) -> bool:
        return self.N > 2 * self.s and math.isclose(self.s_c, self.s, rel_tol=0, abs_tol=1e-10)

    @property
    def sigma_leq_s(self) -> bool:
        return self.sigma <= self.s * (1 + _CRITICAL_TOL)

    @property
    def nonlinear_exponent(self) -> float:
        """Exponent 2σ+2 of the potential term."""
        return 2 * self.sigma + 2


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------


class GridSection(BaseModel):
    """Per-axis point counts and box lengths."""

    n: list[int]
    L: list[float]

    @field_validator("n")
    @classmethod
    def _powers_of_two(cls, value: list[int]) -> list[int]:
        for count in value:
            if count < 2 or count & (count - 1):
                raise ValueError(f"grid point count {count} is not a power of two")
        return value

    @field_validator("L")
    @classmethod
    def _positive_lengths(cls, value: list[float]) -> list[float]:
        if any(length <= 0 for length in value):
            raise ValueError("box lengths must be positive")
        return value


class InitialCondition(BaseModel):
    """Descriptor of the initial datum."""

    model_config = ConfigDict(populate_by_name=True)

    kind: InitialKind = "gaussian"
    amplitude: float = 1.0
    y_width: float = Field(1.0, gt=0)
    xn_width: float = Field(1.0, gt=0, alias="xN_width")
    radius: float = Field(2.0, ge=0)
    chirp: float = 0.0
    factor: float = 1.0
    path: str | None = None


class TimeSection(BaseModel):
    dt0: float = Field(1e-3, gt=0)
    t_end: float = Field(1.0, ge=0)
    sample_interval: float = Field(0.01, gt=0)


class QuadratureSection(BaseModel):
    nodes: int = Field(64, ge=8)


class DetectionSection(BaseModel):
    ratio: float = Field(50.0, gt=1)
    persistence: int = Field(10, ge=1)
    boundary_threshold: float = Field(1e-8, gt=0)
    mass_drift_bound: float = Field(1e-3, gt=0)
    dealias: bool = True


class ScenarioConfig(BaseModel):
    """A complete scenario: equation, grid, initial datum, cutoff, time and detection settings."""

    model_config = ConfigDict(populate_by_name=True)

    name: str = "scenario"
    params: ModelParams
    grid: GridSection
    initial: InitialCondition = Field(default_factory=InitialCondition)
    R: float = Field(gt=0)
    time: TimeSection = Field(default_factory=TimeSection)
    quadrature: QuadratureSection = Field(default_factory=QuadratureSection)
    detection: DetectionSection = Field(default_factory=DetectionSection)
    symmetry_class: SymmetryClass = "Sigma_N"
    seed: int = 0
    sweep: dict[str, list[float]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_consistency(self) -> ScenarioConfig:
        N = self.params.N
        if N < 2:
            raise ValueError("scenarios need N >= 2 so that the cylindrical weight has a y-plane")
        if len(self.grid.n) != N or len(self.grid.L) != N:
            raise ValueError(f"grid must list {N} point counts and {N} lengths")
        y_counts = set(self.grid.n[:-1])
        y_lengths = set(self.grid.L[:-1])
        if len(y_counts) != 1 or len(y_lengths) != 1:
            raise ValueError("y axes must share point count and length so the y-plane symmetry group is exact")
        if self.R >= min(self.grid.L[:-1]) / 4:
            raise ValueError(f"R={self.R} must be below min(L_y)/4={min(self.grid.L[:-1]) / 4:g}")
        if self.initial.kind == "from-file":
            if not self.initial.path:
                raise ValueError("initial.kind='from-file' requires initial.path")
            if not Path(self.initial.path).is_file():
                raise ValueError(f"initial.path does not exist: {self.initial.path}")
        unknown = set(self.sweep) - {"amplitude", "sigma", "s", "R"}
        if unknown:
            raise ValueError(f"unknown sweep axes: {sorted(unknown)}")
        return self


# ---------------------------------------------------------------------------
# Ground state and criteria
# ---------------------------------------------------------------------------


class ThresholdRecord(BaseModel):
    """Ground-state quantities entering the threshold conditions."""

    s_c: float
    energy_critical: bool
    mass: float | None
    energy: float
    grad_norm: float
    energy_mass_product: float | None
    grad_mass_product: float | None
    grad_mass_scale_invariant: float | None
    pohozaev_defect: float
    dilation_defect: float
    under_resolved: bool = False


class ThresholdComparison(BaseModel):
    """Both sides of the energy-mass and gradient-mass conditions for a candidate datum."""

    energy_mass_lhs: float | None
    energy_mass_rhs: float | None
    energy_mass_satisfied: bool
    grad_lhs: float
    grad_rhs: float
    grad_satisfied: bool
    grad_equal: bool
    grad_scale_invariant_lhs: float | None = None
    grad_scale_invariant_rhs: float | None = None


class FunctionalSnapshot(BaseModel):
    mass: float
    energy: float
    grad_norm: float


class HypothesisFlags(BaseModel):
    """Whether each blow-up criterion's hypotheses hold for the datum."""

    supercritical_sigma_n: bool = False
    mass_critical_sigma_n: bool = False
    supercritical_sigma: bool = False


class CriterionVerdict(BaseModel):
    """Outcome of checking the blow-up criteria against initial data."""

    s_c: float
    branch: CriterionBranch | None
    applicable: bool
    reason: str = ""
    inputs: FunctionalSnapshot
    thresholds: ThresholdRecord | None = None
    comparison: ThresholdComparison | None = None
    hypotheses: HypothesisFlags = Field(default_factory=HypothesisFlags)
    symmetry_class: SymmetryClass
    symmetry_deviation: float = 0.0
    xn_moment: float | None = None


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------


class BlowupVerdict(BaseModel):
    """Detection outcome of an evolution run."""

    detected: bool = False
    t_detect: float | None = None
    reason: str | None = None
    max_ratio: float = 1.0
    growth_ceiling: float | None = None
    growth_times: list[float] = Field(default_factory=list)
    growth_norms: list[float] = Field(default_factory=list)


class GrowthFit(BaseModel):
    """Power-law fit G(t) ~ C t^p over the late window."""

    exponent: float
    ci_low: float
    ci_high: float
    window_start: float
    points: int


class SeriesRow(BaseModel):
    """One row of the sampled time series, serialized under the fixed CSV column names."""

    model_config = ConfigDict(populate_by_name=True)

    t: float
    mass: float
    energy: float
    grad_s_norm: float
    m_phi: float = Field(math.nan, alias="M_phiR")
    m_psi: float = Field(math.nan, alias="M_psiR")
    dmdt_fd: float = Field(math.nan, alias="dMdt_fd")
    rhs_total: float = Field(math.nan, alias="rhs_m1_total")
    rhs_kinetic: float = math.nan
    rhs_bilap: float = math.nan
    rhs_nonlinear: float = math.nan
    boundary_mass: float = 0.0

    def as_row(self) -> list[float]:
        data = self.model_dump(by_alias=True)
        return [data[column] for column in SERIES_COLUMNS]


# ---------------------------------------------------------------------------
# Virial diagnostics
# ---------------------------------------------------------------------------


class VirialReport(BaseModel):
    """Localized virial value, its time derivative, and the term-by-term right-hand side."""

    R: float
    variant: WeightVariant = "phi"
    t: float | None = None
    m_value: float
    dmdt_fd: float | None = None
    dmdt_exact: float | None = None
    kinetic: float
    bilap: float
    nonlinear: float
    nonlinear_split: float
    kinetic_bound: float
    cross_term: float
    cross_term_max: float
    tail_integrand_max: float
    bound_value: float
    energy_bound: float | None = None
    remainder_scale: float
    residual: float | None = None
    scale: float

    @computed_field  # type: ignore[prop-decorator]
    @property
    def total(self) -> float:
        return self.kinetic + self.bilap + self.nonlinear

    @property
    def relative_residual(self) -> float | None:
        if self.residual is None:
            return None
        return abs(self.residual) / self.scale if self.scale > 0 else abs(self.residual)


class RefinedRecord(BaseModel):
    """Mass-critical refined decomposition of the virial derivative."""

    R: float
    eta: float
    leading: float
    psi1_term: float
    tail_term: float
    eta_tail_component: float
    bilap: float
    remainder: float
    remainder_scale: float
    measured_dmdt: float
    dominated: bool


# ---------------------------------------------------------------------------
# Inequality suite
# ---------------------------------------------------------------------------


class RatioSample(BaseModel):
    """One evaluation of an inequality: both sides and their ratio."""

    family: str
    parameters: dict[str, float] = Field(default_factory=dict)
    lhs: float
    rhs: float
    ratio: float


class ChainRecord(BaseModel):
    """Ratios of the links in the exterior tail estimate."""

    R: float
    sup_exterior: RatioSample
    xn_power: RatioSample
    tail: RatioSample
    tail_sigma_equals_s: RatioSample | None = None


class CorpusSummary(BaseModel):
    """Statistics of one inequality's ratios over a corpus."""

    family: str
    count: int
    supremum: float
    median: float
    outliers: int
    sanity_ok: bool


# ---------------------------------------------------------------------------
# Verification suite
# ---------------------------------------------------------------------------


class CheckResult(BaseModel):
    """A single verification check result."""

    name: str
    description: str
    status: CheckStatus
    details: str = ""
    metrics: dict[str, float] = Field(default_factory=dict)


class VerificationReport(BaseModel):
    """Complete result of a verification suite run."""

    id: str = Field(default_factory=lambda: str(uuid.uuid4()))
    suite: str
    started_at: datetime = Field(default_factory=lambda: datetime.now(UTC))
    completed_at: datetime | None = None
    checks: list[CheckResult] = Field(default_factory=list)
    corpora: list[CorpusSummary] = Field(default_factory=list)
    status: str = "running"
    summary: str = ""


# ---------------------------------------------------------------------------
# Runs and sweeps
# ---------------------------------------------------------------------------


class RunSummary(BaseModel):
    """JSON summary of one scenario run."""

    name: str
    params: ModelParams
    s_c: float
    status: RunStatus
    exit_code: int
    verdict: CriterionVerdict
    detection: BlowupVerdict
    growth_fit: GrowthFit | None = None
    initial: FunctionalSnapshot
    final: FunctionalSnapshot | None = None
    R: float
    seed: int
    samples: int = 0
    steps: int = 0
    t_final: float = 0.0
    boundary_mass_final: float = 0.0
    max_mass_drift: float = 0.0
    dt_exponent: float
    dealias: bool = True
    message: str = ""
    created_at: datetime = Field(default_factory=lambda: datetime.now(UTC))


class SweepRow(BaseModel):
    """One cell of a sweep verdict table."""

    cell: str
    axes: dict[str, float]
    status: str
    exit_code: int
    branch: str | None = None
    applicable: bool = False
    detected: bool = False
    t_detect: float | None = None
    energy: float | None = None
    message: str = ""
