"""Blow-up criterion checks for initial data.

Decides which blow-up branch applies to a datum from its functionals, its
symmetry and, for the threshold branch, the ground-state thresholds.
"""

from __future__ import annotations

import logging

import numpy as np

from fnls_lab.exceptions import ParameterError, SymmetryError
from fnls_lab.ground_state import GroundStateResult, evaluate_thresholds, thresholds
from fnls_lab.models import CriterionVerdict, FunctionalSnapshot, HypothesisFlags, ModelParams, SymmetryClass
from fnls_lab.spectral import Field, energy, mass, sobolev_seminorm, symmetry_deviation

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-8
CRITICAL_TOL = 1e-12


def snapshot(u: Field, params: ModelParams) -> FunctionalSnapshot:
    return FunctionalSnapshot(mass=mass(u), energy=energy(u, params), grad_norm=sobolev_seminorm(u, params.s))


def xn_moment(u: Field) -> float:
    """int x_N^2 |u|^2, finite for data in Sigma_N."""
    return float(np.sum(u.grid.coords[-1] ** 2 * np.abs(u.physical()) ** 2)) * u.grid.cell_volume


def check_criteria(
    u0: Field,
    params: ModelParams,
    symmetry_class: SymmetryClass = "Sigma_N",
    q: GroundStateResult | None = None,
) -> CriterionVerdict:
    """Evaluate the hypotheses of the three blow-up criteria for ``u0``.

    Args:
        u0: Initial datum on an N-dimensional grid.
        params: Equation parameters.
        symmetry_class: Declared class, "Sigma_N" (with x_N moment) or "Sigma".
        q: Ground state, required when the threshold branch is the one to decide.

    Returns:
        CriterionVerdict naming the applicable branch, or none with the reason.

    Raises:
        SymmetryError: If u0 deviates from cylindrical symmetry by more than 1e-8.
        ParameterError: If the threshold branch is needed and no ground state was given.
    """
    deviation = symmetry_deviation(u0) if u0.grid.ndim > 2 else _planar_deviation(u0)
    if deviation > SYMMETRY_TOL:
        raise SymmetryError(
            f"initial datum deviates from cylindrical symmetry by {deviation:.3e}",
            deviation=deviation,
        )

    N, s, sigma, s_c = params.N, params.s, params.sigma, params.s_c
    inputs = snapshot(u0, params)
    negative = inputs.energy < 0
    admissible_s = 0.5 < s < 1
    sigma_n = symmetry_class == "Sigma_N"

    flags = HypothesisFlags(
        supercritical_sigma_n=(
            N >= 3 and admissible_s and 0 < s_c <= s + CRITICAL_TOL and params.sigma_leq_s and sigma_n
        ),
        mass_critical_sigma_n=abs(s_c) <= CRITICAL_TOL and negative and sigma_n,
        supercritical_sigma=(
            N >= 4 and sigma > 2 * s / (N - 1) and params.sigma_leq_s and not sigma_n and negative and admissible_s
        ),
    )
    verdict = CriterionVerdict(
        s_c=s_c,
        branch=None,
        applicable=False,
        inputs=inputs,
        hypotheses=flags,
        symmetry_class=symmetry_class,
        symmetry_deviation=deviation,
        xn_moment=xn_moment(u0) if sigma_n else None,
    )

    if abs(s_c) <= CRITICAL_TOL:
        verdict.branch = "mass-critical"
        verdict.applicable = flags.mass_critical_sigma_n
        verdict.reason = "" if verdict.applicable else _missing(negative, sigma_n, "mass-critical")
    elif s_c > 0 and sigma_n:
        if negative:
            verdict.branch = "negative-energy"
            verdict.applicable = flags.supercritical_sigma_n
            verdict.reason = "" if verdict.applicable else "parameters outside N >= 3, 1/2 < s < 1, sigma <= s"
        else:
            if q is None:
                raise ParameterError(
                    "E[u0] >= 0 with s_c > 0: the threshold branch needs the ground state; "
                    "solve it first (ground-state command) and pass it in"
                )
            record = thresholds(q, params)
            comparison = evaluate_thresholds(u0, record, params)
            verdict.branch = "threshold-pair"
            verdict.thresholds = record
            verdict.comparison = comparison
            verdict.applicable = (
                flags.supercritical_sigma_n and comparison.energy_mass_satisfied and comparison.grad_satisfied
            )
            if not verdict.applicable:
                verdict.reason = "threshold conditions not both satisfied"
    elif s_c > 0:
        verdict.branch = "sigma-class"
        verdict.applicable = flags.supercritical_sigma
        if not verdict.applicable:
            verdict.reason = "needs N >= 4, 2s/(N-1) < sigma <= s and E[u0] < 0"
    else:
        verdict.reason = f"mass-subcritical (s_c={s_c:.4g}); no blow-up criterion applies"

    logger.info(
        "Criteria: s_c=%.4g branch=%s applicable=%s %s",
        s_c,
        verdict.branch,
        verdict.applicable,
        verdict.reason,
    )
    return verdict


def _planar_deviation(u0: Field) -> float:
    # one y axis: the only symmetry is the reflection y -> -y
    values = u0.physical()
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale == 0.0 or values.ndim < 2:
        return 0.0
    reflected = np.roll(np.flip(values, axis=0), 1, axis=0)
    return float(np.max(np.abs(reflected - values))) / scale


def _missing(negative: bool, sigma_n: bool, branch: str) -> str:
    reasons = []
    if not negative:
        reasons.append("E[u0] >= 0")
    if not sigma_n:
        reasons.append("datum declared in Sigma without x_N moment")
    return f"{branch} branch hypotheses fail: " + ", ".join(reasons)
