"""Strang-split time integration of i u_t = (-Delta)^s u - |u|^{2 sigma} u.

Both substeps are exact: the nonlinear flow only rotates the phase pointwise
and the linear flow is diagonal in frequency. The driver adapts the step to the
growth of ||(-Delta)^{s/2} u||, samples on a fixed time lattice and watches for
blow-up and for mass reaching the edge of the box.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np
import scipy.fft
from numpy.typing import NDArray

from fnls_lab.exceptions import NonFiniteFieldError, ParameterError
from fnls_lab.models import BlowupVerdict, DetectionSection, ModelParams, SeriesRow, TimeSection
from fnls_lab.spectral import (
    Field,
    boundary_mass_fraction,
    energy,
    mass,
    mass_from_spectrum,
    require_finite,
    sobolev_seminorm,
)

logger = logging.getLogger(__name__)

DT_MIN = 1e-12
_TIME_EPS = 1e-12

Diagnostics = Callable[[Field, float], dict[str, float]]


def propagate(
    u: Field,
    dt: float,
    params: ModelParams,
    mask: NDArray[np.bool_] | None = None,
    nonlinear: bool = True,
) -> Field:
    """One Strang composition: half nonlinear, full linear, half nonlinear.

    ``dt`` may be negative, which runs the same scheme backwards in time.
    """
    values = u.physical()
    power = 2 * params.sigma
    if nonlinear:
        values = values * np.exp(0.5j * dt * np.abs(values) ** power)
    spectrum = scipy.fft.fftn(values) * np.exp(-1j * dt * u.grid.k_squared**params.s)
    if mask is not None:
        spectrum = spectrum * mask
    values = scipy.fft.ifftn(spectrum)
    if nonlinear:
        values = values * np.exp(0.5j * dt * np.abs(values) ** power)
    out = Field(u.grid, values)
    require_finite(out, "evolved field")
    return out


@dataclass
class SimulationState:
    """Current solution with the baselines the monitors compare against."""

    t: float
    u: Field
    dt: float
    params: ModelParams
    mass0: float
    energy0: float
    grad0: float
    steps: int = 0
    boundary_mass: float = 0.0
    max_mass_drift: float = 0.0
    mass_reference: float | None = None

    @classmethod
    def initial(cls, u0: Field, params: ModelParams, dt: float, t0: float = 0.0) -> SimulationState:
        require_finite(u0, "initial datum")
        return cls(
            t=t0,
            u=u0,
            dt=dt,
            params=params,
            mass0=mass(u0),
            energy0=energy(u0, params),
            grad0=sobolev_seminorm(u0, params.s),
            boundary_mass=boundary_mass_fraction(u0),
        )

    def mass_drift(self) -> float:
        """Relative mass change against the filtered initial mass when one is set, else M[u0]."""
        reference = self.mass0 if self.mass_reference is None else self.mass_reference
        if reference == 0.0:
            return 0.0
        return abs(mass(self.u) - reference) / reference

    def growth_ceiling(self, mask: NDArray[np.bool_] | None = None) -> float:
        """Largest G/G0 the grid can carry at this mass: G <= max|k|^s sqrt(M) over the kept modes."""
        if self.grad0 == 0.0:
            return math.inf
        k_squared = self.u.grid.k_squared if mask is None else np.where(mask, self.u.grid.k_squared, 0.0)
        return float(np.max(k_squared)) ** (self.params.s / 2) * math.sqrt(self.mass0) / self.grad0


def strang_step(
    state: SimulationState,
    dt: float,
    mask: NDArray[np.bool_] | None = None,
    nonlinear: bool = True,
) -> SimulationState:
    """Advance ``state`` by one step of size ``dt`` > 0."""
    if not dt > 0:
        raise ParameterError(f"time step must be positive, got {dt}")
    u = propagate(state.u, dt, state.params, mask=mask, nonlinear=nonlinear)
    return replace(state, t=state.t + dt, u=u, dt=dt, steps=state.steps + 1)


@dataclass(frozen=True)
class StepController:
    """Step-size rule and blow-up detection thresholds."""

    dt0: float = 1e-3
    sample_interval: float = 0.01
    ratio: float = 50.0
    persistence: int = 10
    boundary_threshold: float = 1e-8
    mass_drift_bound: float = 1e-3
    dealias: bool = True
    adaptive: bool = True
    nonlinear: bool = True
    dt_min: float = DT_MIN

    @classmethod
    def from_sections(cls, time: TimeSection, detection: DetectionSection) -> StepController:
        return cls(
            dt0=time.dt0,
            sample_interval=time.sample_interval,
            ratio=detection.ratio,
            persistence=detection.persistence,
            boundary_threshold=detection.boundary_threshold,
            mass_drift_bound=detection.mass_drift_bound,
            dealias=detection.dealias,
        )

    @staticmethod
    def exponent(params: ModelParams) -> float:
        return (params.sigma + params.s) / params.s

    def next_dt(self, grad: float, grad0: float, params: ModelParams) -> float:
        """dt = dt0 * min(1, (G0/G)^{(sigma+s)/s})."""
        if not self.adaptive or grad <= 0 or grad0 <= 0:
            return self.dt0
        return self.dt0 * min(1.0, (grad0 / grad) ** self.exponent(params))


def _sample(state: SimulationState, grad: float, diagnostics: Diagnostics | None) -> SeriesRow:
    row = SeriesRow(
        t=state.t,
        mass=mass(state.u),
        energy=energy(state.u, state.params),
        grad_s_norm=grad,
        boundary_mass=state.boundary_mass,
    )
    if diagnostics is None:
        return row
    extra = diagnostics(state.u, state.t)
    return SeriesRow.model_validate({**row.model_dump(by_alias=True), **extra})


def evolve(
    state: SimulationState,
    t_end: float,
    controller: StepController,
    diagnostics: Diagnostics | None = None,
) -> tuple[SimulationState, BlowupVerdict, list[SeriesRow]]:
    """Integrate until ``t_end`` or until a monitor stops the run.

    Samples are taken at t0 + k * sample_interval (steps are clipped to land on them)
    and at ``t_end``. ``diagnostics(u, t)`` may add series columns such as the virial values.
    The monitors act on samples: blow-up needs G/G0 >= ratio at ``persistence``
    consecutive samples, and a sample whose relative mass drift exceeds
    ``mass_drift_bound`` or whose boundary mass exceeds its threshold ends the run.
    A step below ``dt_min`` ends the run at once.

    Returns:
        The final state, the detection verdict and the sampled series.
    """
    if t_end < state.t:
        raise ParameterError(f"t_end={t_end} lies before the current time {state.t}")
    params = state.params
    mask = state.u.grid.dealias_mask if controller.dealias else None
    if mask is not None and state.mass_reference is None:
        state.mass_reference = mass_from_spectrum(Field(state.u.grid, state.u.spectrum() * mask, "frequency"))
    t0 = state.t
    grad = state.grad0
    ceiling = state.growth_ceiling(mask)
    if ceiling < controller.ratio:
        logger.warning(
            "Detection ratio %g exceeds the largest G/G0 this grid can carry (%.3g); refine the grid to detect growth",
            controller.ratio,
            ceiling,
        )
    verdict = BlowupVerdict(growth_times=[state.t], growth_norms=[grad], growth_ceiling=ceiling)
    rows = [_sample(state, grad, diagnostics)]
    sample_index = 1
    streak = 0

    logger.info(
        "Evolving N=%d s=%g sigma=%g from t=%g to t=%g (dt0=%g)",
        params.N,
        params.s,
        params.sigma,
        state.t,
        t_end,
        controller.dt0,
    )
    while state.t < t_end - _TIME_EPS:
        dt = controller.next_dt(grad, state.grad0, params)
        ratio = grad / state.grad0 if state.grad0 > 0 else 1.0
        if dt < controller.dt_min:
            verdict.detected = ratio >= controller.ratio
            verdict.t_detect = state.t if verdict.detected else None
            verdict.reason = "step collapse"
            logger.warning("Step collapse at t=%.6g (dt=%.3e, ratio %.3g)", state.t, dt, ratio)
            break

        target = min(t0 + sample_index * controller.sample_interval, t_end)
        landing = state.t + dt >= target - _TIME_EPS
        if landing:
            dt = target - state.t
        try:
            state = strang_step(state, dt, mask=mask, nonlinear=controller.nonlinear)
        except NonFiniteFieldError as exc:
            verdict.reason = "non-finite field"
            logger.warning("Non-finite field after step at t=%.6g: %s", state.t, exc)
            break
        if landing:
            state.t = target

        grad = sobolev_seminorm(state.u, params.s)
        ratio = grad / state.grad0 if state.grad0 > 0 else 1.0
        verdict.max_ratio = max(verdict.max_ratio, ratio)
        if not landing:
            continue

        sample_index += 1
        state.boundary_mass = boundary_mass_fraction(state.u)
        drift = state.mass_drift()
        state.max_mass_drift = max(state.max_mass_drift, drift)
        rows.append(_sample(state, grad, diagnostics))
        verdict.growth_times.append(state.t)
        verdict.growth_norms.append(grad)
        if drift > controller.mass_drift_bound:
            verdict.reason = "mass drift"
            logger.warning(
                "Relative mass drift %.3e exceeds %.1e at t=%.6g", drift, controller.mass_drift_bound, state.t
            )
            break
        if state.boundary_mass > controller.boundary_threshold:
            verdict.reason = "domain too small"
            logger.warning(
                "Boundary mass %.3e exceeds %.1e at t=%.6g",
                state.boundary_mass,
                controller.boundary_threshold,
                state.t,
            )
            break

        streak = streak + 1 if ratio >= controller.ratio else 0
        if streak >= controller.persistence:
            verdict.detected = True
            verdict.t_detect = state.t
            verdict.reason = "gradient growth"
            logger.info("Blow-up detected at t=%.6g (ratio %.3g over %d samples)", state.t, ratio, streak)
            break

    state.max_mass_drift = max(state.max_mass_drift, state.mass_drift())
    logger.info("Evolution stopped at t=%.6g after %d steps (%s)", state.t, state.steps, verdict.reason or "t_end")
    return state, verdict, rows
