"""Localized virial quantities and the resolvent representation of their time derivative.

The kinetic and bi-Laplacian contributions are integrals over m in (0, inf) of
local quantities built from u_m = c_s (-Delta + m)^{-1} u. The m integral is
discretized once per field by a Gauss-Jacobi rule after the substitution
m = a t/(1-t), gated against a closed form before any use.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft
import scipy.special
from numpy.typing import NDArray

from fnls_lab.cutoffs import CylWeight
from fnls_lab.exceptions import IdentityMismatchError, ParameterError, QuadratureGateError, SamplingError
from fnls_lab.models import ModelParams, RefinedRecord, VirialReport, WeightVariant
from fnls_lab.spectral import Field, energy, gradient, potential_integral, require_finite, sobolev_seminorm

logger = logging.getLogger(__name__)

DEFAULT_NODES = 64
GATE_FACTORS = (0.25, 1.0, 4.0, 64.0)
GATE_TOL = 1e-8
SPLIT_TOL = 1e-10

RealArray = NDArray[np.float64]


def resolvent_constant(s: float) -> float:
    """c_s = sqrt(sin(pi s)/pi)."""
    return math.sqrt(math.sin(math.pi * s) / math.pi)


def weighted_median_wavenumber(u: Field) -> float:
    """Median of |k|^2 under the spectral mass |u_hat|^2, zero mode excluded (1 for a constant field)."""
    k2 = u.grid.k_squared.ravel()
    power = np.abs(u.spectrum().ravel()) ** 2
    keep = k2 > 0
    k2, power = k2[keep], power[keep]
    total = float(np.sum(power))
    if total <= 0.0:
        return 1.0
    order = np.argsort(k2, kind="stable")
    cumulative = np.cumsum(power[order])
    index = int(np.searchsorted(cumulative, 0.5 * cumulative[-1]))
    return float(k2[order][min(index, k2.size - 1)])


@dataclass(frozen=True, eq=False)
class ResolventQuadrature:
    """Nodes m_j and weights W_j with sum_j W_j f(m_j) ~ int_0^inf m^s f(m) dm."""

    s: float
    scale: float
    nodes: RealArray = field(repr=False)
    weights: RealArray = field(repr=False)

    @classmethod
    def build(cls, s: float, scale: float = 1.0, n_nodes: int = DEFAULT_NODES) -> ResolventQuadrature:
        """Gauss-Jacobi rule in t for the substitution m = scale * t/(1-t).

        m^s dm becomes scale^{s+1} t^s (1-t)^{-s} (1-t)^{-2} dt, so the Jacobi weight
        absorbs the endpoint powers and the remaining integrand is smooth.
        """
        if not 0 < s < 1:
            raise ParameterError(f"fractional order must lie in (0, 1), got {s}")
        if scale <= 0:
            raise ParameterError(f"quadrature scale must be positive, got {scale}")
        x, w = scipy.special.roots_jacobi(n_nodes, -s, s)
        t = (x + 1.0) / 2.0
        nodes = scale * t / (1.0 - t)
        weights = 0.5 * w * scale ** (s + 1) / (1.0 - t) ** 2
        return cls(s=s, scale=scale, nodes=nodes, weights=weights)

    @classmethod
    def for_field(cls, u: Field, s: float, n_nodes: int = DEFAULT_NODES) -> ResolventQuadrature:
        """Rule centred on the weighted median |k|^2 of ``u``, already gated."""
        quad = cls.build(s, weighted_median_wavenumber(u), n_nodes)
        quad.check_gate()
        return quad

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def integrate(self, values: RealArray) -> float:
        """sum_j W_j f(m_j) for f already sampled at the nodes."""
        return float(np.dot(self.weights, values))

    @cached_property
    def gate_error(self) -> float:
        worst = 0.0
        closed = self.s * math.pi / math.sin(math.pi * self.s)
        for factor in GATE_FACTORS:
            b = self.scale * factor
            exact = b ** (self.s - 1) * closed
            approx = self.integrate(1.0 / (b + self.nodes) ** 2)
            worst = max(worst, abs(approx - exact) / exact)
        return worst

    def check_gate(self, tol: float = GATE_TOL) -> float:
        """Compare int m^s/(b+m)^2 dm with b^{s-1} s pi/sin(pi s) for b = scale * {0.25, 1, 4, 64}.

        Raises:
            QuadratureGateError: If the worst relative error exceeds ``tol``.
        """
        if not np.all(self.weights > 0):
            raise QuadratureGateError("resolvent quadrature has non-positive weights")
        error = self.gate_error
        if not error <= tol:
            raise QuadratureGateError(
                f"resolvent quadrature gate failed: relative error {error:.3e} > {tol:.1e}",
                details={"error": error, "nodes": self.size, "scale": self.scale, "s": self.s},
            )
        return error


def resolvent(u: Field, m: float, s: float) -> Field:
    """u_m = c_s (-Delta + m)^{-1} u."""
    if not m > 0:
        raise ParameterError(f"resolvent parameter must be positive, got {m}")
    require_finite(u)
    spectrum = resolvent_constant(s) * u.spectrum() / (u.grid.k_squared + m)
    if u.representation == "frequency":
        return Field(u.grid, spectrum, "frequency")
    return Field(u.grid, scipy.fft.ifftn(spectrum))


def balakrishnan_check(u: Field, quad: ResolventQuadrature) -> tuple[float, float, float]:
    """sum_j W_j ||grad u_{m_j}||^2 against s ||(-Delta)^{s/2} u||^2.

    Returns:
        (lhs, rhs, relative error); the error is 0 when both sides vanish.
    """
    grid = u.grid
    spectral = u.to_frequency()
    lhs_terms = np.empty(quad.size)
    for j, m in enumerate(quad.nodes):
        # ||grad u_m||^2 through Plancherel with the full symbol |k|^2
        u_m = resolvent(spectral, float(m), quad.s)
        lhs_terms[j] = float(np.sum(grid.k_squared * np.abs(u_m.values) ** 2)) * grid.cell_volume / grid.size
    lhs = quad.integrate(lhs_terms)
    rhs = quad.s * sobolev_seminorm(u, quad.s) ** 2
    if rhs == 0.0:
        return lhs, rhs, 0.0 if lhs == 0.0 else math.inf
    return lhs, rhs, abs(lhs - rhs) / rhs


def virial_value(u: Field, weight: CylWeight, variant: WeightVariant = "phi") -> float:
    """2 Im sum conj(u) (grad w . grad u) dV for w = phi_R or psi_R."""
    require_finite(u)
    comps = weight.gradient(u.grid, variant)
    flux = sum(g * d.values for g, d in zip(comps, gradient(u), strict=True))
    return 2.0 * float(np.sum(np.conj(u.physical()) * flux).imag) * u.grid.cell_volume


def virial_phi(u: Field, weight: CylWeight) -> float:
    return virial_value(u, weight, "phi")


def virial_psi(u: Field, weight: CylWeight) -> float:
    return virial_value(u, weight, "psi")


def time_derivative_field(u: Field, params: ModelParams, nonlinear: bool = True) -> Field:
    """u_t = -i((-Delta)^s u - |u|^{2 sigma} u)."""
    values = u.physical()
    rhs = scipy.fft.ifftn(u.grid.k_squared**params.s * scipy.fft.fftn(values))
    if nonlinear:
        rhs = rhs - np.abs(values) ** (2 * params.sigma) * values
    return Field(u.grid, -1j * rhs)


def virial_time_derivative(
    u: Field,
    weight: CylWeight,
    params: ModelParams,
    variant: WeightVariant = "phi",
    nonlinear: bool = True,
) -> float:
    """dM/dt evaluated from the equation itself, without stepping in time."""
    v = time_derivative_field(u, params, nonlinear)
    comps = weight.gradient(u.grid, variant)
    flux_u = sum(g * d.values for g, d in zip(comps, gradient(u), strict=True))
    flux_v = sum(g * d.values for g, d in zip(comps, gradient(v), strict=True))
    total = np.sum(np.conj(v.values) * flux_u + np.conj(u.physical()) * flux_v)
    return 2.0 * float(total.imag) * u.grid.cell_volume


@dataclass
class _NodeSums:
    """Quadrature-weighted pointwise sums over the resolvent family."""

    grad_y: RealArray  # sum W |grad_y u_m|^2
    radial: RealArray  # sum W |y . grad_y u_m|^2
    grad_n: RealArray  # sum W |d_N u_m|^2
    mean_free: RealArray  # sum W |u_m - mean u_m|^2


def _accumulate(u: Field, quad: ResolventQuadrature) -> _NodeSums:
    grid = u.grid
    spectrum = u.spectrum()
    c_s = resolvent_constant(quad.s)
    ys = grid.coords[:-1]
    sums = _NodeSums(
        grad_y=np.zeros(grid.shape),
        radial=np.zeros(grid.shape),
        grad_n=np.zeros(grid.shape),
        mean_free=np.zeros(grid.shape),
    )
    mean_free_spectrum = spectrum.copy()
    mean_free_spectrum.flat[0] = 0.0
    for m, w in zip(quad.nodes, quad.weights, strict=True):
        factor = c_s / (grid.k_squared + m)
        u_m_hat = factor * spectrum
        partials = [scipy.fft.ifftn(1j * kj * u_m_hat) for kj in grid.k_odd]
        y_partials = partials[:-1]
        sums.grad_y += w * sum(np.abs(p) ** 2 for p in y_partials)
        if y_partials:
            sums.radial += w * np.abs(sum(y * p for y, p in zip(ys, y_partials, strict=True))) ** 2
        sums.grad_n += w * np.abs(partials[-1]) ** 2
        sums.mean_free += w * np.abs(scipy.fft.ifftn(factor * mean_free_spectrum)) ** 2
    return sums


def _bilaplacian_term(u: Field, weight: CylWeight, sums: _NodeSums, s: float) -> float:
    """-sum_j W_j int Delta^2 phi_R |u_{m_j}|^2 on the periodic box.

    The constant mode of u_m grows like 1/m, so Delta^2 phi_R enters through its
    mean-free part B; the constant-by-oscillating cross integral is closed form
    since c_s^2 int m^{s-1}/(|k|^2+m) dm = |k|^{2(s-1)}.
    """
    grid = u.grid
    bilap = np.broadcast_to(weight.bilaplacian(grid), grid.shape)
    mean_free_bilap = bilap - float(np.mean(bilap))
    values = u.physical()
    mean_u = complex(np.mean(values))
    spectrum = scipy.fft.fftn(values)
    spectrum.flat[0] = 0.0
    with np.errstate(divide="ignore"):
        symbol = np.where(grid.k_squared > 0, grid.k_squared ** (s - 1.0), 0.0)
    inverse = scipy.fft.ifftn(symbol * spectrum)
    cross = 2.0 * float((np.conj(mean_u) * np.sum(mean_free_bilap * inverse)).real) * grid.cell_volume
    oscillating = float(np.sum(mean_free_bilap * sums.mean_free)) * grid.cell_volume
    return -(cross + oscillating)


def _nonlinear_terms(
    u: Field, weight: CylWeight, params: ModelParams, variant: WeightVariant
) -> tuple[float, float, float]:
    """Nonlinear contribution, its split evaluation, and the max of the tail integrand.

    Raises:
        IdentityMismatchError: If the two evaluations differ by more than SPLIT_TOL relative
            to the interior part N * int |u|^{2 sigma + 2}.
    """
    grid = u.grid
    density = np.abs(u.physical()) ** params.nonlinear_exponent
    coefficient = 2 * params.sigma / (params.sigma + 1)
    lap = np.broadcast_to(weight.laplacian(grid, variant), grid.shape)
    direct = -coefficient * float(np.sum(lap * density)) * grid.cell_volume
    base = params.N if variant == "phi" else params.N - 1
    excess = np.broadcast_to(weight.tables(grid).lap_psi - (params.N - 1), grid.shape)
    exterior = np.broadcast_to(grid.y_radius >= weight.R, grid.shape)
    tail_density = np.where(exterior, excess * density, 0.0)
    interior = coefficient * base * float(np.sum(density)) * grid.cell_volume
    split = -interior - coefficient * float(np.sum(tail_density)) * grid.cell_volume
    if abs(direct - split) > SPLIT_TOL * max(abs(direct), interior):
        raise IdentityMismatchError(
            f"split nonlinear evaluation {split:.16e} disagrees with the direct one {direct:.16e}",
            details={"direct": direct, "split": split, "variant": variant, "R": weight.R},
        )
    tail_max = float(np.max(tail_density)) if tail_density.size else 0.0
    return direct, split, tail_max


def virial_rhs(
    u: Field,
    weight: CylWeight,
    quad: ResolventQuadrature,
    params: ModelParams,
    variant: WeightVariant = "phi",
    *,
    t: float | None = None,
    dmdt_fd: float | None = None,
    nonlinear: bool = True,
) -> VirialReport:
    """Term-by-term right-hand side of the localized virial identity.

    Args:
        u: Field at the evaluation time.
        weight: Cylindrical weight built for the same N.
        quad: Resolvent quadrature; checked against its gate before use.
        params: Equation parameters.
        variant: "phi" for M_{phi_R}, "psi" for M_{psi_R}.
        t: Sample time, recorded in the report.
        dmdt_fd: Finite-difference derivative; when absent the residual is taken
            against the equation-driven derivative.
        nonlinear: Drop the nonlinear term for the linear flow.

    Returns:
        VirialReport with every term, bounds and the residual.
    """
    if weight.N != params.N or u.grid.ndim != params.N:
        raise ParameterError(f"weight (N={weight.N}) and field ({u.grid.ndim} axes) must match N={params.N}")
    if abs(quad.s - params.s) > 1e-14:
        raise ParameterError(f"quadrature built for s={quad.s}, parameters have s={params.s}")
    quad.check_gate()
    require_finite(u)

    grid = u.grid
    tables = weight.tables(grid)
    sums = _accumulate(u, quad)
    nn = 1.0 if variant == "phi" else 0.0
    dv = grid.cell_volume

    identity_part = 4.0 * float(np.sum(sums.grad_y + nn * sums.grad_n)) * dv
    cross_density = (tables.ratio - 1.0) * sums.grad_y + tables.offdiag * sums.radial
    cross = 4.0 * float(np.sum(cross_density)) * dv
    kinetic = identity_part + cross
    bilap = _bilaplacian_term(u, weight, sums, params.s)

    if nonlinear:
        nonlinear_value, nonlinear_split, tail_max = _nonlinear_terms(u, weight, params, variant)
    else:
        nonlinear_value = nonlinear_split = tail_max = 0.0

    grad = sobolev_seminorm(u, params.s)
    energy_value = energy(u, params)
    n_eff = params.N if variant == "phi" else params.N - 1
    bound_value = 4 * params.sigma * n_eff * energy_value - 2 * (params.sigma * n_eff - 2 * params.s) * grad**2
    energy_bound = 2 * params.sigma * (params.N - 1) * energy_value if variant == "psi" else None
    remainder_scale = (
        weight.R ** (-2 * params.s)
        + (1.0 if params.sigma < params.s else 0.0)
        + weight.R ** (-params.sigma * (params.N - 2)) * grad**2
    )

    dmdt_exact = virial_time_derivative(u, weight, params, variant, nonlinear)
    total = kinetic + bilap + nonlinear_value
    reference = dmdt_fd if dmdt_fd is not None else dmdt_exact
    scale = max(abs(kinetic), abs(bilap), abs(nonlinear_value), 4 * params.s * grad**2)
    return VirialReport(
        R=weight.R,
        variant=variant,
        t=t,
        m_value=virial_value(u, weight, variant),
        dmdt_fd=dmdt_fd,
        dmdt_exact=dmdt_exact,
        kinetic=kinetic,
        bilap=bilap,
        nonlinear=nonlinear_value,
        nonlinear_split=nonlinear_split,
        kinetic_bound=4 * params.s * grad**2,
        cross_term=cross,
        cross_term_max=float(np.max(cross_density)),
        tail_integrand_max=tail_max,
        bound_value=bound_value,
        energy_bound=energy_bound,
        remainder_scale=remainder_scale,
        residual=reference - total,
        scale=scale,
    )


def centered_difference(times: list[float] | RealArray, values: list[float] | RealArray) -> RealArray:
    """Second-order centred derivative at interior samples; endpoints are NaN."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    out = np.full(v.shape, np.nan)
    if v.size >= 3:
        out[1:-1] = np.gradient(v, t, edge_order=2)[1:-1]
    return out


def virial_residual(
    samples: list[tuple[float, Field]],
    weight: CylWeight,
    params: ModelParams,
    quad: ResolventQuadrature | None = None,
    variant: WeightVariant = "phi",
    *,
    nodes: int = DEFAULT_NODES,
    nonlinear: bool = True,
) -> list[VirialReport]:
    """Compare the centred difference of M along a trajectory with the identity at interior samples.

    Raises:
        SamplingError: With fewer than three samples or a non-uniform sampling interval.
    """
    if len(samples) < 3:
        raise SamplingError(f"need at least 3 samples, got {len(samples)}")
    times = np.array([t for t, _ in samples])
    steps = np.diff(times)
    if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-9 * max(abs(steps[0]), 1e-300):
        raise SamplingError("trajectory samples must be uniformly spaced in time")
    values = [virial_value(u, weight, variant) for _, u in samples]
    derivative = centered_difference(times, values)
    reports = []
    for i in range(1, len(samples) - 1):
        t, u = samples[i]
        rule = quad or ResolventQuadrature.for_field(u, params.s, nodes)
        reports.append(
            virial_rhs(u, weight, rule, params, variant, t=t, dmdt_fd=float(derivative[i]), nonlinear=nonlinear)
        )
    logger.debug("Evaluated the %s identity at %d interior samples (R=%g)", variant, len(reports), weight.R)
    return reports


def refined_terms(
    u: Field,
    weight: CylWeight,
    quad: ResolventQuadrature,
    params: ModelParams,
    eta: float,
    *,
    energy0: float | None = None,
    measured_dmdt: float | None = None,
    tolerance: float = 5e-3,
) -> RefinedRecord:
    """Mass-critical decomposition dM/dt = 8sE - 4 T_1 + c int_{|y|>=R} psi2 |u|^{4s/N+2} + B.

    T_1 = sum_j W_j int psi1 |grad_y u_{m_j}|^2 >= 0, c = 4s/(N+2s), B the bi-Laplacian term.

    Raises:
        ParameterError: If sigma != 2s/N or eta <= 0.
    """
    if not params.mass_critical:
        raise ParameterError(
            f"refined decomposition needs sigma = 2s/N, got sigma={params.sigma}, 2s/N={2 * params.s / params.N}"
        )
    if not eta > 0:
        raise ParameterError(f"eta must be positive, got {eta}")
    quad.check_gate()
    grid = u.grid
    dv = grid.cell_volume
    N, s, R = params.N, params.s, weight.R
    tables = weight.tables(grid)
    sums = _accumulate(u, quad)
    psi1 = np.broadcast_to(tables.psi1, grid.shape)
    psi2 = np.clip(np.broadcast_to(tables.psi2(N), grid.shape), 0.0, None)

    psi1_term = float(np.sum(psi1 * sums.grad_y)) * dv
    exterior = np.broadcast_to(grid.y_radius >= R, grid.shape)
    density = np.abs(u.physical()) ** (4 * s / N + 2)
    tail_term = float(np.sum(np.where(exterior, psi2 * density, 0.0))) * dv
    eta_component = (eta / s) * float(np.sum(psi2 ** (N / (N + 2 * s)) * (sums.grad_y + sums.grad_n))) * dv
    bilap = _bilaplacian_term(u, weight, sums, s)

    leading = 8 * s * (energy0 if energy0 is not None else energy(u, params))
    remainder = 4 * s / (N + 2 * s) * tail_term + bilap
    remainder_scale = (
        eta ** (-1.0 / (N - 1)) * R ** (-2 * s * (N - 2) / (N - 1)) + eta * (1 + R**-2 + R**-4) + R ** (-2 * s)
    )
    measured = measured_dmdt if measured_dmdt is not None else virial_time_derivative(u, weight, params, "phi")
    scale = max(abs(leading), 4 * s * sobolev_seminorm(u, s) ** 2, potential_integral(u, params))
    return RefinedRecord(
        R=R,
        eta=eta,
        leading=leading,
        psi1_term=psi1_term,
        tail_term=tail_term,
        eta_tail_component=eta_component,
        bilap=bilap,
        remainder=remainder,
        remainder_scale=remainder_scale,
        measured_dmdt=measured,
        dominated=measured <= leading - 4 * psi1_term + remainder + tolerance * scale,
    )


def series_diagnostics(
    weight: CylWeight,
    params: ModelParams,
    nodes: int = DEFAULT_NODES,
) -> Callable[[Field, float], dict[str, float]]:
    """Per-sample virial columns for the time series."""

    def diagnostics(u: Field, t: float) -> dict[str, float]:
        quad = ResolventQuadrature.for_field(u, params.s, nodes)
        report = virial_rhs(u, weight, quad, params, "phi", t=t)
        return {
            "M_phiR": report.m_value,
            "M_psiR": virial_psi(u, weight),
            "rhs_m1_total": report.total,
            "rhs_kinetic": report.kinetic,
            "rhs_bilap": report.bilap,
            "rhs_nonlinear": report.nonlinear,
        }

    return diagnostics
