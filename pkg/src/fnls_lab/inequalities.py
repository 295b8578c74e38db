"""Functional inequalities and pointwise identities, checked through ratio samples.

Every inequality is reported as lhs, rhs and lhs/rhs: the constants are never
assumed, their empirical suprema over a corpus are what gets recorded.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable
from functools import cached_property

import numpy as np
import scipy.fft
import scipy.integrate
import scipy.special
from numpy.typing import NDArray

from fnls_lab.exceptions import ParameterError, QuadratureGateError
from fnls_lab.models import ChainRecord, ModelParams, RatioSample
from fnls_lab.spectral import (
    Field,
    Grid,
    evaluate_at,
    fractional_power,
    lp_norm,
    mass,
    partial_fractional_xn,
    partial_fractional_y,
    random_band_limited,
    sobolev_seminorm,
)

logger = logging.getLogger(__name__)

RealArray = NDArray[np.float64]
RadialDerivatives = Callable[[RealArray], tuple[RealArray, RealArray]]

KERNEL_CONSTANT_TOL = 1e-8
KERNEL_SELF_TEST_TOL = 1e-5


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


def radial_sobolev_ratio(f: Field, y_point: float, s: float, family: str = "radial") -> RatioSample:
    """|y|^{(N-2)/2} |f(y)| against ||(-Delta)^{s/2} f||^{1/(2s)} ||f||^{1-1/(2s)} for radial f on R^{N-1}.

    ``f`` lives on the (N-1)-dimensional y-plane; the evaluation point sits on the first axis.
    """
    if not y_point > 0:
        raise ParameterError(f"evaluation radius must be positive, got {y_point}")
    dims = f.grid.ndim
    if dims < 2:
        raise ParameterError("radial Sobolev ratio needs a y-plane of dimension N-1 >= 2")
    point = [y_point] + [0.0] * (dims - 1)
    lhs = y_point ** ((dims - 1) / 2) * abs(evaluate_at(f, point))
    exponent = 1.0 / (2 * s)
    rhs = sobolev_seminorm(f, s) ** exponent * math.sqrt(mass(f)) ** (1 - exponent)
    return RatioSample(family=family, parameters={"y": y_point, "s": s}, lhs=lhs, rhs=rhs, ratio=_ratio(lhs, rhs))


def gn_ratio(f: Field, p: float, s: float, family: str = "gn") -> RatioSample:
    """||f||_p against ||(-Delta)^{s/2} f||^alpha ||f||^{1-alpha}, alpha = (p-2)/(2ps), on the line.

    Raises:
        ParameterError: If p <= 2, alpha > 1, or ``f`` is not one-dimensional.
    """
    if f.grid.ndim != 1:
        raise ParameterError("Gagliardo-Nirenberg ratio is evaluated on one-dimensional fields")
    if not p > 2:
        raise ParameterError(f"exponent p must exceed 2, got {p}")
    alpha = (p - 2) / (2 * p * s)
    if alpha > 1:
        raise ParameterError(f"alpha=(p-2)/(2ps)={alpha:.4g} exceeds 1; p={p} is too large for s={s}")
    lhs = lp_norm(f, p)
    rhs = sobolev_seminorm(f, s) ** alpha * math.sqrt(mass(f)) ** (1 - alpha)
    return RatioSample(
        family=family, parameters={"p": p, "s": s, "alpha": alpha}, lhs=lhs, rhs=rhs, ratio=_ratio(lhs, rhs)
    )


def fractional_kernel_constant(s: float) -> float:
    """C_{1,s} = (int_R (1 - cos v)/|v|^{1+s} dv)^{-1}.

    The integral is split at 1: adaptive quadrature on [0, 1] and a Fourier-weighted rule on
    [1, inf). The result is cross-checked against 2 Gamma(1-s) cos(pi s/2)/s.

    Raises:
        QuadratureGateError: If the two evaluations disagree.
    """
    if not 0 < s < 1:
        raise ParameterError(f"fractional order must lie in (0, 1), got {s}")
    head, _ = scipy.integrate.quad(lambda v: (1 - math.cos(v)) * v ** (-1 - s), 0.0, 1.0, epsabs=0, epsrel=1e-13)
    oscillating, _ = scipy.integrate.quad(lambda v: v ** (-1 - s), 1.0, np.inf, weight="cos", wvar=1.0)
    integral = 2 * (head + 1.0 / s - oscillating)
    closed = 2 * math.gamma(1 - s) * math.cos(math.pi * s / 2) / s
    if abs(integral - closed) > KERNEL_CONSTANT_TOL * closed:
        raise QuadratureGateError(
            f"kernel constant quadrature {integral:.15g} disagrees with closed form {closed:.15g}",
            details={"s": s, "quadrature": integral, "closed_form": closed},
        )
    return 1.0 / integral


class KernelQuadrature:
    """Pair integrals C_{1,s} int (a(x)-a(z)) conj(b(x)-b(z)) / |x-z|^{1+s} dz on a periodic line.

    The kernel is summed over periodic images with the Hurwitz zeta function; the
    punctured sum is corrected for the |x-z|^{1-s} behaviour at the diagonal.
    """

    def __init__(self, grid: Grid, s: float) -> None:
        if grid.ndim != 1:
            raise ParameterError("kernel quadrature works on one-dimensional grids")
        self.grid = grid
        self.s = s
        self.constant = fractional_kernel_constant(s)

    @cached_property
    def kernel(self) -> RealArray:
        """Periodized kernel at offsets 1..n-1."""
        n, length = self.grid.n[0], self.grid.lengths[0]
        q = np.arange(1, n) / n
        return length ** (-1 - self.s) * (scipy.special.zeta(1 + self.s, q) + scipy.special.zeta(1 + self.s, 1 - q))

    def pair_integral(self, a: NDArray, b: NDArray) -> NDArray[np.complex128]:
        h = self.grid.spacing[0]
        total = np.zeros(a.shape, dtype=np.complex128)
        for offset, weight in enumerate(self.kernel, start=1):
            total += (a - np.roll(a, -offset)) * np.conj(b - np.roll(b, -offset)) * weight
        k = self.grid.k_odd[0]
        da = scipy.fft.ifft(1j * k * scipy.fft.fft(a))
        db = scipy.fft.ifft(1j * k * scipy.fft.fft(b))
        correction = -2.0 * float(scipy.special.zeta(self.s - 1)) * h ** (2 - self.s) * da * np.conj(db)
        return self.constant * (h * total + correction)

    def self_test(self, mode: int = 3, tol: float = KERNEL_SELF_TEST_TOL) -> float:
        """A single Fourier mode must give 2|k|^s at every point.

        Raises:
            QuadratureGateError: If the relative error exceeds ``tol``.
        """
        x = self.grid.axes[0]
        k = 2 * np.pi * mode / self.grid.lengths[0]
        wave = np.exp(1j * k * x)
        values = self.pair_integral(wave, wave)
        expected = 2 * abs(k) ** self.s
        error = float(np.max(np.abs(values - expected))) / expected
        if error > tol:
            raise QuadratureGateError(
                f"kernel self-test failed: relative error {error:.3e} > {tol:.1e}",
                details={"s": self.s, "mode": mode, "error": error},
            )
        return error


def fid_identity_check(u: Field, s: float, kernel: KernelQuadrature | None = None) -> tuple[float, float]:
    """Residual of (-d^2)^{s/2}|u|^2 = 2|u| (-d^2)^{s/2}|u| - I_s(|u|, |u|) on a periodic line.

    Returns:
        (sup residual, sup |(-d^2)^{s/2}|u|^2|) so callers can compare relatively.
    """
    if u.grid.ndim != 1:
        raise ParameterError("pointwise identity is checked on one-dimensional fields")
    kernel = kernel or KernelQuadrature(u.grid, s)
    kernel.self_test()
    modulus = np.abs(u.physical())
    field = Field(u.grid, modulus)
    squared = fractional_power(Field(u.grid, modulus**2), s / 2).physical().real
    product = 2 * modulus * fractional_power(field, s / 2).physical().real
    pair = kernel.pair_integral(modulus, modulus).real
    residual = float(np.max(np.abs(squared - product + pair)))
    return residual, float(np.max(np.abs(squared)))


def _exterior_mask(u: Field, R: float) -> NDArray[np.bool_]:
    return np.broadcast_to(u.grid.y_radius >= R, u.grid.shape)


def tail_integral(u: Field, params: ModelParams, R: float) -> float:
    """int_{|y| >= R} |u|^{2 sigma + 2}."""
    density = np.abs(u.physical()) ** params.nonlinear_exponent
    return float(np.sum(density[_exterior_mask(u, R)])) * u.grid.cell_volume


def chain_ratios(u: Field, params: ModelParams, R: float) -> ChainRecord:
    """Ratios of the links bounding the exterior nonlinear integral by R^{-sigma(N-2)}(1 + ||(-Delta)^{s/2}u||^2).

    Raises:
        ParameterError: If sigma > s, N < 3, or ``u`` does not live on an N-dimensional grid.
    """
    N, s, sigma = params.N, params.s, params.sigma
    if not params.sigma_leq_s:
        raise ParameterError(f"the tail estimate needs 0 < sigma <= s, got sigma={sigma}, s={s}")
    if N < 3 or u.grid.ndim != N:
        raise ParameterError("the tail estimate needs N >= 3 and a field on the N-dimensional grid")
    grid = u.grid
    values = u.physical()
    h_n = grid.spacing[-1]
    y_axes = tuple(range(N - 1))
    slice_volume = grid.cell_volume / h_n
    exterior = _exterior_mask(u, R)

    sup_sq = np.max(np.where(exterior, np.abs(values) ** 2, 0.0), axis=y_axes)
    sup_lhs = float(np.sum(sup_sq)) * h_n
    grad_y_sq = mass(partial_fractional_y(u, s / 2))
    sup_rhs = R ** (-(N - 2)) * grad_y_sq ** (1 / (2 * s)) * mass(u) ** ((2 * s - 1) / (2 * s))
    sup_sample = RatioSample(
        family="sup-exterior", parameters={"R": R}, lhs=sup_lhs, rhs=sup_rhs, ratio=_ratio(sup_lhs, sup_rhs)
    )

    slice_mass = np.sum(np.abs(values) ** 2, axis=y_axes) * slice_volume
    xn_lhs = float(np.sum(slice_mass ** (1 / (1 - sigma)))) * h_n
    modulus = Field(grid, np.abs(values))
    line_grad = np.sum(np.abs(partial_fractional_xn(modulus, s / 2).physical()) ** 2, axis=-1) * h_n
    line_mass = np.sum(np.abs(values) ** 2, axis=-1) * h_n
    inner = float(np.sum(line_grad ** (sigma / s) * line_mass ** ((s - sigma) / s))) * slice_volume
    xn_rhs = inner ** (1 / (2 * (1 - sigma)))
    xn_sample = RatioSample(
        family="xn-power", parameters={"sigma": sigma}, lhs=xn_lhs, rhs=xn_rhs, ratio=_ratio(xn_lhs, xn_rhs)
    )

    grad_sq = sobolev_seminorm(u, s) ** 2
    tail_lhs = tail_integral(u, params, R)
    tail_rhs = R ** (-sigma * (N - 2)) * (1 + grad_sq)
    tail_sample = RatioSample(
        family="tail", parameters={"R": R}, lhs=tail_lhs, rhs=tail_rhs, ratio=_ratio(tail_lhs, tail_rhs)
    )

    equal_sample = None
    if math.isclose(sigma, s, rel_tol=1e-12):
        eq_rhs = R ** (-(N - 2) * s) * grad_sq
        equal_sample = RatioSample(
            family="tail-sigma-equals-s",
            parameters={"R": R},
            lhs=tail_lhs,
            rhs=eq_rhs,
            ratio=_ratio(tail_lhs, eq_rhs),
        )
    return ChainRecord(
        R=R, sup_exterior=sup_sample, xn_power=xn_sample, tail=tail_sample, tail_sigma_equals_s=equal_sample
    )


def tail_scaling(u: Field, params: ModelParams, radii: list[float]) -> list[RatioSample]:
    """Decay of the exterior integral between successive radii against (R_1/R_2)^{sigma(N-2)}."""
    if len(radii) < 2:
        raise ParameterError("tail scaling needs at least two radii")
    tails = [tail_integral(u, params, R) for R in radii]
    samples = []
    for (r1, t1), (r2, t2) in itertools.pairwise(zip(radii, tails, strict=True)):
        decay = t2 / t1 if t1 > 0 else 0.0
        expected = (r1 / r2) ** (params.sigma * (params.N - 2))
        samples.append(
            RatioSample(
                family="tail-decay",
                parameters={"R_from": r1, "R_to": r2},
                lhs=decay,
                rhs=expected,
                ratio=_ratio(decay, expected),
            )
        )
    return samples


def hessian_formula_check(f: Field, derivatives: RadialDerivatives) -> tuple[float, float]:
    """Radial Hessian formula against spectral second partials on a y-plane grid.

    ``derivatives(r)`` returns (f_r, f_rr). Points within one cell of the axis are excluded.

    Returns:
        (sup residual, sup |d^2 f|).
    """
    grid = f.grid
    spectrum = f.spectrum()
    coords = grid.coords
    radius = np.sqrt(sum(x**2 for x in coords))
    far = radius > max(grid.spacing)
    safe = np.where(far, radius, 1.0)
    f_r, f_rr = derivatives(safe)
    worst = 0.0
    scale = 0.0
    for k in range(grid.ndim):
        for m in range(k, grid.ndim):
            wk, wm = (grid.k[k], grid.k[m]) if k == m else (grid.k_odd[k], grid.k_odd[m])
            spectral = scipy.fft.ifftn(-wk * wm * spectrum).real
            projector = coords[k] * coords[m] / safe**2
            formula = ((1.0 if k == m else 0.0) - projector) * f_r / safe + projector * f_rr
            worst = max(worst, float(np.max(np.abs(np.where(far, spectral - formula, 0.0)))))
            scale = max(scale, float(np.max(np.abs(spectral))))
    return worst, scale


def gaussian_corpus(grid: Grid, widths: list[float]) -> list[Field]:
    return [Field.from_function(grid, lambda *xs, w=w: np.exp(-sum(x**2 for x in xs) / (2 * w**2))) for w in widths]


def ring_corpus(grid: Grid, radii: list[float], width: float = 1.0) -> list[Field]:
    """Rings r^2 e^{-(r - r0)^2/width^2}; the r^2 factor keeps the profile smooth at the axis."""

    def ring(r0: float) -> Field:
        def profile(*xs: RealArray) -> RealArray:
            r2 = sum(x**2 for x in xs)
            return r2 * np.exp(-((np.sqrt(r2) - r0) ** 2) / width**2)

        return Field.from_function(grid, profile)

    return [ring(r0) for r0 in radii]


def random_corpus(grid: Grid, count: int, seed: int, envelope_width: float | None = None) -> list[Field]:
    rng = np.random.default_rng(seed)
    return [random_band_limited(grid, rng, envelope_width=envelope_width) for _ in range(count)]
