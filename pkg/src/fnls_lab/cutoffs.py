"""Radial cutoff profile psi, its rescalings psi_R and the cylindrical weight phi_R.

psi'(r) = r h(r) with h a C-infinity blend from 1 (r <= 1) to 0 (r >= 10), so
psi(r) = r^2/2 on the core and psi is constant beyond r = 10. All derivatives
through fourth order are evaluated in closed form from the blend.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.special
from numpy.typing import ArrayLike, NDArray

from fnls_lab.exceptions import ParameterError
from fnls_lab.models import WeightVariant
from fnls_lab.spectral import Field, Grid

RealArray = NDArray[np.float64]

_CORE_RADIUS = 1.0
_OUTER_RADIUS = 10.0
_BLEND_WIDTH = _OUTER_RADIUS - _CORE_RADIUS
_PSI_NODES = 160  # Gauss-Legendre nodes for psi itself on the blend interval
_CHUNK = 4096


def _blend(t: RealArray) -> tuple[RealArray, RealArray, RealArray, RealArray]:
    """S(t) = e^{-1/t}/(e^{-1/t}+e^{-1/(1-t)}) and its first three derivatives.

    Outside (0, 1) S is 0 or 1 with vanishing derivatives.
    """
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    s0 = np.where(t >= 1, 1.0, 0.0)
    s1 = np.zeros_like(t)
    s2 = np.zeros_like(t)
    s3 = np.zeros_like(t)
    if not np.any(inside):
        return s0, s1, s2, s3

    ti = t[inside]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        u = 1.0 / (1.0 - ti) - 1.0 / ti
        sig = scipy.special.expit(u)
        w = sig * scipy.special.expit(-u)
        u1 = 1.0 / ti**2 + 1.0 / (1.0 - ti) ** 2
        u2 = 2.0 / (1.0 - ti) ** 3 - 2.0 / ti**3
        u3 = 6.0 / (1.0 - ti) ** 4 + 6.0 / ti**4
        a2 = w * (1.0 - 2.0 * sig)
        a3 = w * (1.0 - 6.0 * sig + 6.0 * sig**2)
        d1 = w * u1
        d2 = a2 * u1**2 + w * u2
        d3 = a3 * u1**3 + 3.0 * a2 * u1 * u2 + w * u3
    alive = w > 0
    s0[inside] = sig
    s1[inside] = np.where(alive, d1, 0.0)
    s2[inside] = np.where(alive, d2, 0.0)
    s3[inside] = np.where(alive, d3, 0.0)
    return s0, s1, s2, s3


class CutoffProfile:
    """The radial profile psi with psi'(r) = r h(r)."""

    def transition(self, r: ArrayLike, order: int = 0) -> RealArray:
        """h and its derivatives through third order."""
        if order not in (0, 1, 2, 3):
            raise ParameterError(f"transition derivative order must be 0..3, got {order}")
        r = np.asarray(r, dtype=float)
        blend = _blend((r - _CORE_RADIUS) / _BLEND_WIDTH)
        if order == 0:
            return 1.0 - blend[0]
        return -blend[order] / _BLEND_WIDTH**order

    @cached_property
    def _nodes(self) -> tuple[RealArray, RealArray]:
        x, w = scipy.special.roots_legendre(_PSI_NODES)
        return (x + 1.0) / 2.0, w / 2.0

    def _psi_values(self, r: RealArray) -> RealArray:
        # psi(r) = r^2/2 - int_1^r rho S((rho-1)/9) d rho on the blend interval
        out = 0.5 * r**2
        upper = np.clip(r, _CORE_RADIUS, _OUTER_RADIUS)
        active = upper > _CORE_RADIUS
        if not np.any(active):
            return out
        x, w = self._nodes
        ends = upper[active].ravel()
        corrections = np.empty_like(ends)
        for start in range(0, ends.size, _CHUNK):
            stop = ends[start : start + _CHUNK]
            span = stop - _CORE_RADIUS
            rho = _CORE_RADIUS + span[:, None] * x[None, :]
            integrand = rho * _blend((rho - _CORE_RADIUS) / _BLEND_WIDTH)[0]
            corrections[start : start + _CHUNK] = span * (integrand @ w)
        beyond = r > _OUTER_RADIUS
        out[active] = 0.5 * ends**2 - corrections
        out[beyond] = self.plateau
        return out

    @cached_property
    def plateau(self) -> float:
        """Constant value of psi for r >= 10."""
        r = np.array([_OUTER_RADIUS])
        x, w = self._nodes
        rho = _CORE_RADIUS + _BLEND_WIDTH * x
        integrand = rho * _blend((rho - _CORE_RADIUS) / _BLEND_WIDTH)[0]
        return float(0.5 * r[0] ** 2 - _BLEND_WIDTH * float(integrand @ w))

    def derivative(self, r: ArrayLike, order: int) -> RealArray:
        """psi^{(order)}(r) for order 0..4."""
        if order not in range(5):
            raise ParameterError(f"psi derivative order must be 0..4, got {order}")
        r = np.asarray(r, dtype=float)
        if order == 0:
            return self._psi_values(np.atleast_1d(r).copy()).reshape(r.shape)
        h = self.transition(r, 0)
        if order == 1:
            return r * h
        if order == 2:
            return h + r * self.transition(r, 1)
        if order == 3:
            return 2.0 * self.transition(r, 1) + r * self.transition(r, 2)
        return 3.0 * self.transition(r, 2) + r * self.transition(r, 3)


def eval_psi(profile: CutoffProfile, r: ArrayLike, order: int = 0) -> RealArray | float:
    """Evaluate psi or one of its first four derivatives at r >= 0."""
    radius = np.asarray(r, dtype=float)
    if np.any(radius < 0):
        raise ParameterError("psi is defined for nonnegative radii only")
    values = profile.derivative(radius, order)
    return float(values) if values.ndim == 0 else values


@dataclass(frozen=True)
class WeightTables:
    """Radial data of psi_R on the y-plane, shaped to broadcast along x_N."""

    radius: RealArray
    ratio: RealArray  # psi_R'(r)/r
    curvature: RealArray  # psi_R''(r)
    offdiag: RealArray  # (psi_R'' - psi_R'/r)/r^2
    lap_psi: RealArray
    bilap: RealArray

    @property
    def psi1(self) -> RealArray:
        return 1.0 - self.curvature

    def psi2(self, n_dim: int) -> RealArray:
        return (n_dim - 1) - self.lap_psi


class CylWeight:
    """phi_R(x) = psi_R(|y|) + x_N^2/2 with psi_R(r) = R^2 psi(r/R)."""

    def __init__(self, R: float, N: int, profile: CutoffProfile | None = None) -> None:
        if R <= 0:
            raise ParameterError(f"cutoff radius must be positive, got {R}")
        if N < 2:
            raise ParameterError("the cylindrical weight needs N >= 2")
        self.R = float(R)
        self.N = int(N)
        self.profile = profile or CutoffProfile()
        self._tables: dict[Grid, WeightTables] = {}

    def __repr__(self) -> str:
        return f"CylWeight(R={self.R}, N={self.N})"

    def psi_r(self, r: ArrayLike, order: int = 0) -> RealArray:
        """psi_R^{(order)}(r) = R^{2-order} psi^{(order)}(r/R)."""
        r = np.asarray(r, dtype=float)
        return self.R ** (2 - order) * self.profile.derivative(r / self.R, order)

    def phi(self, x: ArrayLike) -> float:
        """phi_R at a single point."""
        point = np.asarray(x, dtype=float)
        radius = float(np.sqrt(np.sum(point[:-1] ** 2)))
        return float(self.psi_r(np.array(radius), 0)) + 0.5 * float(point[-1]) ** 2

    def phi_gradient(self, x: ArrayLike) -> RealArray:
        """Gradient of phi_R at a single point."""
        point = np.asarray(x, dtype=float)
        radius = float(np.sqrt(np.sum(point[:-1] ** 2)))
        h = float(self.profile.transition(np.array(radius / self.R), 0))
        grad = point.copy()
        grad[:-1] = h * point[:-1]
        return grad

    def radial_tables(self, r: ArrayLike) -> WeightTables:
        """Weight data at arbitrary radii."""
        r = np.asarray(r, dtype=float)
        rho = r / self.R
        d = self.N - 1
        h = self.profile.transition(rho, 0)
        f2 = self.profile.derivative(rho, 2)
        f3 = self.profile.derivative(rho, 3) / self.R
        f4 = self.profile.derivative(rho, 4) / self.R**2
        outside = r > self.R
        safe = np.where(outside, r, 1.0)
        offdiag = np.where(outside, (f2 - h) / safe**2, 0.0)
        lap = f2 + (d - 1) * h
        bilap = np.where(outside, f4 + 2 * (d - 1) * f3 / safe + (d - 1) * (d - 3) * offdiag, 0.0)
        return WeightTables(radius=r, ratio=h, curvature=f2, offdiag=offdiag, lap_psi=lap, bilap=bilap)

    def tables(self, grid: Grid) -> WeightTables:
        if grid.ndim != self.N:
            raise ParameterError(f"weight built for N={self.N} used on a {grid.ndim}-dimensional grid")
        if grid not in self._tables:
            self._tables[grid] = self.radial_tables(grid.y_radius)
        return self._tables[grid]

    def gradient(self, grid: Grid, variant: WeightVariant = "phi") -> list[RealArray]:
        """Components of grad phi_R (or grad psi_R, whose x_N component is zero)."""
        t = self.tables(grid)
        comps = [t.ratio * y for y in grid.coords[:-1]]
        comps.append(grid.coords[-1].copy() if variant == "phi" else np.zeros_like(grid.coords[-1]))
        return comps

    def hessian(self, grid: Grid, variant: WeightVariant = "phi") -> list[list[RealArray]]:
        t = self.tables(grid)
        ys = grid.coords[:-1]
        size = self.N
        table: list[list[RealArray]] = [[np.zeros(1) for _ in range(size)] for _ in range(size)]
        for k in range(size - 1):
            for m in range(size - 1):
                entry = ys[k] * ys[m] * t.offdiag
                if k == m:
                    entry = entry + t.ratio
                table[k][m] = entry
            table[k][size - 1] = np.zeros(1)
            table[size - 1][k] = np.zeros(1)
        table[size - 1][size - 1] = np.ones(1) if variant == "phi" else np.zeros(1)
        return table

    def laplacian(self, grid: Grid, variant: WeightVariant = "phi") -> RealArray:
        lap = self.tables(grid).lap_psi
        return lap + 1.0 if variant == "phi" else lap

    def bilaplacian(self, grid: Grid) -> RealArray:
        return self.tables(grid).bilap


def hessian_phi(weight: CylWeight, grid: Grid) -> list[list[Field]]:
    """Symmetric N x N table of second partials of phi_R sampled on the grid."""
    return [[Field(grid, entry) for entry in row] for row in weight.hessian(grid, "phi")]


def tilde_weights(weight: CylWeight, grid: Grid) -> tuple[Field, Field]:
    """1 - psi_R'' and (N-1) - Delta psi_R on the grid."""
    t = weight.tables(grid)
    return Field(grid, t.psi1), Field(grid, t.psi2(weight.N))
