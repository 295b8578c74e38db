"""Periodic grids, Fourier multipliers and the conserved functionals.

Conventions: the forward transform is the unnormalized sum with e^{-ik.x},
the inverse carries 1/prod(n_j). Axes 0..N-2 form the y-plane, axis N-1 is x_N.
Transforms go through scipy.fft, so ``scipy.fft.set_workers`` controls threading.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Iterator, Sequence
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.fft
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, model_validator

from fnls_lab.exceptions import NonFiniteFieldError, ParameterError
from fnls_lab.models import ModelParams

Representation = Literal["physical", "frequency"]
ComplexArray = NDArray[np.complex128]
RealArray = NDArray[np.float64]
ArrayLikeComplex = NDArray[np.complexfloating] | NDArray[np.floating] | complex | float

_SHELL_FRACTION = 0.1


class Grid(BaseModel):
    """Uniform periodic Cartesian grid spanning [-L_j/2, L_j/2) on each axis."""

    model_config = ConfigDict(frozen=True)

    n: tuple[int, ...]
    lengths: tuple[float, ...]

    @model_validator(mode="after")
    def _check(self) -> Grid:
        if not self.n or len(self.n) != len(self.lengths):
            raise ValueError("grid needs one point count and one length per axis")
        for count in self.n:
            if count < 2 or count & (count - 1):
                raise ValueError(f"point count {count} must be a positive power of two")
        if any(length <= 0 for length in self.lengths):
            raise ValueError("box lengths must be positive")
        return self

    # cached arrays live in __dict__, so identity is defined by the fields alone
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.n == other.n and self.lengths == other.lengths

    def __hash__(self) -> int:
        return hash((self.n, self.lengths))

    @classmethod
    def create(cls, n: Sequence[int], lengths: Sequence[float]) -> Grid:
        """Build a grid from per-axis counts and lengths."""
        return cls(n=tuple(int(c) for c in n), lengths=tuple(float(x) for x in lengths))

    @classmethod
    def cube(cls, ndim: int, n: int, length: float) -> Grid:
        return cls.create([n] * ndim, [length] * ndim)

    @property
    def ndim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return math.prod(self.n)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(length / count for length, count in zip(self.lengths, self.n, strict=True))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def volume(self) -> float:
        return math.prod(self.lengths)

    def rescaled(self, factor: float) -> Grid:
        """Same point counts, lengths multiplied by ``factor``."""
        return Grid.create(self.n, [length * factor for length in self.lengths])

    def refined(self) -> Grid:
        """Same box, point counts doubled."""
        return Grid.create([2 * c for c in self.n], self.lengths)

    def _broadcast(self, axis: int, vector: NDArray) -> NDArray:
        shape = [1] * self.ndim
        shape[axis] = vector.size
        return vector.reshape(shape)

    @cached_property
    def axes(self) -> list[RealArray]:
        return [
            -length / 2 + h * np.arange(count)
            for length, h, count in zip(self.lengths, self.spacing, self.n, strict=True)
        ]

    @cached_property
    def coords(self) -> list[RealArray]:
        """Sparse broadcastable coordinate arrays (meshgrid with indexing='ij')."""
        return [self._broadcast(j, axis) for j, axis in enumerate(self.axes)]

    @cached_property
    def wavenumbers(self) -> list[RealArray]:
        return [2 * np.pi * np.fft.fftfreq(count, d=h) for count, h in zip(self.n, self.spacing, strict=True)]

    @cached_property
    def k(self) -> list[RealArray]:
        return [self._broadcast(j, kj) for j, kj in enumerate(self.wavenumbers)]

    @cached_property
    def k_odd(self) -> list[RealArray]:
        """Wavenumbers with the Nyquist mode zeroed, for odd-order multipliers."""
        out = []
        for j, kj in enumerate(self.wavenumbers):
            kj = kj.copy()
            kj[self.n[j] // 2] = 0.0
            out.append(self._broadcast(j, kj))
        return out

    @cached_property
    def k_squared(self) -> RealArray:
        total = np.zeros(self.shape)
        for kj in self.k:
            total = total + kj**2
        return total

    @cached_property
    def k_squared_y(self) -> RealArray:
        total = np.zeros(self.n[:-1] + (1,))
        for kj in self.k[:-1]:
            total = total + kj**2
        return total

    @cached_property
    def y_radius(self) -> RealArray:
        """|y| on the y-plane, shaped to broadcast along x_N."""
        total = np.zeros(self.n[:-1] + (1,))
        for xj in self.coords[:-1]:
            total = total + xj**2
        return np.sqrt(total)

    @cached_property
    def dealias_mask(self) -> NDArray[np.bool_]:
        """Two-thirds rule: keep modes with |k_j| <= 2/3 of the axis Nyquist wavenumber."""
        mask = np.ones(self.shape, dtype=bool)
        for kj, h in zip(self.k, self.spacing, strict=True):
            mask = mask & (np.abs(kj) <= (2.0 / 3.0) * np.pi / h + 1e-12)
        return mask

    def outer_shell(self, fraction: float = _SHELL_FRACTION) -> NDArray[np.bool_]:
        mask = np.zeros(self.shape, dtype=bool)
        for xj, length in zip(self.coords, self.lengths, strict=True):
            mask = mask | (np.abs(xj) >= (1 - fraction) * length / 2)
        return mask


class Field:
    """Complex samples of a function on a Grid, in physical or frequency representation."""

    __slots__ = ("grid", "values", "representation")

    def __init__(self, grid: Grid, values: ArrayLikeComplex, representation: Representation = "physical") -> None:
        array = np.asarray(values, dtype=np.complex128)
        if array.shape != grid.shape:
            array = np.broadcast_to(array, grid.shape).copy()
        self.grid = grid
        self.values: ComplexArray = array
        self.representation: Representation = representation

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., NDArray]) -> Field:
        """Sample ``fn(*coords)`` on the grid."""
        return cls(grid, fn(*grid.coords))

    @classmethod
    def zeros(cls, grid: Grid) -> Field:
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    def physical(self) -> ComplexArray:
        if self.representation == "physical":
            return self.values
        return scipy.fft.ifftn(self.values)

    def spectrum(self) -> ComplexArray:
        if self.representation == "frequency":
            return self.values
        return scipy.fft.fftn(self.values)

    def to_frequency(self) -> Field:
        return Field(self.grid, self.spectrum(), "frequency")

    def to_physical(self) -> Field:
        return Field(self.grid, self.physical(), "physical")

    def with_values(self, values: ArrayLikeComplex) -> Field:
        return Field(self.grid, values, "physical")

    def scaled(self, factor: complex) -> Field:
        return Field(self.grid, self.values * factor, self.representation)

    def copy(self) -> Field:
        return Field(self.grid, self.values.copy(), self.representation)

    def __repr__(self) -> str:
        return f"Field(shape={self.grid.shape}, representation={self.representation!r})"


def require_finite(f: Field, context: str = "field") -> None:
    """Raise NonFiniteFieldError when ``f`` carries NaN or Inf."""
    if not np.all(np.isfinite(f.values)):
        bad = int(np.count_nonzero(~np.isfinite(f.values)))
        raise NonFiniteFieldError(f"{context} has {bad} non-finite values", details={"count": bad})


def _apply_multiplier(f: Field, multiplier: NDArray) -> Field:
    require_finite(f)
    out = f.spectrum() * multiplier
    if f.representation == "frequency":
        return Field(f.grid, out, "frequency")
    return Field(f.grid, scipy.fft.ifftn(out))


def fractional_power(f: Field, p: float) -> Field:
    """Apply the multiplier |k|^{2p}, that is (-Delta)^p. The zero mode maps to zero."""
    if p <= 0:
        raise ParameterError(f"fractional power must be positive, got {p}")
    return _apply_multiplier(f, f.grid.k_squared**p)


def partial_fractional_xn(f: Field, p: float) -> Field:
    """Apply |k_N|^{2p} along the last axis only."""
    if p <= 0:
        raise ParameterError(f"fractional power must be positive, got {p}")
    return _apply_multiplier(f, np.abs(f.grid.k[-1]) ** (2 * p))


def partial_fractional_y(f: Field, p: float) -> Field:
    """Apply |k_y|^{2p} over the y-plane axes only."""
    if p <= 0:
        raise ParameterError(f"fractional power must be positive, got {p}")
    return _apply_multiplier(f, f.grid.k_squared_y**p)


def gradient(f: Field) -> list[Field]:
    """Spectral gradient with the Nyquist mode zeroed on each axis."""
    require_finite(f)
    spectrum = f.spectrum()
    return [Field(f.grid, scipy.fft.ifftn(1j * kj * spectrum)) for kj in f.grid.k_odd]


def inner(a: Field, b: Field) -> complex:
    """Discrete L2 inner product sum(conj(a) b) dV."""
    return complex(np.vdot(a.physical(), b.physical()) * a.grid.cell_volume)


def mass(f: Field) -> float:
    return float(np.sum(np.abs(f.physical()) ** 2) * f.grid.cell_volume)


def mass_from_spectrum(f: Field) -> float:
    return float(np.sum(np.abs(f.spectrum()) ** 2) * f.grid.cell_volume / f.grid.size)


def lp_norm(f: Field, p: float) -> float:
    if p <= 0:
        raise ParameterError(f"Lebesgue exponent must be positive, got {p}")
    return float((np.sum(np.abs(f.physical()) ** p) * f.grid.cell_volume) ** (1.0 / p))


def potential_integral(f: Field, params: ModelParams) -> float:
    """Integral of |f|^{2 sigma + 2}."""
    return float(np.sum(np.abs(f.physical()) ** params.nonlinear_exponent) * f.grid.cell_volume)


def sobolev_seminorm(f: Field, s: float) -> float:
    """||(-Delta)^{s/2} f||_2 through Plancherel."""
    weights = f.grid.k_squared**s
    total = np.sum(weights * np.abs(f.spectrum()) ** 2) * f.grid.cell_volume / f.grid.size
    return float(math.sqrt(max(total, 0.0)))


def sobolev_seminorm_physical(f: Field, s: float) -> float:
    """Same seminorm evaluated as the L2 norm of (-Delta)^{s/2} f in physical space."""
    return math.sqrt(mass(fractional_power(f, s / 2)))


def energy(f: Field, params: ModelParams) -> float:
    kinetic = 0.5 * sobolev_seminorm(f, params.s) ** 2
    return kinetic - potential_integral(f, params) / params.nonlinear_exponent


def boundary_mass_fraction(f: Field, fraction: float = _SHELL_FRACTION) -> float:
    """Share of the mass sitting in the outermost shell of the box."""
    density = np.abs(f.physical()) ** 2
    total = float(np.sum(density))
    if total == 0.0:
        return 0.0
    return float(np.sum(density[f.grid.outer_shell(fraction)])) / total


def _reflect(values: NDArray, axis: int) -> NDArray:
    # x -> -x on the periodic grid maps index i to (n - i) mod n
    return np.roll(np.flip(values, axis=axis), 1, axis=axis)


def y_symmetry_generators(values: NDArray) -> Iterator[NDArray]:
    """Images of ``values`` under generators of the y-plane symmetry group."""
    y_axes = values.ndim - 1
    for axis in range(y_axes):
        yield _reflect(values, axis)
    for a, b in itertools.pairwise(range(y_axes)):
        order = list(range(values.ndim))
        order[a], order[b] = order[b], order[a]
        yield np.transpose(values, order)


def y_symmetry_images(values: NDArray) -> Iterator[NDArray]:
    """All images of ``values`` under y-axis permutations and sign flips."""
    y_axes = values.ndim - 1
    for perm in itertools.permutations(range(y_axes)):
        permuted = np.transpose(values, list(perm) + [y_axes])
        for flips in itertools.product((False, True), repeat=y_axes):
            image = permuted
            for axis, flip in enumerate(flips):
                if flip:
                    image = _reflect(image, axis)
            yield image


def symmetry_deviation(f: Field) -> float:
    """Max deviation of ``f`` under the y-plane symmetry group, relative to max|f|."""
    values = f.physical()
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale == 0.0 or values.ndim < 2:
        return 0.0
    if len(set(f.grid.n[:-1])) > 1 or len(set(f.grid.lengths[:-1])) > 1:
        raise ParameterError("y axes differ in size; the y-plane symmetry group is not exact on this grid")
    worst = max(float(np.max(np.abs(image - values))) for image in y_symmetry_generators(values))
    return worst / scale


def symmetrize(f: Field) -> Field:
    """Average ``f`` over the y-plane symmetry group."""
    values = f.physical()
    images = list(y_symmetry_images(values))
    return f.with_values(sum(images) / len(images))


def evaluate_at(f: Field, point: Sequence[float]) -> complex:
    """Trigonometric interpolation of ``f`` at an arbitrary point (Nyquist content dropped)."""
    grid = f.grid
    if len(point) != grid.ndim:
        raise ParameterError(f"point has {len(point)} coordinates, grid has {grid.ndim} axes")
    coeffs: NDArray = f.spectrum() / grid.size
    for j in range(grid.ndim):
        kj = grid.k_odd[j].ravel()
        phase = np.exp(1j * kj * (point[j] + grid.lengths[j] / 2))
        coeffs = np.tensordot(phase, coeffs, axes=([0], [0]))
    return complex(coeffs)


def random_band_limited(
    grid: Grid,
    rng: np.random.Generator,
    bandwidth: float = 2.0,
    envelope_width: float | None = None,
    symmetric: bool = True,
) -> Field:
    """Random smooth field: Gaussian-filtered white spectrum, optionally localized and y-symmetrized."""
    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spectrum = noise * np.exp(-grid.k_squared / (2 * bandwidth**2))
    values = scipy.fft.ifftn(spectrum)
    if envelope_width is not None:
        radius2 = sum(x**2 for x in grid.coords)
        values = values * np.exp(-radius2 / (2 * envelope_width**2))
    peak = float(np.max(np.abs(values)))
    field = Field(grid, values / peak if peak > 0 else values)
    return symmetrize(field) if symmetric and grid.ndim > 1 else field
