"""Tests for the resolvent quadrature and the localized virial identities."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fnls_lab.cutoffs import CylWeight
from fnls_lab.evolution import propagate
from fnls_lab.exceptions import IdentityMismatchError, ParameterError, QuadratureGateError, SamplingError
from fnls_lab.models import ModelParams
from fnls_lab.spectral import Field, Grid, sobolev_seminorm
from fnls_lab.virial import (
    ResolventQuadrature,
    balakrishnan_check,
    centered_difference,
    refined_terms,
    resolvent,
    resolvent_constant,
    series_diagnostics,
    virial_phi,
    virial_psi,
    virial_residual,
    virial_rhs,
    virial_time_derivative,
    virial_value,
    weighted_median_wavenumber,
)

PLANE_PARAMS = ModelParams(N=2, s=0.6, sigma=0.5)
CRITICAL_PARAMS = ModelParams(N=2, s=0.75, sigma=0.75)


@pytest.fixture(scope="module")
def plane_grid() -> Grid:
    return Grid.cube(2, 64, 20.0)


@pytest.fixture(scope="module")
def plane_gaussian(plane_grid: Grid) -> Field:
    return Field.from_function(plane_grid, lambda x, y: 1.5 * np.exp(-0.5 * (x**2 + y**2)))


class TestResolventQuadrature:
    def test_constant(self) -> None:
        assert resolvent_constant(0.5) == pytest.approx(1 / math.sqrt(math.pi))

    @pytest.mark.parametrize("s", [0.55, 0.7, 0.9])
    def test_gate_passes(self, s: float) -> None:
        quad = ResolventQuadrature.build(s, 3.0, 64)
        assert quad.check_gate() <= 1e-8
        assert np.all(quad.weights > 0)
        assert np.all(np.diff(quad.nodes) > 0)

    def test_gate_fails_with_few_nodes(self) -> None:
        quad = ResolventQuadrature.build(0.7, 1.0, 8)
        with pytest.raises(QuadratureGateError) as exc_info:
            quad.check_gate()
        assert exc_info.value.details["nodes"] == 8

    def test_integrates_closed_form(self) -> None:
        quad = ResolventQuadrature.build(0.6, 1.0, 64)
        b = 2.0
        exact = b ** (0.6 - 1) * 0.6 * math.pi / math.sin(0.6 * math.pi)
        assert quad.integrate(1.0 / (b + quad.nodes) ** 2) == pytest.approx(exact, rel=1e-9)

    @pytest.mark.parametrize(("s", "scale"), [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0), (0.5, -1.0)])
    def test_invalid_parameters(self, s: float, scale: float) -> None:
        with pytest.raises(ParameterError):
            ResolventQuadrature.build(s, scale)

    def test_for_field_uses_median_wavenumber(self) -> None:
        grid = Grid.cube(2, 16, 2 * math.pi)
        mode = Field.from_function(grid, lambda x, y: np.exp(2j * x))
        assert weighted_median_wavenumber(mode) == pytest.approx(4.0)
        assert ResolventQuadrature.for_field(mode, 0.7).scale == pytest.approx(4.0)

    def test_constant_field_scale(self) -> None:
        grid = Grid.cube(2, 8, 4.0)
        assert weighted_median_wavenumber(Field(grid, np.ones(grid.shape))) == 1.0


class TestResolvent:
    def test_inverts_shifted_laplacian(self, gaussian_3d: Field) -> None:
        u_m = resolvent(gaussian_3d, 2.5, 0.7)
        grid = gaussian_3d.grid
        assert_allclose(
            u_m.spectrum() * (grid.k_squared + 2.5),
            resolvent_constant(0.7) * gaussian_3d.spectrum(),
            atol=1e-10,
        )

    def test_keeps_frequency_representation(self, gaussian_3d: Field) -> None:
        assert resolvent(gaussian_3d.to_frequency(), 1.0, 0.7).representation == "frequency"

    def test_nonpositive_shift(self, gaussian_3d: Field) -> None:
        with pytest.raises(ParameterError):
            resolvent(gaussian_3d, 0.0, 0.7)

    @pytest.mark.parametrize("s", [0.55, 0.7, 0.9])
    def test_balakrishnan_identity(self, gaussian_3d: Field, s: float) -> None:
        lhs, rhs, rel = balakrishnan_check(gaussian_3d, ResolventQuadrature.for_field(gaussian_3d, s))
        assert rhs == pytest.approx(s * sobolev_seminorm(gaussian_3d, s) ** 2)
        assert rel < 1e-6
        assert lhs > 0

    def test_balakrishnan_zero_field(self, grid_3d: Grid) -> None:
        _, _, rel = balakrishnan_check(Field.zeros(grid_3d), ResolventQuadrature.build(0.7))
        assert rel == 0.0


class TestVirialValue:
    def test_chirped_gaussian(self, plane_grid: Grid) -> None:
        b = 0.5
        u = Field.from_function(
            plane_grid, lambda x, y: np.exp(-0.5 * (x**2 + y**2)) * np.exp(0.5j * b * (x**2 + y**2))
        )
        weight = CylWeight(10.0, 2)
        assert virial_phi(u, weight) == pytest.approx(2 * math.pi * b, rel=1e-6)
        assert virial_psi(u, weight) == pytest.approx(math.pi * b, rel=1e-6)

    def test_real_field_has_zero_virial(self, plane_gaussian: Field) -> None:
        assert virial_phi(plane_gaussian, CylWeight(2.0, 2)) == pytest.approx(0.0, abs=1e-12)


class TestVirialTimeDerivative:
    @pytest.mark.parametrize("variant", ["phi", "psi"])
    @pytest.mark.parametrize("nonlinear", [True, False])
    def test_matches_centered_difference(self, plane_gaussian: Field, variant: str, nonlinear: bool) -> None:
        weight = CylWeight(2.0, 2)
        delta = 1e-3
        forward = propagate(plane_gaussian, delta, PLANE_PARAMS, nonlinear=nonlinear)
        backward = propagate(plane_gaussian, -delta, PLANE_PARAMS, nonlinear=nonlinear)
        measured = (virial_value(forward, weight, variant) - virial_value(backward, weight, variant)) / (2 * delta)
        exact = virial_time_derivative(plane_gaussian, weight, PLANE_PARAMS, variant, nonlinear)
        assert exact == pytest.approx(measured, rel=1e-4, abs=1e-8)

    def test_real_datum_has_no_momentum(self, plane_gaussian: Field) -> None:
        assert virial_phi(plane_gaussian, CylWeight(2.0, 2)) == pytest.approx(0.0, abs=1e-12)


class TestVirialRhs:
    @pytest.mark.parametrize("variant", ["phi", "psi"])
    @pytest.mark.parametrize("nonlinear", [True, False])
    def test_matches_equation_derivative(self, plane_gaussian: Field, variant: str, nonlinear: bool) -> None:
        weight = CylWeight(2.0, 2)
        quad = ResolventQuadrature.for_field(plane_gaussian, PLANE_PARAMS.s)
        report = virial_rhs(plane_gaussian, weight, quad, PLANE_PARAMS, variant, nonlinear=nonlinear)
        assert report.relative_residual < 1e-2

    def test_term_signs(self, plane_gaussian: Field) -> None:
        weight = CylWeight(1.0, 2)
        quad = ResolventQuadrature.for_field(plane_gaussian, PLANE_PARAMS.s)
        report = virial_rhs(plane_gaussian, weight, quad, PLANE_PARAMS, "phi", t=0.25)
        assert report.t == 0.25
        assert report.cross_term <= 0.0
        assert report.cross_term_max <= 0.0
        assert report.kinetic <= report.kinetic_bound * (1 + 1e-6)
        assert report.nonlinear == pytest.approx(report.nonlinear_split, rel=1e-10)
        assert report.total == pytest.approx(report.kinetic + report.bilap + report.nonlinear)
        assert report.energy_bound is None

    def test_psi_variant_carries_energy_bound(self, plane_gaussian: Field) -> None:
        weight = CylWeight(1.0, 2)
        quad = ResolventQuadrature.for_field(plane_gaussian, PLANE_PARAMS.s)
        report = virial_rhs(plane_gaussian, weight, quad, PLANE_PARAMS, "psi")
        assert report.energy_bound is not None
        assert report.tail_integrand_max <= 1e-12 * report.scale

    @pytest.mark.parametrize("variant", ["phi", "psi"])
    @pytest.mark.parametrize("R", [0.5, 1.0, 8.0])
    def test_split_nonlinear_agrees(self, plane_gaussian: Field, variant: str, R: float) -> None:
        quad = ResolventQuadrature.for_field(plane_gaussian, PLANE_PARAMS.s)
        report = virial_rhs(plane_gaussian, CylWeight(R, 2), quad, PLANE_PARAMS, variant)
        assert report.nonlinear != 0.0
        assert report.nonlinear_split == pytest.approx(report.nonlinear, rel=1e-10)

    def test_split_nonlinear_mismatch_raises(
        self, plane_gaussian: Field, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.setattr("fnls_lab.virial.SPLIT_TOL", -1.0)
        quad = ResolventQuadrature.for_field(plane_gaussian, PLANE_PARAMS.s)
        with pytest.raises(IdentityMismatchError) as exc_info:
            virial_rhs(plane_gaussian, CylWeight(1.0, 2), quad, PLANE_PARAMS, "psi")
        assert set(exc_info.value.details) >= {"direct", "split"}
        assert exc_info.value.details["variant"] == "psi"

    def test_dimension_mismatch(self, plane_gaussian: Field) -> None:
        quad = ResolventQuadrature.build(PLANE_PARAMS.s)
        with pytest.raises(ParameterError):
            virial_rhs(plane_gaussian, CylWeight(2.0, 3), quad, PLANE_PARAMS)

    def test_order_mismatch(self, plane_gaussian: Field) -> None:
        quad = ResolventQuadrature.build(0.7)
        with pytest.raises(ParameterError):
            virial_rhs(plane_gaussian, CylWeight(2.0, 2), quad, PLANE_PARAMS)


class TestCenteredDifference:
    def test_quadratic(self) -> None:
        t = np.linspace(0.0, 1.0, 6)
        out = centered_difference(t, t**2)
        assert math.isnan(out[0])
        assert math.isnan(out[-1])
        assert_allclose(out[1:-1], 2 * t[1:-1], atol=1e-12)

    def test_short_series(self) -> None:
        assert np.all(np.isnan(centered_difference([0.0, 1.0], [1.0, 2.0])))


class TestVirialResidual:
    def test_too_few_samples(self, plane_gaussian: Field) -> None:
        with pytest.raises(SamplingError):
            virial_residual([(0.0, plane_gaussian), (0.1, plane_gaussian)], CylWeight(2.0, 2), PLANE_PARAMS)

    def test_non_uniform_samples(self, plane_gaussian: Field) -> None:
        samples = [(0.0, plane_gaussian), (0.1, plane_gaussian), (0.3, plane_gaussian)]
        with pytest.raises(SamplingError):
            virial_residual(samples, CylWeight(2.0, 2), PLANE_PARAMS)

    def test_interior_reports(self, plane_gaussian: Field) -> None:
        samples = [(0.1 * k, plane_gaussian) for k in range(4)]
        reports = virial_residual(samples, CylWeight(2.0, 2), PLANE_PARAMS, nodes=48)
        assert [r.t for r in reports] == pytest.approx([0.1, 0.2])
        assert all(r.dmdt_fd == pytest.approx(0.0, abs=1e-12) for r in reports)


class TestRefinedTerms:
    def test_requires_mass_critical(self, plane_gaussian: Field) -> None:
        quad = ResolventQuadrature.build(PLANE_PARAMS.s)
        with pytest.raises(ParameterError):
            refined_terms(plane_gaussian, CylWeight(2.0, 2), quad, PLANE_PARAMS, 0.1)

    def test_requires_positive_eta(self, plane_gaussian: Field) -> None:
        quad = ResolventQuadrature.build(CRITICAL_PARAMS.s)
        with pytest.raises(ParameterError):
            refined_terms(plane_gaussian, CylWeight(2.0, 2), quad, CRITICAL_PARAMS, 0.0)

    def test_nonnegative_components(self, plane_gaussian: Field) -> None:
        quad = ResolventQuadrature.for_field(plane_gaussian, CRITICAL_PARAMS.s)
        record = refined_terms(plane_gaussian, CylWeight(1.0, 2), quad, CRITICAL_PARAMS, 0.1, energy0=-1.0)
        assert record.leading == pytest.approx(8 * 0.75 * -1.0)
        assert record.psi1_term >= 0.0
        assert record.tail_term >= 0.0
        assert record.eta_tail_component >= 0.0
        assert record.remainder_scale > 0.0


class TestSeriesDiagnostics:
    def test_columns(self, plane_gaussian: Field) -> None:
        diagnostics = series_diagnostics(CylWeight(2.0, 2), PLANE_PARAMS, nodes=48)
        columns = diagnostics(plane_gaussian, 0.0)
        assert set(columns) == {"M_phiR", "M_psiR", "rhs_m1_total", "rhs_kinetic", "rhs_bilap", "rhs_nonlinear"}
        assert columns["rhs_m1_total"] == pytest.approx(
            columns["rhs_kinetic"] + columns["rhs_bilap"] + columns["rhs_nonlinear"]
        )
