"""Tests for the radial cutoff profile and the cylindrical weight."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fnls_lab.cutoffs import CutoffProfile, CylWeight, eval_psi, hessian_phi, tilde_weights
from fnls_lab.exceptions import ParameterError
from fnls_lab.spectral import Grid


@pytest.fixture(scope="module")
def profile() -> CutoffProfile:
    return CutoffProfile()


class TestCutoffProfile:
    def test_quadratic_core(self, profile: CutoffProfile) -> None:
        r = np.linspace(0.0, 1.0, 11)
        assert_allclose(eval_psi(profile, r), 0.5 * r**2, atol=1e-15)
        assert_allclose(eval_psi(profile, r, 1), r, atol=1e-15)
        assert_allclose(eval_psi(profile, r, 2), 1.0, atol=1e-15)

    def test_constant_beyond_outer_radius(self, profile: CutoffProfile) -> None:
        r = np.array([10.0, 12.0, 50.0])
        assert_allclose(eval_psi(profile, r), profile.plateau, rtol=1e-14)
        for order in (1, 2, 3, 4):
            assert_allclose(eval_psi(profile, r, order), 0.0, atol=1e-15)

    def test_plateau_between_bounds(self, profile: CutoffProfile) -> None:
        # psi' <= r and psi' = r on the core
        assert 0.5 < profile.plateau < 50.0

    @pytest.mark.parametrize("r", [1.5, 3.0, 5.5, 9.0])
    def test_derivatives_consistent(self, profile: CutoffProfile, r: float) -> None:
        eps = 1e-4
        for order in range(4):
            upper = eval_psi(profile, r + eps, order)
            lower = eval_psi(profile, r - eps, order)
            centred = (upper - lower) / (2 * eps)
            assert centred == pytest.approx(eval_psi(profile, r, order + 1), abs=1e-6)

    def test_transition_monotone(self, profile: CutoffProfile) -> None:
        r = np.linspace(0.0, 12.0, 2001)
        h = profile.transition(r)
        assert np.all(np.diff(h) <= 1e-15)
        assert h[0] == 1.0
        assert h[-1] == 0.0

    def test_negative_radius_rejected(self, profile: CutoffProfile) -> None:
        with pytest.raises(ParameterError):
            eval_psi(profile, -0.1)

    def test_bad_order_rejected(self, profile: CutoffProfile) -> None:
        with pytest.raises(ParameterError):
            eval_psi(profile, 1.0, 5)
        with pytest.raises(ParameterError):
            profile.transition(1.0, 4)

    def test_scalar_input(self, profile: CutoffProfile) -> None:
        assert isinstance(eval_psi(profile, 0.5), float)


class TestCylWeight:
    def test_invalid_construction(self) -> None:
        with pytest.raises(ParameterError):
            CylWeight(0.0, 3)
        with pytest.raises(ParameterError):
            CylWeight(1.0, 1)

    @pytest.mark.parametrize("order", [0, 1, 2, 3, 4])
    def test_rescaling(self, order: int) -> None:
        weight = CylWeight(3.0, 3)
        r = np.array([0.5, 4.0, 12.0, 20.0])
        expected = 3.0 ** (2 - order) * weight.profile.derivative(r / 3.0, order)
        assert_allclose(weight.psi_r(r, order), expected)

    def test_phi_at_point(self) -> None:
        weight = CylWeight(2.0, 3)
        assert weight.phi([0.6, 0.8, 0.3]) == pytest.approx(0.5 + 0.045)

    def test_phi_gradient_on_core(self) -> None:
        weight = CylWeight(2.0, 3)
        assert_allclose(weight.phi_gradient([0.6, 0.8, 0.3]), [0.6, 0.8, 0.3])

    def test_pointwise_inequalities(self) -> None:
        weight = CylWeight(2.0, 4)
        t = weight.radial_tables(np.linspace(0.0, 30.0, 20001))
        assert np.min(t.psi1) >= -1e-12
        assert np.min(t.psi2(4)) >= -1e-12
        assert np.min(t.ratio) >= 0.0
        assert np.max(t.ratio) <= 1.0

    def test_core_identity(self) -> None:
        weight = CylWeight(2.0, 3)
        r = np.linspace(0.0, 2.0, 101)
        t = weight.radial_tables(r)
        assert_allclose(t.lap_psi, 2.0, atol=1e-12)
        assert_allclose(t.bilap, 0.0, atol=1e-15)
        assert_allclose(t.offdiag, 0.0, atol=1e-15)

    def test_bilaplacian_decays_like_inverse_square(self) -> None:
        sups = []
        for R in (2.0, 4.0):
            weight = CylWeight(R, 3)
            t = weight.radial_tables(np.linspace(0.0, 12.0 * R, 48001))
            sups.append(float(np.max(np.abs(t.bilap))))
        assert sups[0] / sups[1] == pytest.approx(4.0, rel=1e-6)

    def test_grid_tables_cached(self) -> None:
        weight = CylWeight(2.0, 3)
        grid = Grid.cube(3, 16, 16.0)
        assert weight.tables(grid) is weight.tables(Grid.cube(3, 16, 16.0))
        assert weight.tables(grid).ratio.shape == (16, 16, 1)

    def test_tables_dimension_mismatch(self) -> None:
        weight = CylWeight(2.0, 3)
        with pytest.raises(ParameterError):
            weight.tables(Grid.cube(2, 16, 16.0))

    def test_gradient_variants(self) -> None:
        weight = CylWeight(2.0, 3)
        grid = Grid.cube(3, 16, 16.0)
        phi = weight.gradient(grid, "phi")
        psi = weight.gradient(grid, "psi")
        assert_allclose(phi[2], grid.coords[2])
        assert_allclose(psi[2], 0.0)
        assert_allclose(phi[0], psi[0])

    def test_laplacian_variants(self) -> None:
        weight = CylWeight(2.0, 3)
        grid = Grid.cube(3, 16, 16.0)
        assert_allclose(weight.laplacian(grid, "phi") - weight.laplacian(grid, "psi"), 1.0)

    def test_hessian_trace_matches_laplacian(self) -> None:
        weight = CylWeight(2.0, 3)
        grid = Grid.cube(3, 16, 16.0)
        table = hessian_phi(weight, grid)
        trace = sum(table[k][k].physical().real for k in range(3))
        assert_allclose(trace, np.broadcast_to(weight.laplacian(grid, "phi"), grid.shape), atol=1e-12)

    def test_tilde_weights_nonnegative(self) -> None:
        weight = CylWeight(2.0, 3)
        grid = Grid.cube(3, 32, 32.0)
        psi1, psi2 = tilde_weights(weight, grid)
        assert np.min(psi1.physical().real) >= -1e-12
        assert np.min(psi2.physical().real) >= -1e-12
