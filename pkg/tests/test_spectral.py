import math
import warnings

import numpy as np
import pytest

from phasequant.constants import PhysicalConstants
from phasequant.core import ModelParams, PositionGrid
from phasequant.errors import ParameterError, RegimeWarning, ResolutionError
from phasequant.spectral import (
    closed_form_shift,
    delta_q,
    free_particle_ground,
    hydrogen_density,
    lamb_params,
    lamb_shift_forward,
    lamb_shift_inverse,
    mhz_to_erg,
    oscillator_levels,
    oscillator_shift,
    oscillator_spectrum,
    perturbative_shift,
    shift_radial_oracle,
)

CONSTS = PhysicalConstants.reproduction()


@pytest.fixture(scope="module")
def osc_grid():
    return PositionGrid.centered(6.0, 512)


class TestOscillator:
    def test_unit_spectrum(self, unit, osc_grid):
        res = oscillator_spectrum(1.0, 1.0, unit, osc_grid, 5)
        # (n + 1/2)/(2 pi) + 1/(4 pi) = (n + 1)/(2 pi)
        np.testing.assert_allclose(res.eigenvalues, (np.arange(5) + 1) / (2 * math.pi), rtol=1e-4)
        assert res.eigenvalues[0] == pytest.approx(1 / (2 * math.pi), rel=1e-4)
        assert res.imag_residue < 1e-9

    def test_shift_removed(self, unit, osc_grid):
        res = oscillator_spectrum(1.0, 1.0, unit, osc_grid, 5, remove_shift=True)
        np.testing.assert_allclose(res.eigenvalues, (np.arange(5) + 0.5) / (2 * math.pi), rtol=1e-4)

    def test_shift_isolation(self, osc_grid):
        params = ModelParams(h=1.0, a=0.6, b=1.4)
        m, w = 1.3, 0.8
        full = oscillator_spectrum(m, w, params, osc_grid, 5).eigenvalues
        bare = oscillator_spectrum(m, w, params, osc_grid, 5, remove_shift=True).eigenvalues
        np.testing.assert_allclose(full - bare, oscillator_shift(m, w, params), atol=1e-8)

    def test_general_parameters_against_levels(self, osc_grid):
        params = ModelParams(h=1.0, a=0.6, b=1.4)
        got = oscillator_spectrum(1.3, 0.8, params, osc_grid, 5).eigenvalues
        np.testing.assert_allclose(got, oscillator_levels(1.3, 0.8, params, 5), rtol=1e-4)

    @pytest.mark.parametrize("method,n,tol", [("quadrature", 256, 1e-4), ("fd", 512, 2e-3)])
    def test_other_routes(self, unit, method, n, tol):
        grid = PositionGrid.centered(6.0, n)
        got = oscillator_spectrum(1.0, 1.0, unit, grid, 5, method=method).eigenvalues
        np.testing.assert_allclose(got, oscillator_levels(1.0, 1.0, unit, 5), rtol=tol)

    def test_eigenvectors_are_hermite_functions(self, unit, osc_grid):
        res = oscillator_spectrum(1.0, 1.0, unit, osc_grid, 3, vectors=True)
        # ground state of the conventional oscillator with hbar = 1/(2 pi)
        g = np.exp(-math.pi * osc_grid.x**2)
        g /= np.linalg.norm(g)
        assert abs(abs(np.vdot(g, res.eigenvectors[:, 0])) - 1) < 1e-8

    def test_domain_too_small(self, unit):
        with pytest.raises(ResolutionError) as err:
            oscillator_spectrum(1.0, 1.0, unit, PositionGrid.centered(0.8, 64), 5)
        assert err.value.suggested_n > 64

    def test_spacing_too_coarse(self, unit):
        with pytest.raises(ResolutionError) as err:
            oscillator_spectrum(1.0, 1.0, unit, PositionGrid.centered(6.0, 16), 5)
        assert err.value.suggested_n > 16

    def test_free_particle_offset(self):
        # f = p^2/2m: the smoothing adds the momentum variance h b/(4 pi a) over 2m;
        # the box levels fall like 1/L^2, removed by extrapolating L, 2L, 4L at fixed spacing
        params = ModelParams(h=1.0, a=0.5, b=2.0)
        m = 1.5
        dx = 0.05
        lows = [free_particle_ground(m, params, PositionGrid.centered(L, int(2 * L / dx))) for L in (2.0, 4.0, 8.0)]
        r1 = (4 * lows[1] - lows[0]) / 3
        r2 = (4 * lows[2] - lows[1]) / 3
        expected = params.h * 2.0 / (8 * math.pi * 0.5 * m)
        assert r2 == pytest.approx(expected, rel=1e-2)
        assert abs(r2 - expected) < abs(r1 - expected)


class TestLambCalibration:
    def test_forward_reproduces_1058_mhz(self):
        de = lamb_shift_forward(3.41e4, CONSTS, 2)
        assert de / mhz_to_erg(1058.0, CONSTS) == pytest.approx(1.0, abs=0.01)

    def test_inverse_reproduces_published_values(self):
        est = lamb_shift_inverse(mhz_to_erg(1058.0, CONSTS), CONSTS, 2)
        assert est.a_over_b == pytest.approx(3.41e4, rel=0.01)
        assert est.delta_q == pytest.approx(4.24e-12, rel=0.01)
        assert est.delta_e_mhz == pytest.approx(1058.0, rel=1e-12)
        assert est.delta_q == pytest.approx(math.sqrt(est.a_over_b * CONSTS.hbar / 2), rel=1e-12)
        # below the electron localisation scale quoted alongside it
        assert est.delta_q < 3.8e-11

    def test_smoothing_width_matches_model_params(self):
        est = lamb_shift_inverse(mhz_to_erg(1058.0, CONSTS), CONSTS, 2)
        params = lamb_params(est.a_over_b, CONSTS)
        assert math.sqrt(float(params.position_variance[0])) == pytest.approx(est.delta_q, rel=1e-12)

    def test_zero_and_level_ratio(self):
        assert lamb_shift_forward(0.0, CONSTS) == 0.0
        assert lamb_shift_forward(2e4, CONSTS, 2) / lamb_shift_forward(2e4, CONSTS, 1) == pytest.approx(1 / 8, rel=1e-14)

    @pytest.mark.parametrize("de", [0.0, 1e-19, 5e-18])
    def test_round_trip(self, de):
        if de == 0.0:
            with pytest.raises(ParameterError):
                lamb_shift_inverse(de, CONSTS)
            return
        est = lamb_shift_inverse(de, CONSTS, 2)
        assert lamb_shift_forward(est.a_over_b, CONSTS, 2) == pytest.approx(de, rel=1e-12)

    def test_bad_inputs(self):
        with pytest.raises(ParameterError):
            lamb_shift_forward(-1.0, CONSTS)
        with pytest.raises(ParameterError):
            lamb_shift_inverse(-1e-18, CONSTS)
        with pytest.raises(ParameterError):
            lamb_shift_forward(1.0, CONSTS, n=0)

    def test_closed_form_matches_forward(self):
        # (a h e^2 / 2b) rho_2(0) with rho_2(0) = 1/(8 pi a0^3) against m^3 alpha^4 c^4 / (8 hbar)
        ab = 3.41e4
        assert closed_form_shift(2, ab, CONSTS) == pytest.approx(lamb_shift_forward(ab, CONSTS, 2), rel=2e-3)

    def test_constants_scaling(self):
        # with dE = h nu, a/b scales as hbar^2 / (m^3 alpha^4 c^4)
        modern = PhysicalConstants.modern()
        a = lamb_shift_inverse(mhz_to_erg(1058.0, CONSTS), CONSTS).a_over_b
        b = lamb_shift_inverse(mhz_to_erg(1058.0, modern), modern).a_over_b

        def law(c):
            return c.hbar**2 / (c.m**3 * c.alpha**4 * c.c_light**4)

        assert b / a == pytest.approx(law(modern) / law(CONSTS), rel=1e-12)


class TestPerturbative:
    def test_hydrogen_densities_normalized(self):
        from scipy import integrate

        a0 = CONSTS.bohr_radius
        for n, l in ((1, 0), (2, 0), (2, 1)):
            total, _ = integrate.quad(lambda r: 4 * math.pi * r**2 * hydrogen_density(n, l, r, a0), 0, 60 * a0)
            assert total == pytest.approx(1.0, rel=1e-10)

    def test_1s_against_closed_form(self):
        sigma = CONSTS.bohr_radius / 200
        ab = 2 * sigma**2 / CONSTS.hbar
        got = perturbative_shift(1, lamb_params(ab, CONSTS), CONSTS)
        assert got == pytest.approx(closed_form_shift(1, ab, CONSTS), rel=0.02)
        assert got == pytest.approx(shift_radial_oracle(1, 0, sigma, CONSTS, points=8001), rel=1e-6)

    def test_2s_calibrated_parameters(self):
        est = lamb_shift_inverse(mhz_to_erg(1058.0, CONSTS), CONSTS, 2)
        got = perturbative_shift(2, lamb_params(est.a_over_b, CONSTS), CONSTS)
        assert got == pytest.approx(est.delta_e_erg, rel=0.02)
        assert got == pytest.approx(shift_radial_oracle(2, 0, est.delta_q, CONSTS, points=8001), rel=1e-6)

    def test_p_state_much_smaller(self):
        params = lamb_params(lamb_shift_inverse(mhz_to_erg(1058.0, CONSTS), CONSTS).a_over_b, CONSTS)
        s = perturbative_shift(2, params, CONSTS, l=0)
        p = perturbative_shift(2, params, CONSTS, l=1)
        assert 0 < p and s / p > 100

    def test_regime_warning(self):
        sigma = CONSTS.bohr_radius / 10
        params = lamb_params(2 * sigma**2 / CONSTS.hbar, CONSTS)
        with pytest.warns(RegimeWarning):
            perturbative_shift(1, params, CONSTS)

    def test_no_warning_when_separated(self):
        sigma = CONSTS.bohr_radius / 500
        params = lamb_params(2 * sigma**2 / CONSTS.hbar, CONSTS)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            perturbative_shift(1, params, CONSTS)

    def test_delta_q_formula(self):
        assert delta_q(2.0, CONSTS) == pytest.approx(math.sqrt(CONSTS.hbar), rel=1e-14)
