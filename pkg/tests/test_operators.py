import math

import numpy as np
import pytest
from scipy import integrate

from phasequant.core import ModelParams, PhaseGrid, PositionGrid
from phasequant.density import density_from_wavefunction
from phasequant.errors import DivergenceError, ParameterError, UnsupportedSymbolError
from phasequant.operators import (
    CoulombPotential,
    FunctionSymbol,
    PolynomialSymbol,
    SampledSymbol,
    apply,
    closed_form,
    expectation,
    gaussian_moment,
    harmonic,
    kernel_by_quadrature,
    kernel_by_symbol,
    position_observable,
)
from phasequant.states import coherent, gaussian, oscillator_state, random_state

POLYS = {
    "q": {(1, 0): 1.0},
    "p": {(0, 1): 1.0},
    "qp": {(1, 1): 1.0},
    "q2-p2": {(2, 0): 1.0, (0, 2): -1.0},
    "q3+p": {(3, 0): 0.5, (0, 1): 2.0},
    "q2p2": {(2, 2): 1.0},
    "p4": {(0, 4): 1.0},
}


@pytest.fixture(scope="module")
def grid():
    return PositionGrid.centered(8.0, 128)


@pytest.fixture(scope="module")
def params():
    return ModelParams(h=1.0, a=0.8, b=1.25)


class TestGaussianMoments:
    def test_values(self):
        assert gaussian_moment(0, 2.0) == 1.0
        assert gaussian_moment(3, 2.0) == 0.0
        assert gaussian_moment(4, 2.0) == pytest.approx(12.0)
        assert gaussian_moment(6, 0.5) == pytest.approx(15 * 0.125)

    def test_smoothed_polynomial_against_quadrature(self):
        f = PolynomialSymbol({(3, 1): 1.0, (0, 2): -0.5})
        vq, vp = 0.3, 0.2
        q0, p0 = 0.7, -0.4

        def integrand(u, v):
            w = math.exp(-(u**2) / (2 * vq) - v**2 / (2 * vp)) / (2 * math.pi * math.sqrt(vq * vp))
            return float(f(q0 + u, p0 + v)) * w

        oracle, _ = integrate.dblquad(integrand, -8, 8, -8, 8, epsabs=1e-12)
        assert f.smoothed(vq, vp)(q0, p0) == pytest.approx(oracle, rel=1e-8)

    def test_parse(self):
        f = PolynomialSymbol.parse("2,0:0.5; 0,2:0.5")
        assert f == harmonic()


class TestKernelRoutes:
    @pytest.mark.parametrize("name", sorted(POLYS))
    def test_quadrature_and_symbol_agree(self, name, grid, params):
        f = PolynomialSymbol(POLYS[name])
        a = kernel_by_quadrature(f, params, grid).matrix
        b = kernel_by_symbol(f, params, grid).matrix
        # compare on the well-resolved central block
        inner = np.abs(grid.x) < 4.0
        blk = np.ix_(inner, inner)
        assert np.linalg.norm(a[blk] - b[blk]) / np.linalg.norm(b[blk]) < 1e-8

    @pytest.mark.parametrize("name", sorted(POLYS))
    def test_hermitian(self, name, grid, params):
        op = kernel_by_symbol(PolynomialSymbol(POLYS[name]), params, grid)
        assert op.hermiticity_error() < 1e-12

    def test_positive_symbol_gives_positive_operator(self, grid, params):
        f = FunctionSymbol(lambda q, p: np.exp(-0.3 * (q - 1) ** 2) * (1 + np.cos(p) ** 2))
        op = kernel_by_quadrature(f, params, grid)
        evals = np.linalg.eigvalsh(0.5 * (op.matrix + op.matrix.conj().T))
        assert evals.min() > -1e-12 * evals.max()

    def test_sampled_symbol_matches_function(self, grid, params):
        def fn(q, p):
            return np.exp(-0.5 * q**2 - 2.0 * (p - 0.3) ** 2) * np.cos(q)

        pg = PhaseGrid(grid.x, PhaseGrid.from_position(grid, params).p)
        qq, pp = np.meshgrid(pg.q, pg.p, indexing="ij")
        sampled = kernel_by_symbol(SampledSymbol(fn(qq, pp), pg), params, grid).matrix
        quad = kernel_by_quadrature(FunctionSymbol(fn), params, grid).matrix
        assert np.linalg.norm(sampled - quad) / np.linalg.norm(quad) < 1e-6

    def test_function_symbol_needs_quadrature(self, grid, params):
        with pytest.raises(UnsupportedSymbolError):
            kernel_by_symbol(FunctionSymbol(lambda q, p: q), params, grid)

    def test_divergent_symbol(self, grid, params):
        # the windows decay like exp(-2 pi s q^2 / h) with 2 pi s / h close to 9.8
        with pytest.raises(DivergenceError):
            kernel_by_quadrature(FunctionSymbol(lambda q, p: np.exp(12 * q**2)), params, grid)
        with pytest.raises(DivergenceError):
            kernel_by_quadrature(FunctionSymbol(lambda q, p: np.exp(p**2)), params, grid)

    def test_slow_growth_is_accepted(self, grid, params):
        op = kernel_by_quadrature(FunctionSymbol(lambda q, p: np.exp(0.1 * q**2)), params, grid)
        assert np.all(np.isfinite(op.matrix))


class TestClosedForms:
    def test_q_squared_constant(self, params):
        cf = closed_form(PolynomialSymbol({(2, 0): 1.0}), params)
        h, a, b = params.scalar()
        assert cf.constant == pytest.approx(h * a / (4 * math.pi * b))

    def test_oscillator_shift(self, params):
        h, a, b = params.scalar()
        m, w = 2.0, 1.5
        cf = closed_form(harmonic(m, w), params)
        expected = m * w**2 * h * a / (8 * math.pi * b) + h * b / (8 * math.pi * a * m)
        assert cf.constant == pytest.approx(expected)
        assert cf.second == pytest.approx(-((h / (2 * math.pi)) ** 2) / (2 * m))

    def test_mixed_term_has_no_closed_form(self, params):
        with pytest.raises(UnsupportedSymbolError):
            closed_form(PolynomialSymbol({(1, 1): 1.0}), params)
        with pytest.raises(UnsupportedSymbolError):
            closed_form(PolynomialSymbol({(4, 0): 1.0}), params)

    def test_drop_constant(self, grid, params):
        f = harmonic()
        full = kernel_by_symbol(f, params, grid)
        bare = kernel_by_symbol(f, params, grid, drop_constant=True)
        np.testing.assert_allclose(full.matrix - bare.matrix, full.constant_shift * np.eye(grid.n), atol=1e-12)
        with pytest.raises(UnsupportedSymbolError):
            kernel_by_symbol(PolynomialSymbol({(1, 1): 1.0}), params, grid, drop_constant=True)


class TestExpectations:
    def test_momentum_of_coherent_state(self, unit):
        g = PositionGrid.centered(10.0, 256)
        psi = coherent(g, unit, q0=0.5, p0=1.2)
        op = kernel_by_symbol(PolynomialSymbol({(0, 1): 1.0}), unit, g)
        assert expectation(op, psi) == pytest.approx(1.2, abs=1e-10)

    def test_q_squared_on_matched_gaussian(self, unit):
        # <q^2> of |psi|^2 is 1/(4 pi); the smoothing adds another 1/(4 pi)
        g = PositionGrid.centered(10.0, 256)
        op = kernel_by_symbol(PolynomialSymbol({(2, 0): 1.0}), unit, g)
        assert expectation(op, gaussian(g, unit)) == pytest.approx(1 / (2 * math.pi), rel=1e-10)

    def test_quadratic_form_matches_density(self, unit, rng):
        g = PositionGrid.centered(10.0, 256)
        pg = PhaseGrid.from_position(g, unit)
        psi = random_state(g, rng, center=-0.4)
        rho = density_from_wavefunction(psi, unit, pg)
        for coeffs in POLYS.values():
            f = PolynomialSymbol(coeffs)
            lhs = expectation(kernel_by_symbol(f, unit, g), psi)
            rhs = rho.expectation(f)
            scale = rho.expectation(lambda q, p: np.abs(f(q, p)))
            assert abs(lhs - rhs) / scale < 1e-8

    def test_oscillator_eigenvector_action(self, unit):
        g = PositionGrid.centered(8.0, 256)
        op = kernel_by_symbol(harmonic(), unit, g, drop_constant=True)
        psi = oscillator_state(g, 2, h=1.0)
        out = apply(op, psi)
        # hbar omega (n + 1/2) with hbar = 1/(2 pi)
        assert out.distance(psi * (2.5 / (2 * math.pi))) < 1e-8


class TestPositionObservable:
    def test_constant_and_polynomial(self, unit):
        x = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(position_observable(3.0, unit, x), 3.0)
        v = 1 / (4 * math.pi)
        np.testing.assert_allclose(position_observable(PolynomialSymbol({(2, 0): 1.0}), unit, x), x**2 + v)
        np.testing.assert_allclose(position_observable(lambda y: y**4, unit, x), x**4 + 6 * v * x**2 + 3 * v**2, rtol=1e-12)

    def test_coulomb_against_shell_theorem(self):
        params = ModelParams(h=1.0, a=(1.0,) * 3, b=(2.0,) * 3)
        sigma = math.sqrt(float(params.position_variance[0]))
        r = np.array([0.0, 0.05, 0.2, 0.5, 1.0, 3.0])
        got = position_observable(CoulombPotential(e2=1.5), params, r)

        def shell(s):
            return 4 * math.pi * s**2 * math.exp(-(s**2) / (2 * sigma**2)) / (2 * math.pi * sigma**2) ** 1.5

        for ri, gi in zip(r, got):
            oracle, _ = integrate.quad(lambda s: -1.5 * shell(s) / max(ri, s), 0, 20 * sigma, points=[ri] if ri else None, epsabs=1e-13, limit=200)
            assert gi == pytest.approx(oracle, rel=1e-9)

    def test_coulomb_needs_isotropy(self):
        params = ModelParams(h=1.0, a=(1.0, 1.0, 1.0), b=(1.0, 2.0, 1.0))
        with pytest.raises(ParameterError):
            position_observable(CoulombPotential(), params, np.array([1.0]))

    def test_divergent_potential(self, unit):
        with pytest.raises(DivergenceError):
            position_observable(lambda y: np.exp(8 * y**2), unit, np.linspace(-1, 1, 5))
