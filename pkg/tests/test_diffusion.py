import math

import numpy as np
import pytest

from phasequant.core import ExtendedAmplitude, ModelParams, PhaseGrid, PositionGrid
from phasequant.diffusion import (
    DiffusionSpec,
    asymptotic_state,
    eigenvalue,
    evolve,
    fit_rate,
    from_mixed,
    hermite_basis,
    hermite_mode,
    measure_decay,
    mode_content,
    named_initial,
    real_amplitude,
    stability_bound,
    to_mixed,
    x_axis,
)
from phasequant.errors import (
    GridMismatchError,
    InsufficientSignalError,
    ParameterError,
    StabilityError,
    TruncationError,
)
from phasequant.states import random_state
from phasequant.transform import extract, synthesize

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def pos():
    return PositionGrid.centered(6.0, 128)


@pytest.fixture(scope="module")
def pg(pos, unit):
    return PhaseGrid.from_position(pos, unit)


class TestEigenvalues:
    def test_ladder_formula(self):
        p = ModelParams(h=2.0, a=(1.0, 0.5), b=(3.0, 2.0))
        # -(2 pi |k| / h) * sum a_i b_i (2 k_i + 1)
        assert eigenvalue(-2, (1, 0), p) == pytest.approx(-(2 * math.pi * 2 / 2.0) * (3.0 * 3 + 1.0 * 1))

    def test_ground_is_smallest_rate(self, unit):
        rates = [-eigenvalue(k, n, unit) for k in (1, 2) for n in range(3)]
        assert min(rates) == pytest.approx(unit.ground_rate)


class TestMixedRepresentation:
    @pytest.mark.parametrize("k", [-2, -1, 1, 3])
    def test_round_trip(self, pg, k, rng):
        f = rng.normal(size=pg.shape) + 1j * rng.normal(size=pg.shape)
        back = from_mixed(to_mixed(f, pg, k, 1.0), pg, k, 1.0)
        np.testing.assert_allclose(back, f, atol=1e-10)

    def test_x_axis_matches_position_grid(self, pg, pos):
        x = x_axis(pg, -1)
        i0 = int(round((pos.x[0] - x[0]) / pos.dx))
        np.testing.assert_allclose(x[i0 : i0 + pos.n], pos.x, atol=1e-12)

    def test_hermite_basis_orthonormal(self, pg, unit):
        basis = hermite_basis(pg, -2, unit, 12)
        l = x_axis(pg, -2).size // 2
        gram = basis[l].T @ basis[l] * pg.dq
        np.testing.assert_allclose(gram, np.eye(12), atol=1e-10)

    def test_pure_mode_content(self, pg, unit):
        env = np.exp(-x_axis(pg, -1) ** 2)
        phi = ExtendedAmplitude({-1: hermite_mode(pg, unit, -1, 2, env)}, pg)
        c = mode_content(phi, -1, unit, 6)
        np.testing.assert_allclose(c[:, 2], env, atol=1e-10)
        assert np.max(np.abs(np.delete(c, 2, axis=1))) < 1e-10


class TestExactModes:
    @pytest.mark.parametrize("name,rate", [("k1-ground", TWO_PI), ("k2-ground", 2 * TWO_PI), ("k1-n1", 3 * TWO_PI)])
    def test_pure_modes_decay_exactly(self, name, rate, pos, pg, unit):
        phi0 = named_initial(name, pos, unit, phase_grid=pg)
        spec = DiffusionSpec(unit, tau_end=0.5, samples=11)
        traj = evolve(phi0, spec)
        k = -int(name[1])
        norms = traj.mode_norms(k)
        np.testing.assert_allclose(norms, norms[0] * np.exp(-rate * traj.times), rtol=1e-10)
        fit = measure_decay(traj)[k]
        assert fit.rate == pytest.approx(rate, rel=1e-10)

    def test_zero_mode_heat_equation(self, pg):
        params = ModelParams(h=1.0, a=0.7, b=1.3)
        pgrid = PhaseGrid.from_position(PositionGrid.centered(6.0, 128), params)
        qq, pp = np.meshgrid(pgrid.q, pgrid.p, indexing="ij")
        v0, tau = 0.25, 0.05
        phi0 = ExtendedAmplitude({0: np.exp(-(qq**2 + pp**2) / (2 * v0)).astype(complex)}, pgrid)
        traj = evolve(phi0, DiffusionSpec(params, tau_end=tau, samples=2))
        vq, vp = v0 + 2 * 0.7**2 * tau, v0 + 2 * 1.3**2 * tau
        oracle = v0 / math.sqrt(vq * vp) * np.exp(-(qq**2) / (2 * vq) - pp**2 / (2 * vp))
        np.testing.assert_allclose(traj.amplitudes[-1].mode(0).real, oracle, atol=1e-10)

    def test_level_ratio_follows_gap(self, pos, pg, unit):
        env = np.exp(-0.5 * x_axis(pg, -1) ** 2)
        f = hermite_mode(pg, unit, -1, 0, env) + hermite_mode(pg, unit, -1, 1, 0.3 * env)
        traj = evolve(real_amplitude(pg, {-1: f}), DiffusionSpec(unit, tau_end=0.4, samples=9))
        ratio = traj.modes.norms[(-1, 1)] / traj.modes.norms[(-1, 0)]
        np.testing.assert_allclose(ratio, ratio[0] * np.exp(-2 * TWO_PI * traj.times), rtol=1e-10)


class TestGenericAmplitudes:
    def test_late_rates_approach_ground_rates(self, pos, pg, unit):
        phi0 = named_initial("random", pos, unit, seed=3, phase_grid=pg)
        traj = evolve(phi0, DiffusionSpec(unit, tau_end=2.0, samples=41))
        fits = measure_decay(traj, tmin=1.0)
        assert fits[-1].rate == pytest.approx(TWO_PI, rel=1e-4)
        assert fits[-2].rate == pytest.approx(2 * TWO_PI, rel=1e-4)
        early = measure_decay(traj, tmax=0.3)
        assert early[-1].rate > fits[-1].rate

    def test_linearity(self, pos, pg, unit):
        spec = DiffusionSpec(unit, tau_end=0.3, samples=4)
        a = named_initial("random", pos, unit, seed=1, phase_grid=pg)
        b = named_initial("synthesized", pos, unit, seed=2, phase_grid=pg)
        lhs = evolve(0.7 * a + (-1.3) * b, spec).amplitudes[-1]
        rhs = 0.7 * evolve(a, spec).amplitudes[-1] + (-1.3) * evolve(b, spec).amplitudes[-1]
        assert (lhs - rhs).norm() < 1e-12 * lhs.norm()

    def test_real_amplitude_stays_real(self, pos, pg, unit):
        traj = evolve(named_initial("random", pos, unit, seed=5, phase_grid=pg), DiffusionSpec(unit, tau_end=0.2, samples=3))
        assert all(phi.is_real(1e-10) for phi in traj.amplitudes)


class TestAsymptoticState:
    def test_synthesized_amplitude_is_fixed(self, pos, pg, unit, rng):
        psi = random_state(pos, rng, center=0.2)
        phi0 = synthesize(psi, unit, pg)
        traj = evolve(phi0, DiffusionSpec(unit, tau_end=0.5, samples=3))
        assert (traj.renormalized(2) - phi0).norm() < 1e-10 * phi0.norm()
        state = asymptotic_state(phi0, DiffusionSpec(unit, tau_end=1.0), out_grid=pos)
        assert state.psi.distance(psi) < 1e-8
        assert state.rate == pytest.approx(TWO_PI)
        assert state.factor(0.5) == pytest.approx(math.exp(-math.pi))

    def test_matches_extraction(self, pos, pg, unit):
        phi0 = named_initial("random", pos, unit, seed=9, phase_grid=pg)
        psi, _ = asymptotic_state(phi0, DiffusionSpec(unit, tau_end=1.0), out_grid=pos)
        ground_only = synthesize(extract(phi0, unit, pos), unit, pg)
        again, _ = asymptotic_state(ground_only, DiffusionSpec(unit, tau_end=1.0), out_grid=pos)
        assert psi.distance(again) < 1e-8 * psi.norm()

    def test_excited_contamination_is_invisible(self, pos, pg, unit, rng):
        phi0 = synthesize(random_state(pos, rng), unit, pg)
        env = np.exp(-0.5 * x_axis(pg, -1) ** 2)
        junk = real_amplitude(pg, {-1: hermite_mode(pg, unit, -1, 1, env), -2: hermite_mode(pg, unit, -2, 0, env)})
        spec = DiffusionSpec(unit, tau_end=1.0)
        a = asymptotic_state(phi0, spec, out_grid=pos).psi
        b = asymptotic_state(phi0 + junk, spec, out_grid=pos).psi
        assert a.distance(b) < 1e-10

    def test_foreign_out_grid(self, pos, pg, unit):
        phi0 = named_initial("k1-ground", pos, unit, phase_grid=pg)
        with pytest.raises(GridMismatchError):
            asymptotic_state(phi0, DiffusionSpec(unit, tau_end=1.0), out_grid=PositionGrid.centered(3.0, 50))


class TestFiniteDifference:
    @pytest.mark.slow
    def test_agrees_with_spectral(self, unit):
        # second-order differences: about 2e-2 at 128 points, below 1e-3 from about 300
        fine = PositionGrid.centered(6.0, 384)
        fine_pg = PhaseGrid.from_position(fine, unit)
        phi0 = named_initial("synthesized", fine, unit, seed=1, phase_grid=fine_pg)
        kw = dict(tau_end=0.2, samples=3, n_hermite=24)
        spectral = evolve(phi0, DiffusionSpec(unit, **kw)).amplitudes[-1]
        fd = evolve(phi0, DiffusionSpec(unit, integrator="finite-difference", **kw)).amplitudes[-1]
        assert (fd - spectral).norm() / spectral.norm() < 1e-3

    def test_coarse_grid_is_close(self, pos, pg, unit):
        phi0 = named_initial("k1-n1", pos, unit, phase_grid=pg)
        spectral = evolve(phi0, DiffusionSpec(unit, tau_end=0.2, samples=3)).amplitudes[-1]
        fd = evolve(phi0, DiffusionSpec(unit, tau_end=0.2, samples=3, integrator="finite-difference")).amplitudes[-1]
        assert (fd - spectral).norm() / spectral.norm() < 3e-2

    def test_stability_bound_covers_spectrum(self, unit):
        small = PhaseGrid.from_position(PositionGrid.centered(3.0, 24), unit)
        bound = stability_bound(small, unit, [-1])
        x = x_axis(small, -1)
        nq = small.q.size
        lap = (np.eye(nq, k=1) - 2 * np.eye(nq) + np.eye(nq, k=-1)) / small.dq**2
        worst = 0.0
        for xl in (x[0], x[-1]):
            gen = lap - np.diag((TWO_PI * (small.q - xl)) ** 2)
            worst = max(worst, np.max(np.abs(np.linalg.eigvalsh(gen))))
        assert bound * worst <= 2.0

    def test_unstable_step_rejected(self, pos, pg, unit):
        phi0 = named_initial("k1-ground", pos, unit, phase_grid=pg)
        bound = stability_bound(pg, unit, [-1, 1])
        with pytest.raises(StabilityError):
            evolve(phi0, DiffusionSpec(unit, tau_end=0.1, integrator="finite-difference", dtau=1.5 * bound))


class TestErrors:
    def test_zero_trajectory(self, pg, unit):
        phi0 = ExtendedAmplitude({-1: np.zeros(pg.shape), 1: np.zeros(pg.shape)}, pg)
        traj = evolve(phi0, DiffusionSpec(unit, tau_end=0.1))
        with pytest.raises(InsufficientSignalError):
            measure_decay(traj)

    def test_too_few_samples(self):
        t = np.linspace(0, 1, 4)
        with pytest.raises(InsufficientSignalError):
            fit_rate(t, np.exp(-t))
        with pytest.raises(InsufficientSignalError):
            fit_rate(np.linspace(0, 1, 10), np.r_[np.exp(-np.arange(4.0)), np.zeros(6)])

    def test_mean_zero_required(self, pg, unit):
        qq, pp = np.meshgrid(pg.q, pg.p, indexing="ij")
        phi0 = ExtendedAmplitude({0: np.exp(-(qq**2) - pp**2)}, pg)
        with pytest.raises(ParameterError):
            evolve(phi0, DiffusionSpec(unit, tau_end=0.1, require_mean_zero=True))
        evolve(phi0, DiffusionSpec(unit, tau_end=0.1))

    def test_truncation(self, pos, pg, unit):
        phi0 = named_initial("k1-n2", pos, unit, phase_grid=pg)
        with pytest.raises(TruncationError):
            evolve(phi0, DiffusionSpec(unit, tau_end=0.1, n_hermite=2))

    def test_unresolved_hermite_functions(self, pos, pg, unit):
        phi0 = named_initial("k2-ground", pos, unit, phase_grid=pg)
        with pytest.raises(GridMismatchError):
            evolve(phi0, DiffusionSpec(unit, tau_end=0.1, n_hermite=200))

    def test_non_dual_grid(self, unit):
        bad = PhaseGrid(np.linspace(-4, 4, 32, endpoint=False), np.linspace(-3, 3, 32, endpoint=False))
        phi0 = ExtendedAmplitude({-1: np.ones(bad.shape)}, bad)
        with pytest.raises(GridMismatchError):
            evolve(phi0, DiffusionSpec(unit, tau_end=0.1))

    @pytest.mark.parametrize("kw", [{"tau_end": 0.0}, {"tau_end": 1.0, "integrator": "rk4"}, {"tau_end": 1.0, "samples": 1}])
    def test_bad_spec(self, unit, kw):
        with pytest.raises(ParameterError):
            DiffusionSpec(unit, **kw)


class TestSurvivalBudget:
    def test_error_equals_surviving_excited_content(self, pg, unit, pos):
        """The renormalized trajectory differs from the ground-state reference by
        the excited Hermite content, damped by exp((lambda + ground rate) tau)."""
        from phasequant.diffusion import random_amplitude
        from phasequant.verify import survival_errors

        tau = 3 / TWO_PI
        count = 32
        got = survival_errors(seeds=[0])[0]
        phi0 = random_amplitude(pg, unit, np.random.default_rng(0))
        ground = excited = 0.0
        for k in phi0.modes:
            c = mode_content(phi0, k, unit, count)
            weight = np.sum(np.abs(c) ** 2, axis=0) * pg.dq / abs(k)
            for n in range(count):
                if abs(k) == 1 and n == 0:
                    ground += weight[n]
                else:
                    excited += weight[n] * math.exp(2 * (eigenvalue(k, n, unit) + TWO_PI) * tau)
        assert got == pytest.approx(math.sqrt(excited / ground), rel=1e-6)
        # the |k| = 2 ground modes alone leave exp(-3) of their weight behind
        assert got > 1e-4
