"""Diffusive averaging of amplitudes on the extended phase space.

Each fiber mode phi_k (k != 0) is carried to the mixed (q, x) representation

    phihat_k(q, x) = (|k|/h)^(1/2) int phi_k(q, p) exp(-j 2 pi k p x / h) dp,

in which the averaging generator becomes, for every fixed x, the harmonic
operator a^2 d^2/dq^2 - b^2 (2 pi k / h)^2 (q - x)^2.  Its eigenfunctions are
Hermite functions of (q - x) / l_k, l_k = sqrt(h a / (2 pi |k| b)), with
eigenvalues -(2 pi |k| a b / h)(2 n + 1).  The spectral integrator multiplies
Hermite coefficients by exp(lambda tau); the finite-difference integrator
steps the same equation explicitly on the (q, x) grid.  The k = 0 mode obeys
the plain heat equation and is propagated exactly in Fourier space.

On a dual phase grid the p -> x map above is an exact discrete Fourier pair
when x is sampled with spacing dq / |k| over len(p) points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ExtendedAmplitude, ModelParams, PhaseGrid, PositionGrid
from .errors import (
    GridMismatchError,
    InsufficientSignalError,
    ParameterError,
    StabilityError,
    TruncationError,
)
from .states import hermite_functions, random_state
from .transform import WaveFunction, synthesize

INTEGRATORS = ("spectral-hermite", "finite-difference")
SIGNAL_FLOOR = 1e-12
MIN_SAMPLES = 5


@dataclass(frozen=True)
class DiffusionSpec:
    """Settings of one averaging run.

    ``dtau`` is only used by the finite-difference integrator; ``None`` picks
    half the stability bound.  Samples are taken at ``samples`` equally
    spaced times in [0, tau_end].
    """

    params: ModelParams
    tau_end: float
    integrator: str = "spectral-hermite"
    dtau: float | None = None
    samples: int = 11
    n_hermite: int = 32
    truncation_tol: float = 1e-10
    require_mean_zero: bool = False

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ParameterError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if not self.tau_end > 0:
            raise ParameterError("tau_end must be positive")
        if self.dtau is not None and not self.dtau > 0:
            raise ParameterError("dtau must be positive")
        if self.samples < 2:
            raise ParameterError("need at least two sample times")
        if self.n_hermite < 1:
            raise ParameterError("n_hermite must be positive")
        self.params.scalar()

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.tau_end, self.samples)

    def second_moments(self, dtau: float) -> tuple[float, float]:
        """Variances (2 a^2 dtau, 2 b^2 dtau) of the shift kernel over one step."""
        _, a, b = self.params.scalar()
        return 2 * a**2 * dtau, 2 * b**2 * dtau

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "tau_end": self.tau_end,
            "integrator": self.integrator,
            "dtau": self.dtau,
            "samples": self.samples,
            "n_hermite": self.n_hermite,
            "truncation_tol": self.truncation_tol,
        }


def eigenvalue(k: int, levels, params: ModelParams) -> float:
    """lambda_{k, k_1..k_n} = -sum_i (2 pi |k| a_i b_i / h)(2 k_i + 1)."""
    levels = np.broadcast_to(np.asarray(levels), (params.n,))
    a = np.asarray(params.a)
    b = np.asarray(params.b)
    return float(-np.sum(2 * np.pi * abs(k) * a * b / params.h * (2 * levels + 1)))


@dataclass(eq=False)
class ModeEvolution:
    """Hermite-coefficient norms per (k, n) with the matching eigenvalues."""

    times: np.ndarray
    eigenvalues: dict
    norms: dict = field(default_factory=dict)
    truncation: dict = field(default_factory=dict)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    amplitudes: list
    spec: DiffusionSpec
    modes: ModeEvolution
    dtau: float | None = None

    def mode_norms(self, k: int) -> np.ndarray:
        return np.array([phi.mode_norm(k) if phi.has_mode(k) else 0.0 for phi in self.amplitudes])

    @property
    def fiber_modes(self) -> list[int]:
        return sorted(self.amplitudes[0].modes)

    def renormalized(self, i: int) -> ExtendedAmplitude:
        """Amplitude at sample ``i`` multiplied by exp(+tau * ground rate)."""
        return self.amplitudes[i] * math.exp(self.times[i] * self.spec.params.ground_rate)


# -- the (q, x) representation ------------------------------------------------


def x_axis(grid: PhaseGrid, k: int) -> np.ndarray:
    """x samples paired with mode k: spacing dq/|k|, len(p) points, centred on q."""
    n_p = grid.p.size
    centre = grid.q[grid.q.size // 2]
    return centre + (np.arange(n_p) - n_p // 2) * grid.dq / abs(k)


def _fourier_matrix(grid: PhaseGrid, k: int, h: float) -> np.ndarray:
    return np.exp(-2j * np.pi * k * np.outer(grid.p, x_axis(grid, k)) / h)


def to_mixed(field_k: np.ndarray, grid: PhaseGrid, k: int, h: float) -> np.ndarray:
    """phi_k(q, p) -> phihat_k(q, x) on :func:`x_axis`."""
    return math.sqrt(abs(k) / h) * grid.dp * (field_k @ _fourier_matrix(grid, k, h))


def from_mixed(mixed: np.ndarray, grid: PhaseGrid, k: int, h: float) -> np.ndarray:
    """Inverse of :func:`to_mixed`."""
    dx = grid.dq / abs(k)
    return math.sqrt(abs(k) / h) * dx * (mixed @ np.conj(_fourier_matrix(grid, k, h)).T)


def hermite_scale(k: int, params: ModelParams) -> float:
    """l_k = sqrt(h a / (2 pi |k| b)); the ground function is exp(-(q - x)^2 / 2 l_k^2)."""
    h, a, b = params.scalar()
    return math.sqrt(h * a / (2 * np.pi * abs(k) * b))


def hermite_basis(grid: PhaseGrid, k: int, params: ModelParams, count: int) -> np.ndarray:
    """B[l, i, n] = normalized n-th eigenfunction in q, centred at x_l."""
    ell = hermite_scale(k, params)
    u = (grid.q[None, :] - x_axis(grid, k)[:, None]) / ell
    return np.moveaxis(hermite_functions(count, u), 0, -1) / math.sqrt(ell)


def hermite_coefficients(mixed: np.ndarray, basis: np.ndarray, dq: float) -> np.ndarray:
    """c[l, n] = sqrt2 int phihat(q, x_l) B_n(q, x_l) dq."""
    return math.sqrt(2) * np.einsum("il,lin->ln", mixed, basis) * dq


def hermite_series(coeff: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """(1/sqrt2) sum_n c[l, n] B[l, :, n], returned as [q, l]."""
    return np.einsum("ln,lin->il", coeff, basis) / math.sqrt(2)


def _check_resolution(grid: PhaseGrid, k: int, params: ModelParams, count: int) -> None:
    # highest retained Hermite function oscillates with wavenumber ~ sqrt(2n+1)/l
    ell = hermite_scale(k, params)
    if math.sqrt(2 * count + 1) / ell > 0.9 * math.pi / grid.dq:
        raise GridMismatchError(
            f"q spacing {grid.dq:.3g} does not resolve {count} Hermite functions for |k|={abs(k)}; "
            "refine the grid or lower n_hermite"
        )


def mode_content(phi: ExtendedAmplitude, k: int, params: ModelParams, count: int) -> np.ndarray:
    """Hermite coefficients c_{k,n}(x) of fiber mode k; shape (len(x), count)."""
    grid = phi.grid
    basis = hermite_basis(grid, k, params, count)
    return hermite_coefficients(to_mixed(phi.mode(k), grid, k, params.h), basis, grid.dq)


# -- evolution -----------------------------------------------------------------


def _heat_exact(field0: np.ndarray, grid: PhaseGrid, params: ModelParams, tau: float) -> np.ndarray:
    _, a, b = params.scalar()
    wq = 2 * np.pi * np.fft.fftfreq(grid.q.size, grid.dq)
    wp = 2 * np.pi * np.fft.fftfreq(grid.p.size, grid.dp)
    damp = np.exp(-(a**2 * wq[:, None] ** 2 + b**2 * wp[None, :] ** 2) * tau)
    return np.fft.ifft2(np.fft.fft2(field0) * damp)


def stability_bound(grid: PhaseGrid, params: ModelParams, ks) -> float:
    """Largest stable explicit-Euler step for the (q, x) equation of all modes in ``ks``.

    The discrete generator has spectrum inside [-(4 a^2/dq^2 + b^2 kappa^2 d^2), 0],
    d = max |q - x|, kappa = 2 pi k / h, and forward Euler needs dtau * |lambda| <= 2.
    """
    _, a, b = params.scalar()
    worst = 0.0
    for k in ks:
        if k == 0:
            continue
        x = x_axis(grid, k)
        d = max(abs(grid.q[-1] - x[0]), abs(x[-1] - grid.q[0]))
        kappa = 2 * np.pi * k / params.h
        worst = max(worst, 4 * a**2 / grid.dq**2 + b**2 * kappa**2 * d**2)
    return math.inf if worst == 0.0 else 2.0 / worst


def _fd_step_count(spec: DiffusionSpec, bound: float) -> tuple[int, float]:
    interval = spec.tau_end / (spec.samples - 1)
    dtau = spec.dtau if spec.dtau is not None else 0.5 * bound
    if dtau > bound:
        raise StabilityError(
            f"dtau = {dtau:.3g} exceeds the explicit stability bound {bound:.3g}; use dtau <= {bound:.3g}"
        )
    per_sample = max(1, int(math.ceil(interval / dtau - 1e-9)))
    return per_sample, interval / per_sample


def evolve(phi0: ExtendedAmplitude, spec: DiffusionSpec) -> Trajectory:
    """Averaged amplitude at ``spec.times`` starting from ``phi0``."""
    params = spec.params
    h = params.h
    grid = phi0.grid
    if not grid.is_dual(h):
        raise GridMismatchError("evolve needs a dual phase grid (build it with PhaseGrid.from_position)")
    if spec.require_mean_zero and phi0.has_mode(0) and phi0.mode_norm(0) > 0.0:
        raise ParameterError("the k = 0 fiber mode is nonzero; the mean-zero hypothesis fails")
    times = spec.times
    ks = sorted(phi0.modes)
    count = spec.n_hermite
    evo = ModeEvolution(times, {})
    series: dict[int, list[np.ndarray]] = {}
    dtau_used = None
    bound = stability_bound(grid, params, ks) if spec.integrator == "finite-difference" else None
    if bound is not None:
        per_sample, dtau_used = _fd_step_count(spec, bound)

    for k in ks:
        f0 = phi0.mode(k)
        if k == 0:
            series[k] = [_heat_exact(f0, grid, params, t) for t in times]
            continue
        _check_resolution(grid, k, params, count)
        basis = hermite_basis(grid, k, params, count)
        mixed0 = to_mixed(f0, grid, k, h)
        c0 = hermite_coefficients(mixed0, basis, grid.dq)
        residual0 = mixed0 - hermite_series(c0, basis)
        scale = math.sqrt(np.sum(np.abs(mixed0) ** 2) * grid.dq * grid.dq / abs(k))
        tail = float(np.linalg.norm(c0[:, -1]) / max(np.linalg.norm(c0), 1e-300))
        rel_resid = float(np.sqrt(np.sum(np.abs(residual0) ** 2) * grid.dq * grid.dq / abs(k)) / max(scale, 1e-300))
        evo.truncation[k] = {"highest_coefficient": tail, "residual": rel_resid}
        if scale > 0 and max(tail, rel_resid) > spec.truncation_tol:
            raise TruncationError(
                f"mode k={k}: Hermite truncation error {max(tail, rel_resid):.2e} exceeds "
                f"{spec.truncation_tol:.0e}; raise n_hermite above {count}"
            )
        lam = np.array([eigenvalue(k, n, params) for n in range(count)])
        for n in range(count):
            evo.eigenvalues[(k, n)] = float(lam[n])
        dx = grid.dq / abs(k)
        if spec.integrator == "spectral-hermite":
            out, norms = [], []
            lam_tail = eigenvalue(k, count, params)
            for t in times:
                c = c0 * np.exp(lam * t)[None, :]
                mixed = hermite_series(c, basis) + residual0 * math.exp(lam_tail * t)
                out.append(from_mixed(mixed, grid, k, h))
                norms.append(np.sqrt(np.sum(np.abs(c) ** 2, axis=0) * dx))
        else:
            out, norms = _fd_run(mixed0, grid, k, params, basis, per_sample, dtau_used, len(times))
        series[k] = out
        norms = np.array(norms)
        for n in range(count):
            evo.norms[(k, n)] = norms[:, n]

    amps = [phi0.copy_with({k: series[k][i] for k in ks}) for i in range(len(times))]
    return Trajectory(times, amps, spec, evo, dtau_used)


def _fd_run(mixed0, grid, k, params, basis, per_sample, dtau, n_samples):
    h, a, b = params.scalar()
    kappa = 2 * np.pi * k / h
    x = x_axis(grid, k)
    potential = (b * kappa) ** 2 * (grid.q[:, None] - x[None, :]) ** 2
    coef = a**2 / grid.dq**2
    dx = grid.dq / abs(k)
    u = mixed0.copy()
    out, norms = [], []

    def record(v):
        out.append(from_mixed(v, grid, k, h))
        c = hermite_coefficients(v, basis, grid.dq)
        norms.append(np.sqrt(np.sum(np.abs(c) ** 2, axis=0) * dx))

    record(u)
    for _ in range(n_samples - 1):
        for _ in range(per_sample):
            lap = -2.0 * u
            lap[1:] += u[:-1]
            lap[:-1] += u[1:]
            u = u + dtau * (coef * lap - potential * u)
            u[0] = 0.0
            u[-1] = 0.0
        record(u)
    return out, norms


# -- decay rates -----------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    rate: float
    residual: float
    samples: int
    expected: float | None = None

    @property
    def relative_error(self) -> float | None:
        if self.expected is None:
            return None
        return abs(self.rate - self.expected) / abs(self.expected)

    def to_dict(self) -> dict:
        return {"rate": self.rate, "residual": self.residual, "samples": self.samples, "expected": self.expected}


def fit_rate(times, norms, tmin: float | None = None, tmax: float | None = None) -> DecayFit:
    """Least-squares slope of log(norm) against time, as a positive decay rate."""
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    keep = norms > SIGNAL_FLOOR
    if tmin is not None:
        keep &= times >= tmin
    if tmax is not None:
        keep &= times <= tmax
    if np.count_nonzero(keep) < MIN_SAMPLES:
        raise InsufficientSignalError(
            f"only {np.count_nonzero(keep)} samples above {SIGNAL_FLOOR:g}; need {MIN_SAMPLES}"
        )
    t = times[keep]
    y = np.log(norms[keep])
    slope, icpt = np.polyfit(t, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * t + icpt)) ** 2)))
    return DecayFit(float(-slope), resid, int(t.size))


def measure_decay(
    traj: Trajectory,
    by: str = "fiber",
    tmin: float | None = None,
    tmax: float | None = None,
) -> dict:
    """Fitted decay rate per fiber mode k (``by="fiber"``) or per Hermite
    mode (k, n) (``by="hermite"``).  Modes that are zero throughout are
    skipped; an error is raised if no mode carries signal."""
    fits = {}
    if by == "fiber":
        series = {k: traj.mode_norms(k) for k in traj.fiber_modes}
    elif by == "hermite":
        series = traj.modes.norms
    else:
        raise ValueError("by must be 'fiber' or 'hermite'")
    for key, norms in series.items():
        if norms[0] <= SIGNAL_FLOOR:
            continue
        fit = fit_rate(traj.times, norms, tmin, tmax)
        expected = None
        if by == "hermite":
            expected = -traj.modes.eigenvalues[key]
        fits[key] = DecayFit(fit.rate, fit.residual, fit.samples, expected)
    if not fits:
        raise InsufficientSignalError("trajectory carries no signal above the floor")
    return fits


# -- asymptotic state ------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticState:
    """Surviving wave function and its decay rate sum_i 2 pi a_i b_i / h."""

    psi: WaveFunction
    rate: float

    def factor(self, tau: float) -> float:
        return math.exp(-self.rate * tau)

    def __iter__(self):
        return iter((self.psi, self.rate))


def ground_function(grid: PhaseGrid, params: ModelParams) -> np.ndarray:
    """Normed eigenfunction (2/h)^(1/4) (b/a)^(1/4) exp(-(pi/h)(b/a)(q - x)^2), indexed [l, q]."""
    h, a, b = params.scalar()
    s = b / a
    x = x_axis(grid, -1)
    return (2 / h) ** 0.25 * s**0.25 * np.exp(-(np.pi / h) * s * (grid.q[None, :] - x[:, None]) ** 2)


def asymptotic_state(
    phi0: ExtendedAmplitude,
    spec: DiffusionSpec,
    out_grid: PositionGrid | None = None,
) -> AsymptoticState:
    """psi(x) = c_{-1,0}(0, x) = sqrt2 int phihat_{-1}(q, x) phihat_{-1,0}(q, x) dq.

    ``out_grid`` defaults to the x axis of the k = -1 mode; otherwise it must
    be a contiguous run of that axis.
    """
    params = spec.params
    h = params.h
    grid = phi0.grid
    if not grid.is_dual(h):
        raise GridMismatchError("asymptotic_state needs a dual phase grid")
    if spec.require_mean_zero and phi0.has_mode(0) and phi0.mode_norm(0) > 0.0:
        raise ParameterError("the k = 0 fiber mode is nonzero; the mean-zero hypothesis fails")
    x = x_axis(grid, -1)
    if phi0.has_mode(-1):
        mixed = to_mixed(phi0.mode(-1), grid, -1, h)
        c = math.sqrt(2) * np.sum(mixed.T * ground_function(grid, params), axis=1) * grid.dq
    else:
        c = np.zeros(x.size, dtype=complex)
    full = PositionGrid(x)
    if out_grid is None:
        return AsymptoticState(WaveFunction(c, full), params.ground_rate)
    i0 = int(round((out_grid.x[0] - x[0]) / grid.dq))
    if i0 < 0 or i0 + out_grid.n > x.size or not np.allclose(x[i0 : i0 + out_grid.n], out_grid.x, atol=1e-9 * grid.dq):
        raise GridMismatchError("out_grid is not a contiguous run of the k = -1 x axis")
    return AsymptoticState(WaveFunction(c[i0 : i0 + out_grid.n], out_grid), params.ground_rate)


# -- initial amplitudes ------------------------------------------------------------


def hermite_mode(
    grid: PhaseGrid,
    params: ModelParams,
    k: int,
    n: int,
    coefficient: np.ndarray,
) -> np.ndarray:
    """phi_k(q, p) whose mixed form is (1/sqrt2) c(x) phihat_{k,n}(q, x).

    ``coefficient`` is sampled on :func:`x_axis` for this k.
    """
    coefficient = np.asarray(coefficient, dtype=complex)
    basis = hermite_basis(grid, k, params, n + 1)[:, :, n]
    mixed = (basis * coefficient[:, None]).T / math.sqrt(2)
    return from_mixed(mixed, grid, k, params.h)


def real_amplitude(grid: PhaseGrid, negative: dict, k_trunc: int | None = None) -> ExtendedAmplitude:
    """Amplitude with the given k < 0 modes and k > 0 modes set to their conjugates."""
    modes = {}
    for k, f in negative.items():
        if k >= 0:
            raise ParameterError("give the negative-k modes only")
        modes[k] = f
        modes[-k] = np.conj(f)
    kt = k_trunc if k_trunc is not None else max(max(abs(k) for k in modes), 3)
    return ExtendedAmplitude(modes, grid, kt)


def _envelope(grid: PhaseGrid, k: int, params: ModelParams, center: float = 0.0, width: float = 1.0):
    x = x_axis(grid, k)
    return np.exp(-0.5 * ((x - center) / width) ** 2) / (math.pi**0.25 * math.sqrt(width))


NAMED_MODES = ("k1-ground", "k1-n1", "k1-n2", "k2-ground", "k2-n1", "synthesized", "random")


def named_initial(
    name: str,
    position_grid: PositionGrid,
    params: ModelParams,
    seed: int = 0,
    phase_grid: PhaseGrid | None = None,
) -> ExtendedAmplitude:
    """Initial amplitudes for diffusion runs.

    ``k<K>-ground`` / ``k<K>-n<N>``: pure Hermite mode (k = -K, n = N) with a
    Gaussian envelope in x, plus its conjugate at k = +K.  ``synthesized``:
    synthesize of a seeded random wave function.  ``random``: seeded generic
    amplitude with ground and excited content in |k| = 1 and |k| = 2.
    """
    grid = phase_grid if phase_grid is not None else PhaseGrid.from_position(position_grid, params)
    if name.startswith("k") and "-" in name:
        head, tail = name.split("-", 1)
        kk = int(head[1:])
        n = 0 if tail == "ground" else int(tail.lstrip("n"))
        return real_amplitude(grid, {-kk: hermite_mode(grid, params, -kk, n, _envelope(grid, -kk, params))})
    rng = np.random.default_rng(seed)
    if name == "synthesized":
        psi = random_state(position_grid, rng, center=rng.uniform(-1, 1))
        return synthesize(psi, params, grid)
    if name == "random":
        return random_amplitude(grid, params, rng)
    raise ValueError(f"unknown initial mode {name!r}; expected one of {NAMED_MODES}")


def random_amplitude(
    grid: PhaseGrid,
    params: ModelParams,
    rng: np.random.Generator,
    levels: int = 4,
    weights=(1.0, 0.6),
) -> ExtendedAmplitude:
    """Real amplitude with zero fiber mean and O(1) content in every retained
    Hermite level n < ``levels`` of the |k| = 1 and |k| = 2 modes.

    Each level carries an independent random smooth envelope c_{k,n}(x) with
    norm drawn from [0.5, 1.5] times the block weight; ``weights`` scales the
    |k| = 1 and |k| = 2 blocks.
    """
    negative = {}
    for kk, w in zip((1, 2), weights):
        k = -kk
        x = x_axis(grid, k)
        field_k = np.zeros(grid.shape, dtype=complex)
        for n in range(levels):
            env = random_state(PositionGrid(x), rng, n_max=4, width=1.0, center=rng.uniform(-1, 1)).values
            scale = w * (0.5 + rng.uniform())
            field_k += scale * hermite_mode(grid, params, k, n, env)
        negative[k] = field_k
    return real_amplitude(grid, negative)
