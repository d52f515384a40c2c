"""Oscillator spectra of smoothed operators and the Lamb-shift calibration."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc

from .constants import PhysicalConstants
from .core import ModelParams, PositionGrid
from .errors import ParameterError, RegimeWarning, ResolutionError
from .operators import CoulombPotential, harmonic, kernel_by_quadrature, kernel_by_symbol, position_observable

MHZ = 1e6


@dataclass(eq=False)
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    n: int
    domain: tuple[float, float]
    imag_residue: float = 0.0

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "N": self.n,
            "domain": list(self.domain),
            "imag_residue": self.imag_residue,
        }


def oscillator_shift(mass: float, omega: float, params: ModelParams) -> float:
    """sum_i h (b_i^2 + m^2 omega^2 a_i^2) / (8 pi a_i b_i m)."""
    a = np.asarray(params.a)
    b = np.asarray(params.b)
    return float(np.sum(params.h * (b**2 + mass**2 * omega**2 * a**2) / (8 * np.pi * a * b * mass)))


def oscillator_levels(mass: float, omega: float, params: ModelParams, count: int, remove_shift=False) -> np.ndarray:
    """(h/2pi) omega (n + 1/2) plus, unless removed, the smoothing shift (one coordinate)."""
    n = np.arange(count)
    levels = params.h / (2 * np.pi) * omega * (n + 0.5)
    return levels if remove_shift else levels + oscillator_shift(mass, omega, params)


def _check_resolution(mass, omega, params, grid: PositionGrid, count: int) -> None:
    hbar = params.h / (2 * np.pi)
    turning = math.sqrt((2 * count + 1) * hbar / (mass * omega))
    half = 0.5 * (grid.x[-1] - grid.x[0])
    pmax = math.sqrt((2 * count + 1) * hbar * mass * omega)
    nyquist = params.h / (2 * grid.dx)
    suggested = None
    if half < 2 * turning:
        suggested = int(2 ** math.ceil(math.log2(grid.n * 2 * turning / half)))
        raise ResolutionError(
            f"domain half-width {half:.4g} is below twice the turning point {turning:.4g} "
            f"of state {count - 1}; enlarge the domain (keeping dx) to N={suggested}",
            suggested,
        )
    if 3 * pmax > nyquist:
        suggested = int(2 ** math.ceil(math.log2(grid.n * 3 * pmax / nyquist)))
        raise ResolutionError(
            f"grid spacing {grid.dx:.4g} does not resolve momentum {pmax:.4g}; use N={suggested}",
            suggested,
        )


def oscillator_spectrum(
    mass: float,
    omega: float,
    params: ModelParams,
    grid: PositionGrid,
    count: int = 5,
    remove_shift: bool = False,
    method: str = "symbol",
    vectors: bool = False,
) -> SpectralResult:
    """Lowest ``count`` eigenvalues of A_f for f = p^2/2m + m omega^2 q^2/2.

    ``method`` selects the kernel route: ``symbol`` (closed-form smoothed
    symbol), ``quadrature`` (double integral), or ``fd`` (finite-difference
    Laplacian of the tagged differential form).
    """
    if count < 1:
        raise ParameterError("count must be positive")
    _check_resolution(mass, omega, params, grid, count)
    f = harmonic(mass, omega)
    if method == "symbol":
        op = kernel_by_symbol(f, params, grid, drop_constant=remove_shift)
        mat = op.matrix
    elif method == "quadrature":
        op = kernel_by_quadrature(f, params, grid)
        mat = (op.remove_constant() if remove_shift else op).matrix
    elif method == "fd":
        op = kernel_by_symbol(f, params, grid)
        mat = op.closed.matrix(grid, "fd", include_constant=not remove_shift)
    else:
        raise ValueError(f"unknown method {method!r}")
    herm = 0.5 * (mat + mat.conj().T)
    imag_residue = float(np.linalg.norm(mat - herm) / max(np.linalg.norm(mat), 1e-300))
    if vectors:
        w, v = np.linalg.eigh(herm)
        return SpectralResult(w[:count], v[:, :count], grid.n, (float(grid.x[0]), float(grid.x[-1])), imag_residue)
    w = np.linalg.eigvalsh(herm)
    return SpectralResult(w[:count], None, grid.n, (float(grid.x[0]), float(grid.x[-1])), imag_residue)


def free_particle_ground(mass: float, params: ModelParams, grid: PositionGrid) -> float:
    """Lowest eigenvalue of A_f for f = p^2 / 2m on ``grid``."""
    from .operators import PolynomialSymbol

    op = kernel_by_symbol(PolynomialSymbol({(0, 2): 1 / (2 * mass)}), params, grid)
    return float(np.linalg.eigvalsh(0.5 * (op.matrix + op.matrix.conj().T))[0])


# -- Lamb shift ---------------------------------------------------------------


@dataclass(frozen=True)
class LambEstimate:
    delta_e_erg: float
    delta_e_mhz: float
    a_over_b: float
    delta_q: float
    n: int
    constants: PhysicalConstants

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "delta_e_erg": self.delta_e_erg,
            "delta_e_mhz": self.delta_e_mhz,
            "a_over_b_s_per_g": self.a_over_b,
            "delta_q_cm": self.delta_q,
            "alpha": self.constants.alpha,
        }


def mhz_to_erg(nu_mhz: float, consts: PhysicalConstants) -> float:
    return nu_mhz * MHZ * consts.h


def erg_to_mhz(energy: float, consts: PhysicalConstants) -> float:
    return energy / (consts.h * MHZ)


def _lamb_scale(consts: PhysicalConstants, n: int) -> float:
    """m^3 alpha^4 c^4 / (n^3 hbar): shift per unit a/b."""
    if int(n) != n or n < 1:
        raise ParameterError("principal quantum number must be a positive integer")
    return consts.m**3 * consts.alpha**4 * consts.c_light**4 / (n**3 * consts.hbar)


def lamb_shift_forward(a_over_b: float, consts: PhysicalConstants | None = None, n: int = 2) -> float:
    """Level increment delta E_n in erg for a given a/b (s/g)."""
    consts = consts or PhysicalConstants()
    if a_over_b < 0:
        raise ParameterError("a/b must be nonnegative")
    return a_over_b * _lamb_scale(consts, n)


def delta_q(a_over_b: float, consts: PhysicalConstants) -> float:
    """Position smoothing width sqrt(h a / (4 pi b)) = sqrt(a hbar / 2b) in cm."""
    return math.sqrt(a_over_b * consts.hbar / 2)


def lamb_shift_inverse(delta_e: float, consts: PhysicalConstants | None = None, n: int = 2) -> LambEstimate:
    """Calibrate a/b from a measured shift ``delta_e`` (erg) of level ``n``."""
    consts = consts or PhysicalConstants()
    if not delta_e > 0:
        raise ParameterError("the level shift must be positive")
    ab = delta_e / _lamb_scale(consts, n)
    return LambEstimate(delta_e, erg_to_mhz(delta_e, consts), ab, delta_q(ab, consts), int(n), consts)


def lamb_params(a_over_b: float, consts: PhysicalConstants) -> ModelParams:
    """Isotropic three-dimensional model parameters with the given a/b."""
    return ModelParams(h=consts.h, a=a_over_b, b=1.0, n=3)


# -- first-order shift by quadrature -----------------------------------------


def hydrogen_density(n: int, l: int, r, a0: float) -> np.ndarray:
    """Angle-averaged |psi_nl|^2 of hydrogen for (n, l) in {(1,0), (2,0), (2,1)}."""
    r = np.asarray(r, dtype=float)
    x = r / a0
    if (n, l) == (1, 0):
        return np.exp(-2 * x) / (np.pi * a0**3)
    if (n, l) == (2, 0):
        return (2 - x) ** 2 * np.exp(-x) / (32 * np.pi * a0**3)
    if (n, l) == (2, 1):
        return x**2 * np.exp(-x) / (32 * np.pi * a0**3) / 3.0
    raise ParameterError(f"closed-form density available for n <= 2 only, got (n, l) = ({n}, {l})")


def closed_form_shift(n: int, a_over_b: float, consts: PhysicalConstants, l: int = 0) -> float:
    """(a h e^2 / 2b) rho_n(0); zero for l > 0."""
    rho0 = hydrogen_density(n, l, 0.0, consts.bohr_radius)
    return float(a_over_b * consts.h * consts.e2 / 2 * rho0)


def perturbative_shift(
    n: int,
    params: ModelParams,
    consts: PhysicalConstants | None = None,
    l: int = 0,
    density=None,
    separation: float = 100.0,
) -> float:
    """First-order shift int rho_n (V-bar - V) d^3x for V = -e^2/r.

    V-bar comes from :func:`position_observable`.  ``density`` overrides the
    closed-form hydrogen density with any radial callable rho(r).  Warns with
    :class:`RegimeWarning` when the smoothing width is within a factor
    ``separation`` of the Bohr radius.
    """
    consts = consts or PhysicalConstants()
    a0 = consts.bohr_radius
    sigma = math.sqrt(float(params.position_variance[0]))
    if a0 / sigma < separation:
        warnings.warn(
            f"smoothing width {sigma:.3g} cm is not much smaller than the atomic radius {a0:.3g} cm; "
            "the second-order Taylor regime does not hold",
            RegimeWarning,
            stacklevel=2,
        )
    rho = density if density is not None else (lambda r: hydrogen_density(n, l, r, a0))
    coulomb = CoulombPotential(consts.e2)

    def integrand(r):
        vbar = position_observable(coulomb, params, np.atleast_1d(r))[0]
        return 4 * np.pi * r**2 * rho(r) * (vbar + consts.e2 / r)

    # V-bar - V = e^2 erfc(r / (sigma sqrt 2)) / r is negligible beyond ~40 sigma
    upper = 40 * sigma
    total = 0.0
    edges = np.linspace(0.0, upper, 9)
    with warnings.catch_warnings():
        # V-bar + e^2/r loses digits to cancellation in the far tail, where it is negligible
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(integrand, lo if lo > 0 else 1e-300, hi, epsabs=0, epsrel=1e-10, limit=200)
            total += val
    return float(total)


def shift_radial_oracle(n: int, l: int, sigma: float, consts: PhysicalConstants, points: int = 4001) -> float:
    """Composite Simpson integral of 4 pi r e^2 erfc(r / sigma sqrt2) rho(r); independent of
    :func:`position_observable`."""
    r = np.linspace(0.0, 40 * sigma, points)
    rho = hydrogen_density(n, l, r, consts.bohr_radius)
    f = 4 * np.pi * r * consts.e2 * erfc(r / (sigma * math.sqrt(2))) * rho
    return float(integrate.simpson(f, x=r))
