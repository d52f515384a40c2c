"""Wave functions and the coherent averaging transforms.

``synthesize`` maps a wave function psi(x) to the averaged amplitude on the
extended phase space; ``extract`` maps an amplitude back to psi.  Both are
evaluated by rectangle-rule quadrature on uniform grids.  On a phase grid
built by :meth:`PhaseGrid.from_position` the p sum inverts the phase factor
exactly, so ``extract(synthesize(psi)) == psi`` up to the q quadrature of a
Gaussian (spectrally accurate) and roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ExtendedAmplitude, ModelParams, PhaseGrid, PositionGrid
from .errors import GridMismatchError, ParameterError


@dataclass(eq=False)
class WaveFunction:
    """Complex samples of psi on a position grid (the t = 0 fiber slice).

    Under fiber rotation the represented function picks up the factor
    exp(-j 2 pi t / h), so it lives in the k = -1 fiber sector.
    """

    values: np.ndarray
    grid: PositionGrid

    FIBER_INDEX = -1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n,):
            raise GridMismatchError(f"values shape {self.values.shape} does not match grid size {self.grid.n}")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("wave function contains non-finite samples")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.dx))

    def inner(self, other: "WaveFunction") -> complex:
        """Complex pairing  int conj(self) * other dx."""
        self._same_grid(other)
        return complex(np.sum(np.conj(self.values) * other.values) * self.grid.dx)

    def real_inner(self, other: "WaveFunction") -> float:
        """Real pairing Re int self * conj(other) dx used by the quadratic forms."""
        self._same_grid(other)
        return float(np.real(np.sum(self.values * np.conj(other.values))) * self.grid.dx)

    def normalized(self) -> "WaveFunction":
        nrm = self.norm()
        if nrm == 0:
            raise ParameterError("cannot normalize the zero wave function")
        return WaveFunction(self.values / nrm, self.grid)

    def distance(self, other: "WaveFunction") -> float:
        self._same_grid(other)
        return float(np.sqrt(np.sum(np.abs(self.values - other.values) ** 2) * self.grid.dx))

    def _same_grid(self, other):
        if not self.grid.same_as(other.grid):
            raise GridMismatchError("wave functions live on different grids")

    def __add__(self, other):
        self._same_grid(other)
        return WaveFunction(self.values + other.values, self.grid)

    def __sub__(self, other):
        self._same_grid(other)
        return WaveFunction(self.values - other.values, self.grid)

    def __mul__(self, c):
        return WaveFunction(c * self.values, self.grid)

    __rmul__ = __mul__


class AveragedAmplitude(ExtendedAmplitude):
    """Amplitude whose only modes are k = -1 and k = +1 = conj(k = -1)."""

    def __init__(self, minus_one: np.ndarray, grid: PhaseGrid, k_trunc: int = 3):
        super().__init__({-1: minus_one, 1: np.conj(minus_one)}, grid, k_trunc)


def window_matrix(q: np.ndarray, x: np.ndarray, h: float, ratio: float) -> np.ndarray:
    """G[i, l] = exp(-(pi/h) (b/a) (q_i - x_l)^2)."""
    return np.exp(-(np.pi / h) * ratio * (q[:, None] - x[None, :]) ** 2)


def phase_matrix(x: np.ndarray, p: np.ndarray, h: float) -> np.ndarray:
    """E[l, m] = exp(-j 2 pi p_m x_l / h)."""
    return np.exp(-2j * np.pi * np.outer(x, p) / h)


def synthesize(psi: WaveFunction, params: ModelParams, grid: PhaseGrid) -> AveragedAmplitude:
    """Averaged amplitude generated by ``psi``.

    phi_{-1}(q, p) = C int exp(-(pi/h)(b/a)(q - x)^2) psi(x) exp(-j 2 pi p x / h) dx,
    C = (1/sqrt 2) (2/h^3)^(1/4) (b/a)^(1/4), and phi_{+1} = conj(phi_{-1}), so
    that on the fiber slice T_t the amplitude is the real function
    phi_{-1} e^{-j 2 pi t/h} + c.c.
    """
    h, a, b = params.scalar()
    s = b / a
    grid.check_coverage(params, psi.grid)
    grid.locate(psi.grid)
    x = psi.grid.x
    pref = (1 / np.sqrt(2)) * (2 / h**3) ** 0.25 * s**0.25
    gw = window_matrix(grid.q, x, h, s) * (psi.values * psi.grid.dx)[None, :]
    minus_one = pref * (gw @ phase_matrix(x, grid.p, h))
    return AveragedAmplitude(minus_one, grid)


def extract(phi: ExtendedAmplitude, params: ModelParams, out_grid: PositionGrid) -> WaveFunction:
    """Wave function carried by the k = -1 fiber sector of ``phi``.

    psi(x) = sqrt2 (1/h) (2/h^3)^(1/4) (b/a)^(1/4)
             int_0^h int phi(q,p,T_t) e^{j 2 pi t/h} G(q - x) e^{j 2 pi p x/h} dq dp dt.
    The t integral equals h * phi_{-1}(q, p).
    """
    h, a, b = params.scalar()
    s = b / a
    if phi.k_trunc < 1:
        raise ParameterError("amplitude truncation excludes the k = -1 mode")
    grid = phi.grid
    if not grid.is_dual(h):
        raise GridMismatchError(
            "p axis is not the Fourier dual of the q spacing (dp * Np * dq != h); "
            "build it with PhaseGrid.from_position"
        )
    grid.check_coverage(params, out_grid)
    grid.locate(out_grid)
    fiber_integral = h * phi.mode(-1)
    x = out_grid.x
    pref = np.sqrt(2) * (1 / h) * (2 / h**3) ** 0.25 * s**0.25
    inner = (fiber_integral @ np.conj(phase_matrix(x, grid.p, h))) * grid.dp
    values = pref * np.sum(window_matrix(grid.q, x, h, s) * inner, axis=0) * grid.dq
    return WaveFunction(values, out_grid)


def project(phi: ExtendedAmplitude, params: ModelParams, position_grid: PositionGrid) -> AveragedAmplitude:
    """Averaging projector: synthesize(extract(phi))."""
    return synthesize(extract(phi, params, position_grid), params, phi.grid)
