"""Nonnegative phase-space density of a wave function and the Wigner comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ModelParams, PhaseGrid
from .transform import WaveFunction, phase_matrix, window_matrix


@dataclass(eq=False)
class PhaseSpaceDensity:
    values: np.ndarray
    grid: PhaseGrid

    @property
    def norm(self) -> float:
        return float(np.sum(self.values) * self.grid.cell)

    @property
    def minimum(self) -> float:
        return float(np.min(self.values))

    def expectation(self, f) -> float:
        """Integral of f(q, p) * rho over the grid; ``f`` is a callable or an array."""
        fv = _symbol_values(f, self.grid)
        return float(np.sum(fv * self.values) * self.grid.cell)

    def q_marginal(self) -> np.ndarray:
        return np.sum(self.values, axis=1) * self.grid.dp

    def p_marginal(self) -> np.ndarray:
        return np.sum(self.values, axis=0) * self.grid.dq


@dataclass(eq=False)
class WignerDensity(PhaseSpaceDensity):
    """Wigner quasidistribution on a phase grid; may be negative."""


def _symbol_values(f, grid: PhaseGrid) -> np.ndarray:
    if callable(f):
        qq, pp = np.meshgrid(grid.q, grid.p, indexing="ij")
        return np.broadcast_to(np.asarray(f(qq, pp), dtype=float), grid.shape)
    arr = np.asarray(f, dtype=float)
    if arr.shape != grid.shape:
        raise ValueError(f"symbol samples have shape {arr.shape}, grid is {grid.shape}")
    return arr


def _zero_extended(psi: WaveFunction, grid: PhaseGrid) -> np.ndarray:
    i0 = grid.locate(psi.grid)
    out = np.zeros(grid.q.size, dtype=complex)
    out[i0 : i0 + psi.grid.n] = psi.values
    return out


def density_from_wavefunction(psi: WaveFunction, params: ModelParams, grid: PhaseGrid) -> PhaseSpaceDensity:
    """rho(q, p) = (2/h^3)^(1/2) (b/a)^(1/2) |int G(q - x) psi(x) exp(-j 2 pi p x / h) dx|^2.

    The double (x, x') integral of the defining formula factorises into this
    squared modulus, which makes the result nonnegative by construction.
    """
    h, a, b = params.scalar()
    s = b / a
    grid.check_coverage(params, psi.grid)
    grid.locate(psi.grid)
    x = psi.grid.x
    amp = (window_matrix(grid.q, x, h, s) * (psi.values * psi.grid.dx)[None, :]) @ phase_matrix(x, grid.p, h)
    rho = np.sqrt(2 / h**3) * np.sqrt(s) * np.abs(amp) ** 2
    return PhaseSpaceDensity(rho, grid)


def density_double_integral(
    psi: WaveFunction,
    params: ModelParams,
    q: np.ndarray,
    p: np.ndarray,
) -> np.ndarray:
    """Direct evaluation of the (x, x') double integral at the points (q_i, p_i).

    Slow; meant as an independent check of :func:`density_from_wavefunction`.
    """
    h, a, b = params.scalar()
    s = b / a
    x = psi.grid.x
    dx = psi.grid.dx
    pref = np.sqrt(2 / h**3) * np.sqrt(s)
    out = np.empty(len(q))
    dxx = x[:, None] - x[None, :]
    outer = np.conj(psi.values)[:, None] * psi.values[None, :]
    for i, (qi, pi) in enumerate(zip(q, p)):
        g = np.exp(-(np.pi / h) * s * (qi - x) ** 2)
        integrand = g[:, None] * g[None, :] * np.exp(2j * np.pi * pi * dxx / h) * outer
        out[i] = pref * np.real(np.sum(integrand)) * dx * dx
    return out


def _upsample2(values: np.ndarray) -> np.ndarray:
    """Band-limited interpolation onto a grid of half the spacing (even and odd
    samples alternate, the even ones being the input)."""
    n = values.size
    spec = np.fft.fft(values)
    padded = np.zeros(2 * n, dtype=complex)
    half = n // 2
    padded[:half] = spec[:half]
    padded[-(n - half) + (1 if n % 2 == 0 else 0) :] = spec[half + (1 if n % 2 == 0 else 0) :]
    if n % 2 == 0:
        padded[half] = 0.5 * spec[half]
        padded[-half] = 0.5 * spec[half]
    return 2 * np.fft.ifft(padded)


def wigner(psi: WaveFunction, params: ModelParams, grid: PhaseGrid) -> WignerDensity:
    """W(q, p) = (1/h) int conj(psi(q + y/2)) psi(q - y/2) exp(j 2 pi p y / h) dy.

    psi is interpolated to half the grid spacing so that the y step equals
    dq and the result is free of aliasing on the dual p axis.
    """
    h, _, _ = params.scalar()
    grid.check_coverage(params, psi.grid)
    full = _zero_extended(psi, grid)
    fine = _upsample2(full)  # fine[2i] == full[i]
    nf = fine.size
    nq = grid.q.size
    kmax = nf - 1
    ks = np.arange(-kmax, kmax + 1)
    centre = 2 * np.arange(nq)
    plus = centre[:, None] + ks[None, :]
    minus = centre[:, None] - ks[None, :]
    valid = (plus >= 0) & (plus < nf) & (minus >= 0) & (minus < nf)
    corr = np.where(
        valid,
        np.conj(fine[np.clip(plus, 0, nf - 1)]) * fine[np.clip(minus, 0, nf - 1)],
        0.0,
    )
    # y = 2 k (dq/2) = k dq
    phase = np.exp(2j * np.pi * np.outer(ks * grid.dq, grid.p) / h)
    w = (corr @ phase) * grid.dq / h
    return WignerDensity(np.real(w), grid)


def gaussian_smooth(values: np.ndarray, grid: PhaseGrid, params: ModelParams) -> np.ndarray:
    """Convolve with the normalized Gaussian of variances (h a/(4 pi b), h b/(4 pi a))."""
    vq = float(params.position_variance[0])
    vp = float(params.momentum_variance[0])
    gq = np.exp(-((grid.q[:, None] - grid.q[None, :]) ** 2) / (2 * vq)) / np.sqrt(2 * np.pi * vq) * grid.dq
    gp = np.exp(-((grid.p[:, None] - grid.p[None, :]) ** 2) / (2 * vp)) / np.sqrt(2 * np.pi * vp) * grid.dp
    return gq @ values @ gp.T


def smoothing_check(psi: WaveFunction, params: ModelParams, grid: PhaseGrid) -> float:
    """Relative L2 distance between the Gaussian-smoothed Wigner function and rho."""
    rho = density_from_wavefunction(psi, params, grid).values
    smoothed = gaussian_smooth(wigner(psi, params, grid).values, grid, params)
    scale = np.linalg.norm(rho)
    if scale == 0.0:
        return float(np.linalg.norm(smoothed))
    return float(np.linalg.norm(smoothed - rho) / scale)


def position_marginal_oracle(psi: WaveFunction, params: ModelParams, q: np.ndarray) -> np.ndarray:
    """|psi|^2 convolved with the Gaussian of variance h a / (4 pi b), evaluated at q."""
    v = float(params.position_variance[0])
    x = psi.grid.x
    kern = np.exp(-((q[:, None] - x[None, :]) ** 2) / (2 * v)) / np.sqrt(2 * np.pi * v)
    return kern @ (np.abs(psi.values) ** 2) * psi.grid.dx
