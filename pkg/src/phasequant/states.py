"""Analytic test states and the seeded random corpus."""

from __future__ import annotations

import numpy as np

from .core import ModelParams, PositionGrid
from .transform import WaveFunction


def hermite_functions(n_max: int, u: np.ndarray) -> np.ndarray:
    """Orthonormal Hermite functions psi_0..psi_{n_max-1} at ``u``; shape (n_max, *u.shape).

    Uses the three-term recurrence, stable for the orders used here (< ~200).
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros((n_max,) + u.shape)
    if n_max == 0:
        return out
    out[0] = np.pi**-0.25 * np.exp(-0.5 * u**2)
    if n_max > 1:
        out[1] = np.sqrt(2.0) * u * out[0]
    for n in range(1, n_max - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * u * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def gaussian(
    grid: PositionGrid,
    params: ModelParams,
    center: float = 0.0,
    momentum: float = 0.0,
) -> WaveFunction:
    """Normalized Gaussian matched to the model window, exp(-(pi/h)(b/a)(x - x0)^2),
    carrying mean momentum ``momentum`` (phase exp(j 2 pi p0 x / h))."""
    h, a, b = params.scalar()
    x = grid.x
    v = np.exp(-(np.pi / h) * (b / a) * (x - center) ** 2 + 2j * np.pi * momentum * x / h)
    return WaveFunction(v, grid).normalized()


def coherent(grid: PositionGrid, params: ModelParams, q0: float, p0: float) -> WaveFunction:
    return gaussian(grid, params, center=q0, momentum=p0)


def oscillator_state(
    grid: PositionGrid,
    n: int,
    h: float = 1.0,
    mass: float = 1.0,
    omega: float = 1.0,
    center: float = 0.0,
) -> WaveFunction:
    """n-th eigenstate of p^2/2m + m omega^2 q^2/2 with hbar = h / 2 pi."""
    hbar = h / (2 * np.pi)
    ell = np.sqrt(hbar / (mass * omega))
    vals = hermite_functions(n + 1, (grid.x - center) / ell)[n] / np.sqrt(ell)
    return WaveFunction(vals.astype(complex), grid)


def random_state(
    grid: PositionGrid,
    rng: np.random.Generator,
    n_max: int = 8,
    width: float = 1.0,
    center: float = 0.0,
) -> WaveFunction:
    """Normalized random combination of the first ``n_max`` Hermite functions of
    scale ``width`` with complex Gaussian coefficients."""
    coef = rng.normal(size=n_max) + 1j * rng.normal(size=n_max)
    basis = hermite_functions(n_max, (grid.x - center) / width) / np.sqrt(width)
    return WaveFunction(coef @ basis, grid).normalized()


def random_corpus(
    grid: PositionGrid,
    count: int = 20,
    seed: int = 12345,
    n_max: int = 8,
    width: float = 1.0,
    max_center: float = 1.5,
) -> list[WaveFunction]:
    """``count`` seeded band-limited states with random centers in [-max_center, max_center]."""
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(count):
        center = rng.uniform(-max_center, max_center)
        states.append(random_state(grid, rng, n_max=n_max, width=width, center=center))
    return states


def named_state(name: str, grid: PositionGrid, params: ModelParams, **kw) -> WaveFunction:
    """Resolve ``gaussian``, ``hermite-<n>``, ``coherent`` or ``random`` to a state."""
    h = params.h
    if name == "gaussian":
        return gaussian(grid, params, center=kw.get("q0", 0.0))
    if name == "coherent":
        return coherent(grid, params, kw.get("q0", 0.0), kw.get("p0", 0.0))
    if name.startswith("hermite-"):
        n = int(name.split("-", 1)[1])
        return oscillator_state(grid, n, h=h, mass=kw.get("mass", 1.0), omega=kw.get("omega", 1.0))
    if name == "random":
        rng = np.random.default_rng(kw.get("seed", 0))
        return random_state(grid, rng)
    raise ValueError(f"unknown state {name!r}; expected gaussian, coherent, hermite-<n> or random")


def load_state_csv(path, grid: PositionGrid | None = None) -> WaveFunction:
    """Read a three-column (x, re, im) CSV with a header row."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    pos = PositionGrid(data[:, 0])
    if grid is not None and not grid.same_as(pos):
        from .errors import GridMismatchError

        raise GridMismatchError("CSV state does not lie on the requested grid")
    return WaveFunction(data[:, 1] + 1j * data[:, 2], pos)
