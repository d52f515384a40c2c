"""Model parameters, grids, fiber-mode amplitudes and the Heisenberg-Weyl action.

The fiber over each phase-space point is represented only through its
circle action ``T = R/hZ``; a function on the extended phase space is kept
as a truncated Fourier series in the fiber angle,

    phi(q, p, T_t xi) = sum_k phi_k(q, p) * exp(j 2 pi k t / h),

with the mode fields ``phi_k`` sampled on a :class:`PhaseGrid`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    CoverageError,
    GridMismatchError,
    OutOfDomainError,
    ParameterError,
    SamplingError,
)

# Gaussian factors must fall below this value at the edge of a padded axis.
EDGE_DECAY = 1e-12
DEFAULT_K_TRUNC = 3


def _as_tuple(value, n):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1 and n > 1:
        arr = np.full(n, float(arr[0]))
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class ModelParams:
    """Planck constant and per-coordinate diffusion intensities.

    ``a`` and ``b`` may be given as scalars, in which case they are
    broadcast to ``n`` coordinates.
    """

    h: float = 1.0
    a: Sequence[float] = (1.0,)
    b: Sequence[float] = (1.0,)
    n: int | None = None

    def __post_init__(self):
        n = self.n
        if n is None:
            n = max(np.size(self.a), np.size(self.b))
        n = int(n)
        a = _as_tuple(self.a, n)
        b = _as_tuple(self.b, n)
        if n < 1:
            raise ParameterError("configuration dimension n must be >= 1")
        if len(a) != n or len(b) != n:
            raise ParameterError(f"a and b must have length n={n}, got {len(a)} and {len(b)}")
        if not (math.isfinite(self.h) and self.h > 0):
            raise ParameterError(f"h must be positive, got {self.h}")
        if any(not (math.isfinite(v) and v > 0) for v in a + b):
            raise ParameterError("every a_i and b_i must be positive")
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "n", n)

    @property
    def ratio(self) -> np.ndarray:
        """b_i / a_i per coordinate."""
        return np.asarray(self.b) / np.asarray(self.a)

    @property
    def position_variance(self) -> np.ndarray:
        """Variance h a_i / (4 pi b_i) of the position smoothing."""
        return self.h / (4 * np.pi * self.ratio)

    @property
    def momentum_variance(self) -> np.ndarray:
        return self.h * self.ratio / (4 * np.pi)

    @property
    def window_std(self) -> np.ndarray:
        """Standard deviation of the window exp(-(pi/h)(b/a) u^2)."""
        return np.sqrt(self.h / (2 * np.pi * self.ratio))

    @property
    def ground_rate(self) -> float:
        """Decay rate sum_i 2 pi a_i b_i / h of the surviving fiber modes."""
        return float(np.sum(2 * np.pi * np.asarray(self.a) * np.asarray(self.b)) / self.h)

    def window_margin(self) -> float:
        """Distance beyond which the window exp(-(pi/h)(b/a)u^2) is below EDGE_DECAY."""
        s = float(np.min(self.ratio))
        return math.sqrt(-math.log(EDGE_DECAY) * self.h / (math.pi * s))

    def scalar(self) -> tuple[float, float, float]:
        """Return (h, a, b) for a one-dimensional model."""
        if self.n != 1:
            raise ParameterError(f"operation is implemented for n = 1 grids, got n = {self.n}")
        return self.h, self.a[0], self.b[0]

    def to_dict(self) -> dict:
        return {"h": self.h, "a": list(self.a), "b": list(self.b), "n": self.n}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelParams":
        return cls(h=d.get("h", 1.0), a=d.get("a", 1.0), b=d.get("b", 1.0), n=d.get("n"))


def _check_uniform(x: np.ndarray, name: str, rtol: float = 1e-9) -> float:
    if x.ndim != 1 or x.size < 2:
        raise ParameterError(f"{name} axis must be one-dimensional with at least 2 points")
    d = np.diff(x)
    dx = float(d.mean())
    if dx <= 0 or np.max(np.abs(d - dx)) > rtol * max(abs(dx), 1.0):
        raise ParameterError(f"{name} axis must be strictly increasing with uniform spacing")
    return dx


@dataclass(frozen=True, eq=False)
class PositionGrid:
    """Uniform samples of one configuration coordinate."""

    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        _check_uniform(x, "position")
        if x.size < 8:
            raise ParameterError("position grid needs at least 8 points")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int) -> "PositionGrid":
        """``n`` points starting at ``lo`` with spacing ``(hi - lo) / n``."""
        dx = (hi - lo) / n
        return cls(lo + dx * np.arange(n))

    @classmethod
    def centered(cls, half_width: float, n: int = 256, center: float = 0.0) -> "PositionGrid":
        return cls.uniform(center - half_width, center + half_width, n)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def length(self) -> float:
        """Period length n * dx."""
        return self.n * self.dx

    def same_as(self, other: "PositionGrid", rtol: float = 1e-10) -> bool:
        return (
            self.n == other.n
            and abs(self.dx - other.dx) <= rtol * abs(self.dx)
            and abs(self.x[0] - other.x[0]) <= rtol * max(abs(self.dx), 1.0)
        )

    def to_dict(self) -> dict:
        return {"lo": float(self.x[0]), "dx": self.dx, "n": self.n}

    @classmethod
    def from_dict(cls, d: Mapping) -> "PositionGrid":
        if "half_width" in d:
            return cls.centered(d["half_width"], int(d.get("n", 256)), d.get("center", 0.0))
        return cls(d["lo"] + d["dx"] * np.arange(int(d["n"])))


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Product of a uniform q axis and a uniform p axis."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        p = np.array(self.p, dtype=float)
        _check_uniform(q, "q")
        _check_uniform(p, "p")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_position(
        cls,
        grid: PositionGrid,
        params: ModelParams,
        oversample: int = 1,
        pad: int | None = None,
    ) -> "PhaseGrid":
        """Phase grid matched to ``grid``.

        The q axis extends ``grid`` on both sides with the same spacing until
        the smoothing window has decayed below ``EDGE_DECAY``.  The p axis is
        the discrete Fourier dual of the position grid under the kernel
        exp(-j 2 pi p x / h): ``oversample * n`` points with spacing
        ``h / (oversample * n * dx)``.
        """
        if pad is None:
            pad = int(math.ceil(params.window_margin() / grid.dx)) + 1
        q = grid.x[0] + grid.dx * np.arange(-pad, grid.n + pad)
        n_p = int(oversample) * grid.n
        dp = params.h / (n_p * grid.dx)
        p = dp * (np.arange(n_p) - n_p // 2)
        return cls(q, p)

    @property
    def dq(self) -> float:
        return float(self.q[1] - self.q[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.q.size, self.p.size)

    @property
    def cell(self) -> float:
        return self.dq * self.dp

    def is_dual(self, h: float, rtol: float = 1e-9) -> bool:
        """True when dp * len(p) * dq == h (exact discrete Fourier inversion)."""
        return abs(self.dp * self.p.size * self.dq - h) <= rtol * h

    def locate(self, grid: PositionGrid) -> int:
        """Index of ``grid.x[0]`` in the q axis; raises if the lattices differ."""
        if abs(grid.dx - self.dq) > 1e-9 * self.dq:
            raise GridMismatchError(
                f"position spacing {grid.dx} differs from q spacing {self.dq}; resample explicitly"
            )
        offset = (grid.x[0] - self.q[0]) / self.dq
        i0 = int(round(offset))
        if abs(offset - i0) > 1e-6 or i0 < 0 or i0 + grid.n > self.q.size:
            raise GridMismatchError("position grid is not a sub-lattice of the q axis")
        return i0

    def same_as(self, other: "PhaseGrid") -> bool:
        return (
            self.shape == other.shape
            and np.allclose(self.q, other.q, rtol=0, atol=1e-12 * max(1.0, abs(self.dq)))
            and np.allclose(self.p, other.p, rtol=0, atol=1e-12 * max(1.0, abs(self.dp)))
        )

    def check_coverage(self, params: ModelParams, grid: PositionGrid | None = None) -> None:
        """Raise :class:`CoverageError` if the model's Gaussians are not resolved.

        Checks that the q spacing resolves the smoothing window, that the p
        range spans six momentum standard deviations on each side, and, when
        ``grid`` is given, that the q axis extends beyond it far enough for the
        window to decay below ``EDGE_DECAY``.
        """
        h, _, _ = params.scalar()
        wstd = float(params.window_std[0])
        if self.dq > 0.5 * wstd:
            raise CoverageError(
                f"q spacing {self.dq:.4g} does not resolve the window (std {wstd:.4g}); "
                f"need dq <= {0.5 * wstd:.4g}"
            )
        sp = float(np.sqrt(params.momentum_variance[0]))
        if min(-self.p[0], self.p[-1]) < 6 * sp:
            raise CoverageError(
                f"p axis [{self.p[0]:.4g}, {self.p[-1]:.4g}] covers less than 6 momentum std ({6 * sp:.4g})"
            )
        if grid is not None:
            margin = params.window_margin()
            lo = grid.x[0] - self.q[0]
            hi = self.q[-1] - grid.x[-1]
            if min(lo, hi) < margin * (1 - 1e-9) - self.dq:
                raise CoverageError(
                    f"q axis extends only {min(lo, hi):.4g} beyond the position grid; "
                    f"the window needs {margin:.4g} (coverage below 6 sigma)"
                )

    def to_dict(self) -> dict:
        return {
            "q_lo": float(self.q[0]),
            "dq": self.dq,
            "nq": int(self.q.size),
            "p_lo": float(self.p[0]),
            "dp": self.dp,
            "np": int(self.p.size),
        }


@dataclass(eq=False)
class ExtendedAmplitude:
    """Fiber Fourier modes ``phi_k(q, p)`` of a function on the extended phase space."""

    modes: dict
    grid: PhaseGrid
    k_trunc: int = DEFAULT_K_TRUNC

    def __post_init__(self):
        clean = {}
        for k, v in self.modes.items():
            k = int(k)
            if abs(k) > self.k_trunc:
                raise ParameterError(f"mode {k} exceeds truncation order {self.k_trunc}")
            arr = np.asarray(v, dtype=complex)
            if arr.shape != self.grid.shape:
                raise GridMismatchError(f"mode {k} has shape {arr.shape}, grid is {self.grid.shape}")
            clean[k] = arr
        self.modes = dict(sorted(clean.items()))

    def mode(self, k: int) -> np.ndarray:
        return self.modes.get(int(k), np.zeros(self.grid.shape, dtype=complex))

    def has_mode(self, k: int) -> bool:
        return int(k) in self.modes

    def mode_norm(self, k: int) -> float:
        return float(np.sqrt(np.sum(np.abs(self.mode(k)) ** 2) * self.grid.cell))

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self).real))

    def inner(self, other: "ExtendedAmplitude") -> complex:
        """Sum over modes of the L2 pairing; equals the fiber-averaged integral
        of ``self * conj(other)``."""
        if not self.grid.same_as(other.grid):
            raise GridMismatchError("amplitudes live on different phase grids")
        total = 0j
        for k, v in self.modes.items():
            if k in other.modes:
                total += np.sum(v * np.conj(other.modes[k]))
        return complex(total * self.grid.cell)

    def is_real(self, rtol: float = 1e-12) -> bool:
        """Reality condition phi_{-k} = conj(phi_k)."""
        scale = max(self.norm(), 1e-300)
        for k in self.modes:
            diff = self.mode(-k) - np.conj(self.mode(k))
            if np.sqrt(np.sum(np.abs(diff) ** 2) * self.grid.cell) > rtol * scale:
                return False
        return True

    def sample(self, t: float, h: float) -> np.ndarray:
        """Field value on the fiber slice T_t xi."""
        out = np.zeros(self.grid.shape, dtype=complex)
        for k, v in self.modes.items():
            out += v * np.exp(2j * np.pi * k * t / h)
        return out

    def copy_with(self, modes: Mapping[int, np.ndarray]) -> "ExtendedAmplitude":
        return ExtendedAmplitude(dict(modes), self.grid, self.k_trunc)

    def _combine(self, other, op):
        if not self.grid.same_as(other.grid):
            raise GridMismatchError("amplitudes live on different phase grids")
        keys = set(self.modes) | set(other.modes)
        return ExtendedAmplitude(
            {k: op(self.mode(k), other.mode(k)) for k in keys},
            self.grid,
            max(self.k_trunc, other.k_trunc),
        )

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        return ExtendedAmplitude({k: c * v for k, v in self.modes.items()}, self.grid, self.k_trunc)

    __rmul__ = __mul__


@dataclass(frozen=True)
class WeylElement:
    """Element W_t^{x,y} of the Heisenberg-Weyl group with Hamiltonian constant c."""

    x: Sequence[float] = (0.0,)
    y: Sequence[float] = (0.0,)
    t: float = 1.0
    c: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in np.atleast_1d(self.x)))
        object.__setattr__(self, "y", tuple(float(v) for v in np.atleast_1d(self.y)))

    def compose(self, other: "WeylElement") -> "WeylElement":
        """Product of two elements of the same one-parameter subgroup."""
        if self.x != other.x or self.y != other.y or self.c != other.c:
            raise ParameterError("only elements of one subgroup (same x, y, c) compose by adding t")
        return WeylElement(self.x, self.y, self.t + other.t, self.c)


def fourier_shift(field: np.ndarray, shift: float, spacing: float, axis: int) -> np.ndarray:
    """Evaluate ``field`` at ``coord + shift`` along ``axis`` by periodic Fourier interpolation."""
    if shift == 0.0:
        return np.array(field, dtype=complex)
    n = field.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, d=spacing)
    shape = [1] * field.ndim
    shape[axis] = n
    phase = np.exp(1j * k * shift).reshape(shape)
    return np.fft.ifft(np.fft.fft(field, axis=axis) * phase, axis=axis)


def apply_weyl(
    w: WeylElement,
    phi: ExtendedAmplitude,
    h: float = 1.0,
    max_shift_fraction: float = 0.25,
) -> ExtendedAmplitude:
    """Act with ``w`` on every fiber mode of ``phi``.

    Mode ``k`` becomes ``phi_k(q + t x, p + t y) * exp(j 2 pi k s / h)`` with
    fiber parameter s = t (c - y q) - t^2 x y / 2, the flow of the vector
    field x d/dq + y d/dp + (c - y q) d/dxi.  The quadratic term vanishes for
    pure q or p shifts and makes t -> W_t a one-parameter group in general.
    Shifts are realised by periodic Fourier interpolation, so they are exact
    (norm preserving) for fields band-limited and localised on the grid.
    """
    if len(w.x) != 1 or len(w.y) != 1:
        raise ParameterError("apply_weyl acts on one-dimensional phase grids")
    grid = phi.grid
    sq, sp = w.t * w.x[0], w.t * w.y[0]
    for name, s, ax in (("q", sq, grid.q), ("p", sp, grid.p)):
        extent = ax[-1] - ax[0]
        if abs(s) > max_shift_fraction * extent:
            raise OutOfDomainError(
                f"shift {s:.4g} along {name} exceeds the allowed margin "
                f"{max_shift_fraction * extent:.4g} of the {name} axis"
            )
    out = {}
    for k, v in phi.modes.items():
        moved = fourier_shift(v, sq, grid.dq, axis=0)
        moved = fourier_shift(moved, sp, grid.dp, axis=1)
        if k != 0:
            s_fiber = w.t * (w.c - w.y[0] * grid.q) - 0.5 * w.t**2 * w.x[0] * w.y[0]
            phase = np.exp(2j * np.pi * k * s_fiber / h)
            moved = moved * phase[:, None]
        out[k] = moved
    return phi.copy_with(out)


def _check_fiber_samples(n_samples: int, h: float, t, k_trunc: int) -> None:
    if n_samples < 4 * k_trunc:
        raise SamplingError(f"need at least {4 * k_trunc} fiber samples for K_trunc={k_trunc}, got {n_samples}")
    if t is None:
        return
    t = np.asarray(t, dtype=float)
    expected = h * np.arange(n_samples) / n_samples
    if t.shape != (n_samples,) or np.max(np.abs(t - expected)) > 1e-9 * h:
        raise SamplingError("fiber samples must be uniform on [0, h) starting at t = 0")


def fiber_project(
    samples: np.ndarray,
    k: int,
    h: float = 1.0,
    t: np.ndarray | None = None,
    k_trunc: int = DEFAULT_K_TRUNC,
) -> np.ndarray:
    """k-th fiber Fourier coefficient of ``samples``.

    ``samples[j]`` holds the field on the slice ``T_{t_j} xi`` with
    ``t_j = j h / M``.  The discrete sum is the rectangle rule for
    (1/h) int_0^h phi(T_t xi) exp(-j 2 pi k t / h) dt, exact for trigonometric
    polynomials of degree below M/2.
    """
    samples = np.asarray(samples)
    m = samples.shape[0]
    _check_fiber_samples(m, h, t, k_trunc)
    tj = h * np.arange(m) / m
    weights = np.exp(-2j * np.pi * k * tj / h) / m
    return np.tensordot(weights, samples, axes=(0, 0))


def fiber_decompose(
    samples: np.ndarray,
    grid: PhaseGrid,
    h: float = 1.0,
    k_trunc: int = DEFAULT_K_TRUNC,
    t: np.ndarray | None = None,
    drop_below: float = 0.0,
) -> ExtendedAmplitude:
    """Project fiber samples onto all modes |k| <= k_trunc."""
    modes = {}
    for k in range(-k_trunc, k_trunc + 1):
        v = fiber_project(samples, k, h, t, k_trunc)
        if np.max(np.abs(v), initial=0.0) > drop_below:
            modes[k] = v
    return ExtendedAmplitude(modes, grid, k_trunc)


def fiber_synthesize(phi: ExtendedAmplitude, t: np.ndarray, h: float = 1.0) -> np.ndarray:
    """Samples ``sum_k phi_k exp(j 2 pi k t / h)`` for each fiber parameter in ``t``."""
    return np.stack([phi.sample(tj, h) for tj in np.atleast_1d(t)])
