"""Operators of classical observables on the wave-function space.

Two independent constructions of the kernel A_f(x, x') are provided:

* :func:`kernel_by_quadrature` evaluates the (q, p) integral of f against the
  product of two smoothing windows and the phase exp(j 2 pi p (x - x') / h);
* :func:`kernel_by_symbol` quantizes the Gaussian-smoothed symbol,
  A_f(x, x') = (1/h) int f_h(2 pi (x - x')/h, v) exp(-j <(x + x')/2, v>) dv,
  with polynomial symbols handled through closed-form Gaussian moments.

Kernels are stored with the quadrature weight dx folded in, so applying an
operator is a plain matrix-vector product and Hermiticity is matrix symmetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.special import erf

from .core import ModelParams, PhaseGrid, PositionGrid, fourier_shift
from .errors import (
    DivergenceError,
    GridMismatchError,
    ParameterError,
    UnsupportedSymbolError,
)
from .transform import WaveFunction, window_matrix


def gaussian_moment(j: int, var: float) -> float:
    """E[Z^j] for Z ~ N(0, var)."""
    if j % 2:
        return 0.0
    return var ** (j // 2) * float(np.prod(np.arange(j - 1, 0, -2))) if j else 1.0


class ObservableSymbol:
    """A real classical observable f(q, p)."""

    def __call__(self, q, p):
        raise NotImplementedError


@dataclass(frozen=True)
class PolynomialSymbol(ObservableSymbol):
    """f(q, p) = sum c_ij q^i p^j with real coefficients, keyed by (i, j)."""

    coeffs: Mapping

    def __post_init__(self):
        clean = {}
        for (i, j), c in dict(self.coeffs).items():
            if int(i) < 0 or int(j) < 0:
                raise ParameterError("polynomial powers must be nonnegative")
            c = float(c)
            if c != 0.0:
                clean[(int(i), int(j))] = clean.get((int(i), int(j)), 0.0) + c
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    def __call__(self, q, p):
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        out = np.zeros(np.broadcast(q, p).shape)
        for (i, j), c in self.coeffs.items():
            out = out + c * q**i * p**j
        return out

    @property
    def degree(self) -> int:
        return max((i + j for i, j in self.coeffs), default=0)

    @property
    def depends_on_p(self) -> bool:
        return any(j > 0 for _, j in self.coeffs)

    def smoothed(self, var_q: float, var_p: float) -> "PolynomialSymbol":
        """Convolution with the Gaussian of variances (var_q, var_p), via moments."""
        out: dict = {}
        for (i, j), c in self.coeffs.items():
            for r in range(i + 1):
                mq = gaussian_moment(i - r, var_q)
                if mq == 0.0:
                    continue
                for s in range(j + 1):
                    mp = gaussian_moment(j - s, var_p)
                    if mp == 0.0:
                        continue
                    key = (r, s)
                    out[key] = out.get(key, 0.0) + c * math.comb(i, r) * math.comb(j, s) * mq * mp
        return PolynomialSymbol(out)

    def to_dict(self) -> dict:
        return {"kind": "polynomial", "coeffs": [[i, j, c] for (i, j), c in self.coeffs.items()]}

    @classmethod
    def parse(cls, text: str) -> "PolynomialSymbol":
        """Parse ``"i,j:c; i,j:c"`` into a polynomial."""
        coeffs = {}
        for term in text.replace(" ", "").split(";"):
            if not term:
                continue
            powers, c = term.split(":")
            i, j = powers.split(",")
            coeffs[(int(i), int(j))] = coeffs.get((int(i), int(j)), 0.0) + float(c)
        return cls(coeffs)


def harmonic(mass: float = 1.0, omega: float = 1.0) -> PolynomialSymbol:
    """Oscillator Hamiltonian p^2 / 2m + m omega^2 q^2 / 2."""
    return PolynomialSymbol({(0, 2): 1 / (2 * mass), (2, 0): mass * omega**2 / 2})


@dataclass(frozen=True)
class CoulombPotential(ObservableSymbol):
    """V(q) = -e^2 / |q| in three dimensions."""

    e2: float = 1.0

    def __call__(self, q, p=None):
        r = np.linalg.norm(np.atleast_2d(q), axis=-1) if np.ndim(q) > 1 else np.abs(np.asarray(q, dtype=float))
        return -self.e2 / r


@dataclass(frozen=True)
class FunctionSymbol(ObservableSymbol):
    """Arbitrary vectorised callable f(q, p)."""

    func: Callable

    def __call__(self, q, p):
        return self.func(q, p)


@dataclass(eq=False)
class SampledSymbol(ObservableSymbol):
    """Samples of f on a phase grid; smoothing and quantization use discrete transforms."""

    values: np.ndarray
    grid: PhaseGrid
    _fhat: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridMismatchError("symbol samples do not match their grid")

    def __call__(self, q, p):
        raise UnsupportedSymbolError("sampled symbols are only defined on their grid")

    def _freqs(self):
        g = self.grid
        v = 2 * np.pi * np.fft.fftfreq(g.q.size, d=g.dq)
        u = 2 * np.pi * np.fft.fftfreq(g.p.size, d=g.dp)
        return u, v

    def fourier_transform(self):
        """(u, v, fhat) with fhat(v_k, u_l) = (1/2pi) sum f(q,p) exp(j(q v + p u)) dq dp.

        The array is indexed [v, u] to match the [q, p] layout of the samples.
        """
        if self._fhat is None:
            g = self.grid
            u, v = self._freqs()
            nq, npp = g.shape
            core = np.fft.ifft2(self.values) * nq * npp
            phase = np.exp(1j * (g.q[0] * v[:, None] + g.p[0] * u[None, :]))
            self._fhat = (u, v, core * phase * g.cell / (2 * np.pi))
        return self._fhat

    def inverse(self, fhat: np.ndarray, q_shift: float = 0.0) -> np.ndarray:
        """f(q + q_shift, p) on the grid from a transform in the ``fourier_transform`` layout."""
        g = self.grid
        u, v = self._freqs()
        du = 2 * np.pi / (g.p.size * g.dp)
        dv = 2 * np.pi / (g.q.size * g.dq)
        phase = np.exp(-1j * ((g.q[0] + q_shift) * v[:, None] + g.p[0] * u[None, :]))
        vals = np.fft.fft2(fhat * phase) * du * dv / (2 * np.pi)
        return np.real(vals)

    def smoothed_transform(self, params: ModelParams, momentum: bool = True) -> np.ndarray:
        """f_h(u, v) = fhat(u, v) exp(-(h/8pi)((a/b) v^2 + (b/a) u^2)).

        With ``momentum=False`` only the v factor (smoothing along q) is applied.
        """
        h, a, b = params.scalar()
        u, v, fhat = self.fourier_transform()
        damp = (a / b) * v[:, None] ** 2 + (b / a) * u[None, :] ** 2 * float(momentum)
        return fhat * np.exp(-(h / (8 * np.pi)) * damp)


def as_symbol(f) -> ObservableSymbol:
    if isinstance(f, ObservableSymbol):
        return f
    if isinstance(f, (int, float)):
        return PolynomialSymbol({(0, 0): float(f)})
    if callable(f):
        return FunctionSymbol(f)
    raise UnsupportedSymbolError(f"cannot interpret {f!r} as an observable")


@dataclass(frozen=True)
class ClosedForm:
    """A_f = mult(x) + first * d/dx + second * d^2/dx^2 + constant.

    ``mult`` is the unsmoothed position part; ``constant`` collects the
    constants produced by the smoothing (the part removed by ``drop_constant``).
    """

    mult: PolynomialSymbol
    first: complex
    second: float
    constant: float

    def to_dict(self) -> dict:
        return {
            "multiplication": [[i, c] for (i, _), c in self.mult.coeffs.items()],
            "first_derivative": [float(np.real(self.first)), float(np.imag(self.first))],
            "second_derivative": self.second,
            "constant_shift": self.constant,
        }

    def matrix(self, grid: PositionGrid, derivative: str = "fd", include_constant: bool = True) -> np.ndarray:
        """Matrix of the differential operator; ``fd`` uses second-order finite
        differences with Dirichlet ends, ``spectral`` uses Fourier differentiation."""
        n, dx = grid.n, grid.dx
        if derivative == "fd":
            d1 = (np.eye(n, k=1) - np.eye(n, k=-1)) / (2 * dx)
            d2 = (np.eye(n, k=1) - 2 * np.eye(n) + np.eye(n, k=-1)) / dx**2
        elif derivative == "spectral":
            k = 2 * np.pi * np.fft.fftfreq(n, d=dx)
            f = np.fft.fft(np.eye(n), axis=0)
            d1 = np.fft.ifft(1j * k[:, None] * f, axis=0)
            d2 = np.fft.ifft(-(k[:, None] ** 2) * f, axis=0)
        else:
            raise ValueError(f"unknown derivative scheme {derivative!r}")
        mat = np.diag(self.mult(grid.x, 0.0).astype(complex)) + self.first * d1 + self.second * d2
        if include_constant:
            mat = mat + self.constant * np.eye(n)
        return mat


def closed_form(f, params: ModelParams) -> ClosedForm:
    """Differential form of A_f for f = alpha(q) + beta p + gamma p^2.

    The q-smoothing of alpha must leave only a constant behind (degree <= 3
    in q), otherwise the operator is not of the tagged form.
    """
    f = as_symbol(f)
    if not isinstance(f, PolynomialSymbol):
        raise UnsupportedSymbolError("closed forms exist only for polynomial symbols")
    h, a, b = params.scalar()
    alpha, beta, gamma = {}, 0.0, 0.0
    for (i, j), c in f.coeffs.items():
        if j == 0:
            alpha[(i, 0)] = c
        elif i == 0 and j == 1:
            beta += c
        elif i == 0 and j == 2:
            gamma += c
        else:
            raise UnsupportedSymbolError(f"term q^{i} p^{j} has no tagged closed form")
    alpha = PolynomialSymbol(alpha)
    corr = PolynomialSymbol(
        {k: v - alpha.coeffs.get(k, 0.0) for k, v in alpha.smoothed(float(params.position_variance[0]), 0.0).coeffs.items()}
    )
    if any(i > 0 for (i, _), c in corr.coeffs.items() if abs(c) > 1e-14 * max(1.0, abs(c))):
        raise UnsupportedSymbolError("position smoothing of this symbol is not a constant shift")
    const = corr.coeffs.get((0, 0), 0.0) + gamma * float(params.momentum_variance[0])
    hb = h / (2 * np.pi)
    return ClosedForm(mult=alpha, first=-1j * hb * beta, second=-(hb**2) * gamma, constant=const)


@dataclass(eq=False)
class OperatorKernel:
    """Kernel matrix M[i, l] = A_f(x_i, x_l) * dx on a position grid."""

    matrix: np.ndarray
    grid: PositionGrid
    closed: ClosedForm | None = None
    constant_shift: float | None = None
    constant_removed: bool = False

    @property
    def kernel(self) -> np.ndarray:
        """A_f(x_i, x_l) without the quadrature weight."""
        return self.matrix / self.grid.dx

    def hermiticity_error(self) -> float:
        nrm = np.linalg.norm(self.matrix)
        if nrm == 0:
            return 0.0
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T) / nrm)

    def remove_constant(self) -> "OperatorKernel":
        if self.constant_shift is None:
            raise UnsupportedSymbolError("this operator has no separable constant shift")
        if self.constant_removed:
            return self
        return OperatorKernel(
            self.matrix - self.constant_shift * np.eye(self.grid.n),
            self.grid,
            self.closed,
            self.constant_shift,
            True,
        )


def _dual_p(grid: PositionGrid, h: float, oversample: int) -> np.ndarray:
    n_p = int(oversample) * grid.n
    dp = h / (n_p * grid.dx)
    return dp * (np.arange(n_p) - n_p // 2)


def _p_power_sums(grid: PositionGrid, p: np.ndarray, h: float, powers) -> dict:
    """D_l(d) = sum_p dp p^l exp(j 2 pi p d dx / h) for d = -(n-1)..(n-1)."""
    d = np.arange(-(grid.n - 1), grid.n)
    phase = np.exp(2j * np.pi * np.outer(p, d * grid.dx) / h)
    dp = p[1] - p[0]
    return {l: (p**l) @ phase * dp for l in powers}


def _check_growth(f, params: ModelParams, pg: PhaseGrid) -> None:
    h, a, b = params.scalar()
    s = b / a
    reach = max(abs(pg.q[0]), abs(pg.q[-1]))
    width = float(params.window_std[0])
    with np.errstate(all="ignore"):
        for sign in (1.0, -1.0):
            qs = sign * (reach + width * np.array([1.0, 2.0, 4.0, 8.0, 16.0]))
            vals = np.abs(np.asarray(f(qs, np.zeros_like(qs)), dtype=float))
            weighted = vals * np.exp(-(2 * np.pi * s / h) * (np.abs(qs) - reach) ** 2)
            if not np.all(np.isfinite(weighted)) or np.any(np.diff(weighted) > 0) and weighted[-1] > weighted[0]:
                raise DivergenceError("symbol grows faster than the Gaussian weights decay along q")
        pmax = max(abs(pg.p[0]), abs(pg.p[-1]))
        ps = pmax * np.array([4.0, 8.0, 16.0])
        vals = np.abs(np.asarray(f(np.zeros_like(ps), ps), dtype=float))
        if not np.all(np.isfinite(vals)) or (vals[1] > 0 and vals[2] / vals[1] > 2.0**16):
            raise DivergenceError("symbol grows faster than any polynomial along p (not tempered)")


def _symbol_on_grid(f: ObservableSymbol, pg: PhaseGrid) -> np.ndarray:
    if isinstance(f, SampledSymbol):
        if not f.grid.same_as(pg):
            raise GridMismatchError("sampled symbol grid differs from the quadrature grid")
        return f.values
    qq, pp = np.meshgrid(pg.q, pg.p, indexing="ij")
    vals = np.broadcast_to(np.asarray(f(qq, pp), dtype=float), pg.shape)
    if not np.all(np.isfinite(vals)):
        raise DivergenceError("symbol is not finite on the quadrature grid")
    return vals


def kernel_by_quadrature(
    f,
    params: ModelParams,
    grid: PositionGrid,
    oversample: int = 1,
    chunk: int = 16,
) -> OperatorKernel:
    """Kernel from the double (q, p) integral with two smoothing windows.

    A_f(x, x') = (2/h^3)^(1/2) (b/a)^(1/2) int f(q, p) G(q - x) G(q - x')
                 exp(j 2 pi p (x - x') / h) dq dp,
    with q on the padded axis of :meth:`PhaseGrid.from_position` and p on its
    dual axis.
    """
    f = as_symbol(f)
    h, a, b = params.scalar()
    s = b / a
    pg = PhaseGrid.from_position(grid, params, oversample=oversample)
    if not isinstance(f, SampledSymbol):
        _check_growth(f, params, pg)
    fv = _symbol_on_grid(f, pg)
    n = grid.n
    d = np.arange(-(n - 1), n)
    phase = np.exp(2j * np.pi * np.outer(pg.p, d * grid.dx) / h)
    fd = (fv @ phase) * pg.dp  # (nq, 2n - 1)
    gw = window_matrix(pg.q, grid.x, h, s)
    idx = np.arange(n)[:, None] - np.arange(n)[None, :] + n - 1
    acc = np.zeros((n, n), dtype=complex)
    for start in range(0, pg.q.size, chunk):
        sl = slice(start, start + chunk)
        g = gw[sl]
        acc += np.einsum("ci,cl,cil->il", g, g, fd[sl][:, idx], optimize=True)
    pref = np.sqrt(2 / h**3) * np.sqrt(s)
    mat = pref * acc * pg.dq * grid.dx
    tag, shift = _tag(f, params)
    return OperatorKernel(mat, grid, tag, shift)


def _tag(f, params):
    if isinstance(f, PolynomialSymbol):
        try:
            cf = closed_form(f, params)
            return cf, cf.constant
        except UnsupportedSymbolError:
            return None, None
    return None, None


def kernel_by_symbol(
    f,
    params: ModelParams,
    grid: PositionGrid,
    order="exact",
    oversample: int = 1,
    drop_constant: bool = False,
) -> OperatorKernel:
    """Kernel from the smoothed symbol f_h (``order="exact"``) or from the plain
    Fourier transform of f (``order=0``, conventional Weyl quantization).

    The u-part of the Gaussian factor becomes the multiplier
    exp(-(pi/2h)(b/a)(x - x')^2) on the kernel; the v-part smooths f along q.
    """
    f = as_symbol(f)
    h, a, b = params.scalar()
    s = b / a
    if order not in ("exact", 0, "0"):
        raise ValueError("order must be 'exact' or 0")
    exact = order == "exact"
    n = grid.n
    x = grid.x
    ii, ll = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    dist = x[ii] - x[ll]
    mid = 0.5 * (x[ii] + x[ll])
    p = _dual_p(grid, h, oversample)
    dp = p[1] - p[0]

    if isinstance(f, PolynomialSymbol):
        sym = f.smoothed(float(params.position_variance[0]), 0.0) if exact else f
        by_power: dict = {}
        for (i, j), c in sym.coeffs.items():
            by_power.setdefault(j, []).append((i, c))
        sums = _p_power_sums(grid, p, h, by_power.keys())
        acc = np.zeros((n, n), dtype=complex)
        for j, terms in by_power.items():
            mpoly = sum(c * mid**i for i, c in terms)
            acc += mpoly * sums[j][ii - ll + n - 1]
    elif isinstance(f, SampledSymbol):
        pg = f.grid
        if abs(pg.dq - grid.dx) > 1e-9 * grid.dx or pg.p.size != p.size or abs(pg.dp - dp) > 1e-9 * dp:
            raise GridMismatchError("sampled symbol grid must use the position spacing and its dual p axis")
        i0 = pg.locate(grid)
        # the u factor is applied below as the exact multiplier on x - x'
        fh = f.smoothed_transform(params, momentum=False) if exact else f.fourier_transform()[2]
        on_grid = f.inverse(fh)
        half = f.inverse(fh, q_shift=0.5 * pg.dq)
        # midpoint lattice: index c = i + l, value at x_0 + c dx / 2
        mids = np.empty((2 * n - 1, p.size))
        mids[0::2] = on_grid[i0 : i0 + n]
        mids[1::2] = half[i0 : i0 + n - 1]
        d = np.arange(-(n - 1), n)
        table = mids @ np.exp(2j * np.pi * np.outer(pg.p, d * grid.dx) / h) * pg.dp
        acc = table[ii + ll, ii - ll + n - 1]
    else:
        raise UnsupportedSymbolError(
            f"{type(f).__name__} has no closed-form or discrete Fourier representation; "
            "use kernel_by_quadrature"
        )
    if exact:
        acc = acc * np.exp(-(np.pi / (2 * h)) * s * dist**2)
    mat = acc / h * grid.dx
    tag, shift = _tag(f, params) if exact else (None, 0.0)
    op = OperatorKernel(mat, grid, tag, shift)
    if drop_constant:
        op = op.remove_constant()
    return op


def apply(kernel: OperatorKernel, psi: WaveFunction) -> WaveFunction:
    if not kernel.grid.same_as(psi.grid):
        raise GridMismatchError("operator and wave function live on different grids")
    return WaveFunction(kernel.matrix @ psi.values, psi.grid)


def expectation(kernel: OperatorKernel, psi: WaveFunction) -> float:
    """Re <psi, A psi> with the complex pairing conj(psi) A psi."""
    return float(np.real(psi.inner(apply(kernel, psi))))


def smoothing_variance(params: ModelParams) -> float:
    """Position smoothing variance shared by every coordinate; requires a_i/b_i equal."""
    ratios = np.asarray(params.a) / np.asarray(params.b)
    if np.max(np.abs(ratios - ratios[0])) > 1e-12 * ratios[0]:
        raise ParameterError("Coulomb smoothing needs a_1/b_1 = a_2/b_2 = a_3/b_3")
    return float(params.position_variance[0])


def coulomb_smoothed(r, e2: float, sigma: float) -> np.ndarray:
    """-(e^2/r) erf(r / (sigma sqrt 2)), with the finite limit at r = 0."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -e2 / r * erf(r / (sigma * np.sqrt(2)))
    return np.where(r == 0, -e2 * np.sqrt(2 / np.pi) / sigma, out)


def position_observable(V, params: ModelParams, x, nodes: int = 80) -> np.ndarray:
    """Multiplication field V-bar: V convolved with the Gaussian of variance h a/(4 pi b).

    ``V`` is a :class:`CoulombPotential` (``x`` holds radii, ``params.n == 3``),
    a q-only :class:`PolynomialSymbol` (closed form), or a callable of one
    coordinate (Gauss-Hermite quadrature).
    """
    xs = x.x if isinstance(x, PositionGrid) else np.asarray(x, dtype=float)
    if isinstance(V, CoulombPotential):
        if params.n != 3:
            raise ParameterError("the Coulomb potential needs n = 3")
        var = smoothing_variance(params)
        return coulomb_smoothed(xs, V.e2, math.sqrt(var))
    var = float(params.position_variance[0])
    if params.n != 1:
        raise ParameterError("one-dimensional potentials need n = 1")
    if isinstance(V, (int, float)):
        return np.full(xs.shape, float(V))
    if isinstance(V, PolynomialSymbol):
        if V.depends_on_p:
            raise ParameterError("position_observable needs a symbol independent of p")
        return V.smoothed(var, 0.0)(xs, 0.0)
    sd = math.sqrt(var)
    with np.errstate(all="ignore"):
        reach = np.max(np.abs(xs)) if xs.size else 0.0
        probe = reach + sd * np.array([8.0, 16.0, 32.0])
        for sign in (1, -1):
            vals = np.abs(np.asarray(V(sign * probe), dtype=float)) * np.exp(-0.5 * ((probe - reach) / sd) ** 2)
            if not np.all(np.isfinite(vals)) or vals[-1] > vals[0]:
                raise DivergenceError("potential grows faster than the Gaussian smoothing decays")
    t, w = np.polynomial.hermite_e.hermegauss(nodes)
    vals = np.asarray(V(xs[:, None] + sd * t[None, :]), dtype=float)
    return vals @ w / math.sqrt(2 * math.pi)
