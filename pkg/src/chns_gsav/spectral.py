"""Doubly periodic Fourier grids, fields and spectral operators.

Fields are stored on a uniform ``(ny, nx)`` sample grid (axis 0 is y, axis 1
is x) together with their real-FFT coefficients, computed lazily from
whichever representation exists.  The forward transform carries the
``1/(nx*ny)`` factor, so ``coeffs[0, 0]`` is the domain average.

The Nyquist wavenumber of each axis is zeroed in every differentiation
multiplier, including the Laplacian.  Dealiased products drop the Nyquist
modes of their factors and of their result, so fields produced by the solver
live in the Nyquist-free subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import CompatibilityError

__all__ = [
    "Grid2",
    "ScalarField",
    "VectorField2",
    "gradient",
    "laplacian",
    "divergence",
    "curl_curl",
    "solve_helmholtz",
    "solve_ch_operator",
    "solve_poisson_zero_mean",
    "dealiased_product",
    "dealiased_product_sum",
    "dealiased_map",
    "padded_mean",
    "l2_norm",
    "h1_seminorm",
    "mean",
    "inner",
    "max_abs",
]


def _forward(samples):
    return sfft.rfft2(samples, norm="forward")


def _inverse(coeffs, shape):
    return sfft.irfft2(coeffs, s=shape, norm="forward")


@dataclass(frozen=True)
class Grid2:
    """Uniform doubly periodic grid on ``[x0, x0+Lx) x [y0, y0+Ly)``."""

    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 4 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 4, got {n!r}")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError("domain lengths must be positive")

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def spectral_shape(self):
        return (self.ny, self.nx // 2 + 1)

    @property
    def area(self):
        return self.Lx * self.Ly

    @cached_property
    def kx(self):
        """Signed x wavenumbers of the rfft axis (last entry is the Nyquist mode)."""
        return 2 * np.pi / self.Lx * np.arange(self.nx // 2 + 1)

    @cached_property
    def ky(self):
        return 2 * np.pi / self.Ly * np.fft.fftfreq(self.ny, d=1.0 / self.ny)

    @cached_property
    def kx_hat(self):
        """x wavenumbers with the Nyquist entry zeroed, shaped for broadcasting."""
        k = self.kx.copy()
        k[self.nx // 2] = 0.0
        return k[None, :]

    @cached_property
    def ky_hat(self):
        k = self.ky.copy()
        k[self.ny // 2] = 0.0
        return k[:, None]

    @cached_property
    def k2(self):
        return self.kx_hat**2 + self.ky_hat**2

    @cached_property
    def parseval_weights(self):
        w = np.full(self.spectral_shape, 2.0)
        w[:, 0] = 1.0
        w[:, -1] = 1.0
        return w

    @cached_property
    def nyquist_mask(self):
        """True on coefficients belonging to a Nyquist row or column."""
        mask = np.zeros(self.spectral_shape, dtype=bool)
        mask[self.ny // 2, :] = True
        mask[:, self.nx // 2] = True
        return mask

    @cached_property
    def x(self):
        return self.x0 + self.Lx * np.arange(self.nx) / self.nx

    @cached_property
    def y(self):
        return self.y0 + self.Ly * np.arange(self.ny) / self.ny

    def mesh(self):
        """Return ``(X, Y)`` coordinate arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def padded_shape(self, factor):
        my = int(math.ceil(factor * self.ny / 2)) * 2
        mx = int(math.ceil(factor * self.nx / 2)) * 2
        return (my, mx)


class ScalarField:
    """Real periodic field with paired sample/coefficient views.

    Treat instances as immutable: the arrays returned by :attr:`samples` and
    :attr:`coeffs` are flagged read-only and operations always build new
    fields.
    """

    __slots__ = ("grid", "_samples", "_coeffs", "_padded")

    def __init__(self, grid, samples=None, *, coeffs=None):
        if samples is None and coeffs is None:
            raise ValueError("need samples or coeffs")
        self.grid = grid
        self._samples = None
        self._coeffs = None
        self._padded = {}
        if samples is not None:
            samples = np.array(samples, dtype=float)
            if samples.shape != grid.shape:
                raise ValueError(f"samples shape {samples.shape} != grid shape {grid.shape}")
            samples.setflags(write=False)
            self._samples = samples
        if coeffs is not None:
            coeffs = np.asarray(coeffs, dtype=complex)
            if coeffs.shape != grid.spectral_shape:
                raise ValueError("coefficient array does not match grid")
            coeffs.setflags(write=False)
            self._coeffs = coeffs

    @classmethod
    def zeros(cls, grid):
        return cls(grid, coeffs=np.zeros(grid.spectral_shape, dtype=complex))

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid, func):
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(func(X, Y), grid.shape))

    @property
    def samples(self):
        if self._samples is None:
            s = _inverse(self._coeffs, self.grid.shape)
            s.setflags(write=False)
            self._samples = s
        return self._samples

    @property
    def coeffs(self):
        if self._coeffs is None:
            c = _forward(self._samples)
            c.setflags(write=False)
            self._coeffs = c
        return self._coeffs

    def padded(self, shape):
        """Samples of the Nyquist-free trigonometric interpolant on a finer grid."""
        cached = self._padded.get(shape)
        if cached is None:
            cached = _inverse(_pad(self.coeffs, self.grid, shape), shape)
            self._padded[shape] = cached
        return cached

    def without_nyquist(self):
        c = self.coeffs.copy()
        c[self.grid.nyquist_mask] = 0.0
        return ScalarField(self.grid, coeffs=c)

    def is_finite(self):
        data = self._samples if self._samples is not None else self._coeffs
        return bool(np.all(np.isfinite(data)))

    # linear algebra -------------------------------------------------------
    def _binary(self, other, op):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            if self._coeffs is not None and other._coeffs is not None:
                return ScalarField(self.grid, coeffs=op(self._coeffs, other._coeffs))
            return ScalarField(self.grid, op(self.samples, other.samples))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        if isinstance(scalar, ScalarField):
            raise TypeError("use dealiased_product for field products")
        scalar = float(scalar)
        if self._coeffs is not None:
            return ScalarField(self.grid, coeffs=self._coeffs * scalar)
        return ScalarField(self.grid, self._samples * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def __repr__(self):
        return f"ScalarField({self.grid.nx}x{self.grid.ny})"


@dataclass(frozen=True)
class VectorField2:
    """Two-component vector field; both components share one grid."""

    x: ScalarField
    y: ScalarField

    def __post_init__(self):
        if self.x.grid != self.y.grid:
            raise ValueError("vector components must share one grid")

    @property
    def grid(self):
        return self.x.grid

    @classmethod
    def zeros(cls, grid):
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid))

    @classmethod
    def from_functions(cls, grid, fx, fy):
        return cls(ScalarField.from_function(grid, fx), ScalarField.from_function(grid, fy))

    def components(self):
        return (self.x, self.y)

    def is_finite(self):
        return self.x.is_finite() and self.y.is_finite()

    def __add__(self, other):
        return VectorField2(self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return VectorField2(self.x - other.x, self.y - other.y)

    def __neg__(self):
        return VectorField2(-self.x, -self.y)

    def __mul__(self, scalar):
        return VectorField2(self.x * scalar, self.y * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))


def linear_combination(weights, fields):
    """Return ``sum(w * f)`` over matching sequences of scalar or vector fields."""
    weights = list(weights)
    fields = list(fields)
    if isinstance(fields[0], VectorField2):
        return VectorField2(
            linear_combination(weights, [f.x for f in fields]),
            linear_combination(weights, [f.y for f in fields]),
        )
    grid = fields[0].grid
    acc = np.zeros(grid.spectral_shape, dtype=complex)
    for w, f in zip(weights, fields):
        acc += w * f.coeffs
    return ScalarField(grid, coeffs=acc)


# padding ------------------------------------------------------------------
def _pad(coeffs, grid, shape):
    my, mx = shape
    hy, hx = grid.ny // 2, grid.nx // 2
    out = np.zeros((my, mx // 2 + 1), dtype=complex)
    out[:hy, :hx] = coeffs[:hy, :hx]
    out[my - hy + 1:, :hx] = coeffs[grid.ny - hy + 1:, :hx]
    return out


def _truncate(coeffs_padded, grid, shape):
    my, _ = shape
    hy, hx = grid.ny // 2, grid.nx // 2
    out = np.zeros(grid.spectral_shape, dtype=complex)
    out[:hy, :hx] = coeffs_padded[:hy, :hx]
    out[grid.ny - hy + 1:, :hx] = coeffs_padded[my - hy + 1:, :hx]
    return out


def _common_grid(fields):
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError("fields live on different grids")
    return grid


def dealiased_product_sum(terms, factor=1.5, weights=None):
    """Dealiased ``sum_i w_i * prod_j terms[i][j]`` evaluated on one padded grid."""
    grid = _common_grid([f for term in terms for f in term])
    shape = grid.padded_shape(factor)
    if weights is None:
        weights = [1.0] * len(terms)
    acc = np.zeros(shape)
    for w, term in zip(weights, terms):
        prod = term[0].padded(shape)
        for f in term[1:]:
            prod = prod * f.padded(shape)
        acc += w * prod
    return ScalarField(grid, coeffs=_truncate(_forward(acc), grid, shape))


def dealiased_product(fs):
    """Pointwise product of 2 or 3 fields without aliasing.

    Quadratic products use the 3/2 rule; triple products are padded by a
    factor 2.
    """
    if len(fs) not in (2, 3):
        raise ValueError("dealiased_product takes 2 or 3 fields")
    return dealiased_product_sum([fs], factor=1.5 if len(fs) == 2 else 2.0)


def dealiased_map(f, func, factor=2.0):
    """Apply a pointwise polynomial ``func`` on the padded grid and truncate.

    ``factor`` must cover the polynomial degree (2 is alias-free for cubics).
    """
    shape = f.grid.padded_shape(factor)
    vals = func(f.padded(shape))
    return ScalarField(f.grid, coeffs=_truncate(_forward(vals), f.grid, shape))


def padded_mean(f, func, factor=2.0):
    """Domain average of ``func(f)`` by quadrature on the padded grid."""
    return float(np.mean(func(f.padded(f.grid.padded_shape(factor)))))


# differential operators -----------------------------------------------------
def gradient(f):
    c = f.coeffs
    g = f.grid
    return VectorField2(
        ScalarField(g, coeffs=1j * g.kx_hat * c),
        ScalarField(g, coeffs=1j * g.ky_hat * c),
    )


def laplacian(f):
    return ScalarField(f.grid, coeffs=-f.grid.k2 * f.coeffs)


def divergence(v):
    g = v.grid
    return ScalarField(g, coeffs=1j * g.kx_hat * v.x.coeffs + 1j * g.ky_hat * v.y.coeffs)


def curl_curl(v):
    """``curl curl v`` through the scalar vorticity ``w = dv_y/dx - dv_x/dy``."""
    g = v.grid
    w = 1j * g.kx_hat * v.y.coeffs - 1j * g.ky_hat * v.x.coeffs
    return VectorField2(
        ScalarField(g, coeffs=1j * g.ky_hat * w),
        ScalarField(g, coeffs=-1j * g.kx_hat * w),
    )


# constant-coefficient solves ---------------------------------------------------
def solve_helmholtz(a, b, rhs):
    """Solve ``(a - b*lap) w = rhs``."""
    if not a > 0:
        raise ValueError("solve_helmholtz needs a > 0")
    g = rhs.grid
    return ScalarField(g, coeffs=rhs.coeffs / (a + b * g.k2))


def solve_ch_operator(a, c1, c2, rhs):
    """Solve ``(a + c1*lap^2 - c2*lap) phi = rhs``."""
    if not (a > 0 and c1 > 0):
        raise ValueError("solve_ch_operator needs a > 0 and c1 > 0")
    g = rhs.grid
    return ScalarField(g, coeffs=rhs.coeffs / (a + c1 * g.k2**2 + c2 * g.k2))


def solve_poisson_zero_mean(rhs, tol=1e-8):
    """Solve ``lap p = rhs`` with ``mean(p) = 0``.

    Modes annihilated by the Laplacian (the mean and pure Nyquist modes) are
    set to zero in the solution.
    """
    g = rhs.grid
    c = rhs.coeffs
    rms = l2_norm(rhs) / math.sqrt(g.area)
    if abs(c[0, 0]) > tol * rms:
        raise CompatibilityError(
            f"rhs mean {c[0, 0].real:.3e} exceeds {tol:g} x rms {rms:.3e}"
        )
    k2 = g.k2
    out = np.zeros_like(c)
    nz = k2 > 0
    out[nz] = -c[nz] / k2[nz]
    return ScalarField(g, coeffs=out)


# norms -------------------------------------------------------------------------
def _sq_sum(f, weight=None):
    c = f.coeffs
    w = f.grid.parseval_weights if weight is None else f.grid.parseval_weights * weight
    return float(np.sum(w * (c.real**2 + c.imag**2)))


def l2_norm(f):
    """L2 norm over the domain (Parseval); accepts scalar or vector fields."""
    if isinstance(f, VectorField2):
        return math.sqrt(l2_norm(f.x) ** 2 + l2_norm(f.y) ** 2)
    return math.sqrt(f.grid.area * _sq_sum(f))


def h1_seminorm(f):
    """``||grad f||`` over the domain; for vector fields sums both components."""
    if isinstance(f, VectorField2):
        return math.sqrt(h1_seminorm(f.x) ** 2 + h1_seminorm(f.y) ** 2)
    return math.sqrt(f.grid.area * _sq_sum(f, f.grid.k2))


def mean(f):
    return float(f.coeffs[0, 0].real)


def inner(f, g):
    """L2 inner product ``(f, g)``."""
    w = f.grid.parseval_weights
    return float(f.grid.area * np.sum(w * (f.coeffs * np.conj(g.coeffs)).real))


def max_abs(f):
    return float(np.max(np.abs(f.samples)))
