"""Uniform periodic 1D grid and the spectral operators living on it.

The torus [-L, L) stands in for the real line.  Frequencies use the angular
convention k_m = pi*m/L, so the symbol of (-Delta)^s is exactly |k|^{2s}.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

#: Imaginary residue (relative to the output norm) tolerated after an inverse FFT.
IMAG_TOL = 1e-12


class GridError(ValueError):
    """Raised for invalid grids or fields living on mismatched grids."""


@dataclass(frozen=True)
class Grid1D:
    """Periodic grid with nodes x_j = -L + j*dx, j = 0..N-1."""

    L: float
    N: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.L) or self.L <= 0:
            raise GridError(f"half-length L must be positive, got {self.L}")
        if int(self.N) != self.N or self.N < 8 or (self.N & (self.N - 1)) != 0:
            raise GridError(f"N must be a power of two >= 8, got {self.N}")

    @cached_property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.L + self.dx * np.arange(self.N)
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Angular frequencies in FFT order (0, 1, ..., N/2-1, -N/2, ..., -1) * pi/L."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.dx)
        k.setflags(write=False)
        return k

    @property
    def origin_index(self) -> int:
        return self.N // 2

    def nodes_per_length(self, length: float) -> int:
        """Number of nodes spanning ``length``; raises unless it is an integer."""
        n = length / self.dx
        if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
            raise GridError(f"length {length} is not a whole number of grid cells (dx={self.dx})")
        return int(round(n))

    def admits_period(self, period: float = 1.0) -> bool:
        """True when integer translations by ``period`` are exact grid shifts."""
        try:
            self.nodes_per_length(period)
            cells = 2.0 * self.L / period
        except GridError:
            return False
        return abs(cells - round(cells)) < 1e-9


def make_grid(L: float, N: int) -> Grid1D:
    return Grid1D(float(L), int(N))


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a function on a grid.  Immutable."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.N,):
            raise GridError(f"expected {self.grid.N} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise GridError("field samples must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid1D, fn) -> Field:
        return cls(grid, fn(grid.x))

    def _other(self, other) -> np.ndarray | float:
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other) -> Field:
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other) -> Field:
        return Field(self.grid, self.values - self._other(other))

    def __mul__(self, other) -> Field:
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self) -> Field:
        return Field(self.grid, -self.values)

    def __abs__(self) -> Field:
        return Field(self.grid, np.abs(self.values))

    def __len__(self) -> int:
        return self.grid.N


@dataclass(frozen=True, eq=False)
class StatePair:
    """A pair (u, v) sharing one grid."""

    u: Field
    v: Field

    def __post_init__(self) -> None:
        _check_same_grid(self.u, self.v)

    @classmethod
    def from_arrays(cls, grid: Grid1D, u, v) -> StatePair:
        return cls(Field(grid, u), Field(grid, v))

    @classmethod
    def from_stacked(cls, grid: Grid1D, w: np.ndarray) -> StatePair:
        return cls(Field(grid, w[0]), Field(grid, w[1]))

    @property
    def grid(self) -> Grid1D:
        return self.u.grid

    def stacked(self) -> np.ndarray:
        """Return a fresh (2, N) array [u; v]."""
        return np.stack([self.u.values, self.v.values])

    def __add__(self, other: StatePair) -> StatePair:
        return StatePair(self.u + other.u, self.v + other.v)

    def __sub__(self, other: StatePair) -> StatePair:
        return StatePair(self.u - other.u, self.v - other.v)

    def __mul__(self, c: float) -> StatePair:
        return StatePair(self.u * c, self.v * c)

    __rmul__ = __mul__

    def __neg__(self) -> StatePair:
        return StatePair(-self.u, -self.v)

    def __abs__(self) -> StatePair:
        return StatePair(abs(self.u), abs(self.v))

    def swapped(self) -> StatePair:
        return StatePair(self.v, self.u)

    def is_zero(self) -> bool:
        return not (np.any(self.u.values) or np.any(self.v.values))


def _check_same_grid(f: Field, g: Field) -> None:
    if f.grid != g.grid:
        raise GridError(f"grid mismatch: {f.grid} vs {g.grid}")


def apply_multiplier(values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Multiply the DFT of ``values`` (last axis) by ``symbol`` and return the real part.

    Raises ``ArithmeticError`` if the discarded imaginary part is not round-off.
    """
    out = np.fft.ifft(symbol * np.fft.fft(values, axis=-1), axis=-1)
    scale = np.linalg.norm(out.real)
    resid = np.linalg.norm(out.imag)
    # absolute floor: FFT round-off when the output itself is ~0 (e.g. constants)
    floor = 100 * np.finfo(float).eps * np.max(np.abs(symbol)) * np.linalg.norm(values)
    if resid > IMAG_TOL * scale + floor:
        raise ArithmeticError(f"multiplier output not real: imaginary residue {resid:.3e} vs {scale:.3e}")
    return out.real


def frac_laplacian(f: Field, s: float) -> Field:
    """(-Delta)^s f for s in {1/4, 1/2}, via the Fourier symbol |k|^{2s}."""
    if s not in (0.25, 0.5):
        raise ValueError(f"only s = 1/4 and s = 1/2 are supported, got {s}")
    symbol = np.abs(f.grid.k) ** (2.0 * s)
    return Field(f.grid, apply_multiplier(f.values, symbol))


def periodic_kernel(grid: Grid1D, offsets: np.ndarray) -> np.ndarray:
    """Sum over periodic images of 1/|d|^2 for node offsets d (nonzero mod N).

    Closed form: sum_n 1/(d + 2Ln)^2 = (pi/2L)^2 / sin^2(pi d / 2L).
    """
    d = np.asarray(offsets) * grid.dx
    return (np.pi / (2.0 * grid.L)) ** 2 / np.sin(np.pi * d / (2.0 * grid.L)) ** 2


def gagliardo_seminorm_sq(f: Field) -> float:
    """Quadrature of [f]^2 = \\int\\int |f(x)-f(y)|^2 / |x-y|^2 on the torus.

    Direct O(N^2) double sum over node pairs with the image-summed kernel.  The
    diagonal cell uses the limit |f'(x_i)|^2 with a centered difference.
    """
    vals = f.values
    grid = f.grid
    N = grid.N
    # pairs (i, i+d) and (i, i-d) share the kernel value, so sum d=1..N-1 once
    offsets = np.arange(1, N)
    kern = periodic_kernel(grid, offsets)
    total = 0.0
    for d, kd in zip(offsets, kern):
        diff = vals - np.roll(vals, -d)
        total += kd * np.dot(diff, diff)
    slope = (np.roll(vals, -1) - np.roll(vals, 1)) / (2.0 * grid.dx)
    total += np.dot(slope, slope)
    return float(total * grid.dx * grid.dx)


def lp_norm(f: Field, p: float) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float((np.sum(np.abs(f.values) ** p) * f.grid.dx) ** (1.0 / p))


def l2_inner(f: Field, g: Field) -> float:
    _check_same_grid(f, g)
    return float(np.dot(f.values, g.values) * f.grid.dx)


def shift(f: Field, z: int) -> Field:
    """Cyclic translation by z nodes: shift(f, z)(x) = f(x - z*dx)."""
    return Field(f.grid, np.roll(f.values, int(z)))


def shift_state(state: StatePair, z: int) -> StatePair:
    return StatePair(shift(state.u, z), shift(state.v, z))


def tail_mass(state: StatePair, fraction: float = 0.1) -> float:
    """L^2 mass of u^2 + v^2 in the outer ``fraction`` of the domain (|x| >= (1-fraction) L)."""
    grid = state.grid
    mask = np.abs(grid.x) >= (1.0 - fraction) * grid.L
    dens = state.u.values ** 2 + state.v.values ** 2
    return float(np.sum(dens[mask]) * grid.dx)
