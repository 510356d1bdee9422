"""Uniform grids, sampled fields, Fourier machinery and discrete norms.

Fourier convention throughout: ``F(xi) = int f(x) exp(-2 pi i x xi) dx``.
Spectra produced here are continuous-normalised (they approximate that
integral, including the phase from the grid origin) and stored with sorted
frequencies, i.e. in ``fftshift`` order.

Grids are cell-centred: node ``i`` sits at ``origin + i * spacing`` and owns
a cell of width ``spacing``; the box has extent ``n_points * spacing`` and is
closed periodically. Quadrature is the periodic trapezoid rule, which on this
layout gives every node the weight ``spacing``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Union

import numpy as np

from . import interp

SUPPORT_TOL = 1e-10


@dataclass(frozen=True)
class Grid1D:
    n_points: int
    origin: float
    spacing: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")
        if not np.isfinite(self.origin):
            raise ValueError("origin must be finite")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "origin", float(self.origin))
        object.__setattr__(self, "spacing", float(self.spacing))

    @classmethod
    def centered(cls, n_points: int, length: float) -> "Grid1D":
        """Grid of ``n_points`` nodes on ``[-length/2, length/2)``."""
        return cls(n_points, -0.5 * length, length / n_points)

    @property
    def points(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n_points)

    @property
    def extent(self) -> float:
        return self.n_points * self.spacing

    @property
    def last(self) -> float:
        return self.origin + (self.n_points - 1) * self.spacing

    def frequencies(self) -> "Grid1D":
        """Dual grid of sorted DFT frequencies (cycles per unit length)."""
        dxi = 1.0 / self.extent
        return Grid1D(self.n_points, -(self.n_points // 2) * dxi, dxi)

    def padded(self, n_points: int) -> "Grid1D":
        """Same nodes extended symmetrically by zero-padding cells."""
        if n_points < self.n_points:
            raise ValueError("padding cannot shrink a grid")
        left = (n_points - self.n_points) // 2
        return Grid1D(n_points, self.origin - left * self.spacing, self.spacing)

    def reflected(self) -> "Grid1D":
        """Grid of the negated nodes, in increasing order."""
        return Grid1D(self.n_points, -self.last, self.spacing)

    def index_of(self, x) -> np.ndarray:
        return interp.positions(x, self.origin, self.spacing)

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers ``2 pi xi`` in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    def same_points(self, other: "Grid1D", rtol: float = 1e-12) -> bool:
        return (
            self.n_points == other.n_points
            and abs(self.spacing - other.spacing) <= rtol * self.spacing
            and abs(self.origin - other.origin) <= rtol * max(self.extent, 1.0)
        )


def _as_complex(values, shape) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.complex128)
    if arr.shape != shape:
        raise ValueError(f"values have shape {arr.shape}, grids require {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field values must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class Profile1D:
    grid_z: Grid1D
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "values", _as_complex(self.values, (self.grid_z.n_points,)))

    @property
    def grids(self):
        return (self.grid_z,)

    def with_values(self, values, **meta) -> "Profile1D":
        return Profile1D(self.grid_z, values, dict(meta))


@dataclass(frozen=True, eq=False)
class SpeedField:
    """Samples of ``f(z, c)``; ``values[m, i]`` is ``f(z_i, c_m)``."""

    grid_z: Grid1D
    grid_c: Grid1D
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        shape = (self.grid_c.n_points, self.grid_z.n_points)
        object.__setattr__(self, "values", _as_complex(self.values, shape))

    @property
    def grids(self):
        return (self.grid_z, self.grid_c)

    def with_values(self, values, **meta) -> "SpeedField":
        return SpeedField(self.grid_z, self.grid_c, values, dict(meta))

    def slice(self, m: int) -> Profile1D:
        return Profile1D(self.grid_z, self.values[m])

    def edge_fraction(self) -> float:
        """Largest magnitude on the first/last z cells relative to the peak."""
        peak = np.abs(self.values).max()
        if peak == 0:
            return 0.0
        edge = max(np.abs(self.values[:, 0]).max(), np.abs(self.values[:, -1]).max())
        return float(edge / peak)

    def support(self, tol: float = SUPPORT_TOL):
        """Bounding box ``(zmin, zmax, cmin, cmax)`` of ``|f| > tol * max|f|``."""
        mag = np.abs(self.values)
        peak = mag.max()
        if peak == 0:
            return None
        mask = mag > tol * peak
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        z, c = self.grid_z.points, self.grid_c.points
        return (z[cols[0]], z[cols[-1]], c[rows[0]], c[rows[-1]])


@dataclass(frozen=True, eq=False)
class PhysField2D:
    """Samples of ``u(x, y)``; ``values[j, i]`` is ``u(x_i, y_j)``."""

    grid_x: Grid1D
    grid_y: Grid1D
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        shape = (self.grid_y.n_points, self.grid_x.n_points)
        object.__setattr__(self, "values", _as_complex(self.values, shape))

    @property
    def grids(self):
        return (self.grid_x, self.grid_y)

    def with_values(self, values, **meta) -> "PhysField2D":
        return PhysField2D(self.grid_x, self.grid_y, values, dict(meta))


Field = Union[Profile1D, SpeedField, PhysField2D]


def cell_weight(fld: Field) -> float:
    w = 1.0
    for g in fld.grids:
        w *= g.spacing
    return w


# ---------------------------------------------------------------- Fourier


def fourier_1d(values: np.ndarray, grid: Grid1D, axis: int = -1):
    """Continuous-normalised FT along ``axis``; returns ``(freq_grid, F)``."""
    fg = grid.frequencies()
    xi = fg.points
    shape = [1] * np.ndim(values)
    shape[axis] = grid.n_points
    phase = np.exp(-2j * np.pi * grid.origin * xi).reshape(shape)
    spec = np.fft.fftshift(np.fft.fft(values, axis=axis), axes=axis)
    return fg, grid.spacing * phase * spec


def inverse_fourier_1d(spec: np.ndarray, grid: Grid1D, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`fourier_1d` onto the physical ``grid``."""
    xi = grid.frequencies().points
    shape = [1] * np.ndim(spec)
    shape[axis] = grid.n_points
    phase = np.exp(2j * np.pi * grid.origin * xi).reshape(shape)
    rolled = np.fft.ifftshift(phase * spec, axes=axis)
    return np.fft.ifft(rolled, axis=axis) / grid.spacing


def spectrum_2d(fld: Union[SpeedField, PhysField2D]) -> PhysField2D:
    """2D spectrum as a field on the frequency grids.

    For a :class:`SpeedField` the column axis is ``xi`` (dual to ``z``) and
    the row axis is ``eta`` (dual to ``c``).
    """
    gcol, grow = fld.grids
    fcol, spec = fourier_1d(fld.values, gcol, axis=1)
    frow, spec = fourier_1d(spec, grow, axis=0)
    return PhysField2D(fcol, frow, spec)


def inverse_spectrum_2d(spec: np.ndarray, grid_col: Grid1D, grid_row: Grid1D) -> np.ndarray:
    vals = inverse_fourier_1d(spec, grid_row, axis=0)
    return inverse_fourier_1d(vals, grid_col, axis=1)


def spectral_derivative(values: np.ndarray, grid: Grid1D, axis: int = -1, order: int = 1):
    k = grid.wavenumbers()
    shape = [1] * np.ndim(values)
    shape[axis] = grid.n_points
    mult = ((1j * k) ** order).reshape(shape)
    return np.fft.ifft(mult * np.fft.fft(values, axis=axis), axis=axis)


def sobolev_multiplier(grids, s: float) -> np.ndarray:
    """``(1 + |2 pi xi|^2)^(s/2)`` on the FFT-ordered frequency mesh.

    The mesh axes follow array order, so pass grids as (rows, ..., cols).
    """
    ks = np.meshgrid(*[g.wavenumbers() for g in grids], indexing="ij")
    k2 = sum(k * k for k in ks)
    return (1.0 + k2) ** (0.5 * s)


# ------------------------------------------------------------------ norms


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise ValueError("norms require finite values")


def lp_norm(fld: Field, p: float) -> float:
    """Discrete L^p norm with uniform cell weights; ``p = inf`` is the max modulus."""
    if not (p >= 1):
        raise ValueError(f"p must be >= 1, got {p}")
    _check_finite(fld.values)
    mag = np.abs(fld.values).ravel()
    if np.isinf(p):
        return float(mag.max())
    w = cell_weight(fld)
    if p == 1:
        return float(np.sum(mag) * w)
    if p == 2:
        return float(np.sqrt(np.sum(mag * mag) * w))
    return float((np.sum(mag**p) * w) ** (1.0 / p))


def sobolev_norm(fld: Field, s: float) -> float:
    """Spectral H^s norm ``|| (1 + |2 pi xi|^2)^(s/2) F f ||_2``."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    _check_finite(fld.values)
    grids = fld.grids[::-1]  # array axis order
    spec = np.fft.fftn(fld.values)
    if s != 0:
        spec = spec * sobolev_multiplier(grids, s)
    # discrete Plancherel: sum |f|^2 w == sum |fft f|^2 w / N
    total = np.sum(np.abs(spec) ** 2) * cell_weight(fld) / fld.values.size
    return float(np.sqrt(total))


def slice_sobolev_norms(values: np.ndarray, grid_z: Grid1D, s: float) -> np.ndarray:
    """H^s_z norm of every row of ``values``."""
    spec = np.fft.fft(values, axis=-1)
    if s != 0:
        spec = spec * sobolev_multiplier([grid_z], s)
    return np.sqrt(np.sum(np.abs(spec) ** 2, axis=-1) * grid_z.spacing / grid_z.n_points)


def slice_lp_norms(values: np.ndarray, grid_z: Grid1D, p: float) -> np.ndarray:
    mag = np.abs(values)
    if np.isinf(p):
        return mag.max(axis=-1)
    return (np.sum(mag**p, axis=-1) * grid_z.spacing) ** (1.0 / p)


# ------------------------------------------------------ spectral sampling


def spectrum_lines_sample(
    spectrum: PhysField2D,
    slopes,
    order: int = interp.DEFAULT_ORDER,
    carrier: float = 0.0,
) -> np.ndarray:
    """Rows ``spectrum(xi_k, slope_j * xi_k)`` for every slope; shape ``(len(slopes), n_xi)``.

    ``spectrum.grid_x`` is the ``xi`` axis (columns) and ``spectrum.grid_y``
    the ``eta`` axis (rows). The ``eta`` axis is interpolated with a local
    Lagrange polynomial of the given order; points off the ``eta`` grid are 0.
    A nonzero ``carrier`` ``c0`` removes the oscillation ``exp(-2 pi i c0 eta)``
    (a speed field centred at ``c0``) before interpolating and restores it after.
    Slope 0 returns the stored ``eta = 0`` row unchanged.
    """
    slopes = np.atleast_1d(np.asarray(slopes, dtype=float))
    if not np.all(np.isfinite(slopes)):
        raise ValueError("slopes must be finite")
    geta = spectrum.grid_y
    xi = spectrum.grid_x.points
    vals = spectrum.values
    if carrier != 0.0:
        vals = vals * np.exp(2j * np.pi * carrier * geta.points)[:, None]
    pos = geta.index_of(slopes[:, None] * xi[None, :])
    out = interp.sample_columns(np.ascontiguousarray(vals), np.ascontiguousarray(pos), int(order))
    if carrier != 0.0:
        out *= np.exp(-2j * np.pi * carrier * slopes[:, None] * xi[None, :])
    zero_row = geta.index_of(0.0)
    r = int(round(float(zero_row)))
    if abs(zero_row - r) < 1e-12 and 0 <= r < geta.n_points:
        out[slopes == 0.0] = spectrum.values[r]
    return out


def spectrum_line_sample(
    spectrum: PhysField2D,
    slope: float,
    order: int = interp.DEFAULT_ORDER,
    carrier: float = 0.0,
) -> np.ndarray:
    """Values of a 2D spectrum on the line ``eta = slope * xi``.

    See :func:`spectrum_lines_sample`.
    """
    return spectrum_lines_sample(spectrum, [slope], order, carrier)[0]
