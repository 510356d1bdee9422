"""Free propagators and transform-built linear solutions.

``S_1(a t)`` solves ``i f_t + a f_zz = 0`` and is the Fourier multiplier
``exp(-i a (2 pi xi)^2 t)``; ``S_2(t)`` is its 2D analogue for
``i u_t + u_xx + u_yy = 0``. Slices of a speed field evolve with
``a = 1 + c^2``, so that ``T(S_1((1 + c^2) t) f) = S_2(t) T f``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import interp
from .field_core import Grid1D, PhysField2D, Profile1D, SpeedField
from .pwt import pwt_direct


class Kind(str, enum.Enum):
    SCHRODINGER = "schrodinger"
    HEAT = "heat"
    WAVE = "wave"


@dataclass(frozen=True)
class PropagatorSpec:
    kind: Kind
    dispersion_coeff: float
    time: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not np.isfinite(self.time):
            raise ValueError("time must be finite")
        if not self.dispersion_coeff > 0:
            raise ValueError(f"dispersion_coeff must be positive, got {self.dispersion_coeff}")

    def multiplier(self, k: np.ndarray) -> np.ndarray:
        """Symbol at angular wavenumbers ``k``; ``wave`` gives ``cos(sqrt(a) |k| t)``."""
        a, t = self.dispersion_coeff, self.time
        if self.kind is Kind.SCHRODINGER:
            return np.exp(-1j * a * k * k * t)
        if self.kind is Kind.HEAT:
            return np.exp(-a * k * k * t)
        return np.cos(np.sqrt(a) * np.abs(k) * t) + 0j


def schrodinger_multiplier_1d(grid: Grid1D, a: float, t: float) -> np.ndarray:
    k = grid.wavenumbers()
    return np.exp(-1j * a * k * k * t)


def evolve_free_1d(f: Profile1D, a: float, t: float) -> Profile1D:
    """``S_1(a t) f`` on the periodic box of ``f``."""
    if t == 0:
        return f.with_values(f.values.copy())
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    spec = np.fft.fft(f.values) * schrodinger_multiplier_1d(f.grid_z, a, t)
    return f.with_values(np.fft.ifft(spec))


def evolve_free_2d(u: PhysField2D, t: float) -> PhysField2D:
    """``S_2(t) u`` on the periodic box of ``u``."""
    if t == 0:
        return u.with_values(u.values.copy())
    ky = u.grid_y.wavenumbers()[:, None]
    kx = u.grid_x.wavenumbers()[None, :]
    mult = np.exp(-1j * (kx * kx + ky * ky) * t)
    return u.with_values(np.fft.ifft2(np.fft.fft2(u.values) * mult))


def evolve_planewave_part(f: SpeedField, t: float) -> SpeedField:
    """Evolve every slice ``f(., c)`` by ``S_1((1 + c^2) t)``."""
    if t == 0:
        return f.with_values(f.values.copy())
    c = f.grid_c.points[:, None]
    k = f.grid_z.wavenumbers()[None, :]
    mult = np.exp(-1j * (1.0 + c * c) * k * k * t)
    return f.with_values(np.fft.ifft(np.fft.fft(f.values, axis=1) * mult, axis=1))


def commensurate_y_period(grid_z: Grid1D, grid_c: Grid1D, rtol: float = 1e-9) -> float:
    """Smallest ``P`` making ``T f`` of a z-periodic field ``P``-periodic in ``y``.

    Requires every ``c_m P / L`` to be an integer, where ``L`` is the z
    period; this holds for ``P = L / h_c`` when ``c_0 / h_c`` is an integer.
    """
    r = grid_c.origin / grid_c.spacing
    if abs(r - round(r)) > rtol * max(1.0, abs(r)):
        raise ValueError("c grid origin must be an integer multiple of its spacing")
    return grid_z.extent / grid_c.spacing


def semigroup_commute_residual(
    f: SpeedField,
    t: float,
    grid_y: Grid1D,
    grid_x: Grid1D | None = None,
    order: int = interp.DEFAULT_ORDER,
    periodic: bool = True,
) -> float:
    """``||T(S_1((1+c^2)t) f) - S_2(t) T f||_2 / (1 + ||T f||_2)``.

    With ``periodic`` (the default) both sides live on a torus: the z box of
    ``f`` is the x period (``grid_x`` defaults to ``f.grid_z``) and
    ``grid_y`` must span a multiple of :func:`commensurate_y_period`, so the
    transform of a z-periodic field is itself periodic and ``S_2`` can be
    applied spectrally without edge effects.
    """
    if grid_x is None:
        grid_x = f.grid_z
    if periodic:
        period = commensurate_y_period(f.grid_z, f.grid_c)
        ratio = grid_y.extent / period
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ValueError(f"y extent {grid_y.extent} is not a multiple of the period {period}")
        if abs(grid_x.extent - f.grid_z.extent) > 1e-9 * f.grid_z.extent:
            raise ValueError("x period must equal the z period on the torus")
    tf = pwt_direct(f, grid_x, grid_y, order, periodic=periodic)
    lhs = pwt_direct(evolve_planewave_part(f, t), grid_x, grid_y, order, periodic=periodic)
    rhs = evolve_free_2d(tf, t)
    w = grid_x.spacing * grid_y.spacing
    diff = np.sqrt(np.sum(np.abs(lhs.values - rhs.values) ** 2) * w)
    norm = np.sqrt(np.sum(np.abs(tf.values) ** 2) * w)
    return float(diff / (1.0 + norm))


# ------------------------------------------------------------------- wave


def _shift_slices(values, grid_z: Grid1D, shifts, order):
    """``values[m](z - shifts[m])`` by interpolation, zero outside the box."""
    nz = grid_z.n_points
    base = np.arange(nz, dtype=float)
    out = np.empty_like(values)
    for m in range(values.shape[0]):
        out[m] = interp.sample_1d(values[m], base - shifts[m] / grid_z.spacing, order, False)
    return out


def _primitive(values, grid_z: Grid1D):
    """``int_{z_0}^z f`` per slice: spectral for the zero-mean part, exact for the mean."""
    n = grid_z.n_points
    mean = values.mean(axis=1, keepdims=True)
    k = grid_z.wavenumbers()
    inv = np.zeros_like(k, dtype=complex)
    inv[k != 0] = 1.0 / (1j * k[k != 0])
    g = np.fft.ifft(np.fft.fft(values - mean, axis=1) * inv, axis=1)
    z = np.arange(n) * grid_z.spacing
    return g - g[:, :1] + mean * z


def dalembert_slices(f0: SpeedField, f1: SpeedField, t: float, order: int = interp.DEFAULT_ORDER) -> SpeedField:
    """Per-slice solution of ``f_tt - (1 + c^2) f_zz = 0`` by d'Alembert's formula.

    The source term samples a primitive of ``f1`` at the shifted points, so
    no derivatives of ``f1`` are involved; ``f1`` must decay at the z edges.
    """
    if not (f0.grid_z.same_points(f1.grid_z) and f0.grid_c.same_points(f1.grid_c)):
        raise ValueError("f0 and f1 must share their speed grids")
    speed = np.sqrt(1.0 + f0.grid_c.points**2)
    d = speed * t
    vals = 0.5 * (_shift_slices(f0.values, f0.grid_z, d, order) + _shift_slices(f0.values, f0.grid_z, -d, order))
    if np.any(f1.values != 0) and t != 0:
        prim = _primitive(f1.values, f1.grid_z)
        # F(z + d) - F(z - d); F is constant beyond the right edge
        right = _shift_slices_extend(prim, f1.grid_z, -d, order)
        left = _shift_slices_extend(prim, f1.grid_z, d, order)
        vals = vals + (right - left) / (2.0 * speed[:, None])
    return f0.with_values(vals)


def _shift_slices_extend(values, grid_z: Grid1D, shifts, order):
    """Like :func:`_shift_slices` but constant extension (for primitives)."""
    nz = grid_z.n_points
    pad = int(order) + 1
    base = np.arange(nz, dtype=float) + pad
    out = np.empty_like(values)
    for m in range(values.shape[0]):
        # pad so that stencils near the edges see the constant tails
        row = np.concatenate([np.full(pad, values[m, 0]), values[m], np.full(pad, values[m, -1])])
        s = np.clip(base - shifts[m] / grid_z.spacing, pad, nz - 1.0 + pad)
        out[m] = interp.sample_1d(np.ascontiguousarray(row, dtype=np.complex128), s, order, False)
    return out


def wave2d_via_pwt(
    f0: SpeedField,
    f1: SpeedField,
    t: float,
    grid_x: Grid1D,
    grid_y: Grid1D,
    order: int = interp.DEFAULT_ORDER,
) -> PhysField2D:
    """Solution of the 2D wave equation assembled as ``T`` of d'Alembert slices."""
    return pwt_direct(dalembert_slices(f0, f1, t, order), grid_x, grid_y, order)


def wave_residual(f0: SpeedField, f1: SpeedField, t: float, dt: float, grid_x: Grid1D, grid_y: Grid1D, order: int = 7):
    """Max of ``|u_tt - u_xx - u_yy|`` by centred second differences.

    Time differences use three evaluations at ``t - dt, t, t + dt``; the
    spatial ones use the target grid. Edge rows and columns are dropped.
    """
    um = wave2d_via_pwt(f0, f1, t - dt, grid_x, grid_y, order).values
    u0 = wave2d_via_pwt(f0, f1, t, grid_x, grid_y, order).values
    up = wave2d_via_pwt(f0, f1, t + dt, grid_x, grid_y, order).values
    hx, hy = grid_x.spacing, grid_y.spacing
    utt = (up - 2 * u0 + um) / dt**2
    uxx = (u0[:, 2:] - 2 * u0[:, 1:-1] + u0[:, :-2]) / hx**2
    uyy = (u0[2:, :] - 2 * u0[1:-1, :] + u0[:-2, :]) / hy**2
    res = utt[1:-1, 1:-1] - uxx[1:-1, :] - uyy[:, 1:-1]
    return float(np.abs(res).max())


# ------------------------------------------------------- oscillatory families


def oscillatory_family_eval(A: Profile1D, t: float, x_grid: Grid1D, kind: str = "heat") -> Profile1D:
    """Superposition of plane waves ``int A(c) e^{-i c x} m(c, t) dc``.

    Angular convention: the phase is ``e^{-i c x}`` (not ``e^{-2 pi i c x}``).
    ``heat``: ``m = e^{-c^2 t}``, which solves ``u_t = u_xx``.
    ``schrodinger``: ``m = e^{-i c^2 t}``, which solves ``i u_t + u_xx = 0``.
    With ``A(c) = (1/2 pi) int u0(x) e^{i c x} dx`` the heat family at time
    ``t`` is the heat evolution of ``u0``.
    """
    kind = Kind(kind)
    c = A.grid_z.points
    if kind is Kind.HEAT:
        m = np.exp(-c * c * t)
    elif kind is Kind.SCHRODINGER:
        m = np.exp(-1j * c * c * t)
    else:
        raise ValueError("family kind must be heat or schrodinger")
    w = A.values * m * A.grid_z.spacing
    x = x_grid.points
    vals = np.exp(-1j * np.outer(x, c)) @ w
    return Profile1D(x_grid, vals)


def angular_amplitude(u0: Profile1D, c_grid: Grid1D) -> Profile1D:
    """``A(c) = (1/2 pi) int u0(x) e^{i c x} dx`` on an angular-frequency grid."""
    x = u0.grid_z.points
    vals = np.exp(1j * np.outer(c_grid.points, x)) @ u0.values * u0.grid_z.spacing / (2 * np.pi)
    return Profile1D(c_grid, vals)


def heat_evolve_1d(u0: Profile1D, t: float) -> Profile1D:
    """Spectral heat flow ``u_t = u_xx`` on the periodic box."""
    k = u0.grid_z.wavenumbers()
    return u0.with_values(np.fft.ifft(np.fft.fft(u0.values) * np.exp(-k * k * t)))
