"""The plane wave transform ``(Tf)(x, y) = int f(x - c y, c) dc`` and its identities.

``f`` lives on a speed grid ``(z, c)`` (:class:`SpeedField`); the transform
lives on a physical grid ``(x, y)`` (:class:`PhysField2D`). Two evaluation
routes are provided: direct quadrature over ``c`` with local polynomial
interpolation in ``z``, and the Fourier-slice route, which samples the 2D
spectrum of ``f`` along the lines ``eta = y xi``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import interp
from .field_core import (
    SUPPORT_TOL,
    Grid1D,
    PhysField2D,
    Profile1D,
    SpeedField,
    fourier_1d,
    inverse_fourier_1d,
    lp_norm,
    slice_lp_norms,
    slice_sobolev_norms,
    spectral_derivative,
    spectrum_lines_sample,
)


class TruncationWarning(UserWarning):
    """The integrand support is cut by a finite box."""


def _pow2_at_least(n: int) -> int:
    return 1 << max(1, int(np.ceil(np.log2(max(n, 2)))))


def _clip_report(f: SpeedField, grid_x: Grid1D, grid_y: Grid1D, tol: float):
    """Flags for the two ways a finite box biases the transform.

    ``truncated``: ``f`` itself is not decayed at its z-box edges.
    ``window_clipped``: for some target row, the shifted support
    ``[zmin + c y, zmax + c y]`` leaves the target x-window.
    """
    truncated = f.edge_fraction() > tol
    supp = f.support(tol)
    clipped = False
    if supp is not None:
        zmin, zmax, cmin, cmax = supp
        ys = np.array([grid_y.origin, grid_y.last])
        lo = zmin + np.minimum(cmin * ys, cmax * ys).min()
        hi = zmax + np.maximum(cmin * ys, cmax * ys).max()
        clipped = lo < grid_x.origin or hi > grid_x.last
    return bool(truncated), bool(clipped)


def covering_x_grid(f: SpeedField, grid_y: Grid1D, spacing: float | None = None, tol: float = SUPPORT_TOL) -> Grid1D:
    """Power-of-two x grid covering every shifted support over ``grid_y``."""
    h = f.grid_z.spacing if spacing is None else spacing
    supp = f.support(tol)
    if supp is None:
        return Grid1D(2, 0.0, h)
    zmin, zmax, cmin, cmax = supp
    ymax = max(abs(grid_y.origin), abs(grid_y.last))
    cm = max(abs(cmin), abs(cmax))
    half = max(abs(zmin), abs(zmax)) + cm * ymax + 2 * h
    n = _pow2_at_least(int(np.ceil(2 * half / h)))
    return Grid1D(n, -(n // 2) * h, h)


def pwt_direct(
    f: SpeedField,
    grid_x: Grid1D,
    grid_y: Grid1D,
    order: int = interp.DEFAULT_ORDER,
    periodic: bool = False,
    support_tol: float = 1e-8,
) -> PhysField2D:
    """Direct quadrature of the transform on a target grid.

    Uniform-weight quadrature in ``c``; ``f(x - c y, c)`` is interpolated in
    ``z`` with a local Lagrange polynomial of the given order and taken as
    zero outside the z-box (or wrapped, if ``periodic``).
    """
    vals = interp.transform_kernel(
        f.values, f.grid_z.origin, f.grid_z.spacing,
        f.grid_c.points, f.grid_c.spacing,
        grid_x.points, grid_y.points, int(order), bool(periodic),
    )
    truncated, clipped = _clip_report(f, grid_x, grid_y, support_tol)
    if truncated and not periodic:
        warnings.warn("f is not decayed at its z-box edges", TruncationWarning, stacklevel=2)
    return PhysField2D(grid_x, grid_y, vals, {"truncated": truncated, "window_clipped": clipped})


def pwt_points(f: SpeedField, xs, ys, order: int = interp.DEFAULT_ORDER) -> np.ndarray:
    """Direct quadrature at scattered points ``(xs[k], ys[k])``."""
    xs = np.ascontiguousarray(xs, dtype=float).ravel()
    ys = np.ascontiguousarray(ys, dtype=float).ravel()
    if xs.shape != ys.shape:
        raise ValueError("xs and ys must have the same length")
    return interp.transform_points_kernel(
        f.values, f.grid_z.origin, f.grid_z.spacing,
        f.grid_c.points, f.grid_c.spacing, xs, ys, int(order),
    )


def speed_spectrum(f: SpeedField, n_z: int, c_pad: int = 2) -> PhysField2D:
    """2D spectrum of ``f`` after zero-padding to ``n_z`` columns and ``c_pad`` x rows."""
    gz = f.grid_z.padded(n_z)
    gc = f.grid_c.padded(_pow2_at_least(c_pad * f.grid_c.n_points))
    vals = np.zeros((gc.n_points, gz.n_points), dtype=np.complex128)
    r0 = (gc.n_points - f.grid_c.n_points) // 2
    c0 = (gz.n_points - f.grid_z.n_points) // 2
    vals[r0:r0 + f.grid_c.n_points, c0:c0 + f.grid_z.n_points] = f.values
    fxi, spec = fourier_1d(vals, gz, axis=1)
    feta, spec = fourier_1d(spec, gc, axis=0)
    return PhysField2D(fxi, feta, spec)


def pwt_spectral(
    f: SpeedField,
    grid_x: Grid1D,
    grid_y: Grid1D,
    c_pad: int = 8,
    order: int = interp.DEFAULT_ORDER,
    support_tol: float = 1e-8,
) -> PhysField2D:
    """Fourier-slice evaluation of the transform.

    Each target row is the inverse 1D transform of the spectrum of ``f``
    sampled on ``eta = y xi``. The z axis is zero-padded so one period holds
    both the target window and the shifted support of every row; ``c_pad``
    refines the ``eta`` sampling. The target x spacing must equal the z
    spacing of ``f``.
    """
    h = f.grid_z.spacing
    if abs(grid_x.spacing - h) > 1e-12 * h:
        raise ValueError("pwt_spectral needs target x spacing equal to the z spacing of f")
    supp = f.support(support_tol)
    if supp is None:
        return PhysField2D(grid_x, grid_y, np.zeros((grid_y.n_points, grid_x.n_points)))
    zmin, zmax, cmin, cmax = supp
    # period must cover the target window plus every row's support
    ys = np.array([grid_y.origin, grid_y.last])
    lo = min(zmin + min(cmin * ys.min(), cmin * ys.max(), cmax * ys.min(), cmax * ys.max()), grid_x.origin)
    hi = max(zmax + max(cmin * ys.min(), cmin * ys.max(), cmax * ys.min(), cmax * ys.max()), grid_x.last)
    span = max(hi - lo, f.grid_z.extent) + 4 * h
    n_z = _pow2_at_least(int(np.ceil(span / h)))
    spec = speed_spectrum(f, n_z, c_pad)
    carrier = 0.5 * (cmin + cmax)
    lines = spectrum_lines_sample(spec, grid_y.points, order=order, carrier=carrier)
    rows = inverse_fourier_1d(lines, Grid1D(n_z, grid_x.origin, h), axis=1)
    truncated, clipped = _clip_report(f, grid_x, grid_y, support_tol)
    return PhysField2D(
        grid_x, grid_y, rows[:, : grid_x.n_points],
        {"truncated": truncated, "window_clipped": clipped, "n_z": n_z},
    )


def pwt_inverse(
    u: PhysField2D,
    xi_cutoff: float,
    grid_c: Grid1D | None = None,
    order: int = interp.DEFAULT_ORDER,
) -> SpeedField:
    """Recover ``f`` from ``u = Tf`` away from the line ``xi = 0``.

    Row spectra ``U(xi, y)`` are resampled to ``F(xi, eta) = U(xi, eta / xi)``
    by interpolation across rows; the band ``|xi| < xi_cutoff`` is zeroed and
    a 2D inverse transform returns ``f`` on ``(z = x grid, grid_c)``. The
    default ``grid_c`` is centred with the shape of ``u.grid_y``.
    """
    if not (np.isfinite(xi_cutoff) and xi_cutoff > 0):
        raise ValueError(f"xi_cutoff must be positive, got {xi_cutoff}")
    gx, gy = u.grid_x, u.grid_y
    if grid_c is None:
        grid_c = Grid1D.centered(gy.n_points, gy.extent)
    fxi, rows = fourier_1d(u.values, gx, axis=1)  # rows[j, k] = U(xi_k, y_j)
    xi = fxi.points
    eta = grid_c.frequencies().points
    keep = np.abs(xi) >= xi_cutoff
    safe = np.where(keep, xi, 1.0)
    pos = gy.index_of(eta[:, None] / safe[None, :])
    spec = interp.sample_columns(rows, np.ascontiguousarray(pos), int(order))
    spec[:, ~keep] = 0.0
    vals = inverse_fourier_1d(spec, grid_c, axis=0)
    vals = inverse_fourier_1d(vals, gx, axis=1)
    return SpeedField(gx, grid_c, vals, {"xi_cutoff": float(xi_cutoff)})


def pwt_gradient(f: SpeedField, grid_x: Grid1D, grid_y: Grid1D, order: int = interp.DEFAULT_ORDER):
    """``grad Tf = (T(f_z), -T(c f_z))`` with a spectral z-derivative."""
    fz = spectral_derivative(f.values, f.grid_z, axis=1)
    dfz = f.with_values(fz)
    cfz = f.with_values(f.grid_c.points[:, None] * fz)
    gx = pwt_direct(dfz, grid_x, grid_y, order)
    gy = pwt_direct(cfz, grid_x, grid_y, order)
    return gx, gy.with_values(-gy.values, **gy.meta)


def parseval_pairing(f: SpeedField, g: SpeedField, order: int = interp.DEFAULT_ORDER):
    """Both sides of ``int Tf(x,y) g(x,y) dxdy = int f(z,c) Tg(z,-c) dzdc``.

    ``g`` is read as a function on the physical plane: its z axis is x and
    its c axis is y.
    """
    gx, gy = g.grid_z, g.grid_c
    tf = pwt_direct(f, gx, gy, order)
    lhs = np.sum(tf.values * g.values) * gx.spacing * gy.spacing
    # Tg on (z, -c): evaluate on the reflected c grid, then flip back
    tg = pwt_direct(g, f.grid_z, f.grid_c.reflected(), order)
    rhs = np.sum(f.values * tg.values[::-1]) * f.grid_z.spacing * f.grid_c.spacing
    return complex(lhs), complex(rhs)


@dataclass
class L2SpectrumResult:
    norm_sq: float
    divergent: bool
    zero_mode_ratio: float
    band_growth: float

    @property
    def norm(self) -> float:
        return float(np.inf) if self.divergent else float(np.sqrt(self.norm_sq))


def _spectral_l2_terms(f: SpeedField, z_pad: int):
    n = _pow2_at_least(z_pad * f.grid_z.n_points)
    gz = f.grid_z.padded(n)
    vals = np.zeros((f.grid_c.n_points, n), dtype=np.complex128)
    c0 = (n - f.grid_z.n_points) // 2
    vals[:, c0:c0 + f.grid_z.n_points] = f.values
    fxi, spec = fourier_1d(vals, gz, axis=1)
    dens = np.sum(np.abs(spec) ** 2, axis=0) * f.grid_c.spacing  # S(xi) = int |F_z f|^2 dc
    return fxi, dens


def l2_norm_via_spectrum(f: SpeedField, z_pad: int = 2, divergence_tol: float = 1e-8) -> L2SpectrumResult:
    """``||Tf||_2^2 = int |F_z f(xi, c)|^2 / |xi| dxi dc``, with a divergence flag.

    The ``xi = 0`` cell is excluded. The integral is flagged divergent when
    ``S(0) = int |F_z f(0, c)|^2 dc`` is not negligible against the peak of
    ``S``: then ``S(xi)/|xi|`` is not integrable at the origin. The band
    growth records how the three innermost cells' contribution changes when
    the xi resolution doubles (about ``log 2`` per doubling when divergent).
    """
    fxi, dens = _spectral_l2_terms(f, z_pad)
    xi = fxi.points
    nz = xi != 0
    total = float(np.sum(dens[nz] / np.abs(xi[nz])) * fxi.spacing)
    peak = dens.max()
    ratio = float(dens[~nz].sum() / peak) if peak > 0 else 0.0

    band = 3 * fxi.spacing
    fxi2, dens2 = _spectral_l2_terms(f, 2 * z_pad)
    xi2 = fxi2.points

    def band_sum(x, d, dx):
        m = (x != 0) & (np.abs(x) <= band * (1 + 1e-9))
        return np.sum(d[m] / np.abs(x[m])) * dx

    b1 = band_sum(xi, dens, fxi.spacing)
    b2 = band_sum(xi2, dens2, fxi2.spacing)
    growth = float(b2 - b1) / peak if peak > 0 else 0.0
    return L2SpectrumResult(total, ratio > divergence_tol, ratio, growth)


def box_l2_sq(u: PhysField2D, half_width: float) -> float:
    """``int |u|^2`` over the square ``[-L, L]^2`` on the grid of ``u``."""
    x, y = u.grid_x.points, u.grid_y.points
    mx = np.abs(x) <= half_width
    my = np.abs(y) <= half_width
    sub = u.values[np.ix_(my, mx)]
    return float(np.sum(np.abs(sub) ** 2) * u.grid_x.spacing * u.grid_y.spacing)


def power_kernel_cells(n: int, h: float, alpha: float) -> np.ndarray:
    """Exact cell integrals of ``|c - c'|^(-alpha)`` for cells ``d = 0..n-1`` apart.

    ``K[d] = int_0^h int_0^h |d h + s - t|^(-alpha) ds dt``; valid for
    ``0 < alpha < 1`` including the singular diagonal ``d = 0``.
    """
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0, 1)")
    b = 2.0 - alpha
    d = np.arange(n, dtype=float)
    second = np.abs(d + 1) ** b - 2 * np.abs(d) ** b + np.abs(d - 1) ** b
    return h**b * second / ((1 - alpha) * b)


def lp_bound_pair(
    f: SpeedField,
    p: float,
    grid_x: Grid1D | None = None,
    grid_y: Grid1D | None = None,
    order: int = interp.DEFAULT_ORDER,
):
    """``(||Tf||_p^2, int |c-c'|^(-2/p) ||f(c)||_{p/2} ||f(c')||_{p/2} dc dc')``.

    The right side treats slice norms as piecewise constant over c cells and
    integrates the kernel exactly cell by cell.
    """
    if not (p > 2) or np.isinf(p):
        raise ValueError(f"p must satisfy 2 < p < inf, got {p}")
    alpha = 2.0 / p
    a = slice_lp_norms(f.values, f.grid_z, p / 2)
    nc = f.grid_c.n_points
    k = power_kernel_cells(nc, f.grid_c.spacing, alpha)
    idx = np.abs(np.arange(nc)[:, None] - np.arange(nc)[None, :])
    rhs = float(a @ k[idx] @ a)
    if grid_y is None:
        grid_y = f.grid_c
    if grid_x is None:
        grid_x = covering_x_grid(f, grid_y)
    lhs = lp_norm(pwt_direct(f, grid_x, grid_y, order), p) ** 2
    return float(lhs), rhs


def row_lp_bound_pair(f: SpeedField, p: float, grid_x: Grid1D, grid_y: Grid1D, order: int = interp.DEFAULT_ORDER):
    """``(max_y ||Tf(., y)||_p, ||f||_{L^1_c(L^p_z)})``.

    With ``order=1`` and ``grid_x`` on the z spacing every row is a convex
    combination of shifted slices, so the discrete inequality holds exactly.
    Higher orders can overshoot it slightly (negative interpolation weights
    near sharp support edges).
    """
    tf = pwt_direct(f, grid_x, grid_y, order)
    lhs = float(slice_lp_norms(tf.values, grid_x, p).max())
    rhs = float(np.sum(slice_lp_norms(f.values, f.grid_z, p)) * f.grid_c.spacing)
    return lhs, rhs


def convolve_via_pwt(
    f1: Profile1D,
    f2: Profile1D,
    y: float,
    grid_x: Grid1D | None = None,
    order: int = interp.DEFAULT_ORDER,
) -> Profile1D:
    """Row ``y`` of ``T(f1 (x) f2)``: ``f1 * Theta_y f2`` with ``Theta_y f2 = f2(./y)/|y|``.

    At ``y = 0`` this is exactly ``(int f2) f1`` on the grid of ``f1``.
    The default ``grid_x`` has the spacing of ``f1`` and covers the support
    of the result.
    """
    if y == 0:
        return f1.with_values(np.sum(f2.values) * f2.grid_z.spacing * f1.values)
    g1, g2 = f1.grid_z, f2.grid_z
    if grid_x is None:
        ends = np.array([g2.origin * y, g2.last * y])
        lo = g1.origin + ends.min()
        hi = g1.last + ends.max()
        h = g1.spacing
        k0 = np.floor((lo - g1.origin) / h)
        n = int(np.ceil((hi - lo) / h)) + 2
        grid_x = Grid1D(n, g1.origin + k0 * h, h)
    sf = SpeedField(g1, g2, np.outer(f2.values, f1.values))
    row = interp.transform_kernel(
        sf.values, g1.origin, g1.spacing, g2.points, g2.spacing,
        grid_x.points, np.array([float(y)]), int(order), False,
    )[0]
    return Profile1D(grid_x, row)


def product_transform(
    f: SpeedField,
    g: SpeedField,
    grid_x: Grid1D,
    grid_y: Grid1D,
    k_grid: Grid1D | None = None,
    order: int = interp.DEFAULT_ORDER,
    tol: float = 1e-3,
) -> PhysField2D:
    """``T(fg) = int T(e^{-2 pi i k c} f) T(e^{2 pi i k c} g) dk`` by quadrature in ``k``.

    With the default ``k_grid`` (the DFT dual of the c grid) the discrete
    orthogonality of the modulations makes the sum agree with ``T(fg)`` up to
    rounding wherever the shifts ``c y`` land on z nodes; elsewhere the
    product of interpolants differs from the interpolant of the product by
    the interpolation error. A coarser or narrower ``k_grid`` triggers a warning when the
    relative residual against the direct product exceeds ``tol``.
    """
    if not (f.grid_z.same_points(g.grid_z) and f.grid_c.same_points(g.grid_c)):
        raise ValueError("f and g must share their speed grids")
    if k_grid is None:
        k_grid = f.grid_c.frequencies()
    c = f.grid_c.points
    acc = np.zeros((grid_y.n_points, grid_x.n_points), dtype=np.complex128)
    for k in k_grid.points:
        mod = np.exp(-2j * np.pi * k * c)[:, None]
        a = pwt_direct(f.with_values(mod * f.values), grid_x, grid_y, order)
        b = pwt_direct(g.with_values(np.conj(mod) * g.values), grid_x, grid_y, order)
        acc += a.values * b.values
    acc *= k_grid.spacing
    direct = pwt_direct(f.with_values(f.values * g.values), grid_x, grid_y, order)
    scale = np.abs(direct.values).max()
    resid = float(np.abs(acc - direct.values).max() / scale) if scale > 0 else float(np.abs(acc).max())
    if resid > tol:
        warnings.warn(f"k grid under-resolves the c bandwidth (residual {resid:.2e})", RuntimeWarning, stacklevel=2)
    return PhysField2D(grid_x, grid_y, acc, {"residual": resid})


# ------------------------------------------------------------ closed forms


def oracle_unit_square(x: float, y: float) -> float:
    """Transform of the indicator of ``[0, 1]^2``."""
    if y == 0:
        return 1.0 if 0 <= x <= 1 else 0.0
    if 0 <= x <= 1:
        if x - 1 <= y <= x:
            return 1.0
        if y >= x:
            return x / y
        return (x - 1) / y
    if x < 0:
        if x - 1 <= y <= x:
            return (y - x) / y
        if y <= x - 1:
            return -1.0 / y
        return 0.0
    if x - 1 <= y <= x:
        return (y - x + 1) / y
    if y >= x:
        return 1.0 / y
    return 0.0


def oracle_gaussian(x, y):
    """Transform of ``exp(-z^2 - c^2)``."""
    s = 1.0 + np.asarray(y, dtype=float) ** 2
    return np.sqrt(np.pi / s) * np.exp(-np.asarray(x, dtype=float) ** 2 / s)


# ------------------------------------------------------------- X-space norms


@dataclass
class XNormReport:
    l1c_h1z: float
    linfc_l2z: float

    @property
    def x_norm(self) -> float:
        return self.l1c_h1z + self.linfc_l2z


def x_norm(f: SpeedField) -> XNormReport:
    h1 = slice_sobolev_norms(f.values, f.grid_z, 1.0)
    l2 = slice_lp_norms(f.values, f.grid_z, 2)
    return XNormReport(float(np.sum(h1) * f.grid_c.spacing), float(l2.max()))


@dataclass
class StabilityWeights:
    m_decay: float
    m_grad: float
    m_h2: float
    m_ch2: float

    @property
    def m_total(self) -> float:
        return self.m_decay + self.m_grad + self.m_h2 + self.m_ch2


def stability_weights(f: SpeedField) -> StabilityWeights:
    c = f.grid_c.points
    hc = f.grid_c.spacing
    l1 = slice_lp_norms(f.values, f.grid_z, 1)
    fz = spectral_derivative(f.values, f.grid_z, axis=1)
    h2 = slice_sobolev_norms(f.values, f.grid_z, 2.0)
    return StabilityWeights(
        m_decay=float(np.sum(l1 / np.sqrt(1 + c * c)) * hc),
        m_grad=float(np.sum(slice_lp_norms(fz, f.grid_z, 1)) * hc),
        m_h2=float(np.sum(h2) * hc),
        m_ch2=float(np.sum(np.abs(c) * h2) * hc),
    )


@dataclass
class GwpWeight:
    l1c_h2z: float
    linfc_h2z: float

    @property
    def value(self) -> float:
        return self.l1c_h2z + self.linfc_h2z


def gwp_weight(f: SpeedField) -> GwpWeight:
    """Norms of ``(1 + |c|^3) <z> f`` in ``L^1_c(H^2_z)`` and ``L^inf_c(H^2_z)``.

    ``<z> = sqrt(1 + z^2)`` stands in for ``1 + |z|``: the two weights are
    comparable, and the smooth one keeps the weighted slice in H^2.
    """
    c = f.grid_c.points
    z = f.grid_z.points
    w = (1.0 + np.abs(c) ** 3)[:, None] * np.sqrt(1.0 + z * z)[None, :]
    h2 = slice_sobolev_norms(w * f.values, f.grid_z, 2.0)
    return GwpWeight(float(np.sum(h2) * f.grid_c.spacing), float(h2.max()))
