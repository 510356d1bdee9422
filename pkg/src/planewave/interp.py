"""Local Lagrange interpolation on uniform grids.

Positions are given in fractional index units (``s = (x - origin) / spacing``).
Stencil nodes that fall outside ``[0, n)`` contribute zero, so a field is
implicitly extended by zero beyond its box. In periodic mode indices wrap.

Weights are evaluated from the product formula, which makes on-node
evaluation bitwise exact: every weight is then exactly 0.0 or 1.0.
"""
from __future__ import annotations

import numba
import numpy as np

# skip the TBB probe (the bundled TBB is too old and only produces a warning)
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

DEFAULT_ORDER = 3


@numba.njit(cache=True, inline="always")
def _stencil_start(s, order):
    if order % 2 == 1:
        return int(np.floor(s)) - (order - 1) // 2
    return int(np.floor(s + 0.5)) - order // 2


@numba.njit(cache=True)
def _sample(row, s, order, periodic):
    n = row.shape[0]
    j0 = _stencil_start(s, order)
    if not periodic and (j0 + order < 0 or j0 >= n):
        return 0.0j
    t = s - j0
    acc = 0.0j
    for j in range(order + 1):
        idx = j0 + j
        if periodic:
            idx = idx % n
        elif idx < 0 or idx >= n:
            continue
        w = 1.0
        for m in range(order + 1):
            if m != j:
                w *= (t - m) / (j - m)
        acc += w * row[idx]
    return acc


@numba.njit(cache=True)
def sample_1d(row, positions, order=DEFAULT_ORDER, periodic=False):
    """Interpolate ``row`` at fractional indices ``positions``."""
    out = np.empty(positions.shape[0], dtype=np.complex128)
    for k in range(positions.shape[0]):
        out[k] = _sample(row, positions[k], order, periodic)
    return out


@numba.njit(cache=True)
def sample_columns(values, positions, order=DEFAULT_ORDER):
    """Interpolate each column ``values[:, k]`` at its own position(s).

    ``positions`` has shape ``(m, ncol)``; entry ``[i, k]`` is sampled from
    column ``k``. Positions outside ``[0, nrow - 1]`` give exactly zero.
    """
    nrow = values.shape[0]
    m, ncol = positions.shape
    out = np.zeros((m, ncol), dtype=np.complex128)
    col = np.empty(nrow, dtype=np.complex128)
    for k in range(ncol):
        for r in range(nrow):
            col[r] = values[r, k]
        for i in range(m):
            s = positions[i, k]
            if s >= 0.0 and s <= nrow - 1:
                out[i, k] = _sample(col, s, order, False)
    return out


@numba.njit(cache=True)
def sample_2d(values, s_row, s_col, order=DEFAULT_ORDER):
    """Tensor-product interpolation of ``values[row, col]`` at point pairs."""
    nr, nc = values.shape
    out = np.zeros(s_row.shape[0], dtype=np.complex128)
    for k in range(s_row.shape[0]):
        sr = s_row[k]
        sc = s_col[k]
        r0 = _stencil_start(sr, order)
        if r0 + order < 0 or r0 >= nr:
            continue
        tr = sr - r0
        acc = 0.0j
        for a in range(order + 1):
            r = r0 + a
            if r < 0 or r >= nr:
                continue
            wr = 1.0
            for m in range(order + 1):
                if m != a:
                    wr *= (tr - m) / (a - m)
            acc += wr * _sample(values[r], sc, order, False)
        out[k] = acc
    return out


@numba.njit(cache=True, parallel=True)
def transform_kernel(fvals, z0, hz, cvals, hc, xs, ys, order, periodic):
    """Quadrature of ``f(x - c y, c)`` over the speed grid on a target grid.

    Returns an array of shape ``(len(ys), len(xs))``. Each output entry is
    accumulated by one thread in increasing speed index, so results do not
    depend on the thread count.
    """
    nc = fvals.shape[0]
    nx = xs.shape[0]
    ny = ys.shape[0]
    out = np.zeros((ny, nx), dtype=np.complex128)
    for j in numba.prange(ny):
        y = ys[j]
        for i in range(nx):
            acc = 0.0j
            for m in range(nc):
                s = (xs[i] - cvals[m] * y - z0) / hz
                acc += _sample(fvals[m], s, order, periodic)
            out[j, i] = acc * hc
    return out


@numba.njit(cache=True, parallel=True)
def transform_points_kernel(fvals, z0, hz, cvals, hc, xs, ys, order):
    """Same quadrature as :func:`transform_kernel` at scattered points."""
    nc = fvals.shape[0]
    npt = xs.shape[0]
    out = np.zeros(npt, dtype=np.complex128)
    for k in numba.prange(npt):
        acc = 0.0j
        for m in range(nc):
            s = (xs[k] - cvals[m] * ys[k] - z0) / hz
            acc += _sample(fvals[m], s, order, False)
        out[k] = acc * hc
    return out


def positions(points, origin, spacing):
    """Fractional index positions of physical coordinates."""
    return (np.asarray(points, dtype=np.float64) - origin) / spacing
