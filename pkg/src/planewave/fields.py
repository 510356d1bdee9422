"""Named constructors for test fields on speed, profile and physical grids.

A field spec is a mapping with a ``kind`` key and constructor parameters,
for example ``{"kind": "gaussian", "a": 1.0, "b": 1.0}``. The same
constructor family produces 1D profiles (``z`` only), speed fields
(``z, c``) and physical fields (``x, y``); for 2D kinds the first axis
argument is the column coordinate.
"""
from __future__ import annotations

import numpy as np

from .field_core import Grid1D, PhysField2D, Profile1D, SpeedField

_REGISTRY = {}


def constructor(name, params):
    def deco(fn):
        _REGISTRY[name] = (fn, dict(params))
        return fn

    return deco


def registered():
    """Constructor names mapped to their parameter defaults."""
    return {k: dict(v[1]) for k, v in _REGISTRY.items()}


def _box_average(u, lo, hi, w):
    """Average of the indicator of ``[lo, hi]`` over ``[u - w/2, u + w/2]``."""
    if w <= 0:
        return ((u >= lo) & (u <= hi)).astype(float)
    a = np.maximum(u - 0.5 * w, lo)
    b = np.minimum(u + 0.5 * w, hi)
    return np.clip((b - a) / w, 0.0, 1.0)


@constructor("zero", {})
def _zero(u, v=None):
    return np.zeros_like(u) if v is None else np.zeros(np.broadcast(u, v).shape)


@constructor("gaussian", {"a": 1.0, "b": 1.0, "z0": 0.0, "c0": 0.0, "amplitude": 1.0})
def _gaussian(u, v=None, a=1.0, b=1.0, z0=0.0, c0=0.0, amplitude=1.0):
    out = amplitude * np.exp(-a * (u - z0) ** 2)
    if v is not None:
        out = out * np.exp(-b * (v - c0) ** 2)
    return out


@constructor("unit_square", {"width": 0.0, "lo": 0.0, "hi": 1.0})
def _unit_square(u, v=None, width=0.0, lo=0.0, hi=1.0):
    out = _box_average(u, lo, hi, width)
    if v is not None:
        out = out * _box_average(v, lo, hi, width)
    return out


@constructor("sech", {"a": 1.0, "z0": 0.0, "amplitude": 1.0, "b": 1.0})
def _sech(u, v=None, a=1.0, z0=0.0, amplitude=1.0, b=1.0):
    out = amplitude / np.cosh(a * (u - z0))
    if v is not None:
        out = out * np.exp(-b * v * v)
    return out


def _bump1(u):
    out = np.zeros_like(u, dtype=float)
    m = np.abs(u) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - u[m] ** 2))
    return out


@constructor("bump", {"radius_z": 1.0, "radius_c": 1.0, "z0": 0.0, "c0": 0.0, "amplitude": 1.0})
def _bump(u, v=None, radius_z=1.0, radius_c=1.0, z0=0.0, c0=0.0, amplitude=1.0):
    """Compactly supported positive smooth bump (product of ``exp(1 - 1/(1 - s^2))``)."""
    out = amplitude * _bump1((u - z0) / radius_z)
    if v is not None:
        out = out * _bump1((v - c0) / radius_c)
    return out


@constructor("gapped", {"xi0": 0.75, "width": 2.0, "b": 1.0})
def _gapped(u, v=None, xi0=0.75, width=2.0, b=1.0):
    """``exp(-z^2 / (2 width^2)) cos(2 pi xi0 z)``: spectrum concentrated near ``|xi| = xi0``."""
    out = np.exp(-(u**2) / (2 * width**2)) * np.cos(2 * np.pi * xi0 * u)
    if v is not None:
        out = out * np.exp(-b * v * v)
    return out


@constructor("random_blobs", {"seed": 0, "count": 3, "spread": 2.0, "wmin": 0.5, "wmax": 1.0})
def _random_blobs(u, v=None, seed=0, count=3, spread=2.0, wmin=0.5, wmax=1.0):
    """Sum of Gaussian blobs with seeded random centres, widths and complex amplitudes."""
    rng = np.random.default_rng(seed)
    out = np.zeros(np.broadcast(u, 0.0 if v is None else v).shape, dtype=complex)
    for _ in range(int(count)):
        z0, c0 = rng.uniform(-spread, spread, 2)
        w = rng.uniform(wmin, wmax)
        amp = rng.normal() + 1j * rng.normal()
        r2 = (u - z0) ** 2 if v is None else (u - z0) ** 2 + (v - c0) ** 2
        out += amp * np.exp(-r2 / w**2)
    return out


# g_eps of a Gaussian; built spectrally in build_field, so no pointwise rule
_REGISTRY["highpass_gaussian"] = (None, {"eps": 0.5, "a": 1.0, "b": 1.0})


def _params(spec):
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _REGISTRY:
        raise ValueError(f"unknown field constructor {kind!r}; known: {sorted(_REGISTRY)}")
    defaults = _REGISTRY[kind][1]
    unknown = sorted(set(spec) - set(defaults))
    if unknown:
        raise ValueError(f"unknown parameters for {kind}: {unknown}")
    return kind, {**defaults, **spec}


def _highpass_values(grid_z: Grid1D, eps, a):
    from .experiments import highpass

    g = Profile1D(grid_z, np.exp(-a * grid_z.points**2))
    return highpass(g, eps).values


def build_field(spec: dict, role: str, grids):
    """Sample the constructor named by ``spec["kind"]``.

    ``role`` is ``"profile"`` (grids = (z,)), ``"speed"`` (grids = (z, c))
    or ``"phys"`` (grids = (x, y)).
    """
    kind, p = _params(spec)
    if role == "profile":
        (gz,) = grids
        if kind == "highpass_gaussian":
            vals = _highpass_values(gz, p["eps"], p["a"])
        else:
            fn = _REGISTRY[kind][0]
            vals = fn(gz.points, None, **p)
        return Profile1D(gz, vals, {"constructor": kind, **p})
    if role not in ("speed", "phys"):
        raise ValueError(f"unknown field role {role!r}")
    g1, g2 = grids
    if kind == "highpass_gaussian":
        gzv = _highpass_values(g1, p["eps"], p["a"])
        vals = np.outer(np.exp(-p["b"] * g2.points**2), gzv)
    else:
        U, V = np.meshgrid(g1.points, g2.points)
        vals = _REGISTRY[kind][0](U, V, **p)
    cls = SpeedField if role == "speed" else PhysField2D
    return cls(g1, g2, vals, {"constructor": kind, **p})
