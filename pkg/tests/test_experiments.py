from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planewave.experiments import (
    ExperimentReport,
    abel_integral,
    bump,
    decay_experiment,
    gwp_experiment,
    highpass,
    large_data_build,
    phi_uniform_bounds,
    radial_average,
    stability_experiment,
    strip_integral,
    tensor_field,
    transform_interval_integral,
)
from planewave.field_core import Grid1D, PhysField2D, Profile1D, SpeedField, fourier_1d, lp_norm
from planewave.nls_engine import NlsParams
from planewave.pwt import oracle_gaussian


def gauss_speed(nz=128, lz=16.0, nc=64, lc=8.0):
    return tensor_field(Grid1D.centered(nz, lz), Grid1D.centered(nc, lc), lambda z: np.exp(-z * z), lambda c: np.exp(-c * c))


# ----------------------------------------------------------------- reports


def test_report_serialises_nonfinite_and_complex():
    rep = ExperimentReport("x", inputs={"a": np.arange(2)}, measured={"v": math.inf, "z": 1 + 2j})
    assert rep.check("small", 0.5, 1.0, "<=")
    assert not rep.check_range("range", 3.0, 0.0, 1.0)
    d = json.loads(json.dumps(rep.as_dict()))
    assert d["measured"] == {"v": "inf", "z": [1.0, 2.0]}
    assert d["passed"] is False and [c["passed"] for c in d["checks"]] == [True, False]


# ------------------------------------------------------------------- decay


def test_decay_is_linear_in_the_data():
    f0 = gauss_speed(256, 64.0, 32, 8.0)
    times = [1.0, 2.0, 4.0]
    a = decay_experiment(f0, times, n_window=9)
    b = decay_experiment(f0.with_values(2 * f0.values), times, n_window=9)
    np.testing.assert_allclose(b.series["sup"], 2 * np.asarray(a.series["sup"]), rtol=1e-12)
    assert a.measured["slope"] == pytest.approx(b.measured["slope"], abs=1e-12)
    assert np.all(np.diff(a.series["sup"]) < 0)


def test_decay_sup_at_early_time_matches_oracle():
    f0 = gauss_speed(512, 64.0, 64, 8.0)
    rep = decay_experiment(f0, [1e-9, 1.0], n_window=9, order=7, fit_range=(0.0, 2.0))
    assert rep.series["sup"][0] == pytest.approx(oracle_gaussian(0.0, 0.0), rel=1e-6)


# --------------------------------------------------------------- stability


def test_stability_ladder_must_decrease():
    g = Grid1D.centered(16, 8.0)
    v0 = PhysField2D(g, g, np.zeros((16, 16)))
    with pytest.raises(ValueError):
        stability_experiment(gauss_speed(), v0, [0.1, 0.2], NlsParams(1.0, 2.0, 0.1, 0.1))


def test_stability_zero_data_stays_zero():
    g = Grid1D.centered(16, 8.0)
    v0 = PhysField2D(g, g, np.zeros((16, 16)))
    f0 = gauss_speed(32, 8.0, 8, 4.0)
    rep = stability_experiment(f0.with_values(0 * f0.values), v0, [0.2, 0.1], NlsParams(1.0, 2.0, 0.1, 0.2))
    assert rep.measured["delta"] == [0.0, 0.0]
    assert rep.passed


# -------------------------------------------------------------- large data


def test_bump_cutoff():
    xi = np.array([0.0, 0.99, -1.0, 1.5, 2.0, -3.0])
    out = bump(xi)
    assert out[:3].tolist() == [1.0, 1.0, 1.0] and out[4:].tolist() == [0.0, 0.0]
    assert 0 < out[3] < 1


@settings(max_examples=30, deadline=None)
@given(st.floats(-3.0, 3.0))
def test_bump_is_even_and_bounded(x):
    assert bump(x) == bump(-x)
    assert 0.0 <= bump(x) <= 1.0


def test_highpass_removes_low_band():
    g = Grid1D.centered(512, 64.0)
    prof = Profile1D(g, np.exp(-g.points**2))
    eps = 0.25
    fxi, spec = fourier_1d(highpass(prof, eps).values, g)
    _, orig = fourier_1d(prof.values, g)
    low, high = np.abs(fxi.points) <= eps, np.abs(fxi.points) >= 2 * eps
    assert np.abs(spec[low]).max() < 1e-12
    np.testing.assert_allclose(spec[high], orig[high], atol=1e-12)


def test_highpass_needs_nonzero_mean():
    g = Grid1D.centered(256, 32.0)
    odd = Profile1D(g, g.points * np.exp(-g.points**2))
    with pytest.raises(ValueError, match="F g"):
        highpass(odd, 0.5)
    with pytest.raises(ValueError):
        highpass(Profile1D(g, np.exp(-g.points**2)), 0.0)


def test_large_data_gradient_exceeds_lower_bounds():
    gz, gc = Grid1D.centered(1024, 128.0), Grid1D.centered(64, 8.0)
    f = Profile1D(gc, np.exp(-gc.points**2))
    g = Profile1D(gz, np.exp(-gz.points**2))
    sf, rep = large_data_build(f, g, 0.5)
    m = rep.measured
    assert sf.values.shape == (64, 1024)
    assert m["grad_l2"] >= m["lower_bound_geps"] and m["grad_l2"] >= m["lower_bound_far"]
    assert not m["phi_l2_divergent"]


# --------------------------------------------------------------------- gwp


def test_gwp_linear_run_keeps_norm():
    g = Grid1D.centered(32, 16.0)
    X, Y = np.meshgrid(g.points, g.points)
    v0 = PhysField2D(g, g, 0.3 * np.exp(-(X**2 + Y**2) / 4))
    f0 = gauss_speed(128, 32.0, 8, 4.0)
    rep = gwp_experiment(v0, f0, NlsParams(0.0, 1.0, 0.1, 1.0, record_every=5))
    v = rep.series["v_l2"]
    assert max(v) - min(v) <= 1e-12 * v[0]
    assert rep.passed


def test_phi_bounds_scale_with_data():
    f0 = gauss_speed(64, 16.0, 64, 12.0)
    l4, linf = phi_uniform_bounds(f0)
    l4b, linfb = phi_uniform_bounds(f0.with_values(3 * f0.values))
    assert l4b == pytest.approx(3 * l4) and linfb == pytest.approx(3 * linf)
    # T f(0, 0) = int f(0, c) dc = sqrt(pi); a positive spectrum makes the bound sharp
    assert linf == pytest.approx(math.sqrt(math.pi), rel=1e-6)


# ---------------------------------------------------------------- identities


@pytest.mark.parametrize("slope", [0.0, 0.6, -1.3])
def test_strip_integral_equals_transform_integral(slope):
    f = gauss_speed(256, 32.0, 128, 12.0)
    s = strip_integral(f, -0.4, 1.1, slope)
    t = transform_interval_integral(f, -0.4, 1.1, slope)
    assert abs(s - t) <= 1e-9 * abs(t)


def test_strip_integral_limits():
    f = gauss_speed(64, 16.0, 32, 8.0)
    assert strip_integral(f, 0.5, 0.5, 1.0) == 0
    with pytest.raises(ValueError):
        strip_integral(f, 1.0, 0.0, 1.0)


def test_radial_average_of_radial_gaussian():
    g = Grid1D.centered(256, 16.0)
    Z, C = np.meshgrid(g.points, g.points)
    f = SpeedField(g, g, np.exp(-(Z**2 + C**2)))
    r = np.array([0.0, 0.5, 1.7])
    np.testing.assert_allclose(radial_average(f, r, order=7).real, np.exp(-r * r), atol=1e-9)


@pytest.mark.parametrize("eps", [0.1, 0.5])
def test_abel_integral_closed_forms(eps):
    r = np.linspace(eps, 3.0, 50)
    assert abel_integral(r, np.ones_like(r), eps) == pytest.approx(math.sqrt(9.0 - eps * eps))
    # int r^2 / sqrt(r^2 - e^2) dr from eps to R
    s = math.sqrt(9.0 - eps * eps)
    exact = 0.5 * (3.0 * s + eps * eps * math.log((3.0 + s) / eps))
    assert abel_integral(r, r, eps) == pytest.approx(exact, rel=1e-12)
    with pytest.raises(ValueError):
        abel_integral(r + 0.1, r, eps)


def test_tensor_field_layout():
    # tensor_field orders values as rows of c and columns of z
    f = tensor_field(Grid1D.centered(8, 4.0), Grid1D.centered(4, 2.0), lambda z: z, lambda c: np.ones_like(c))
    assert np.array_equal(f.values[2].real, f.grid_z.points)
    assert lp_norm(f, 1) == pytest.approx(np.abs(f.grid_z.points).sum() * 0.5 * 4 * 0.5)
