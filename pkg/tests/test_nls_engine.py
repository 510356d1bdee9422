from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planewave.field_core import Grid1D, PhysField2D, Profile1D, SpeedField, lp_norm, sobolev_norm
from planewave.nls_engine import (
    STRICHARTZ_PAIRS,
    BlowupError,
    NlsParams,
    ProfileSet,
    Trajectory,
    assemble,
    countable_system_solve,
    energy_1d,
    forced_nls2d_solve,
    h_from_series,
    interaction_norm,
    monolithic_nls2d_solve,
    nls1d_solve,
    synthesize_phi,
    xc_norm,
)


def gaussian(n=256, length=16.0, amp=1.0, centre=0.0):
    g = Grid1D.centered(n, length)
    return Profile1D(g, amp * np.exp(-((g.points - centre) ** 2)))


def unit_mass(grid: Grid1D):
    p = Profile1D(grid, np.exp(-grid.points**2))
    return p.with_values(p.values / lp_norm(p, 2))


# ------------------------------------------------------------- parameters


def test_params_reject_small_sigma():
    with pytest.raises(ValueError, match="sigma must be ≥ 1"):
        NlsParams(1.0, 0.5, 0.01, 1.0)


@pytest.mark.parametrize(
    "kw",
    [
        {"lam": np.nan},
        {"dt": 0.0},
        {"dt": 0.5, "dt_max": 0.1},
        {"t_end": -1.0},
        {"splitting": "lie"},
        {"record_every": 0},
        {"blowup_guard": 1.0},
    ],
)
def test_params_reject_invalid_fields(kw):
    base = dict(lam=1.0, sigma=2.0, dt=0.01, t_end=1.0)
    base.update(kw)
    with pytest.raises(ValueError):
        NlsParams(**base)


def test_params_collect_all_errors():
    with pytest.raises(ValueError) as exc:
        NlsParams(1.0, 0.5, -1.0, 1.0)
    assert "sigma" in str(exc.value) and "dt" in str(exc.value)


def test_step_count():
    assert NlsParams(1.0, 2.0, 0.1, 1.0).n_steps == 10
    with pytest.raises(ValueError):
        NlsParams(1.0, 2.0, 0.3, 1.0).n_steps
    assert NlsParams(1.0, 2.0, 0.1, 1.0).with_changes(dt=0.05).n_steps == 20


def test_trajectory_times_increase():
    tr = Trajectory()
    tr.append(0.0, None)
    with pytest.raises(ValueError):
        tr.append(0.0, None)


# ----------------------------------------------------------------- 1D flow


def test_soliton_keeps_its_modulus():
    g = Grid1D.centered(512, 40.0)
    f0 = Profile1D(g, math.sqrt(2) / np.cosh(g.points))
    tr = nls1d_solve(f0, 1.0, NlsParams(1.0, 2.0, 1e-3, 1.0, record_every=500))
    np.testing.assert_allclose(np.abs(tr.final.values), np.abs(f0.values), atol=1e-5)
    # phase rotates at unit frequency
    assert np.angle(tr.final.values[256] / f0.values[256]) == pytest.approx(1.0, abs=1e-4)


@settings(max_examples=10, deadline=None)
@given(st.floats(-2.0, 2.0), st.sampled_from([1.0, 2.0, 3.0, 4.0]), st.floats(0.5, 3.0))
def test_mass_is_conserved(lam, sigma, a):
    f0 = gaussian(128, 16.0, 0.8)
    tr = nls1d_solve(f0, a, NlsParams(lam, sigma, 0.01, 0.5, record_every=50))
    assert lp_norm(tr.final, 2) == pytest.approx(lp_norm(f0, 2), rel=1e-11)


def test_energy_drift_is_second_order():
    f0 = gaussian(256, 24.0, 1.0)
    e0 = energy_1d(f0, 1.0, 1.0, 2.0)
    drifts = []
    for dt in (0.02, 0.01):
        tr = nls1d_solve(f0, 1.0, NlsParams(1.0, 2.0, dt, 1.0, record_every=10**6))
        drifts.append(abs(energy_1d(tr.final, 1.0, 1.0, 2.0) - e0))
    assert drifts[1] < 1e-3 * abs(e0)
    assert drifts[0] / drifts[1] > 3.0


def test_backward_flow_inverts_forward():
    f0 = gaussian(128, 16.0, 0.7)
    p = NlsParams(1.0, 2.0, 0.01, 0.5, record_every=50)
    fwd = nls1d_solve(f0, 1.5, p).final
    back = nls1d_solve(fwd, 1.5, p, backward=True)
    assert back.times[-1] == pytest.approx(-0.5)
    np.testing.assert_allclose(back.final.values, f0.values, atol=1e-10)


def test_focusing_growth_trips_the_guard():
    f0 = gaussian(1024, 16.0, 3.0)
    p = NlsParams(1.0, 4.0, 1e-4, 0.3, record_every=100, blowup_guard=3.0)
    with pytest.raises(BlowupError) as exc:
        nls1d_solve(f0, 1.0, p)
    assert 0 < exc.value.time <= 0.3
    assert isinstance(exc.value.partial, Trajectory) and exc.value.partial.times[0] == 0.0


# ------------------------------------------------------------ profile sets


def test_duplicate_speeds_name_the_pair():
    g = Grid1D.centered(16, 4.0)
    p = unit_mass(g)
    with pytest.raises(ValueError, match=r"c\[0\]=1.0 and c\[2\]=1.0"):
        ProfileSet([(1.0, p), (0.0, p), (1.0, p)])


def test_interaction_norm_two_unit_profiles():
    g = Grid1D.centered(256, 16.0)
    ps = ProfileSet([(0.0, unit_mass(g)), (1.0, unit_mass(g))])
    assert interaction_norm(ps) == pytest.approx(2.0, rel=1e-12)
    assert interaction_norm(ps.scaled(3.0)) == pytest.approx(18.0, rel=1e-12)
    assert interaction_norm(ProfileSet([(0.0, unit_mass(g))])) == 0.0


def test_xc_norm_weights_by_speed():
    g = Grid1D.centered(256, 16.0)
    p = unit_mass(g)
    ps = ProfileSet([(0.0, p), (2.0, p)])
    assert xc_norm(ps) == pytest.approx(6 * sobolev_norm(p, 2.0), rel=1e-12)


def test_countable_system_reports_blowing_profile():
    g = Grid1D.centered(1024, 16.0)
    tame = Profile1D(g, 0.1 * np.exp(-g.points**2))
    wild = Profile1D(g, 3.0 * np.exp(-g.points**2))
    p = NlsParams(1.0, 4.0, 1e-4, 0.3, record_every=1000, blowup_guard=3.0)
    with pytest.raises(BlowupError) as exc:
        countable_system_solve(ProfileSet([(0.0, tame), (1.0, wild)]), p)
    assert exc.value.index == 1


def test_countable_system_evolves_each_profile():
    g = Grid1D.centered(128, 16.0)
    ps = ProfileSet([(c, gaussian(128, 16.0, 0.5)) for c in (-1.0, 0.5)])
    p = NlsParams(1.0, 2.0, 0.01, 0.2, record_every=10)
    tr = countable_system_solve(ps, p)
    assert tr.times == pytest.approx([0.0, 0.1, 0.2])
    for (c, f), out in zip(ps.entries, tr.final.profiles):
        np.testing.assert_array_equal(out.values, nls1d_solve(f, 1 + c * c, p).final.values)
    assert g.same_points(tr.final.profiles[0].grid_z)


def test_synthesized_background_is_sum_of_travelling_profiles():
    ps = ProfileSet([(0.0, gaussian(512, 32.0)), (1.0, gaussian(512, 32.0, 2.0))])
    gx, gy = Grid1D.centered(32, 8.0), Grid1D.centered(16, 4.0)
    phi = synthesize_phi(ps, gx, gy, order=7)
    X, Y = np.meshgrid(gx.points, gy.points)
    exact = np.exp(-(X**2)) + 2 * np.exp(-((X - Y) ** 2))
    np.testing.assert_allclose(phi.values, exact, atol=1e-6)
    assert not phi.meta["truncated"]


# ----------------------------------------------------------------- 2D flow


def box(n=32, length=12.0):
    g = Grid1D.centered(n, length)
    X, Y = np.meshgrid(g.points, g.points)
    return g, X, Y


def test_forced_without_background_equals_monolithic():
    g, X, Y = box()
    u0 = PhysField2D(g, g, 0.8 * np.exp(-X**2 - Y**2))
    p = NlsParams(1.0, 2.0, 0.01, 0.2, record_every=5)
    mono = monolithic_nls2d_solve(u0, p)
    forced = forced_nls2d_solve(u0, None, p)
    assert forced.trajectory.times == mono.times
    for a, b in zip(forced.trajectory.states, mono.states):
        assert np.array_equal(a.v.values, b.values)
    assert forced.diagnostics.xc == [0.0] * len(mono.times)


def test_single_profile_background_is_an_exact_solution():
    g, X, Y = box()
    gz = Grid1D.centered(256, 24.0)
    ps = ProfileSet([(0.5, Profile1D(gz, np.exp(-gz.points**2)))])
    v0 = PhysField2D(g, g, np.zeros_like(X))
    res = forced_nls2d_solve(v0, ps, NlsParams(1.0, 2.0, 0.01, 0.1, record_every=5))
    assert all(not np.any(s.v.values) for s in res.trajectory.states)
    assert res.diagnostics.interaction == [0.0] * 3
    assert res.diagnostics.dev_h1 == [0.0] * 3


def test_linear_continuous_background_leaves_v_at_zero():
    g, X, Y = box()
    gz, gc = Grid1D.centered(64, 12.0), Grid1D.centered(16, 4.0)
    Z, C = np.meshgrid(gz.points, gc.points)
    f0 = SpeedField(gz, gc, np.exp(-Z**2 - C**2))
    v0 = PhysField2D(g, g, np.zeros_like(X))
    res = forced_nls2d_solve(v0, f0, NlsParams(0.0, 2.0, 0.02, 0.1, record_every=5))
    assert all(not np.any(s.v.values) for s in res.trajectory.states)
    assert math.isnan(res.diagnostics.interaction[0])
    u = assemble(res.trajectory.final)
    assert np.abs(u.values).max() > 0


def test_forced_rejects_unknown_background():
    g, X, Y = box(8, 4.0)
    with pytest.raises(TypeError):
        forced_nls2d_solve(PhysField2D(g, g, X * 0), "phi", NlsParams(1.0, 2.0, 0.1, 0.1))


def test_forced_mass_conserved_without_background():
    g, X, Y = box()
    u0 = PhysField2D(g, g, 0.5 * np.exp(-X**2 - Y**2))
    res = forced_nls2d_solve(u0, None, NlsParams(-1.0, 2.0, 0.02, 0.4, record_every=5))
    m = res.diagnostics.mass
    assert max(m) - min(m) <= 1e-12 * m[0]
    # defocusing spreads v to the box edge before t_end
    assert 0 < res.box_valid_until < 0.4


def test_assemble_without_background_copies():
    g, X, Y = box(8, 4.0)
    from planewave.nls_engine import DecomposedState

    v = PhysField2D(g, g, X + 1j * Y)
    u = assemble(DecomposedState(v, None, 0.0))
    assert np.array_equal(u.values, v.values) and u.values is not v.values


def test_h_series_on_constant_norms():
    times = np.linspace(0.0, 2.0, 5)
    w = {rho: np.full(5, 3.0) for _, rho in STRICHARTZ_PAIRS}
    expect = 1.5 + sum(3.0 * 2.0 ** (1 / gamma) for gamma, _ in STRICHARTZ_PAIRS)
    assert h_from_series(times, np.full(5, 1.5), w) == pytest.approx(expect)
    for gamma, rho in STRICHARTZ_PAIRS:
        assert 2 / gamma == pytest.approx(1 - 2 / rho)
