from __future__ import annotations

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from planewave.field_core import Grid1D, PhysField2D, Profile1D, SpeedField
from planewave.pwfio import (
    MAGIC,
    PWFError,
    decode,
    encode,
    read_csv_section,
    read_pwf,
    write_csv_section,
    write_pwf,
    write_table,
)

values_2d = hnp.arrays(
    np.complex128,
    hnp.array_shapes(min_dims=2, max_dims=2, min_side=2, max_side=9),
    elements=st.complex_numbers(allow_nan=False, allow_infinity=False),
)


@settings(max_examples=40, deadline=None)
@given(values_2d, st.floats(-1e6, 1e6), st.floats(1e-6, 1e3), st.sampled_from(["speed", "phys"]))
def test_round_trip_is_bit_identical(vals, origin, spacing, kind):
    ny, nx = vals.shape
    ga, gb = Grid1D(nx, origin, spacing), Grid1D(ny, -origin, 2 * spacing)
    fld = SpeedField(ga, gb, vals) if kind == "speed" else PhysField2D(ga, gb, vals)
    back = decode(encode(fld), kind)
    assert type(back) is type(fld)
    assert back.values.tobytes() == fld.values.tobytes()
    for a, b in zip((back.grid_x, back.grid_y) if kind == "phys" else (back.grid_z, back.grid_c),
                    (ga, gb)):
        assert (a.n_points, a.origin, a.spacing) == (b.n_points, b.origin, b.spacing)


def test_profile_round_trip_through_file(tmp_path):
    g = Grid1D(5, -0.3, 0.1)
    p = Profile1D(g, np.array([1, 2j, -3, 4 + 5j, 0]))
    write_pwf(tmp_path / "p.pwf", p)
    back = read_pwf(tmp_path / "p.pwf")
    assert isinstance(back, Profile1D) and np.array_equal(back.values, p.values)


def test_header_layout():
    g = Grid1D(2, 0.5, 0.25)
    data = encode(Profile1D(g, np.array([1.0, 2.0])))
    assert data[:4] == MAGIC
    assert struct.unpack_from("<IIdd", data, 4) == (1, 2, 0.5, 0.25)
    assert len(data) == 4 + 4 + 20 + 2 * 16


def _good():
    g = Grid1D(4, 0.0, 1.0)
    return encode(SpeedField(g, g, np.ones((4, 4))))


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: b"PWF2" + d[4:], "bad magic"),
        (lambda d: d[:3], "bad magic"),
        (lambda d: d[:4] + struct.pack("<I", 3) + d[8:], "rank"),
        (lambda d: d[:20], "truncated axis"),
        (lambda d: d[:-8], "payload"),
        (lambda d: d + b"\0" * 16, "payload"),
        (lambda d: d[:8] + struct.pack("<Idd", 4, 0.0, -1.0) + d[28:], "invalid axis"),
    ],
)
def test_corrupt_files_are_rejected(mutate, message):
    with pytest.raises(PWFError, match=message):
        decode(mutate(_good()))


def test_encode_rejects_foreign_objects():
    with pytest.raises(TypeError):
        encode(np.zeros(3))


def test_csv_section_round_trip(tmp_path):
    x = np.array([-1.0, 0.1, 1e-300])
    v = np.array([1 + 2j, -0.3, 1 / 3 + 0j])
    write_csv_section(tmp_path / "s.csv", x, v)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "coord,re,im"
    xb, vb = read_csv_section(tmp_path / "s.csv")
    assert np.array_equal(xb, x) and np.array_equal(vb, v)


def test_csv_section_requires_header(tmp_path):
    (tmp_path / "bad.csv").write_text("x,y\n1,2\n")
    with pytest.raises(PWFError):
        read_csv_section(tmp_path / "bad.csv")


def test_table_writes_exact_floats(tmp_path):
    write_table(tmp_path / "t.csv", ("t", "mass"), [(0.1, 1 / 3), (0.2, "nan")])
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines == ["t,mass", "0.1,0.3333333333333333", "0.2,nan"]
