"""PWF1 binary grid files and CSV export of 1D sections.

Layout (little-endian)::

    b"PWF1"
    u32 rank                       (1 or 2)
    rank x (u32 n, f64 origin, f64 spacing)
    complex128 payload, row-major

For rank 2 the first axis record describes the rows (y or c), the second
the columns (x or z), matching the in-memory ``values[row, col]`` layout.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .field_core import Grid1D, PhysField2D, Profile1D, SpeedField

MAGIC = b"PWF1"
_AXIS = struct.Struct("<Idd")


class PWFError(ValueError):
    pass


def _axes(fld):
    if isinstance(fld, Profile1D):
        return [fld.grid_z]
    if isinstance(fld, SpeedField):
        return [fld.grid_c, fld.grid_z]
    if isinstance(fld, PhysField2D):
        return [fld.grid_y, fld.grid_x]
    raise TypeError(f"cannot serialise {type(fld).__name__}")


def encode(fld) -> bytes:
    axes = _axes(fld)
    head = [MAGIC, struct.pack("<I", len(axes))]
    head += [_AXIS.pack(g.n_points, g.origin, g.spacing) for g in axes]
    payload = np.ascontiguousarray(fld.values, dtype="<c16").tobytes()
    return b"".join(head) + payload


def decode(data: bytes, kind: str = "auto"):
    """Parse PWF1 bytes.

    ``kind`` selects the container for rank-2 data: ``"speed"``,
    ``"phys"`` or ``"auto"`` (speed unless told otherwise).
    """
    if len(data) < 8 or data[:4] != MAGIC:
        raise PWFError("not a PWF1 file (bad magic)")
    (rank,) = struct.unpack_from("<I", data, 4)
    if rank not in (1, 2):
        raise PWFError(f"unsupported rank {rank}")
    off = 8
    axes = []
    for _ in range(rank):
        if off + _AXIS.size > len(data):
            raise PWFError("truncated axis header")
        n, origin, spacing = _AXIS.unpack_from(data, off)
        off += _AXIS.size
        try:
            axes.append(Grid1D(n, origin, spacing))
        except ValueError as exc:
            raise PWFError(f"invalid axis: {exc}") from None
    shape = tuple(g.n_points for g in axes)
    need = int(np.prod(shape)) * 16
    if len(data) - off != need:
        raise PWFError(f"payload is {len(data) - off} bytes, expected {need}")
    vals = np.frombuffer(data, dtype="<c16", offset=off).reshape(shape).astype(np.complex128)
    if rank == 1:
        return Profile1D(axes[0], vals)
    if kind == "phys":
        return PhysField2D(axes[1], axes[0], vals)
    return SpeedField(axes[1], axes[0], vals)


def write_pwf(path, fld) -> None:
    Path(path).write_bytes(encode(fld))


def read_pwf(path, kind: str = "auto"):
    return decode(Path(path).read_bytes(), kind)


def write_csv_section(path, coords, values) -> None:
    """Write a 1D complex section with header ``coord,re,im``."""
    coords = np.asarray(coords, dtype=float)
    values = np.asarray(values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["coord", "re", "im"])
        for x, v in zip(coords, values):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


def read_csv_section(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["coord", "re", "im"]:
        raise PWFError("CSV section must start with header coord,re,im")
    arr = np.array([[float(a) for a in r] for r in rows[1:]], dtype=float).reshape(-1, 3)
    return arr[:, 0], arr[:, 1] + 1j * arr[:, 2]


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
