from __future__ import annotations

import json

import numpy as np
import pytest

from planewave.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from planewave.field_core import Grid1D, PhysField2D
from planewave.pwfio import read_csv_section, read_pwf, write_pwf

GRID = {"n": 32, "length": 8.0}


def run(tmp_path, doc, command=None, extra=()):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "out"
    code = main([command or doc["command"], "--config", str(cfg), "--out", str(out), *extra])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, out, report


def test_transform_run_writes_outputs_and_report(tmp_path):
    doc = {
        "command": "transform",
        "field": {"kind": "gaussian"},
        "grids": {"z": GRID, "c": GRID, "y": {"n": 8, "length": 2.0}},
        "transform": {"method": "both"},
    }
    code, out, rep = run(tmp_path, doc)
    assert code == EXIT_OK
    assert rep["status"] == "ok" and rep["command"] == "transform"
    assert rep["config"]["transform"]["order"] == 3 and rep["config"]["nls"]["sigma"] == 4.0
    assert set(rep["outputs"]) == {"field.pwf", "transform.pwf", "transform_spectral.pwf", "section.csv"}
    assert rep["measured"]["direct_vs_spectral_sup"] < 1e-3
    assert rep["runtime_s"] >= 0
    u = read_pwf(out / "transform.pwf", kind="phys")
    x, vals = read_csv_section(out / "section.csv")
    k = int(np.argmin(np.abs(u.grid_y.points - rep["measured"]["section_y"])))
    np.testing.assert_array_equal(vals, u.values[k])
    np.testing.assert_array_equal(x, u.grid_x.points)


def test_command_is_taken_from_the_argument(tmp_path):
    doc = {"field": {"kind": "gaussian"}, "grids": {"z": GRID}, "nls": {"t_end": 0.1, "sigma": 2.0}}
    code, out, rep = run(tmp_path, doc, command="nls1d")
    assert code == EXIT_OK
    assert rep["measured"]["mass_drift"] < 1e-12
    assert (out / "diagnostics.csv").read_text().startswith("t,mass,energy")


def test_mismatched_command_is_a_validation_error(tmp_path):
    doc = {"command": "nls1d", "field": {"kind": "gaussian"}, "grids": {"z": GRID}}
    code, _, rep = run(tmp_path, doc, command="transform")
    assert code == EXIT_CONFIG and rep is None


def test_validation_failure_exit_code(tmp_path, capsys):
    doc = {"command": "nls1d", "field": {"kind": "gaussian"}, "grids": {"z": GRID}, "nls": {"sigma": 0.5}}
    code, _, rep = run(tmp_path, doc)
    assert code == EXIT_CONFIG and rep is None
    assert "sigma must be ≥ 1" in capsys.readouterr().err


def test_blowup_exit_code_keeps_a_report(tmp_path):
    doc = {
        "command": "nls1d",
        "field": {"kind": "gaussian", "amplitude": 3.0},
        "grids": {"z": {"n": 1024, "length": 16.0}},
        "nls": {"sigma": 4.0, "dt": 1e-4, "t_end": 0.3, "record_every": 100, "blowup_guard": 3.0},
    }
    code, _, rep = run(tmp_path, doc)
    assert code == EXIT_BLOWUP
    assert rep["status"] == "blowup" and 0 < rep["measured"]["blowup_time"] <= 0.3


def test_missing_config_is_an_io_error(tmp_path):
    assert main(["transform", "--config", str(tmp_path / "absent.json")]) == EXIT_IO


def test_missing_input_is_a_validation_error(tmp_path):
    doc = {"command": "invert", "input": "none.pwf", "grids": {"x": GRID, "y": GRID}}
    code, _, _ = run(tmp_path, doc)
    assert code == EXIT_CONFIG


def test_corrupt_input_is_an_io_error(tmp_path):
    (tmp_path / "bad.pwf").write_bytes(b"JUNKJUNK")
    doc = {"command": "invert", "input": "bad.pwf", "grids": {"x": GRID, "y": GRID}}
    code, _, rep = run(tmp_path, doc)
    assert code == EXIT_IO and rep["status"] == "io_error"


def test_invert_reads_a_pwf_input(tmp_path):
    g = Grid1D.centered(32, 8.0)
    X, Y = np.meshgrid(g.points, g.points)
    write_pwf(tmp_path / "u.pwf", PhysField2D(g, g, np.exp(-X**2 - Y**2)))
    doc = {"command": "invert", "input": "u.pwf", "grids": {"x": GRID, "y": GRID}}
    code, out, rep = run(tmp_path, doc)
    assert code == EXIT_OK and "inverse.pwf" in rep["outputs"]
    assert read_pwf(out / "inverse.pwf").values.shape == (32, 32)


@pytest.mark.parametrize("threads, expect", [(1, EXIT_OK), (0, EXIT_CONFIG), (10**6, EXIT_CONFIG)])
def test_threads_are_range_checked(tmp_path, threads, expect):
    doc = {"command": "nls1d", "field": {"kind": "gaussian"}, "grids": {"z": GRID}, "nls": {"t_end": 0.1}}
    code, _, _ = run(tmp_path, doc, extra=("--threads", str(threads)))
    assert code == expect


def test_forced_run_writes_diagnostics(tmp_path):
    doc = {
        "command": "nls-forced",
        "field": {"kind": "gaussian", "amplitude": 0.1},
        "grids": {"x": GRID, "y": GRID, "z": {"n": 128, "length": 16.0}},
        "profiles": [{"c": 0.0}, {"c": 1.0}],
        "background": {"type": "numerable"},
        "nls": {"sigma": 2.0, "dt": 0.02, "t_end": 0.1, "record_every": 5},
    }
    code, out, rep = run(tmp_path, doc)
    assert code == EXIT_OK
    head = (out / "diagnostics.csv").read_text().splitlines()[0]
    assert head == "t,mass,interaction,xc,h,v_h1,dev_h1,phi_inf"
    assert rep["measured"]["h_final"] > 0


def test_env_override_reaches_the_run(tmp_path, monkeypatch):
    monkeypatch.setenv("PWT_NLS__T_END", "0.05")
    doc = {"command": "nls1d", "field": {"kind": "gaussian"}, "grids": {"z": GRID}, "nls": {"dt": 0.01}}
    code, _, rep = run(tmp_path, doc)
    assert code == EXIT_OK and rep["config"]["nls"]["t_end"] == 0.05
