"""Command-line entry point: ``planewave <command> --config FILE [--out DIR] [--threads N]``.

Every run writes ``report.json`` (the fully defaulted config, outputs and
measurements) into the output directory. Exit codes: 0 success, 2 invalid
configuration, 3 blowup guard tripped, 4 file error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, ConfigError, RunConfig, parse_config
from .experiments import (
    _jsonable,
    decay_experiment,
    gwp_experiment,
    large_data_ladder,
    radial_abel_check,
    stability_experiment,
    strip_integral,
    transform_interval_integral,
)
from .field_core import Grid1D, lp_norm
from .fields import build_field
from .linear_evolve import (
    evolve_planewave_part,
    oscillatory_family_eval,
    semigroup_commute_residual,
    wave2d_via_pwt,
    wave_residual,
)
from .nls_engine import (
    BlowupError,
    Diagnostics,
    NlsParams,
    ProfileSet,
    countable_system_solve,
    energy_1d,
    forced_nls2d_solve,
    interaction_norm,
    monolithic_nls2d_solve,
    nls1d_solve,
)
from .pwfio import PWFError, read_pwf, write_csv_section, write_pwf, write_table
from .pwt import TruncationWarning, covering_x_grid, pwt_direct, pwt_inverse, pwt_spectral

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("planewave")


class _Run:
    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.outputs: list[str] = []
        self.measured: dict = {}
        self.warnings: list[str] = []

    def grid(self, name) -> Grid1D:
        g = self.cfg["grids"][name]
        origin = -0.5 * g["length"] if g["origin"] is None else g["origin"]
        return Grid1D(g["n"], origin, g["length"] / g["n"])

    def has_grid(self, name) -> bool:
        return name in self.cfg["grids"]

    def params(self) -> NlsParams:
        n = self.cfg["nls"]
        return NlsParams(
            n["lambda"], n["sigma"], n["dt"], n["t_end"], n["splitting"],
            n["record_every"], n["blowup_guard"], n["dt_max"],
        )

    def save(self, name, fld):
        write_pwf(self.out / name, fld)
        self.outputs.append(name)

    def section(self, name, coords, values):
        write_csv_section(self.out / name, coords, values)
        self.outputs.append(name)

    def table(self, name, header, rows):
        write_table(self.out / name, header, rows)
        self.outputs.append(name)

    def speed_field(self, key="field"):
        return build_field(self.cfg[key], "speed", (self.grid("z"), self.grid("c")))

    def phys_field(self, key="field"):
        return build_field(self.cfg[key], "phys", (self.grid("x"), self.grid("y")))

    def checkpoint(self, prefix, traj, getter=lambda s: s):
        if not self.cfg["output"]["checkpoints"]:
            return
        for i, s in enumerate(traj.states):
            self.save(f"{prefix}_{i:05d}.pwf", getter(s))


def _row_nearest(grid: Grid1D, y: float) -> int:
    return int(np.clip(np.rint((y - grid.origin) / grid.spacing), 0, grid.n_points - 1))


# ------------------------------------------------------------- commands


def cmd_transform(run: _Run):
    f = run.speed_field()
    tr = run.cfg["transform"]
    gy = run.grid("y")
    gx = run.grid("x") if run.has_grid("x") else covering_x_grid(f, gy, f.grid_z.spacing)
    run.save("field.pwf", f)
    u = None
    if tr["method"] in ("direct", "both"):
        u = pwt_direct(f, gx, gy, tr["order"], periodic=tr["periodic"], support_tol=run.cfg["tolerances"]["support_tol"])
        run.save("transform.pwf", u)
        run.measured.update({"truncated": u.meta["truncated"], "window_clipped": u.meta["window_clipped"]})
    if tr["method"] in ("spectral", "both"):
        us = pwt_spectral(f, gx, gy, tr["c_pad"], tr["order"], support_tol=run.cfg["tolerances"]["support_tol"])
        run.save("transform_spectral.pwf", us)
        if u is not None:
            run.measured["direct_vs_spectral_sup"] = float(np.abs(u.values - us.values).max())
        u = u if u is not None else us
    k = _row_nearest(gy, tr["section_y"])
    run.measured["section_y"] = float(gy.points[k])
    run.section("section.csv", gx.points, u.values[k])


def cmd_invert(run: _Run):
    if run.cfg.get("input") is not None:
        u = read_pwf(run.cfg["input"], kind="phys")
    else:
        u = run.phys_field()
    gc = run.grid("c") if run.has_grid("c") else None
    f = pwt_inverse(u, run.cfg["invert"]["xi_cutoff"], grid_c=gc, order=run.cfg["transform"]["order"])
    run.save("inverse.pwf", f)
    run.measured["inverse_l2"] = lp_norm(f, 2)


def cmd_evolve(run: _Run):
    f = run.speed_field()
    t = run.cfg["evolve"]["t"]
    order = run.cfg["transform"]["order"]
    periodic = run.cfg["transform"]["periodic"]
    gy = run.grid("y")
    gx = run.grid("x") if run.has_grid("x") else f.grid_z
    ft = evolve_planewave_part(f, t)
    run.save("evolved_profiles.pwf", ft)
    run.save("evolved_transform.pwf", pwt_direct(ft, gx, gy, order, periodic=periodic))
    if run.cfg["evolve"]["residual"]:
        res = semigroup_commute_residual(f, t, gy, gx, order, periodic=periodic)
        run.measured["semigroup_residual"] = res
        run.measured["semigroup_tolerance"] = run.cfg["tolerances"]["tol_semigroup"]
        run.measured["semigroup_ok"] = res <= run.cfg["tolerances"]["tol_semigroup"]


def cmd_wave(run: _Run):
    f0 = run.speed_field()
    f1 = run.speed_field("field2") if run.cfg.get("field2") is not None else f0.with_values(np.zeros_like(f0.values))
    w = run.cfg["wave"]
    order = run.cfg["transform"]["order"]
    gx, gy = run.grid("x"), run.grid("y")
    run.save("wave.pwf", wave2d_via_pwt(f0, f1, w["t"], gx, gy, order))
    run.measured["pde_residual"] = wave_residual(f0, f1, w["t"], w["dt_check"], gx, gy, max(order, 3))


def cmd_family(run: _Run):
    amp = build_field(run.cfg["field"], "profile", (run.grid("c"),))
    fam = run.cfg["family"]
    u = oscillatory_family_eval(amp, fam["t"], run.grid("x"), fam["kind"])
    run.save("family.pwf", u)
    run.section("family.csv", u.grid_z.points, u.values)


def cmd_nls1d(run: _Run):
    f0 = build_field(run.cfg["field"], "profile", (run.grid("z"),))
    p = run.params()
    a = run.cfg["profile"]["a"]
    traj = nls1d_solve(f0, a, p)
    rows = [(t, lp_norm(s, 2) ** 2, energy_1d(s, a, p.lam, p.sigma)) for t, s in zip(traj.times, traj.states)]
    run.table("diagnostics.csv", ("t", "mass", "energy"), rows)
    run.checkpoint("state", traj)
    run.save("final.pwf", traj.final)
    m0 = rows[0][1]
    run.measured["mass_drift"] = max(abs(r[1] - m0) for r in rows) / max(m0, 1e-300)


def _profile_set(run: _Run) -> ProfileSet:
    gz = run.grid("z")
    return ProfileSet([(e["c"], build_field(e["field"], "profile", (gz,))) for e in run.cfg["profiles"]])


def cmd_nls_system(run: _Run):
    ps = _profile_set(run)
    traj = countable_system_solve(ps, run.params())
    rows = []
    for t, s in zip(traj.times, traj.states):
        rows.append((t, sum(lp_norm(q, 2) ** 2 for q in s.profiles), interaction_norm(s)))
    run.table("diagnostics.csv", ("t", "mass", "interaction"), rows)
    i0 = rows[0][2]
    run.measured["interaction_drift"] = max(abs(r[2] - i0) for r in rows) / max(i0, 1e-300)
    for k, q in enumerate(traj.final.profiles):
        run.save(f"final_profile_{k}.pwf", q)


def _diag_table(run: _Run, diag: Diagnostics):
    run.table("diagnostics.csv", Diagnostics.COLUMNS, diag.rows())


def cmd_nls_forced(run: _Run):
    v0 = run.phys_field()
    bcfg = run.cfg["background"]
    if bcfg["type"] == "numerable":
        bg = _profile_set(run)
    elif bcfg["type"] == "continuous":
        bg = run.speed_field("field2")
    else:
        bg = None
    try:
        res = forced_nls2d_solve(v0, bg, run.params(), run.cfg["transform"]["order"],
                                 bcfg["periodic"], run.cfg["tolerances"]["box_tol"])
    except BlowupError as exc:
        if exc.partial is not None:
            _diag_table(run, exc.partial.diagnostics)
        raise
    _diag_table(run, res.diagnostics)
    run.checkpoint("v", res.trajectory, lambda s: s.v)
    run.save("v_final.pwf", res.trajectory.final.v)
    run.measured.update({"box_valid_until": res.box_valid_until, "h_final": res.diagnostics.h[-1]})


def cmd_nls_monolithic(run: _Run):
    u0 = run.phys_field()
    traj = monolithic_nls2d_solve(u0, run.params())
    rows = [(t, lp_norm(s, 2) ** 2) for t, s in zip(traj.times, traj.states)]
    run.table("diagnostics.csv", ("t", "mass"), rows)
    run.checkpoint("u", traj)
    run.save("u_final.pwf", traj.final)


def cmd_experiment(run: _Run):
    ex = run.cfg["experiment"]
    name = ex["name"]
    order = run.cfg["transform"]["order"]
    if name == "decay":
        times = ex["times"] or list(np.geomspace(1.0, 50.0, 12))
        rep = decay_experiment(run.speed_field(), times, order=order)
    elif name == "stability":
        bg = _profile_set(run) if run.cfg["background"]["type"] == "numerable" else run.speed_field("field2")
        reps = [stability_experiment(bg, run.phys_field(), ex["eps_ladder"], run.params().with_changes(lam=lam),
                                     order=order, periodic_background=run.cfg["background"]["periodic"])
                for lam in ex["lambdas"]]
        run.measured["ladders"] = [r.as_dict() for r in reps]
        run.measured["passed"] = all(r.passed for r in reps)
        return
    elif name == "large_data":
        f = build_field(run.cfg["field"], "profile", (run.grid("c"),))
        g = build_field(run.cfg["field2"], "profile", (run.grid("z"),))
        rep = large_data_ladder(f, g, ex["eps_ladder"])
    elif name == "gwp":
        rep = gwp_experiment(run.phys_field(), run.speed_field("field2"), run.params(), order=order)
        if rep.series:
            run.table("series.csv", tuple(rep.series), list(zip(*rep.series.values())))
    else:
        f = run.speed_field()
        s = strip_integral(f, ex["x0"], ex["x1"], ex["slope"])
        ref = transform_interval_integral(f, ex["x0"], ex["x1"], ex["slope"])
        rep = radial_abel_check(f, ex["eps_ladder"])
        rep.measured["strip_integral"] = s
        rep.measured["interval_integral"] = ref
        rep.check("strip vs interval relative residual", abs(s - ref) / max(abs(ref), 1e-300), 1e-6, "<=")
    run.measured.update(rep.as_dict())


HANDLERS = {
    "transform": cmd_transform,
    "invert": cmd_invert,
    "evolve": cmd_evolve,
    "wave": cmd_wave,
    "family": cmd_family,
    "nls1d": cmd_nls1d,
    "nls-system": cmd_nls_system,
    "nls-forced": cmd_nls_forced,
    "nls-monolithic": cmd_nls_monolithic,
    "experiment": cmd_experiment,
}


def _write_report(run: _Run, status: str, runtime: float, error: str | None = None):
    report = {
        "version": __version__,
        "command": run.cfg.command,
        "status": status,
        "config": run.cfg.as_dict(),
        "outputs": run.outputs,
        "measured": _jsonable(run.measured),
        "warnings": run.warnings,
        "runtime_s": runtime,
    }
    if error:
        report["error"] = error
    (run.out / "report.json").write_text(json.dumps(report, indent=2, allow_nan=False, default=str))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="planewave", description="Plane wave transform and NLS toolkit.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--threads", type=int, help="worker threads for the transform kernels")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        doc = json.loads(text)
        if isinstance(doc, dict) and "command" not in doc:
            doc["command"] = args.command
            text = json.dumps(doc)
    except json.JSONDecodeError:
        pass
    try:
        cfg = parse_config(text, base_dir=str(Path(args.config).parent))
        if cfg.command != args.command:
            raise ConfigError([f"command: config says {cfg.command!r} but {args.command!r} was requested"])
        if args.threads is not None:
            import numba

            if not 1 <= args.threads <= numba.config.NUMBA_NUM_THREADS:
                raise ConfigError([f"--threads must lie in [1, {numba.config.NUMBA_NUM_THREADS}], got {args.threads}"])
            numba.set_num_threads(args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.out_dir)
    if args.out:
        cfg.sections["output"]["dir"] = str(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO
    run = _Run(cfg, out)
    t0 = time.perf_counter()
    code, status, err = EXIT_OK, "ok", None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        warnings.simplefilter("always", RuntimeWarning)
        try:
            HANDLERS[cfg.command](run)
        except BlowupError as exc:
            code, status, err = EXIT_BLOWUP, "blowup", f"{exc} (t={exc.time})"
            run.measured["blowup_time"] = exc.time
        except (OSError, PWFError) as exc:
            code, status, err = EXIT_IO, "io_error", str(exc)
        except ValueError as exc:
            code, status, err = EXIT_CONFIG, "invalid", str(exc)
        run.warnings = sorted({str(w.message) for w in caught})
    try:
        _write_report(run, status, time.perf_counter() - t0, err)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    if err:
        print(f"error: {err}", file=sys.stderr)
    log.info("wrote %d outputs to %s", len(run.outputs), out)
    return code


if __name__ == "__main__":
    sys.exit(main())
