"""Run configuration: a JSON document validated against a fixed schema.

Parsing is total: :func:`parse_config` returns a :class:`RunConfig` or raises
:class:`ConfigError` carrying *every* violation found. Unknown keys are
violations. Any leaf can be overridden from the environment with
``PWT_<SECTION>__<KEY>=<json value>`` (for instance ``PWT_NLS__DT=0.01``).
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any

from .fields import registered

COMMANDS = (
    "transform", "invert", "evolve", "wave", "family",
    "nls1d", "nls-system", "nls-forced", "nls-monolithic", "experiment",
)
EXPERIMENTS = ("decay", "stability", "large_data", "gwp", "appendix")
ENV_PREFIX = "PWT_"


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.violations))


def _num(lo=None, hi=None, lo_open=False, integer=False):
    def check(v, path, errs):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            errs.append(f"{path} must be a number, got {v!r}")
            return v
        if integer and int(v) != v:
            errs.append(f"{path} must be an integer, got {v!r}")
        if lo is not None and (v <= lo if lo_open else v < lo):
            errs.append(f"{path} must be {'>' if lo_open else '>='} {lo}, got {v!r}")
        if hi is not None and v > hi:
            errs.append(f"{path} must be <= {hi}, got {v!r}")
        return int(v) if integer else float(v)

    return check


def _choice(options):
    def check(v, path, errs):
        if v not in options:
            errs.append(f"{path} must be one of {list(options)}, got {v!r}")
        return v

    return check


def _str(v, path, errs):
    if not isinstance(v, str):
        errs.append(f"{path} must be a string, got {v!r}")
    return v


def _bool(v, path, errs):
    if not isinstance(v, bool):
        errs.append(f"{path} must be true or false, got {v!r}")
    return v


def _num_list(lo=None, lo_open=False):
    item = _num(lo, lo_open=lo_open)

    def check(v, path, errs):
        if not isinstance(v, list) or not v:
            errs.append(f"{path} must be a non-empty list of numbers")
            return v
        return [item(x, f"{path}[{i}]", errs) for i, x in enumerate(v)]

    return check


def _pow2(v, path, errs):
    v = _num(2, integer=True)(v, path, errs)
    if isinstance(v, int) and v >= 2 and v & (v - 1):
        errs.append(f"{path} must be a power of two, got {v}")
    return v


GRID = {"n": (_pow2, None), "length": (_num(0, lo_open=True), None), "origin": (_num(), None)}

FIELD_KEYS = {k: set(p) for k, p in registered().items()}


def _field(v, path, errs):
    if not isinstance(v, dict):
        errs.append(f"{path} must be a mapping with a 'kind' key")
        return v
    kind = v.get("kind")
    if not isinstance(kind, str) or kind not in FIELD_KEYS:
        errs.append(f"{path}.kind: unknown constructor {kind!r} (known: {sorted(FIELD_KEYS)})")
        return v
    for k, x in v.items():
        if k == "kind":
            continue
        if k not in FIELD_KEYS[kind]:
            errs.append(f"{path}.{k}: unknown parameter for {kind}")
        elif isinstance(x, bool) or not isinstance(x, (int, float)):
            errs.append(f"{path}.{k} must be a number, got {x!r}")
    return dict(v)


def _profiles(v, path, errs):
    if not isinstance(v, list):
        errs.append(f"{path} must be a list of {{c, field}} entries")
        return v
    out = []
    for i, e in enumerate(v):
        p = f"{path}[{i}]"
        if not isinstance(e, dict):
            errs.append(f"{p} must be a mapping")
            continue
        for k in set(e) - {"c", "field"}:
            errs.append(f"{p}.{k}: unknown key")
        if "c" not in e:
            errs.append(f"{p}.c is required")
            continue
        c = _num()(e["c"], f"{p}.c", errs)
        fspec = _field(e.get("field", {"kind": "gaussian"}), f"{p}.field", errs)
        out.append({"c": c, "field": fspec})
    seen = {}
    for i, e in enumerate(out):
        c = e["c"]
        if isinstance(c, float):
            for j, cj in seen.items():
                if cj == c:
                    errs.append(f"{path}: duplicate speed c={c} at entries {j} and {i} (speeds must be distinct)")
            seen[i] = c
    return out


NLS = {
    "lambda": (_num(), 1.0),
    "sigma": (_num(), 4.0),
    "dt": (_num(0, lo_open=True), 0.01),
    "t_end": (_num(0), 1.0),
    "splitting": (_choice(("strang",)), "strang"),
    "record_every": (_num(1, integer=True), 10),
    "blowup_guard": (_num(1, lo_open=True), 1e6),
    "dt_max": (_num(0, lo_open=True), 1.0),
}

SCHEMA: dict[str, Any] = {
    "command": (_choice(COMMANDS), None),
    "grids": {"z": GRID, "c": GRID, "x": GRID, "y": GRID},
    "field": (_field, None),
    "field2": (_field, None),
    "input": (_str, None),
    "transform": {
        "method": (_choice(("direct", "spectral", "both")), "direct"),
        "order": (_num(1, integer=True), 3),
        "c_pad": (_num(1, integer=True), 8),
        "periodic": (_bool, False),
        "section_y": (_num(), 0.0),
    },
    "invert": {"xi_cutoff": (_num(0, lo_open=True), 0.25)},
    "evolve": {"t": (_num(), 1.0), "residual": (_bool, True)},
    "wave": {"t": (_num(), 1.0), "dt_check": (_num(0, lo_open=True), 0.05)},
    "family": {"kind": (_choice(("heat", "schrodinger")), "heat"), "t": (_num(), 1.0)},
    "nls": NLS,
    "profile": {"a": (_num(0, lo_open=True), 1.0)},
    "profiles": (_profiles, None),
    "background": {"type": (_choice(("numerable", "continuous", "none")), "none"),
                   "periodic": (_bool, False)},
    "experiment": {
        "name": (_choice(EXPERIMENTS), None),
        "times": (_num_list(0, lo_open=True), None),
        "eps_ladder": (_num_list(0, lo_open=True), [0.2, 0.1, 0.05]),
        "slope": (_num(), 0.5),
        "x0": (_num(), -1.0),
        "x1": (_num(), 1.5),
        "lambdas": (_num_list(), [1.0, -1.0]),
    },
    "tolerances": {
        "support_tol": (_num(0, lo_open=True), 1e-8),
        "tol_xval": (_num(0, lo_open=True), 1e-4),
        "tol_semigroup": (_num(0, lo_open=True), 1e-3),
        "box_tol": (_num(0, lo_open=True), 1e-3),
    },
    "output": {"dir": (_str, "out"), "checkpoints": (_bool, False)},
}

REQUIRED = {
    "transform": ("field", "grids.z", "grids.c", "grids.y"),
    "invert": ("grids.x", "grids.y"),
    "evolve": ("field", "grids.z", "grids.c", "grids.y"),
    "wave": ("field", "grids.z", "grids.c", "grids.x", "grids.y"),
    "family": ("field", "grids.c", "grids.x"),
    "nls1d": ("field", "grids.z"),
    "nls-system": ("profiles", "grids.z"),
    "nls-forced": ("field", "grids.x", "grids.y"),
    "nls-monolithic": ("field", "grids.x", "grids.y"),
    "experiment": ("experiment.name",),
}


def _validate(doc, schema, path, errs):
    out = {}
    if not isinstance(doc, dict):
        errs.append(f"{path or 'document'} must be a mapping")
        return out
    for k in doc:
        if k not in schema:
            errs.append(f"{path + '.' if path else ''}{k}: unknown key")
    for k, rule in schema.items():
        p = f"{path}.{k}" if path else k
        if isinstance(rule, dict):
            sub = doc.get(k, {})
            if k in doc and not isinstance(sub, dict):
                errs.append(f"{p} must be a mapping")
                sub = {}
            if k == "grids":
                out[k] = {}
                for gname, gschema in rule.items():
                    if gname in sub:
                        out[k][gname] = _validate(sub[gname], gschema, f"{p}.{gname}", errs)
                for g in set(sub) - set(rule):
                    errs.append(f"{p}.{g}: unknown key")
                for gname, gv in out[k].items():
                    for need in ("n", "length"):
                        if gv.get(need) is None:
                            errs.append(f"{p}.{gname}.{need} is required")
            else:
                out[k] = _validate(sub, rule, p, errs)
        else:
            check, default = rule
            out[k] = check(doc[k], p, errs) if k in doc else default
    return out


def _lookup(d, dotted):
    for part in dotted.split("."):
        if not isinstance(d, dict) or d.get(part) is None:
            return None
        d = d[part]
    return d


def _env_overrides(doc, environ, errs):
    doc = json.loads(json.dumps(doc))
    for key, raw in sorted(environ.items()):
        if not key.startswith(ENV_PREFIX):
            continue
        parts = [p.lower() for p in key[len(ENV_PREFIX):].split("__")]
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        d = doc
        for p in parts[:-1]:
            d = d.setdefault(p, {})
            if not isinstance(d, dict):
                errs.append(f"environment override {key}: {p} is not a section")
                break
        else:
            d[parts[-1]] = val
    return doc


@dataclass
class RunConfig:
    command: str
    sections: dict
    source: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.sections[key]

    def get(self, dotted, default=None):
        v = _lookup(self.sections, dotted)
        return default if v is None else v

    @property
    def out_dir(self) -> str:
        return self.sections["output"]["dir"]

    def as_dict(self):
        return json.loads(json.dumps(self.sections))


def parse_config(text: str, environ=None, base_dir: str | None = None) -> RunConfig:
    """Validate a JSON config; raises :class:`ConfigError` listing all violations."""
    errs: list[str] = []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["document must be a JSON object"])
    doc = _env_overrides(doc, os.environ if environ is None else environ, errs)
    sec = _validate(doc, SCHEMA, "", errs)
    cmd = sec.get("command")
    if cmd not in COMMANDS:
        cmd = None  # already reported when present
    if cmd is None and "command" not in doc:
        errs.append("command is required")
    nls = sec["nls"]
    if isinstance(nls.get("sigma"), float) and nls["sigma"] < 1:
        errs.append(f"nls.sigma: sigma must be ≥ 1, got {nls['sigma']}")
    if isinstance(nls.get("dt"), float) and isinstance(nls.get("dt_max"), float) and nls["dt"] > nls["dt_max"]:
        errs.append(f"nls.dt={nls['dt']} exceeds the declared ceiling nls.dt_max={nls['dt_max']}")
    if cmd in REQUIRED:
        for dotted in REQUIRED[cmd]:
            if _lookup(sec, dotted) is None:
                errs.append(f"{dotted} is required for command {cmd!r}")
    if cmd == "nls-forced":
        btype = sec["background"]["type"]
        if btype == "numerable" and not sec.get("profiles"):
            errs.append("background.type=numerable needs profiles")
        if btype == "numerable" and "z" not in sec["grids"]:
            errs.append("background.type=numerable needs grids.z")
        if btype == "continuous" and (sec.get("field2") is None or "z" not in sec["grids"] or "c" not in sec["grids"]):
            errs.append("background.type=continuous needs field2, grids.z and grids.c")
    if isinstance(sec.get("input"), str):
        path = sec["input"]
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        if not os.path.exists(path):
            errs.append(f"input: file {sec['input']!r} does not exist")
        sec["input"] = path
    if cmd == "invert" and sec.get("input") is None and sec.get("field") is None:
        errs.append("invert needs either input or field")
    if errs:
        raise ConfigError(errs)
    return RunConfig(cmd, sec, doc)
