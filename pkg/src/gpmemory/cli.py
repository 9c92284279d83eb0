"""Batch front end: gpctl <config.json> [--out DIR] [--threads N].

Exit codes: 0 success, 2 config parse error, 3 validation error,
4 numerical failure. Data files are written to a staging directory and
only moved into place once the whole run has succeeded.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .disk import DiskGeometry, Mode, PolarField, eigenfunction_value, mode_set, polar_grid, write_mode_table
from .errors import GPError
from .kernels import eval_kernel, kernel_from_spec, khat_zeros, laplace_transform
from .moments import CertifyThresholds, certify, lemma1_scenario
from .reductions import CONVENTIONS, stability_interval, stability_map, write_stability_map
from .simulate import simulate_disk
from .symbols import root_sequence

log = logging.getLogger("gpctl")

COMMANDS = ("spectrum", "kernel", "roots", "simulate", "certify", "stability")
EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERICAL = 2, 3, 4

SECTION_DEFAULTS = {
    "geometry": {"R": 1.0},
    "modes": {"m_max": 3, "n_max": 5},
    "roots": {"m": 1, "n_min": 1, "n_max": 40, "target": None},
    "time": {"T": 10.0, "h": None},
    "kernel_samples": {"t_max": 10.0, "num": 101},
    "simulate": {
        "xi": {"type": "mode", "m": 0, "n": 1, "amplitude": 1.0},
        "forcing": None,
        "n_alpha": 32,
        "panels": 16,
        "order": 16,
        "n_snapshots": 5,
    },
    "certify": {
        "m": 1,
        "T": 4.0,
        "schedule": [5, 10, 15, 20, 25],
        "scenario": "lemma1",
        "thresholds": {"cluster_eps": 0.1, "obstruction_growth": 1e3, "bounded_growth": 10.0},
    },
    "stability": {
        "alpha": 1.0,
        "gamma": 1.0,
        "q": {"min": -0.5, "max": 1.5, "num": 9},
        "omega_sq": [0.1, 1.0, 10.0, 100.0],
        "convention": "adopted",
    },
}
TOP_KEYS = {"command", "kernel", "contrast_kernel", "output_dir", "threads", *SECTION_DEFAULTS}


class ConfigParseError(Exception):
    pass


class ConfigValidationError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    kernel: dict | None = None
    contrast_kernel: dict | None = None
    output_dir: str = "out"
    threads: int | None = None
    sections: dict = field(default_factory=dict)

    def echo(self) -> dict:
        d = {"command": self.command, "output_dir": self.output_dir, "threads": self.threads}
        if self.kernel is not None:
            d["kernel"] = self.kernel
        if self.contrast_kernel is not None:
            d["contrast_kernel"] = self.contrast_kernel
        d.update(copy.deepcopy(self.sections))
        return d


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_clock: float
    files: list


def _merge(name, defaults, given):
    if given is None:
        return copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigValidationError(f"{name}: expected an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigValidationError(f"{name}: unknown key(s) {sorted(unknown)}")
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(defaults[k], dict) and k != "xi" and v is not None:
            out[k] = _merge(f"{name}.{k}", defaults[k], v)
        else:
            out[k] = v
    return out


def _require(cond, key, msg):
    if not cond:
        raise ConfigValidationError(f"{key}: {msg}")


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigValidationError("config must be a JSON object")
    unknown = set(raw) - TOP_KEYS
    _require(not unknown, "config", f"unknown key(s) {sorted(unknown)}")
    cmd = raw.get("command")
    _require(cmd in COMMANDS, "command", f"must be one of {list(COMMANDS)}, got {cmd!r}")
    threads = raw.get("threads")
    _require(threads is None or (_is_int(threads) and threads >= 1), "threads", "must be a positive integer")
    out_dir = raw.get("output_dir", "out")
    _require(isinstance(out_dir, str), "output_dir", "must be a string")
    sections = {k: _merge(k, v, raw.get(k)) for k, v in SECTION_DEFAULTS.items()}
    cfg = RunConfig(cmd, raw.get("kernel"), raw.get("contrast_kernel"), out_dir, threads, sections)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    s = cfg.sections
    needs_kernel = cfg.command in ("kernel", "roots", "simulate", "certify")
    if needs_kernel:
        _require(cfg.kernel is not None, "kernel", f"required for command {cfg.command!r}")
    for key in ("kernel", "contrast_kernel"):
        spec = getattr(cfg, key)
        if spec is None:
            continue
        _require(isinstance(spec, dict), key, "expected an object")
        kind = spec.get("type")
        allowed = {"expsum": {"type", "terms"}, "constant": {"type", "C"}, "tabulated": {"type", "samples", "step"}}
        _require(kind in allowed, f"{key}.type", f"must be one of {sorted(allowed)}, got {kind!r}")
        extra = set(spec) - allowed[kind]
        _require(not extra, key, f"unknown key(s) {sorted(extra)}")
        try:
            kernel_from_spec(spec)
        except (GPError, KeyError, TypeError, ValueError) as exc:
            raise ConfigValidationError(f"{key}: {exc}") from None
    g = s["geometry"]
    _require(_is_num(g["R"]) and g["R"] > 0, "geometry.R", "must be a positive number")
    md = s["modes"]
    _require(_is_int(md["m_max"]) and 0 <= md["m_max"] <= 50, "modes.m_max", "must be an integer in [0, 50]")
    _require(_is_int(md["n_max"]) and 1 <= md["n_max"] <= 200, "modes.n_max", "must be an integer in [1, 200]")
    r = s["roots"]
    _require(_is_int(r["m"]) and 0 <= r["m"] <= 50, "roots.m", "must be an integer in [0, 50]")
    _require(_is_int(r["n_min"]) and _is_int(r["n_max"]) and 1 <= r["n_min"] <= r["n_max"] <= 200,
             "roots.n_min/n_max", "need 1 <= n_min <= n_max <= 200")
    _require(r["target"] is None or (isinstance(r["target"], list) and len(r["target"]) == 2
                                     and all(_is_num(x) for x in r["target"])),
             "roots.target", "must be null or [re, im]")
    t = s["time"]
    _require(_is_num(t["T"]) and t["T"] > 0, "time.T", "must be positive")
    _require(t["h"] is None or (_is_num(t["h"]) and 0 < t["h"] <= t["T"]), "time.h", "must be in (0, T]")
    ks = s["kernel_samples"]
    _require(_is_num(ks["t_max"]) and ks["t_max"] > 0, "kernel_samples.t_max", "must be positive")
    _require(_is_int(ks["num"]) and 2 <= ks["num"] <= 100000, "kernel_samples.num", "must be an integer in [2, 1e5]")
    sim = s["simulate"]
    xi = sim["xi"]
    _require(isinstance(xi, dict) and xi.get("type") in ("mode", "gaussian"), "simulate.xi.type",
             "must be 'mode' or 'gaussian'")
    xi_keys = {"mode": {"type", "m", "n", "amplitude"}, "gaussian": {"type", "x0", "y0", "width", "amplitude"}}
    _require(not set(xi) - xi_keys[xi["type"]], "simulate.xi", f"unknown key(s) {sorted(set(xi) - xi_keys[xi['type']])}")
    if sim["forcing"] is not None:
        f = sim["forcing"]
        fkeys = {"type", "r_min", "r_max", "amplitude", "t_off", "n_times"}
        _require(isinstance(f, dict) and f.get("type") == "annulus_pulse", "simulate.forcing.type",
                 "must be 'annulus_pulse'")
        _require(not set(f) - fkeys, "simulate.forcing", f"unknown key(s) {sorted(set(f) - fkeys)}")
    for key in ("n_alpha", "panels", "order", "n_snapshots"):
        _require(_is_int(sim[key]) and sim[key] >= 1, f"simulate.{key}", "must be a positive integer")
    c = s["certify"]
    _require(_is_num(c["T"]) and c["T"] > 0, "certify.T", "must be positive")
    sch = c["schedule"]
    _require(isinstance(sch, list) and sch and all(_is_int(k) and 1 <= k <= 200 for k in sch)
             and all(b > a for a, b in zip(sch, sch[1:])), "certify.schedule", "must be increasing integers in [1, 200]")
    _require(c["scenario"] in ("lemma1", "zero"), "certify.scenario", "must be 'lemma1' or 'zero'")
    for k, v in c["thresholds"].items():
        _require(_is_num(v) and v > 0, f"certify.thresholds.{k}", "must be positive")
    st = s["stability"]
    _require(_is_num(st["alpha"]) and st["alpha"] > 0, "stability.alpha", "must be positive")
    _require(_is_num(st["gamma"]) and st["gamma"] > 0, "stability.gamma", "must be positive")
    _require(st["convention"] in CONVENTIONS, "stability.convention", f"must be one of {list(CONVENTIONS)}")
    _require(isinstance(st["omega_sq"], list) and st["omega_sq"] and all(_is_num(w) and w > 0 for w in st["omega_sq"]),
             "stability.omega_sq", "must be a non-empty list of positive numbers")
    q = st["q"]
    _require(isinstance(q, list) or (isinstance(q, dict) and set(q) == {"min", "max", "num"}),
             "stability.q", "must be a list or {min, max, num}")


def parse_config(path) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(raw)


def _fmt(x) -> str:
    return repr(float(x))


def _write_json(path, obj):
    from .moments import _jsonable

    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _run_spectrum(cfg, out):
    md = cfg.sections["modes"]
    geom = DiskGeometry(cfg.sections["geometry"]["R"])
    write_mode_table(mode_set(md["m_max"], md["n_max"], geom), out / "modes.csv")


def _run_kernel(cfg, out):
    kernel = kernel_from_spec(cfg.kernel)
    ks = cfg.sections["kernel_samples"]
    t = np.linspace(0.0, ks["t_max"], ks["num"])
    vals = np.atleast_1d(eval_kernel(kernel, t))
    with open(out / "kernel_samples.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "K"])
        for a, b in zip(t, vals):
            w.writerow([_fmt(a), _fmt(b)])
    info = {"K0": kernel.mu}
    if cfg.kernel["type"] != "tabulated":
        rf = laplace_transform(kernel)
        info.update(
            numerator=[float(c) for c in rf.num],
            denominator=[float(c) for c in rf.den],
            zeros=[[z.real, z.imag] for z in khat_zeros(kernel)],
        )
    _write_json(out / "kernel.json", info)


def _run_roots(cfg, out):
    r = cfg.sections["roots"]
    kernel = kernel_from_spec(cfg.kernel)
    target = None if r["target"] is None else complex(*r["target"])
    seq = root_sequence(kernel, r["m"], range(r["n_min"], r["n_max"] + 1),
                        DiskGeometry(cfg.sections["geometry"]["R"]), target, workers=cfg.threads)
    seq.to_csv(out / "roots.csv")
    summary = {"m": seq.m, "target": [seq.target.real, seq.target.imag]}
    if len(seq.entries) >= 2:
        summary["clustering_slope"] = seq.clustering_slope()
    _write_json(out / "roots.json", summary)


def _xi_field(spec, geom, grid):
    amp = spec.get("amplitude", 1.0)
    if spec["type"] == "mode":
        mode = Mode.of(spec["m"], spec["n"], geom)
        vals = eigenfunction_value(mode, geom, *np.meshgrid(grid.r, grid.alpha, indexing="ij"))
        return grid.with_values(amp * (vals.real if mode.m == 0 else 2 * vals.real))

    def gauss(r, a):
        x, y = r * np.cos(a), r * np.sin(a)
        return amp * np.exp(-((x - spec["x0"]) ** 2 + (y - spec["y0"]) ** 2) / spec["width"] ** 2)

    return PolarField.sample(gauss, grid)


def annulus_pulse(spec, grid, T):
    """(times, values, mask) for a pulse supported in r_min <= r <= r_max."""
    rr, aa = np.meshgrid(grid.r, grid.alpha, indexing="ij")
    mask = (rr >= spec["r_min"]) & (rr <= spec["r_max"])
    shape = np.sin(np.pi * (rr - spec["r_min"]) / (spec["r_max"] - spec["r_min"])) ** 2 * np.cos(aa)
    times = np.linspace(0.0, T, spec.get("n_times", 41))
    env = np.where(times <= spec["t_off"], np.sin(np.pi * times / spec["t_off"]), 0.0)
    values = spec.get("amplitude", 1.0) * env[:, None, None] * shape[None]
    return times, values, mask


def _run_simulate(cfg, out):
    s = cfg.sections
    sim = s["simulate"]
    geom = DiskGeometry(s["geometry"]["R"])
    kernel = kernel_from_spec(cfg.kernel)
    grid = polar_grid(geom, sim["n_alpha"], sim["panels"], sim["order"])
    xi = _xi_field(sim["xi"], geom, grid)
    modes = mode_set(s["modes"]["m_max"], s["modes"]["n_max"], geom)
    T = s["time"]["T"]
    u, mask = None, None
    if sim["forcing"] is not None:
        times, values, mask = annulus_pulse(sim["forcing"], grid, T)
        u = (times, values)
    sol = simulate_disk(geom, kernel, xi, u, modes, T, s["time"]["h"], mask=mask,
                        n_snapshots=sim["n_snapshots"], workers=cfg.threads)
    sol.export(out)
    with open(out / "norms.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "l2_norm"])
        for a, b in zip(sol.times, sol.norms):
            w.writerow([_fmt(a), _fmt(b)])


def _run_certify(cfg, out):
    c = cfg.sections["certify"]
    geom = DiskGeometry(cfg.sections["geometry"]["R"])
    th = CertifyThresholds(**c["thresholds"])
    n_top = max(c["schedule"][-1], 2)
    xi = lemma1_scenario(n_top, c["m"]) if c["scenario"] == "lemma1" else {}
    reports = {"primary": certify(kernel_from_spec(cfg.kernel), geom, c["T"], c["schedule"], th, xi, c["m"],
                                  workers=cfg.threads)}
    if cfg.contrast_kernel is not None:
        reports["contrast"] = certify(kernel_from_spec(cfg.contrast_kernel), geom, c["T"], c["schedule"], th, xi,
                                      c["m"], workers=cfg.threads)
    _write_json(out / "report.json", {k: r.to_dict() for k, r in reports.items()})
    for k, r in reports.items():
        r.to_csv(out / f"certify_{k}.csv")


def _run_stability(cfg, out):
    st = cfg.sections["stability"]
    q = st["q"]
    qs = q if isinstance(q, list) else np.linspace(q["min"], q["max"], q["num"])
    rows = stability_map(st["alpha"], st["gamma"], qs, st["omega_sq"], st["convention"])
    write_stability_map(rows, out / "stability.csv")
    intervals = {
        conv: {"strict": list(iv.strict), "marginal": list(iv.marginal)}
        for conv in CONVENTIONS
        for iv in [stability_interval(st["alpha"], st["gamma"], conv)]
    }
    _write_json(out / "stability.json", {"convention": st["convention"], "intervals": intervals})


RUNNERS = {
    "spectrum": _run_spectrum,
    "kernel": _run_kernel,
    "roots": _run_roots,
    "simulate": _run_simulate,
    "certify": _run_certify,
    "stability": _run_stability,
}


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run(cfg: RunConfig) -> RunManifest:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    stage = Path(tempfile.mkdtemp(prefix=".gpctl-", dir=out))
    try:
        RUNNERS[cfg.command](cfg, stage)
        names = sorted(p.name for p in stage.iterdir())
        files = [{"name": n, "sha256": sha256(stage / n)} for n in names]
        for n in names:
            os.replace(stage / n, out / n)
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    manifest = RunManifest(cfg.echo(), __version__, time.perf_counter() - start, files)
    _write_json(out / "manifest.json", asdict(manifest))
    return manifest


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gpctl", description=__doc__.splitlines()[0])
    ap.add_argument("config", help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--threads", type=int, help="worker threads (overrides threads)")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
        if args.out:
            cfg.output_dir = args.out
        if args.threads is not None:
            _require(args.threads >= 1, "--threads", "must be positive")
            cfg.threads = args.threads
    except ConfigParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except ConfigValidationError as exc:
        log.error("validation error: %s", exc)
        return EXIT_VALIDATION
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_PARSE
    if cfg.threads is None:
        cfg.threads = os.cpu_count() or 1
    try:
        manifest = run(cfg)
    except (GPError, ArithmeticError, ValueError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    log.info("%s: wrote %d file(s) to %s", cfg.command, len(manifest.files), cfg.output_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
