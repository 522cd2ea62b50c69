"""Command line entry point: ``ump CONFIG.json [--n N ...] [--seed S] [--out DIR]``.

Every run writes its outputs plus ``manifest.json`` into the output
directory. Exit codes: 0 ok, 2 invalid config, 3 precision budget exceeded,
4 no convergence, 5 identity suite failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from ._backend import BACKEND
from .cache import FORMAT_VERSION, cached_basis
from .equilibrium import solve_density
from .errors import ConfigInvalid, IdentityFailure, TooFewSamples, UMPError
from .io import svg_polylines, write_csv, write_json, atomic_write_text
from .kernel import KernelEvaluator, identity_suite, rescaled_kernel
from .potential import Potential
from .quadrature import PeriodicGrid, default_grid_size
from .sampler import RNG_NAME, empirical_stats, sample_batch, samples_csv
from .universality import (density_convergence, fourier_profile, sine_kernel,
                           sine_kernel_sweep)

log = logging.getLogger("ump")

MANIFEST_VERSION = 1
COMMANDS = ("basis", "density", "equilibrium", "kernel", "universality", "fourier",
            "sample", "verify-identities")
EXIT_CODES = {
    "0": "ok",
    "1": "other numerical failure",
    "2": "config invalid",
    "3": "precision exceeded",
    "4": "no convergence",
    "5": "identity suite failure",
}

_number = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command", "potential", "n_values"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["zero", "cosine", "fourier_cos"]},
                "t": _number,
                "coeffs": {"type": "array", "items": _number},
            },
        },
        "n_values": {"type": "array", "minItems": 1,
                     "items": {"type": "integer", "minimum": 1}},
        "grid_m": {"type": ["integer", "null"], "minimum": 256, "multipleOf": 2},
        "precision": {"enum": ["double", "extended", "auto"]},
        "lambda0": _number,
        "window": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
        "box": {"type": "number", "exclusiveMinimum": 0},
        "ell": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_iter": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "out_dir": {"type": "string"},
        "samples": {"type": "integer", "minimum": 1},
        "bins": {"type": "integer", "minimum": 2},
    },
}

DEFAULTS = {
    "grid_m": None,
    "precision": "auto",
    "lambda0": math.pi / 2,
    "window": [-math.pi / 2, math.pi / 2],
    "box": 2.0,
    "ell": None,
    "tol": 1e-12,
    "max_iter": 500,
    "seed": 0,
    "out_dir": "ump-out",
    "samples": 1000,
    "bins": 32,
}


def load_config(path, n=None, seed=None, out=None) -> dict:
    """Read, override and validate a run configuration."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a JSON object")
    if n is not None:
        raw["n_values"] = list(n)
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["out_dir"] = str(out)
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigInvalid(f"config rejected: {exc.message}") from exc
    cfg = {**DEFAULTS, **raw}
    pot = cfg["potential"]
    if pot["kind"] == "cosine" and "t" not in pot:
        raise ConfigInvalid("cosine potential needs 't'")
    if pot["kind"] == "fourier_cos" and not pot.get("coeffs"):
        raise ConfigInvalid("fourier_cos potential needs nonempty 'coeffs'")
    try:
        Potential.from_config(pot)
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from exc
    a, b = cfg["window"]
    if not -math.pi <= a < b <= math.pi:
        raise ConfigInvalid("window must satisfy -pi <= a < b <= pi")
    if not -math.pi <= cfg["lambda0"] <= math.pi:
        raise ConfigInvalid("lambda0 must lie in [-pi, pi]")
    cfg["n_values"] = sorted(set(cfg["n_values"]))
    if cfg["grid_m"] is not None and cfg["grid_m"] < 16 * (max(cfg["n_values"]) + 1):
        raise ConfigInvalid(f"grid_m must be at least 16 (n + 1) = {16 * (max(cfg['n_values']) + 1)}")
    return cfg


class Run:
    """State shared by a command: grid, cache lookups and written files."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.out = Path(cfg["out_dir"])
        self.potential = Potential.from_config(cfg["potential"])
        self.grid = PeriodicGrid(cfg["grid_m"] or default_grid_size(max(cfg["n_values"])))
        self.outputs = []
        self.cache_hits = {}
        self.residuals = {}
        self.modes = {}
        self.results = {}
        self._bases = {}

    def basis(self, p, n, grid, mode):
        key = (n, grid.M, mode)
        if key in self._bases:
            return self._bases[key]
        b, hit = cached_basis(p, n, grid, mode)
        self._bases[key] = b
        self.cache_hits[str(n)] = hit
        self.residuals[str(n)] = b.orthonormality_residual
        self.modes[str(n)] = b.mode
        return b

    def evaluator(self, n):
        return KernelEvaluator(self.basis(self.potential, n, self.grid, self.cfg["precision"]))

    def equilibrium(self):
        return solve_density(self.potential, self.grid, tol=self.cfg["tol"],
                             max_iter=self.cfg["max_iter"])

    def csv(self, name, header, rows):
        write_csv(self.out / name, header, rows)
        self.outputs.append(name)

    def json(self, name, obj):
        write_json(self.out / name, obj)
        self.outputs.append(name)

    def svg(self, name, series, **kw):
        atomic_write_text(self.out / name, svg_polylines(series, **kw))
        self.outputs.append(name)


def cmd_basis(run: Run):
    rows, gam = [], []
    for n in run.cfg["n_values"]:
        ev = run.evaluator(n)
        rm = ev.recursion
        b = ev.basis
        rows.append([n, run.grid.M, b.mode, b.orthonormality_residual,
                     rm.hessenberg_defect(), rm.row_norm_defect()])
        gam.extend([n, k, g] for k, g in enumerate(b.gamma))
    run.csv("basis.csv", ["n", "M", "precision", "orthonormality_residual",
                          "hessenberg_defect", "row_norm_defect"], rows)
    run.csv("leading_coefficients.csv", ["n", "k", "gamma"], gam)


def cmd_density(run: Run):
    x = run.grid.nodes
    series = {}
    for n in run.cfg["n_values"]:
        ev = run.evaluator(n)
        run.csv(f"density_n{n}.csv", ["lambda", "rho_n"], zip(x, ev.rho_n))
        series[f"n={n}"] = (x, ev.rho_n)
    run.svg("density.svg", series, title="one-point density", xlabel="lambda", ylabel="rho_n")


def cmd_equilibrium(run: Run):
    eq = run.equilibrium()
    x = run.grid.nodes
    run.csv("equilibrium.csv", ["lambda", "rho", "two_iq", "bulk"],
            zip(x, eq.rho, eq.two_iq().real, eq.bulk))
    run.json("equilibrium.json", eq.record())
    run.svg("equilibrium.svg", {"rho": (x, eq.rho)}, title="equilibrium density",
            xlabel="lambda", ylabel="rho")
    run.results["iterations"] = eq.iterations
    run.results["final_update"] = eq.final_update


def _box(cfg, pts=21):
    return np.linspace(-cfg["box"], cfg["box"], pts)


def cmd_kernel(run: Run):
    xs = _box(run.cfg)
    lam0 = run.cfg["lambda0"]
    for n in run.cfg["n_values"]:
        ev = run.evaluator(n)
        th = rescaled_kernel(ev, lam0, xs, xs, convention="diagonal")
        kd = rescaled_kernel(ev, lam0, xs, xs, convention="order")
        rows = []
        for i, x in enumerate(xs):
            for j, y in enumerate(xs):
                v = th.values[i, j]
                d = kd.dephased[i, j]
                rows.append([x, y, v.real, v.imag, abs(v), float(sine_kernel(x - y)),
                             d.real, d.imag])
        run.csv(f"kernel_n{n}.csv", ["x", "y", "re", "im", "abs", "sine", "dephased_re",
                                     "dephased_im"], rows)


def cmd_universality(run: Run):
    cfg = run.cfg
    p = run.potential
    rec = sine_kernel_sweep(p, cfg["n_values"], cfg["lambda0"], cfg["box"],
                            mode=cfg["precision"], grid_m=run.grid.M, basis_fn=run.basis)
    run.json("universality.json", json.loads(rec.to_json()))
    atomic_write_text(run.out / "universality.csv", rec.csv())
    run.outputs.append("universality.csv")
    dens = density_convergence(p, cfg["n_values"], tuple(cfg["window"]),
                               mode=cfg["precision"], grid_m=run.grid.M, basis_fn=run.basis)
    run.json("density_convergence.json", json.loads(dens.to_json()))
    atomic_write_text(run.out / "density_convergence.csv", dens.csv())
    run.outputs.append("density_convergence.csv")
    ln = np.log(rec.n_values)
    run.svg("universality.svg",
            {"sine kernel": (ln, np.log(np.maximum(rec.errors, 1e-300))),
             "density": (ln, np.log(np.maximum(dens.errors, 1e-300)))},
            title="log error vs log n", xlabel="log n", ylabel="log error")
    run.results["sine_kernel_errors"] = rec.errors
    run.results["density_errors"] = dens.errors


def cmd_fourier(run: Run):
    cfg = run.cfg
    eq = run.equilibrium()
    rho0 = float(eq.at(cfg["lambda0"]))
    metrics = {}
    for n in cfg["n_values"]:
        ev = run.evaluator(n)
        fp = fourier_profile(ev, cfg["lambda0"], cfg["ell"], rho0=rho0)
        clip = np.clip(fp.p, -fp.p0, fp.p0)
        run.csv(f"fourier_n{n}.csv", ["p", "khat_re", "khat_im", "F_re", "F_im", "clip"],
                zip(fp.p, fp.khat.real, fp.khat.imag, fp.F.real, fp.F.imag, clip))
        run.svg(f"fourier_n{n}.svg", {"F_n": (fp.p, fp.F.real), "clip": (fp.p, clip)},
                title=f"running integral of the profile transform, n={n}", xlabel="p")
        metrics[str(n)] = {
            "p0": fp.p0,
            "ell": fp.ell,
            "clip_error_over_p0": fp.clip_error() / fp.p0,
            "total_mass": fp.total_mass(),
            "target_mass": 2 * math.pi * rho0,
            "antisymmetry_defect_over_p0": fp.antisymmetry_defect() / fp.p0,
            "monotonicity_defect_over_p0": fp.monotonicity_defect() / fp.p0,
        }
    run.json("fourier.json", metrics)
    run.results["fourier"] = metrics


def cmd_sample(run: Run):
    cfg = run.cfg
    for n in cfg["n_values"]:
        ev = run.evaluator(n)
        samples = sample_batch(ev, cfg["seed"], cfg["samples"])
        atomic_write_text(run.out / f"samples_n{n}.csv", samples_csv(samples))
        run.outputs.append(f"samples_n{n}.csv")
        try:
            st = empirical_stats(samples, cfg["bins"])
        except TooFewSamples as exc:
            log.warning("statistics skipped for n=%d: %s", n, exc)
            continue
        stats = st.to_dict()
        stats["max_standard_score"] = st.max_standard_score(ev)
        stats["min_conditional_density"] = min(s.min_conditional_density for s in samples)
        run.json(f"stats_n{n}.json", stats)


def cmd_verify(run: Run):
    rows = []
    failed = []
    for n in run.cfg["n_values"]:
        for c in identity_suite(run.evaluator(n)):
            rows.append([n, c.name, c.value, c.bound, c.passed])
            if not c.passed:
                failed.append(f"n={n} {c.name}: {c.value:.3e} > {c.bound:.3e}")
    run.csv("identities.csv", ["n", "identity", "value", "bound", "passed"], rows)
    run.results["failures"] = failed
    if failed:
        raise IdentityFailure("; ".join(failed))


HANDLERS = {
    "basis": cmd_basis,
    "density": cmd_density,
    "equilibrium": cmd_equilibrium,
    "kernel": cmd_kernel,
    "universality": cmd_universality,
    "fourier": cmd_fourier,
    "sample": cmd_sample,
    "verify-identities": cmd_verify,
}


def _manifest(run: Run | None, cfg, code, error, started, wall):
    m = {
        "manifest_version": MANIFEST_VERSION,
        "format_version": FORMAT_VERSION,
        "command": cfg.get("command") if cfg else None,
        "config": cfg,
        "versions": {"ump": __version__, "numpy": np.__version__,
                     "python": platform.python_version(), "backend": BACKEND},
        "rng": RNG_NAME,
        "exit_code": code,
        "exit_codes": EXIT_CODES,
        "error": error,
        "started_at": started,
        "wall_time_s": wall,
    }
    if run is not None:
        m.update({
            "outputs": run.outputs,
            "cache_hit": all(run.cache_hits.values()) if run.cache_hits else None,
            "cache_hits": run.cache_hits,
            "precision": run.modes,
            "residuals": run.residuals,
            "grid_m": run.grid.M,
            "results": run.results,
        })
    return m


def run_command(cfg: dict) -> int:
    """Execute a validated config; returns the process exit code."""
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    run = Run(cfg)
    run.out.mkdir(parents=True, exist_ok=True)
    code, error = 0, None
    try:
        HANDLERS[cfg["command"]](run)
    except UMPError as exc:
        code, error = exc.exit_code, f"{type(exc).__name__}: {exc}"
        log.error("%s", error)
    except Exception as exc:
        # an unexpected failure still leaves a manifest behind
        code, error = 1, f"{type(exc).__name__}: {exc}"
        write_json(run.out / "manifest.json",
                   _manifest(run, cfg, code, error, started, time.perf_counter() - t0))
        raise
    write_json(run.out / "manifest.json",
               _manifest(run, cfg, code, error, started, time.perf_counter() - t0))
    return code


def build_parser():
    ap = argparse.ArgumentParser(prog="ump", description=__doc__.splitlines()[0])
    ap.add_argument("config", help="JSON run configuration")
    ap.add_argument("--n", type=int, nargs="+", help="override n_values")
    ap.add_argument("--seed", type=int, help="override seed")
    ap.add_argument("--out", help="override out_dir")
    ap.add_argument("--log-level", default="WARNING")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.n, args.seed, args.out)
    except ConfigInvalid as exc:
        log.error("%s", exc)
        out = Path(args.out) if args.out else None
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "manifest.json",
                       _manifest(None, None, exc.exit_code, str(exc),
                                 datetime.now(timezone.utc).isoformat(), 0.0))
        return exc.exit_code
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
