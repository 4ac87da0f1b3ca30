"""Command-line interface.

Subcommands ``forward``, ``simulate``, ``invert`` and ``singular-scan`` read
a JSON configuration (see :data:`DEFAULTS`), validate every key and path
before computing, and write versioned CSV files to the output directory.
Errors end with one machine-readable line ``E:<module>:<code>:<detail>`` on
standard error and exit codes 2 (configuration), 3 (numerical failure) or
4 (input/output).
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import invert as inv
from . import observe, radial, recover, specfun
from .multipole import MultipoleError
from .solar_model import (Atmosphere, ModelError, REFERENCE_ATMOSPHERE, free_potential,
                          load_background, perturbed_model, save_background,
                          synthetic_background)

log = logging.getLogger("heliosolve")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("forward", "simulate", "invert", "singular-scan")

_PERTURBATION = {"dc": 0.0, "drho": 0.0, "dgamma": 0.0,
                 "center_m": None, "half_width_m": None}

DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "log_level": "info",
    "out": "heliosolve-out",
    "atmosphere": {"c0": None, "rho0": None, "H": None, "h_a": None},
    "sun": {"radius": None},
    "model": {
        "kind": "synthetic",      # synthetic | file | free
        "path": None,
        "gamma0": 2 * math.pi * 102.5e-6,
        "free_k": None,           # 1/m, kind = free
        "free_alpha": 0.0,        # 1/m, kind = free
        "perturbation": dict(_PERTURBATION),
    },
    "observe": {
        "heights_m": [105e3, 144e3],
        "frequencies_mHz": [5.3, 5.4],
        "ell_max": 250,
        "N_segments": 974,
        "Pi": 1.0,
        "resolution": 8,
        "plan": {"total_s": None, "segment_s": None, "cadence_s": None},
    },
    "recover": {"det_min": recover.DET_MIN, "reference": "continued", "resolution": 8},
    "invert": {
        "diagonals": None,
        "truth": {"path": None, "perturbation": None},
        "interval_m": [0.9 * REFERENCE_ATMOSPHERE.R_sun, 0.95 * REFERENCE_ATMOSPHERE.R_sun],
        "n_grid": 200,
        "alpha0": None,
        "q": 2.0 / 3.0,
        "tau": 1.5,
        "max_outer": 20,
        "free_params": ["c", "rho", "gamma"],
        "weight_mode": "inverse_condition",
        "jacobian": "analytic",
        "fd_step": 1e-7,
        "resolution": 4,
    },
    "scan": {
        "frequency_mHz": 5.3,
        "reference_height_m": 105e3,
        "range_m": [105e3, 500e3],
        "n_r": 2001,
        "ell_max": 250,
        "threshold": recover.SCAN_THRESHOLD,
        "reference": "coulomb",
        "pair_height_m": 144e3,
    },
}

# keys whose defaults are None but which hold nested objects
_OBJECT_KEYS = {"invert.truth.perturbation"}


class ConfigError(ValueError):
    def __init__(self, code, detail):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


# ---------------------------------------------------------------------------
# configuration

def _merge(base, new, prefix=""):
    out = copy.deepcopy(base)
    for key, val in new.items():
        dotted = f"{prefix}{key}"
        if key not in base:
            raise ConfigError("unknown-key", dotted)
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError("type", f"{dotted} must be an object")
            out[key] = _merge(base[key], val, dotted + ".")
        elif dotted in _OBJECT_KEYS and val is not None:
            if not isinstance(val, dict):
                raise ConfigError("type", f"{dotted} must be an object or null")
            out[key] = _merge(_PERTURBATION, val, dotted + ".")
        else:
            out[key] = val
    return out


def load_config(path=None, overrides=None):
    """Defaults merged with a JSON file and ``overrides`` (both validated)."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("parse", f"{path}: line {exc.lineno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError("parse", f"{path}: top level must be an object")
        cfg = _merge(cfg, data)
    if overrides:
        cfg = _merge(cfg, overrides)
    _validate(cfg)
    return cfg


def _num(cfg, dotted, *, positive=False, integer=False, allow_none=False):
    val = cfg
    for k in dotted.split("."):
        val = val[k]
    if val is None and allow_none:
        return None
    ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    if ok and integer:
        ok = float(val).is_integer()
    if ok and positive:
        ok = val > 0
    if not ok or not math.isfinite(val):
        kind = "positive " if positive else ""
        raise ConfigError("value", f"{dotted} must be a {kind}{'integer' if integer else 'number'}")
    return int(val) if integer else float(val)


def _validate(cfg):
    _num(cfg, "seed", integer=True)
    if not 0 <= cfg["seed"] < 2 ** 64:
        raise ConfigError("value", "seed must fit in 64 bits")
    _num(cfg, "threads", positive=True, integer=True)
    if cfg["log_level"] not in ("debug", "info", "warning", "error"):
        raise ConfigError("value", "log_level must be debug, info, warning or error")
    for k in ("c0", "rho0", "H", "h_a"):
        _num(cfg, f"atmosphere.{k}", positive=True, allow_none=True)
    _num(cfg, "sun.radius", positive=True, allow_none=True)
    m = cfg["model"]
    if m["kind"] not in ("synthetic", "file", "free"):
        raise ConfigError("value", "model.kind must be synthetic, file or free")
    if m["kind"] == "file" and not m["path"]:
        raise ConfigError("value", "model.path is required for model.kind = file")
    if m["kind"] == "free":
        _num(cfg, "model.free_k", positive=True)
        _num(cfg, "model.free_alpha")
    _num(cfg, "model.gamma0")
    for k in ("dc", "drho", "dgamma"):
        _num(cfg, f"model.perturbation.{k}")
    o = cfg["observe"]
    for key in ("heights_m", "frequencies_mHz"):
        if not isinstance(o[key], list) or not o[key]:
            raise ConfigError("value", f"observe.{key} must be a non-empty list")
    _num(cfg, "observe.ell_max", integer=True)
    _num(cfg, "observe.N_segments", positive=True, integer=True)
    _num(cfg, "observe.Pi", positive=True)
    _num(cfg, "observe.resolution", positive=True, integer=True)
    for k in ("total_s", "segment_s", "cadence_s"):
        _num(cfg, f"observe.plan.{k}", positive=True, allow_none=True)
    plan = o["plan"]
    if any(v is not None for v in plan.values()) and any(v is None for v in plan.values()):
        raise ConfigError("value", "observe.plan needs total_s, segment_s and cadence_s together")
    if cfg["recover"]["reference"] not in ("continued", "coulomb"):
        raise ConfigError("value", "recover.reference must be continued or coulomb")
    _num(cfg, "recover.det_min", positive=True)
    _num(cfg, "recover.resolution", positive=True, integer=True)
    i = cfg["invert"]
    _num(cfg, "invert.n_grid", positive=True, integer=True)
    _num(cfg, "invert.alpha0", positive=True, allow_none=True)
    _num(cfg, "invert.q", positive=True)
    _num(cfg, "invert.tau", positive=True)
    _num(cfg, "invert.max_outer", positive=True, integer=True)
    _num(cfg, "invert.fd_step", positive=True)
    _num(cfg, "invert.resolution", positive=True, integer=True)
    if (not isinstance(i["free_params"], list) or not i["free_params"]
            or any(p not in inv.PARAMS for p in i["free_params"])):
        raise ConfigError("value", "invert.free_params must be a non-empty subset of c, rho, gamma")
    if not isinstance(i["interval_m"], list) or len(i["interval_m"]) != 2:
        raise ConfigError("value", "invert.interval_m must be [A1, A2]")
    if i["truth"]["path"] is not None and i["truth"]["perturbation"] is not None:
        raise ConfigError("value", "invert.truth takes a path or a perturbation, not both")
    s = cfg["scan"]
    _num(cfg, "scan.frequency_mHz", positive=True)
    _num(cfg, "scan.reference_height_m")
    _num(cfg, "scan.n_r", positive=True, integer=True)
    _num(cfg, "scan.ell_max", integer=True)
    _num(cfg, "scan.threshold", positive=True)
    _num(cfg, "scan.pair_height_m", allow_none=True)
    if not isinstance(s["range_m"], list) or len(s["range_m"]) != 2:
        raise ConfigError("value", "scan.range_m must be [lo, hi]")
    if s["reference"] not in ("continued", "coulomb"):
        raise ConfigError("value", "scan.reference must be continued or coulomb")


def _check_paths(cfg, command):
    paths = []
    if cfg["model"]["kind"] == "file":
        paths.append(("model.path", cfg["model"]["path"]))
    if command == "invert":
        if not cfg["invert"]["diagonals"]:
            raise ConfigError("value", "invert.diagonals (input file) is required")
        paths.append(("invert.diagonals", cfg["invert"]["diagonals"]))
        if cfg["invert"]["truth"]["path"]:
            paths.append(("invert.truth.path", cfg["invert"]["truth"]["path"]))
    for key, p in paths:
        if not Path(p).is_file():
            raise OSError(f"{key}: no such file {p}")
    out = Path(cfg["out"])
    if out.exists() and not out.is_dir():
        raise OSError(f"out: {out} exists and is not a directory")


# ---------------------------------------------------------------------------
# model construction

def _atmosphere(cfg):
    a = {k: v for k, v in cfg["atmosphere"].items() if v is not None}
    if cfg["sun"]["radius"] is not None:
        a["R_sun"] = cfg["sun"]["radius"]
    return a


def _apply_perturbation(model, pert):
    if not pert or not any(pert[k] for k in ("dc", "drho", "dgamma")):
        return model
    return perturbed_model(model, dc=pert["dc"], drho=pert["drho"], dgamma=pert["dgamma"],
                           center=pert["center_m"], half_width=pert["half_width_m"])


def _background(cfg):
    m = cfg["model"]
    over = _atmosphere(cfg)
    if m["kind"] == "file":
        model = load_background(m["path"])
        if over:
            atm = Atmosphere(model.c0, model.rho0, model.H, model.h_a, model.R_sun)
            atm = Atmosphere(**{**atm.__dict__, **over})
            model = load_background(m["path"], atm)
        return model
    atm = Atmosphere(**{**REFERENCE_ATMOSPHERE.__dict__, **over})
    return synthetic_background(atm, gamma0=m["gamma0"])


def _model(cfg):
    """Background with the configured perturbation (the data-generating model)."""
    return _apply_perturbation(_background(cfg), cfg["model"]["perturbation"])


def _omegas(values_mHz):
    return 2.0 * math.pi * 1e-3 * np.asarray(values_mHz, float)


def _setup(cfg, N=None):
    o = cfg["observe"]
    return observe.ObservationSetup(o["heights_m"], _omegas(o["frequencies_mHz"]),
                                    int(o["ell_max"]),
                                    int(N if N is not None else o["N_segments"]),
                                    float(o["Pi"]), int(cfg["seed"]))


# ---------------------------------------------------------------------------
# commands

def cmd_forward(cfg, out: Path):
    model = _model(cfg)
    setup = _setup(cfg)
    log.info("forward: %d heights, %d frequencies, ell <= %d", setup.heights.size,
             setup.omegas.size, setup.ell_max)
    diag = observe.exact_diagonals(model, setup, resolution=int(cfg["observe"]["resolution"]))
    r = cfg["recover"]
    table = recover.extract_scattering(diag, model, det_min=r["det_min"],
                                       reference=r["reference"], resolution=r["resolution"])
    observe.save_diagonal(out / "diagonals.csv", diag)
    recover.save_scattering(out / "scattering.csv", table)
    log.info("wrote %s and %s", out / "diagonals.csv", out / "scattering.csv")
    return 0


def cmd_simulate(cfg, out: Path):
    plan = cfg["observe"]["plan"]
    N = None
    if plan["total_s"] is not None:
        N, dnu, numax = observe.segment_plan(plan["total_s"], plan["segment_s"], plan["cadence_s"])
        with open(out / "plan.csv", "w") as fh:
            fh.write("# heliosolve-plan v1\n")
            fh.write("N,delta_nu_hz,nu_max_hz\n")
            fh.write(f"{N},{float(dnu)!r},{float(numax)!r}\n")
        print(f"N={N} delta_nu_hz={dnu:.6g} nu_max_hz={numax:.6g}")
    model = _model(cfg)
    setup = _setup(cfg, N)
    log.info("simulate: N=%d seed=%d", setup.N_segments, setup.seed)
    diag = observe.simulate_power_spectrum(model, setup,
                                           resolution=int(cfg["observe"]["resolution"]))
    observe.save_diagonal(out / "diagonals.csv", diag)
    log.info("wrote %s", out / "diagonals.csv")
    return 0


def _truth(cfg, background):
    t = cfg["invert"]["truth"]
    if t["path"]:
        return load_background(t["path"])
    if t["perturbation"] is not None:
        return _apply_perturbation(background, t["perturbation"])
    return None


def cmd_invert(cfg, out: Path):
    i = cfg["invert"]
    background = _background(cfg)
    truth = _truth(cfg, background)
    diag = observe.load_diagonal(i["diagonals"])
    r = cfg["recover"]
    table = recover.extract_scattering(diag, background, det_min=r["det_min"],
                                       reference=r["reference"], resolution=r["resolution"])
    fcfg = inv.ForwardConfig(tuple(float(v) for v in i["interval_m"]), int(i["n_grid"]),
                             int(diag.ells[-1]), np.asarray(diag.omegas), background,
                             resolution=int(i["resolution"]))
    icfg = inv.IrgnmConfig(alpha0=i["alpha0"], q_factor=float(i["q"]),
                           max_outer=int(i["max_outer"]), tau_discrepancy=float(i["tau"]),
                           fd_step=float(i["fd_step"]), weight_mode=i["weight_mode"],
                           free_params=tuple(i["free_params"]), jacobian=i["jacobian"])
    res = inv.irgnm(table, fcfg, icfg, truth=truth,
                    callback=lambda it, rn, _: log.info("iteration %d residual %.6e", it, rn))
    report = {
        "format": "heliosolve-report v1",
        "free_params": list(i["free_params"]),
        "stopped_by": res.stopped_by,
        "iterations": len(res.history) - 1,
        "residuals": [float(v) for v in res.history],
        "alphas": [float(v) for v in res.alphas],
        "interval_m": [float(v) for v in i["interval_m"]],
        "n_grid": int(i["n_grid"]),
    }
    if res.errors is not None:
        report["errors"] = {k: (None if v is None else float(v)) for k, v in res.errors.items()}
        for k, v in res.errors.items():
            if v is not None:
                print(f"e({k}) = {100 * v:.2f}%")
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    with open(out / "unknowns.csv", "w") as fh:
        fh.write("# heliosolve-unknowns v1\n")
        fh.write("r_m,u1,u2,u3\n")
        for row in zip(res.u.grid, res.u.u1, res.u.u2, res.u.u3):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    save_background(res.model, out / "model.txt")
    recover.save_scattering(out / "scattering.csv", table)
    log.info("stopped by %s after %d iterations", res.stopped_by, len(res.history) - 1)
    return 0


def cmd_singular_scan(cfg, out: Path):
    s = cfg["scan"]
    omega = float(_omegas([s["frequency_mHz"]])[0])
    if cfg["model"]["kind"] == "free":
        R = cfg["sun"]["radius"] or REFERENCE_ATMOSPHERE.R_sun
        model = free_potential(cfg["model"]["free_k"], R_a=R,
                               alpha=cfg["model"]["free_alpha"], R_unit=R)
    else:
        model = _model(cfg)
        R = model.R_sun
    R_o = R + s["reference_height_m"]
    lo, hi = (R + float(v) for v in s["range_m"])
    hits = recover.singular_set_scan(model, omega, R_o, (lo, hi), int(s["ell_max"]),
                                     n_r=int(s["n_r"]), threshold=float(s["threshold"]),
                                     reference=s["reference"])
    recover.save_singular(out / "singular.csv", hits)
    print(f"hits={hits.size}")
    if s["pair_height_m"] is not None:
        r2 = R + float(s["pair_height_m"])
        pair = recover.singular_set_scan(model, omega, R_o, (r2, r2), int(s["ell_max"]),
                                         n_r=1, threshold=math.inf, reference=s["reference"],
                                         exclude_trivial=False)
        v = float(pair["abs_sin"][0])
        print(f"pair ({s['reference_height_m']:g} m, {s['pair_height_m']:g} m): "
              f"min_abs_sin={v:.6g} at ell={int(pair['ell'][0])} "
              f"admissible={'yes' if v >= float(s['threshold']) else 'no'}")
    return 0


def cmd_specfun_probe(args):
    ph = specfun.coulomb_phase(args.ell, args.eta, args.rho)
    h = specfun.coulomb_h(args.ell, args.eta, args.rho)
    print(json.dumps({"ell": args.ell, "eta": args.eta, "rho": args.rho,
                      "F": h.F, "G": h.G, "dF": h.dh_plus.imag, "dG": h.dh_plus.real,
                      "sigma": ph.sigma_l, "theta": ph.theta}))
    return 0


_HANDLERS = {"forward": cmd_forward, "simulate": cmd_simulate, "invert": cmd_invert,
             "singular-scan": cmd_singular_scan}

_ERROR_MODULES = [
    (ConfigError, "cli", EXIT_CONFIG),
    (specfun.CoulombAccuracyError, "specfun", EXIT_NUMERIC),
    (ModelError, "solar-model", EXIT_NUMERIC),
    (radial.RadialError, "radial", EXIT_NUMERIC),
    (MultipoleError, "multipole", EXIT_NUMERIC),
    (observe.ObserveError, "observe", EXIT_NUMERIC),
    (recover.RecoverError, "recover", EXIT_NUMERIC),
    (inv.InversionError, "invert", EXIT_NUMERIC),
]

# input problems rather than numerical failures
_CONFIG_CODES = {"below-cutoff", "heights", "omegas", "ell_max", "N_segments", "Pi",
                 "seed", "plan", "config", "n_grid", "range", "reference"}
_IO_CODES = {"format", "parse", "grid"}


def _classify(exc):
    if isinstance(exc, OSError):
        return "io", "io", EXIT_IO, str(exc)
    for cls, module, status in _ERROR_MODULES:
        if isinstance(exc, cls):
            code = getattr(exc, "code", "error")
            detail = getattr(exc, "detail", str(exc))
            if cls is ConfigError:
                pass
            elif code in _CONFIG_CODES and status == EXIT_NUMERIC:
                status = EXIT_CONFIG
            elif code in _IO_CODES:
                status = EXIT_IO
            return module, code, status, detail
    return None


def _parser():
    p = argparse.ArgumentParser(prog="heliosolve",
                                description="Solar Green's function modelling and interior inversion.")
    p.add_argument("--version", action="version", version=f"heliosolve {__version__}")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--threads", type=int, help="worker count (overrides the config)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--log-level", choices=("debug", "info", "warning", "error"))
    p.add_argument("--dump-config", action="store_true",
                   help="print the effective configuration as JSON and exit")
    sub = p.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}")
    sub.add_parser("forward", help="exact Im G diagonals and scattering table")
    sub.add_parser("simulate", help="chi-square power spectra")
    sub.add_parser("invert", help="IRGNM reconstruction from diagonals")
    sub.add_parser("singular-scan", help="scan for degenerate height pairs")
    probe = sub.add_parser("specfun-probe")
    probe.add_argument("ell", type=int)
    probe.add_argument("eta", type=float)
    probe.add_argument("rho", type=float)
    return p


def _fail(module, code, detail):
    detail = str(detail).replace("\n", " ")
    print(f"E:{module}:{code}:{detail}", file=sys.stderr)


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command is None and not args.dump_config:
        _fail("cli", "usage", "a subcommand is required")
        return EXIT_CONFIG
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "specfun-probe":
            return cmd_specfun_probe(args)
        over = {k: v for k, v in (("seed", args.seed), ("threads", args.threads),
                                  ("out", args.out), ("log_level", args.log_level))
                if v is not None}
        cfg = load_config(args.config, over)
        log.setLevel(cfg["log_level"].upper())
        if args.dump_config:
            json.dump(cfg, sys.stdout, indent=2)
            sys.stdout.write("\n")
            return EXIT_OK
        _check_paths(cfg, args.command)
        if cfg["threads"] > 1:
            log.info("threads=%d requested; cells are evaluated serially", cfg["threads"])
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        return _HANDLERS[args.command](cfg, out)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        info = _classify(exc)
        if info is None:
            raise
        module, code, status, detail = info
        _fail(module, code, detail)
        return status


if __name__ == "__main__":
    sys.exit(main())
