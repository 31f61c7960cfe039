"""Batch front-end: config in, CSV/JSON artifacts out.

    hornlab <command> --config cfg.json [--out DIR] [--set key.path=value ...]

Commands: modes, eigs, freq-elliptic, freq-parabolic, heat, analyticity,
demo-counterexample.  The configuration is a single JSON document; --set
overrides individual leaves (values parsed as JSON, falling back to
strings).  Outputs are deterministic: repeated runs with the same
configuration produce bit-identical files.

A run manifest (config echo, versions, wall time, status and the failure
stage if any) is always written, even when the run fails.  Exit codes:
0 ok, 2 config error, 3 numerical failure, 4 bound-check failure.
"""

import argparse
import copy
import json
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .artifacts import write_csv, write_json
from .elliptic import (check_I_lower, check_logI_identity, check_U_growth,
                       constant_state, elliptic_scan, profile_state)
from .errors import ConfigError, HornError
from .geometry import HornParams
from .heat import (analyticity_probe, caloric_decay_check,
                   dirichlet_eigenvalues, make_caloric_series,
                   time_derivative, weyl_check)
from .modes import decay_exponent_fit, profile_from_k2
from .parabolic import (UnitCaloric, check_D_lower, check_ID_relation,
                        check_N_bound, parabolic_scan)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_BOUNDS = 4

DEFAULT_CONFIG = {
    "params": {"n": 3, "N": 4.0, "eps": 0.5, "eta": 0.25},
    "tolerances": {"ode": 1e-10, "quad": 1e-8, "root": 1e-10},
    "mode": {"i": 1, "mu": 1.0, "r_min": 0.02, "n_grid": 64},
    "eigs": {"i": 1, "r_out": 2.0, "count": 4},
    "freq": {"lo": 0.04, "hi": 0.13, "points": 64, "spacing": "log",
             "R_lo": 0.02, "R_hi": 0.2, "R_points": 12},
    "heat": {"coeffs": [1.0, 0.7, 0.5, 0.35], "t_list": [0.25, 0.5, 1.0],
             "r_lo": 0.02, "r_hi": 0.12, "points": 40},
    "analyticity": {"r0": 0.8, "t0": 0.5, "kmax": 16},
    "output": None,
}

# thresholds applied by demo-counterexample when deciding exit code 4
DEMO_THRESHOLDS = {
    "decay_slope_max": 0.0,
    "decay_resid_frac_max": 0.10,
    "logI_defect_max": 1e-3,
    "ID_defect_max": 1e-4,
    "U_growth_defect_max": 1e-8,
    "N_growth_defect_max": 1e-8,
    "lower_fit_slope_min": -1e-9,
}


def _deep_update(base, other):
    for k, v in other.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = v
    return base


def _apply_set(cfg, assignment):
    if "=" not in assignment:
        raise ConfigError(f"--set expects key.path=value, got '{assignment}'")
    path, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    keys = path.split(".")
    for key in keys[:-1]:
        if key not in node or not isinstance(node[key], dict):
            node[key] = {}
        node = node[key]
    node[keys[-1]] = value


def load_config(path=None, overrides=()):
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        _deep_update(cfg, user)
    for assignment in overrides:
        _apply_set(cfg, assignment)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg):
    tol = cfg.get("tolerances", {})
    for key in ("ode", "quad", "root"):
        if not (isinstance(tol.get(key), (int, float)) and tol[key] > 0):
            raise ConfigError(f"tolerances.{key} must be positive")
    fr = cfg.get("freq", {})
    for lo_k, hi_k, n_k in (("lo", "hi", "points"), ("R_lo", "R_hi", "R_points")):
        if not fr.get(lo_k, 1) < fr.get(hi_k, 2):
            raise ConfigError(f"freq.{lo_k} must be below freq.{hi_k}")
        if not int(fr.get(n_k, 2)) >= 2:
            raise ConfigError(f"freq.{n_k} must be >= 2")
    if fr.get("spacing", "log") not in ("log", "linear"):
        raise ConfigError("freq.spacing must be 'log' or 'linear'")
    heat = cfg.get("heat", {})
    if not heat.get("t_list"):
        raise ConfigError("heat.t_list must be a non-empty list")
    if any(not t > 0 for t in heat["t_list"]):
        raise ConfigError("heat.t_list entries must be positive")
    if not heat.get("r_lo", 1) < heat.get("r_hi", 2):
        raise ConfigError("heat.r_lo must be below heat.r_hi")
    try:
        params_from_config(cfg)
    except HornError as exc:
        raise ConfigError(f"invalid params block: {exc}") from exc


def params_from_config(cfg):
    return HornParams.from_json(cfg["params"])


def _grid(lo, hi, points, spacing):
    if spacing == "log":
        return np.geomspace(lo, hi, int(points))
    return np.linspace(lo, hi, int(points))


def _worker_count():
    raw = os.environ.get("HORNLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _pmap(fn, items):
    workers = _worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def _mode_profile(cfg, p):
    m = cfg["mode"]
    return profile_from_k2(p, int(m["i"]), float(m["mu"]), float(m["r_min"]),
                           n_grid=int(m["n_grid"]),
                           tol=min(cfg["tolerances"]["ode"], 1e-11))


def _elliptic_state(cfg, p):
    m = cfg["mode"]
    if int(m["i"]) == 0 and float(m["mu"]) == 0.0:
        fr = cfg["freq"]
        return constant_state(p, (fr["lo"] * 0.5, fr["hi"] * 2.0))
    return profile_state(_mode_profile(cfg, p))


def _run_modes(cfg, p, out, artifacts):
    prof = _mode_profile(cfg, p)
    path = os.path.join(out, "modes.csv")
    prof.to_csv(path)
    artifacts.append(path)
    fit = decay_exponent_fit(prof)
    rng = float(prof.log_mag.max() - prof.log_mag.min())
    return {
        "decay_fit": {"slope": fit.slope, "intercept": fit.intercept,
                      "residual": fit.max_residual,
                      "residual_fraction": fit.max_residual / rng if rng else 0.0},
        "grid_points": int(prof.s_grid.size),
        "r_range": [prof.r_min, prof.r_max],
    }


def _run_freq_elliptic(cfg, p, out, artifacts):
    state = _elliptic_state(cfg, p)
    fr = cfg["freq"]
    grid = _grid(fr["lo"], fr["hi"], fr["points"], fr["spacing"])
    quad_tol = min(cfg["tolerances"]["quad"], 1e-9)
    scan = elliptic_scan(state, grid, tol=quad_tol)
    path = os.path.join(out, "freq_elliptic.csv")
    scan.to_csv(path)
    artifacts.append(path)
    defect = check_logI_identity(state, scan)
    growth_defect, U_C = check_U_growth(state, scan)
    fit = check_I_lower(state, scan)
    report = {
        "identity_defect": defect,
        "U_growth_defect": growth_defect,
        "U_C": U_C,
        "I_fit": {"slope": fit.slope, "intercept": fit.intercept,
                  "residual": fit.max_residual},
    }
    rpath = os.path.join(out, "freq_elliptic_report.json")
    write_json(rpath, report)
    artifacts.append(rpath)
    return report


def _parabolic_state(cfg, p, out, artifacts):
    # the backward-slice identities need either the unit caloric function
    # or states with a genuine cap condition, so i >= 1 runs go through the
    # Dirichlet series rather than a bare profile window
    m = cfg["mode"]
    if int(m["i"]) == 0 and float(m["mu"]) == 0.0:
        return UnitCaloric(p)
    if int(m["i"]) == 0:
        raise ConfigError(
            "freq-parabolic supports the unit caloric state (i=0, mu=0) or "
            "Dirichlet series with i >= 1")
    _, pairs = _run_eigs(cfg, p, out, artifacts)
    return _series_from_config(cfg, p, pairs)


def _run_freq_parabolic(cfg, p, out, artifacts, state=None):
    fr = cfg["freq"]
    grid = _grid(fr["R_lo"], fr["R_hi"], fr["R_points"], fr["spacing"])
    if state is None:
        state = _parabolic_state(cfg, p, out, artifacts)
    scan = parabolic_scan(state, grid, tol=min(cfg["tolerances"]["quad"], 1e-11))
    path = os.path.join(out, "freq_parabolic.csv")
    scan.to_csv(path)
    artifacts.append(path)
    R_ref = float(np.sqrt(grid[0] * grid[-1]))
    defect = check_ID_relation(state, R_ref, 1e-3 * R_ref,
                               tol=min(cfg["tolerances"]["quad"], 1e-12))
    n_defect, N_C = check_N_bound(state, grid, scan=scan)
    fit = check_D_lower(state, grid, scan=scan)
    report = {
        "ID_defect": defect,
        "ID_reference_scale": R_ref,
        "N_growth_defect": n_defect,
        "N_C": N_C,
        "D_fit": {"slope": fit.slope, "intercept": fit.intercept,
                  "residual": fit.max_residual},
    }
    rpath = os.path.join(out, "freq_parabolic_report.json")
    write_json(rpath, report)
    artifacts.append(rpath)
    return report


def _run_eigs(cfg, p, out, artifacts):
    e = cfg["eigs"]
    pairs = dirichlet_eigenvalues(p, int(e["i"]), float(e["r_out"]),
                                  int(e["count"]),
                                  tol=min(cfg["tolerances"]["ode"], 1e-12),
                                  root_rel=min(cfg["tolerances"]["root"], 1e-10))
    path = os.path.join(out, "eigs.csv")
    write_csv(path, ["j", "nu", "zeros", "norm_defect"],
              [(j + 1, q.nu, q.zeros, q.norm_defect)
               for j, q in enumerate(pairs)])
    artifacts.append(path)
    report = {"eigenvalues": [q.nu for q in pairs],
              "zeros": [q.zeros for q in pairs]}
    if len(pairs) >= 8:
        C1, C2 = weyl_check(pairs, p)
        report["weyl"] = {"C1": C1, "C2": C2}
    return report, pairs


def _series_from_config(cfg, p, pairs):
    coeffs = list(cfg["heat"]["coeffs"])[:len(pairs)]
    if len(coeffs) < len(pairs):
        coeffs = coeffs + [0.0] * (len(pairs) - len(coeffs))
    t_min = min(cfg["heat"]["t_list"])
    return make_caloric_series(pairs, coeffs, t_min)


def _run_heat(cfg, p, out, artifacts, pairs=None):
    if pairs is None:
        _, pairs = _run_eigs(cfg, p, out, artifacts)
    series = _series_from_config(cfg, p, pairs)
    h = cfg["heat"]
    r_grid = np.geomspace(float(h["r_lo"]), float(h["r_hi"]), int(h["points"]))
    rows = []
    slopes = {}
    for t in h["t_list"]:
        sF, lF, _, _ = series.slice_log(r_grid, float(t))
        rows.extend((float(r), float(t), int(s), float(L))
                    for r, s, L in zip(r_grid, sF, lF))
        fit = caloric_decay_check(series, r_grid, float(t))
        slopes[str(t)] = {"slope": fit.slope, "residual": fit.max_residual}
    path = os.path.join(out, "heat.csv")
    write_csv(path, ["r", "t", "sign", "log_mag"], rows)
    artifacts.append(path)
    return {"decay_by_t": slopes,
            "tail_certificate": series.tail_certificate,
            "truncation": series.truncation}, series


def _run_analyticity(cfg, p, out, artifacts, series=None):
    if series is None:
        _, pairs = _run_eigs(cfg, p, out, artifacts)
        series = _series_from_config(cfg, p, pairs)
    a = cfg["analyticity"]
    r0, t0, kmax = float(a["r0"]), float(a["t0"]), int(a["kmax"])
    radius = analyticity_probe(series, r0, t0, kmax)
    from .numerics import lgamma_real
    coeffs = []
    for k in range(kmax + 1):
        s, L = time_derivative(series, k, r0, t0)
        coeffs.append(None if s == 0 else float(L - lgamma_real(k + 1.0)))
    report = {"t0": t0, "r0": r0, "kmax": kmax,
              "fitted_radius": radius, "coefficients": coeffs}
    rpath = os.path.join(out, "analyticity.json")
    write_json(rpath, report)
    artifacts.append(rpath)
    return report


def _run_demo(cfg, p, out, artifacts):
    """eigs -> caloric series -> tip-decay check -> both frequency scans.

    One summary report; a threshold miss flips the exit code to 4.
    """
    eig_report, pairs = _run_eigs(cfg, p, out, artifacts)
    heat_report, series = _run_heat(cfg, p, out, artifacts, pairs=pairs)
    ell_report = _run_freq_elliptic(cfg, p, out, artifacts)
    par_report = _run_freq_parabolic(cfg, p, out, artifacts, state=series)
    ana_report = _run_analyticity(cfg, p, out, artifacts, series=series)

    th = DEMO_THRESHOLDS
    slopes = [v["slope"] for v in heat_report["decay_by_t"].values()]
    checks = {
        "caloric_decay_negative": all(s < th["decay_slope_max"] for s in slopes),
        "logI_identity": ell_report["identity_defect"] <= th["logI_defect_max"],
        "U_growth": ell_report["U_growth_defect"] <= th["U_growth_defect_max"],
        "I_lower_slope": ell_report["I_fit"]["slope"] >= th["lower_fit_slope_min"],
        "ID_relation": par_report["ID_defect"] <= th["ID_defect_max"],
        "N_growth": par_report["N_growth_defect"] <= th["N_growth_defect_max"],
        "D_lower_slope": par_report["D_fit"]["slope"] >= th["lower_fit_slope_min"],
        "analyticity_radius_positive": ana_report["fitted_radius"] > 0,
    }
    summary = {
        "eigs": eig_report,
        "heat": heat_report,
        "freq_elliptic": ell_report,
        "freq_parabolic": par_report,
        "analyticity": {k: ana_report[k] for k in
                        ("t0", "r0", "kmax", "fitted_radius")},
        "decay_slope": slopes[0] if slopes else None,
        "checks": checks,
        "all_bounds_hold": all(checks.values()),
    }
    spath = os.path.join(out, "summary.json")
    write_json(spath, summary)
    artifacts.append(spath)
    return summary


COMMANDS = {
    "modes": lambda cfg, p, out, art: _run_modes(cfg, p, out, art),
    "eigs": lambda cfg, p, out, art: _run_eigs(cfg, p, out, art)[0],
    "freq-elliptic": lambda cfg, p, out, art: _run_freq_elliptic(cfg, p, out, art),
    "freq-parabolic": lambda cfg, p, out, art: _run_freq_parabolic(cfg, p, out, art),
    "heat": lambda cfg, p, out, art: _run_heat(cfg, p, out, art)[0],
    "analyticity": lambda cfg, p, out, art: _run_analyticity(cfg, p, out, art),
    "demo-counterexample": lambda cfg, p, out, art: _run_demo(cfg, p, out, art),
}


def run(config, command, out_dir=None):
    """Execute one pipeline; returns (exit_code, manifest dict).

    The manifest is written to <out>/manifest.json in every case, with the
    failing stage named on errors.
    """
    t_start = time.monotonic()
    out = out_dir or config.get("output") or "."
    os.makedirs(out, exist_ok=True)
    manifest = {
        "command": command,
        "config": config,
        "versions": {
            "hornlab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "status": "error",
        "stage": "setup",
        "artifacts": [],
    }
    try:
        import scipy
        manifest["versions"]["scipy"] = scipy.__version__
    except Exception:  # pragma: no cover
        pass
    code = EXIT_NUMERICAL
    try:
        if command not in COMMANDS:
            raise ConfigError(f"unknown command '{command}'")
        p = params_from_config(config)
        manifest["stage"] = command
        result = COMMANDS[command](config, p, out, manifest["artifacts"])
        manifest["result"] = result
        manifest["status"] = "ok"
        manifest["stage"] = "done"
        code = EXIT_OK
        if command == "demo-counterexample" and not result["all_bounds_hold"]:
            manifest["status"] = "bound-check-failure"
            code = EXIT_BOUNDS
    except ConfigError as exc:
        manifest["error"] = str(exc)
        code = EXIT_CONFIG
    except HornError as exc:
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_NUMERICAL
    finally:
        manifest["wall_time_s"] = time.monotonic() - t_start
        write_json(os.path.join(out, "manifest.json"), manifest)
    return code, manifest


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hornlab",
        description="Tip-spectral-geometry scans on weighted metric horns")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config leaf")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, manifest = run(cfg, args.command, args.out)
    if manifest.get("error"):
        print(f"{manifest['status']}: {manifest['error']}", file=sys.stderr)
    else:
        print(f"{args.command}: {manifest['status']} "
              f"({manifest['wall_time_s']:.2f}s)")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
