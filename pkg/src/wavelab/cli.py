"""Command-line front end: ``wavelab <solve|indices|spectrum|sweep|pf> --config FILE``.

A run reads one JSON config, applies flag overrides, writes deterministic
data files to ``--out`` and a separate ``metadata.json`` carrying the
timestamp and timing.  Exit codes: 0 success (degenerate verdicts
included), 2 domain error, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import hashlib
import itertools
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import PowerLaw, finite_part_moments, mass_a_ratio, picard_fuchs
from .errors import WaveLabError
from .indices import classify, cubic_discriminant, nullspace_residuals
from .spectrum import CSV_COLUMNS, projective_cubic, scan, track_branches
from .wave_family import (
    Nonlinearity,
    WaveParams,
    bbm,
    conserved_set,
    gradient_table,
    mbbm,
    ode_return_time,
    sample_profile,
)

log = logging.getLogger("wavelab")

COMMANDS = ("solve", "indices", "spectrum", "sweep", "pf")
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    nonlinearity: object = "mbbm"               # "mbbm", "bbm" or {"p": .., "convention": ..}
    params: dict = field(default_factory=lambda: {"a": 0.0, "E": -0.05, "c": 2.0, "branch_hint": 1.0})
    n_profile: int = 64
    kappa_max: float = 1e-2
    n_kappa: int = 9
    scan_region: list = field(default_factory=lambda: [0.0, 0.0, -2.0, 2.0])
    scan_grid: list = field(default_factory=lambda: [1, 50])
    scan_tol: float = 1e-3
    sweep: dict = field(default_factory=dict)   # {"a": [..], "E": [..], "c": [..], "branch_hint": [..]}
    pf_E: list = field(default_factory=lambda: [0.02, 0.05, 0.1])
    pf_c: list = field(default_factory=lambda: [1.5, 2.0, 3.0])
    sign_at_infinity: bool = True
    nullspace: bool = True
    out: str = "out"
    format: str = "json"
    jobs: int = 1

    def validate(self):
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")
        if self.scan_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.n_profile < 2 or self.n_kappa < 2 or any(g < 1 for g in self.scan_grid):
            raise ValueError("profile and kappa grid counts must be >= 2, scan counts >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        for key in ("a", "E", "c"):
            if key not in self.params:
                raise ValueError(f"params.{key} missing")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def wave(self) -> WaveParams:
        p = self.params
        return WaveParams(float(p["a"]), float(p["E"]), float(p["c"]), float(p.get("branch_hint", 0.0)))

    def nl(self) -> Nonlinearity:
        return make_nonlinearity(self.nonlinearity)


def make_nonlinearity(desc) -> Nonlinearity:
    if desc == "mbbm":
        return mbbm()
    if desc == "bbm":
        return bbm()
    if isinstance(desc, dict):
        return PowerLaw(float(desc["p"]), desc.get("convention", "plain")).nonlinearity()
    raise ValueError(f"unknown nonlinearity {desc!r}")


def load_config(args) -> RunConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    cfg = RunConfig.from_dict(data)
    for name in ("out", "format", "jobs"):
        val = getattr(args, name)
        if val is not None:
            setattr(cfg, name, val)
    params = dict(cfg.params)
    for name in ("a", "E", "c", "branch_hint"):
        val = getattr(args, name)
        if val is not None:
            params[name] = val
    cfg.params = params
    return cfg.validate()


# --------------------------------------------------------------------------
# serialisation


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, complex):
        return [_clean(x.real), _clean(x.imag)]
    return x


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def write_json(path: Path, obj):
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_table(out: Path, stem: str, cfg: RunConfig, record: dict):
    """One flat record as <stem>.json or a one-row <stem>.csv."""
    if cfg.format == "json":
        write_json(out / f"{stem}.json", record)
    else:
        flat = _flatten(_clean(record))
        keys = sorted(flat)
        write_csv(out / f"{stem}.csv", keys, [[flat[k] for k in keys]])


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


# --------------------------------------------------------------------------
# commands


def _params_dict(p: WaveParams) -> dict:
    return {"a": p.a, "E": p.E, "c": p.c, "branch_hint": p.branch_hint}


def solve_record(params: WaveParams, nl: Nonlinearity, n: int):
    cs = conserved_set(params, nl)
    table = gradient_table(params, nl)
    prof = sample_profile(params, nl, n, cs=cs)
    names = ("a", "E", "c")
    grad = {f"{g}_{x}": float(table.values[i, j]) for i, g in enumerate("TMP") for j, x in enumerate(names)}
    rec = {
        "params": _params_dict(params),
        "nonlinearity": nl.label,
        "T": cs.T, "M": cs.M, "P": cs.P, "K": cs.K,
        "err": dict(cs.err),
        "u_minus": cs.turning.u_minus, "u_plus": cs.turning.u_plus,
        "gradient": grad,
        "identity_residuals": table.relative_residuals(),
        "residual_T_a_M_E": abs(table.T_a - table.M_E),
        "period_ode": ode_return_time(params, nl, cs),
        "closure": prof.closure,
    }
    return rec, prof


def cmd_solve(cfg: RunConfig, out: Path):
    rec, prof = solve_record(cfg.wave(), cfg.nl(), cfg.n_profile)
    if cfg.format == "json":
        rec["profile"] = {"x": prof.x, "u": prof.u, "ux": prof.ux}
        write_json(out / "solve.json", rec)
    else:
        write_csv(out / "profile.csv", ("x", "u", "ux"), prof.rows())
        write_table(out, "solve", cfg, rec)


def indices_record(params: WaveParams, nl: Nonlinearity, with_sign: bool = True, with_nullspace: bool = True) -> dict:
    table = gradient_table(params, nl)
    rep = classify(params, nl, with_sign_at_infinity=with_sign, table=table)
    rec = {"params": _params_dict(params), "nonlinearity": nl.label}
    rec.update(rep.to_dict())
    if with_nullspace:
        rec["nullspace_residuals"] = nullspace_residuals(params, nl, table=table).relative()
    return rec


def cmd_indices(cfg: RunConfig, out: Path):
    rec = indices_record(cfg.wave(), cfg.nl(), cfg.sign_at_infinity, cfg.nullspace)
    write_table(out, "indices", cfg, rec)


def cmd_spectrum(cfg: RunConfig, out: Path):
    params, nl = cfg.wave(), cfg.nl()
    summary = {"params": _params_dict(params), "nonlinearity": nl.label}
    cubic = projective_cubic(params, nl)
    branches = track_branches(params, nl, cfg.kappa_max, cfg.n_kappa, cubic=cubic)
    summary["projective_roots"] = [[complex(y).real, complex(y).imag] for y in cubic.roots]
    delta = cubic_discriminant(cubic.coeffs)
    summary["delta"] = delta
    off_axis = []
    slopes = []
    for j, b in enumerate(branches):
        write_csv(out / f"branch_{j}.csv", CSV_COLUMNS, b.rows())
        scale = float(np.max(np.abs(b.mus))) if b.mus.size else 1.0
        off = b.max_abs_real > 1e-7 * max(scale, 1e-300) and b.max_abs_real > 1e-12
        off_axis.append(bool(off))
        i = int(np.argmin(np.abs(np.log(b.kappas / 1e-3)))) if b.kappas.size else -1
        slopes.append({
            "kappa": float(b.kappas[i]) if i >= 0 else None,
            "arg_mu": float(np.angle(b.mus[i])) if i >= 0 else None,
            "arg_pred": float(np.angle(-1j * b.y_seed)),
            "collision": b.collision,
        })
    summary["branch_off_axis"] = off_axis
    summary["branch_slopes"] = slopes
    n_real = cubic.n_real
    pattern_roots = "all_real" if n_real == 3 else "one_real_pair"
    pattern_branches = "on_axis" if not any(off_axis) else ("two_off_axis" if sum(off_axis) == 2 else "other")
    sign_ok = (delta > 0) == (n_real == 3)
    branch_ok = (n_real == 3) == (not any(off_axis))
    summary["roots_pattern"] = pattern_roots
    summary["branches_pattern"] = pattern_branches
    summary["three_way_agreement"] = bool(sign_ok and branch_ok)
    summary["collisions"] = [b.collision for b in branches if b.collision is not None]
    pts = scan(params, nl, tuple(cfg.scan_region), tuple(cfg.scan_grid), tol=cfg.scan_tol)
    write_csv(out / "scan.csv", CSV_COLUMNS, [p.row() for p in pts])
    summary["scan_points"] = len(pts)
    write_table(out, "spectrum", cfg, summary)


def _sweep_point(args):
    params, nl_spec, with_sign, with_nullspace = args
    try:
        return indices_record(params, make_nonlinearity(nl_spec), with_sign, with_nullspace)
    except WaveLabError as exc:
        return {"params": _params_dict(params), "error": exc.kind, "message": str(exc)}


SWEEP_COLUMNS = ("a", "E", "c", "branch_hint", "error", "T", "T_E", "M_a", "P_c", "jac3", "jac_TM_aE", "tr_m2",
                 "delta", "orientation_unstable", "orbital_stable_sufficient", "modulational",
                 "sign_at_infinity", "residual_d3", "residual_eval_index_gradient")


def sweep_points(cfg: RunConfig) -> list:
    base = cfg.params
    axes = {k: cfg.sweep.get(k, [base.get(k, 0.0)]) for k in ("a", "E", "c", "branch_hint")}
    return [WaveParams(float(a), float(E), float(c), float(h))
            for a, E, c, h in itertools.product(axes["a"], axes["E"], axes["c"], axes["branch_hint"])]


def _map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_sweep(cfg: RunConfig, out: Path):
    pts = sweep_points(cfg)
    log.info("sweep over %d points with %d worker(s)", len(pts), cfg.jobs)
    recs = _map(_sweep_point, [(p, cfg.nonlinearity, cfg.sign_at_infinity, cfg.nullspace) for p in pts], cfg.jobs)
    if cfg.format == "json":
        write_json(out / "sweep.json", {"points": recs})
        return
    rows = []
    for r in recs:
        flat = dict(r["params"])
        flat.update({k: v for k, v in r.items() if k != "params"})
        rows.append([flat.get(k, "") for k in SWEEP_COLUMNS])
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)


PF_COLUMNS = ("E", "c", "error", "I0", "I1", "I2", "I3", "I4", "I5", "I6", "cond", "M_a", "T_E",
              "I2_finite_part", "I2_rel_diff", "mass_a_ratio")


def _pf_point(args):
    E, c = args
    try:
        sol = picard_fuchs(E, c)
        fp = finite_part_moments(WaveParams(0.0, E, c, 0.0), mbbm())
        row = {"E": E, "c": c, "error": ""}
        row.update({f"I{k}": float(sol.I[k]) for k in range(7)})
        row.update(cond=sol.cond, M_a=sol.M_a, T_E=sol.T_E, I2_finite_part=float(fp[2]),
                   I2_rel_diff=float(abs(sol.I[2] - fp[2]) / abs(fp[2])), mass_a_ratio=mass_a_ratio(E, c, sol))
        return row
    except WaveLabError as exc:
        return {"E": E, "c": c, "error": exc.kind}


def cmd_pf(cfg: RunConfig, out: Path):
    grid = [(float(E), float(c)) for E in cfg.pf_E for c in cfg.pf_c]
    rows = _map(_pf_point, grid, cfg.jobs)
    if cfg.format == "json":
        write_json(out / "pf.json", {"rows": rows})
    else:
        write_csv(out / "pf.csv", PF_COLUMNS, [[r.get(k, "") for k in PF_COLUMNS] for r in rows])


DISPATCH = {"solve": cmd_solve, "indices": cmd_indices, "spectrum": cmd_spectrum, "sweep": cmd_sweep, "pf": cmd_pf}


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavelab", description="Periodic gBBM waves and their stability indices.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--jobs", type=int, help="worker processes for sweeps and grids")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--a", type=float, dest="a")
    ap.add_argument("--E", type=float, dest="E")
    ap.add_argument("--c", type=float, dest="c")
    ap.add_argument("--branch-hint", type=float, dest="branch_hint")
    return ap


def _setup_logging():
    level = LOG_LEVELS.get(os.environ.get("WAVELAB_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _error(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}, sort_keys=True))
    return code


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (OSError, ValueError, TypeError) as exc:
        return _error("ConfigError", str(exc), 2)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    started = _dt.datetime.now(_dt.timezone.utc)
    t0 = time.perf_counter()
    log.info("running %s", args.command)
    try:
        DISPATCH[args.command](cfg, out)
        status, code = "ok", 0
    except WaveLabError as exc:
        log.error("%s: %s", exc.kind, exc)
        status, code = exc.kind, exc.exit_code
        write_json(out / "error.json", {"error": exc.kind, "message": str(exc), "exit_code": code})
        _error(exc.kind, str(exc), code)
    cfg_blob = json.dumps(_clean(dataclasses.asdict(cfg)), sort_keys=True)
    write_json(out / "metadata.json", {
        "command": args.command,
        "status": status,
        "version": __version__,
        "started_utc": started.isoformat(),
        "elapsed_s": time.perf_counter() - t0,
        "config_sha256": hashlib.sha256(cfg_blob.encode()).hexdigest(),
        "config": json.loads(cfg_blob),
    })
    return code


if __name__ == "__main__":
    sys.exit(main())
