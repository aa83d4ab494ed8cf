"""Command-line interface.

Every command writes a JSON document (or CSV where noted) that embeds the
resolved configuration and a format version. Exit status is 0 on success,
2 on invalid input or configuration and 1 on a numerical failure.
"""
from __future__ import annotations

import argparse
import io
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import __version__
from .extensions import (DegenerateDataError, ExtensionSpec, NonConvergentLimitError,
                         RouteDisagreementError, UnreliableFitError, boundary_residual,
                         cd_constants, closure_membership, decompose_adjoint,
                         deficiency_index, extract_boundary_data)
from .greenop import (build_green_operator, estimate_sd_inverse_norm, green_kernel,
                      p_pm, vinf_norm_sq)
from .homogeneous import CRITICAL_LOW, Coupling, build_fundamental_system
from .radial import RadialGrid, SpinorFunction, apply_dirac, make_grid
from .spectral import eigenvalues_in_gap, shooting_data

FORMAT_VERSION = "1"

__all__ = ["RunConfig", "ConfigError", "run", "main", "dumps", "load_config"]


class ConfigError(ValueError):
    """Malformed configuration file or inconsistent options."""


@dataclass
class RunConfig:
    """Fully resolved options of one invocation."""

    command: str
    options: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"command": self.command, **self.options}


# -- formatting --------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 1, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits; inf/nan as strings,
    complex numbers as [re, im]."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps([obj.real, obj.imag], indent, _level)
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _document(cfg: RunConfig, result) -> dict:
    return {"format_version": FORMAT_VERSION, "dclab_version": __version__,
            "config": cfg.as_dict(), "result": result}


# -- configuration -------------------------------------------------------------

def load_config(path: str) -> dict:
    """Read `key = value` lines; '#' starts a comment. Keys use '_' or '-'."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for k, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{k}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{k}: empty key")
        out[key.replace("-", "_")] = value
    return out


def _real_or_inf(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity", "oo"):
        return math.inf
    try:
        v = float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a real number or inf: {text!r}")
    if math.isnan(v):
        raise argparse.ArgumentTypeError("nan is not allowed")
    return v


def _float_list(text: str) -> list[float]:
    return [_real_or_inf(t) for t in str(text).split(",") if t.strip()]


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--output", "-o", help="write to this path instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="csv for dump-solutions and flow, json otherwise")
    common.add_argument("--kappa", type=int, default=1, choices=(1, -1))
    common.add_argument("--r-min", type=float, default=1e-8)
    common.add_argument("--r-max", type=float, default=40.0)
    common.add_argument("--panels", type=int, default=400)
    common.add_argument("--order", type=int, default=8)
    common.add_argument("--tol", type=float, default=1e-8, help="iteration tolerance")

    p = argparse.ArgumentParser(prog="dclab", description="Critical Dirac-Coulomb toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    s = add("constants", "closed-form constants of the fundamental system")
    s.add_argument("--nu", type=float, required=True)

    s = add("kernel", "Green kernel of S_D^-1 at (r, rho)")
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--rho", type=float, required=True)

    s = add("dump-solutions", "v0 and v_inf sampled on the grid (CSV)")
    s.add_argument("--nu", type=float, required=True)

    s = add("classify", "boundary data and extension membership of a sampled spinor")
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--beta", type=_float_list, required=True, help="comma separated, inf allowed")
    s.add_argument("--input", required=True, help="CSV written by SpinorFunction.to_csv")

    s = add("spectrum", "eigenvalues of S_beta in the gap")
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--beta", type=_real_or_inf, required=True)
    s.add_argument("--emin", type=float, default=-0.999)
    s.add_argument("--emax", type=float, default=0.999)
    s.add_argument("--scan", type=int, default=400)

    s = add("flow", "spectral-flow curve beta(E) (CSV)")
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--points", type=int, default=200)
    s.add_argument("--emin", type=float, default=-0.99)
    s.add_argument("--emax", type=float, default=0.99)

    s = add("sweep", "spectra and gap check over a (nu, beta) product")
    s.add_argument("--nu", type=_float_list, required=True)
    s.add_argument("--beta", type=_float_list, required=True)
    s.add_argument("--emin", type=float, default=-0.999)
    s.add_argument("--emax", type=float, default=0.999)
    s.add_argument("--scan", type=int, default=400)

    s = add("sdinv-norm", "power-iteration estimate of ||S_D^-1||")
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--seed", type=int, default=None)

    add("selftest", "quick invariant suite")

    return p


def _config_path(argv) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _parse(argv) -> RunConfig:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    path = _config_path(argv)
    command = next((t for t in argv if not t.startswith("-")), None)
    subs = parser._subparsers._group_actions[0].choices
    if path and command in subs:
        cfg = load_config(path)
        sub = subs[command]
        dests = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - dests - {"command"})
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.pop("command", None)
        # string defaults are converted by argparse like command-line values
        sub.set_defaults(**cfg)
        for a in sub._actions:
            if a.dest in cfg:
                a.required = False
    args = parser.parse_args(argv)
    opts = {k: v for k, v in vars(args).items() if k != "command"}
    if opts["format"] is None:
        opts["format"] = "csv" if args.command in CSV_COMMANDS else "json"
    elif opts["format"] == "csv" and args.command not in CSV_COMMANDS:
        raise ConfigError(f"{args.command} only writes json")
    return RunConfig(args.command, opts)


# -- helpers -------------------------------------------------------------------

def _critical(nu: float, kappa: int) -> Coupling:
    if not CRITICAL_LOW < abs(nu) < 1.0:
        raise ConfigError(
            f"|nu| = {abs(nu)} is outside the critical regime sqrt(3)/2 < |nu| < 1 "
            "where the kappa = +-1 channels need a boundary condition")
    return Coupling(nu, kappa)


def _grid(o: dict) -> RadialGrid:
    return make_grid(o["r_min"], o["r_max"], o["panels"], o["order"])


def _workers() -> int:
    raw = os.environ.get("DCLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"DCLAB_THREADS must be an integer, got {raw!r}")
    return max(1, n)


@lru_cache(maxsize=8)
def _green(nu: float, kappa: int, grid_key: tuple):
    c = Coupling(nu, kappa)
    G = build_green_operator(c, make_grid(*grid_key))
    return c, G, cd_constants(c, G)


def _grid_key(o: dict) -> tuple:
    return (o["r_min"], o["r_max"], o["panels"], o["order"])


def _report_dict(rep) -> dict:
    return {
        "nu": rep.coupling.nu, "kappa": rep.coupling.kappa, "beta": rep.beta,
        "gap_bound": rep.gap_bound, "sd_inv_norm": rep.sd_inv_norm,
        "scan_points": rep.scan_points, "skipped": rep.skipped,
        "eigenvalues": [{"E": e.E, "residual": e.residual, "g0": list(e.g0),
                         "g1": list(e.g1)} for e in rep.eigenvalues],
    }


# -- commands ------------------------------------------------------------------

def cmd_constants(o):
    c = _critical(o["nu"], o["kappa"])
    F = build_fundamental_system(c)
    G = build_green_operator(c, _grid(o))
    cnu, dnu = cd_constants(c, G)
    return {"B": c.B, "W0_inf": F.w0_inf, "q": list(F.q), "c_inf": list(F.c_inf),
            "vinf_norm_sq": vinf_norm_sq(G), "p": list(p_pm(G)), "c_nu": cnu, "d_nu": dnu}


def cmd_kernel(o):
    c = _critical(o["nu"], o["kappa"])
    if o["r"] <= 0 or o["rho"] <= 0:
        raise ConfigError("r and rho must be positive")
    return {"r": o["r"], "rho": o["rho"], "kernel": green_kernel(c, o["r"], o["rho"]).tolist()}


def cmd_dump_solutions(o):
    c = _critical(o["nu"], o["kappa"])
    F = build_fundamental_system(c)
    grid = _grid(o)
    r = grid.nodes
    v0, vi = F.eval_v0(r), F.eval_v_inf(r)
    cols = {"r": r, "v0_up": v0[0], "v0_lo": v0[1], "vinf_up": vi[0], "vinf_lo": vi[1]}
    return cols


def cmd_classify(o):
    c = _critical(o["nu"], o["kappa"])
    grid = _grid(o)
    try:
        g = SpinorFunction.from_csv(o["input"])
    except (OSError, KeyError) as exc:
        raise ConfigError(f"cannot read {o['input']}: {exc}") from exc
    if not g.grid.same_as(grid):
        grid = g.grid
    _, G, cd = _green(c.nu, c.kappa, (grid.r_min, grid.r_max, grid.panels, grid.order))
    bd = extract_boundary_data(c, g, strict=False)
    out = {"boundary_data": bd.as_dict(), "residuals": []}
    for beta in o["beta"]:
        spec = ExtensionSpec.make(beta, cd)
        try:
            res = boundary_residual(spec, bd)
        except DegenerateDataError:
            res = math.nan
        out["residuals"].append({"beta": beta, "residual": res})
    F = build_fundamental_system(c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        Sg = apply_dirac(c, 0.0, g)
    try:
        dec = decompose_adjoint(c, F, g, Sg)
        cert = closure_membership(dec, o["tol"])
        out["closure"] = {"member": cert.member, "abs_a0": cert.abs_a0,
                          "abs_a_inf": cert.abs_a_inf, "tol": cert.tol,
                          "a0": dec.a0, "a_inf": dec.a_inf}
    except NonConvergentLimitError as exc:
        out["closure"] = {"member": None, "error": str(exc)}
    return out


def cmd_spectrum(o):
    c = Coupling(o["nu"], o["kappa"])
    if not math.isinf(o["beta"]) or c.is_critical:
        c = _critical(o["nu"], o["kappa"])
        _, G, cd = _green(c.nu, c.kappa, _grid_key(o))
    else:
        G, cd = None, (1.0, 0.0)
    spec = ExtensionSpec.make(o["beta"], cd)
    rep = eigenvalues_in_gap(c, spec, (o["emin"], o["emax"]), o["scan"], G=G)
    return _report_dict(rep)


def cmd_flow(o):
    c = _critical(o["nu"], o["kappa"])
    if o["points"] < 2:
        raise ConfigError("--points must be at least 2")
    _, G, (cnu, dnu) = _green(c.nu, c.kappa, _grid_key(o))
    E = np.linspace(o["emin"], o["emax"], o["points"])
    sd = shooting_data(c, E)
    g0, g1 = sd.g0_plus, sd.g1_plus
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(np.abs(g0) <= 1e-14 * (np.abs(g0) + np.abs(g1)), np.inf,
                        (g1 / g0 - dnu) / cnu)
    return {"E": E, "beta": beta}


def _sweep_cell(args):
    nu, beta, kappa, gkey, erange, scan = args
    c = _critical(nu, kappa)
    _, G, cd = _green(nu, kappa, gkey)
    norm = _sd_norm(nu, kappa, gkey)
    rep = eigenvalues_in_gap(c, ExtensionSpec.make(beta, cd), erange, scan, G=G,
                             sd_inv_norm=norm)
    d = _report_dict(rep)
    mins = min((abs(e.E) for e in rep.eigenvalues), default=math.inf)
    d["min_abs_E"] = mins
    d["gap_ok"] = bool(mins >= rep.gap_bound - 1e-6)
    return d


@lru_cache(maxsize=8)
def _sd_norm(nu, kappa, gkey):
    _, G, _ = _green(nu, kappa, gkey)
    return estimate_sd_inverse_norm(G).value


def cmd_sweep(o):
    for nu in o["nu"]:
        _critical(nu, o["kappa"])
    cells = [(nu, beta, o["kappa"], _grid_key(o), (o["emin"], o["emax"]), o["scan"])
             for nu in o["nu"] for beta in o["beta"]]
    n = _workers()
    if n > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(cell) for cell in cells]
    return {"cells": results, "all_gap_ok": all(r["gap_ok"] for r in results)}


def cmd_sdinv_norm(o):
    c = _critical(o["nu"], o["kappa"])
    _, G, _ = _green(c.nu, c.kappa, _grid_key(o))
    kw = {} if o["seed"] is None else {"seed": o["seed"]}
    est = estimate_sd_inverse_norm(G, tol=o["tol"], **kw)
    return {"value": est.value, "iterations": est.iterations,
            "relative_change": est.relative_change, "converged": est.converged,
            "seed": est.seed}


def _check(name, value, limit):
    return {"name": name, "value": float(value), "limit": limit,
            "passed": bool(value <= limit)}


def run_checks() -> list[dict]:
    """Fast invariants: deficiency table, Wronskian constancy, Green residual,
    boundary data of v_inf, a sub-critical Sommerfeld level."""
    from .greenop import apply_sd_inverse
    from .radial import norm
    from .spectral import sommerfeld_energy
    out = []
    table_ok = all(deficiency_index(nu, k) == (1 if abs(k) == 1 and nu > math.sqrt(3) / 2 else 0)
                   for nu in np.round(np.arange(0.1, 1.0, 0.01), 2) for k in (1, -1, 2, -2, 3, -3))
    out.append(_check("deficiency_table_mismatch", 0.0 if table_ok else 1.0, 0.0))
    c = Coupling(0.9, 1)
    F = build_fundamental_system(c)
    w = F.wronskian(np.array([1e-6, 1e-3, 0.3, 2.0, 9.0]))
    out.append(_check("wronskian_rel_dev", np.max(np.abs(w / F.w0_inf - 1)), 1e-8))
    grid = make_grid()
    G = build_green_operator(c, grid)
    g = SpinorFunction.from_callable(grid, lambda r: (r * np.exp(-r), r ** 2 * np.exp(-r / 2)))
    f = apply_sd_inverse(G, g)
    res = apply_dirac(c, 0.0, f) - g
    out.append(_check("green_rel_residual", norm(res) / norm(g), 1e-6))
    bd = extract_boundary_data(c, G.phi)
    out.append(_check("vinf_g0_rel_error", np.max(np.abs(bd.g0.real / F.c_inf - 1)), 1e-3))
    sub = Coupling(-0.5, -1)
    rep = eigenvalues_in_gap(sub, ExtensionSpec.make(math.inf, (1.0, 0.0)), (0.5, 0.97), 60)
    e0 = rep.energies[0] if rep.eigenvalues else math.nan
    err = abs(e0 - sommerfeld_energy(-0.5, 0, -1))
    out.append(_check("sommerfeld_ground_state_error", err if err == err else math.inf, 1e-6))
    return out


def cmd_selftest(o):
    checks = run_checks()
    return {"checks": checks, "passed": all(ch["passed"] for ch in checks)}


COMMANDS = {
    "constants": cmd_constants, "kernel": cmd_kernel, "dump-solutions": cmd_dump_solutions,
    "classify": cmd_classify, "spectrum": cmd_spectrum, "flow": cmd_flow,
    "sweep": cmd_sweep, "sdinv-norm": cmd_sdinv_norm, "selftest": cmd_selftest,
}

CSV_COMMANDS = {"dump-solutions", "flow"}


def _to_csv(cols: dict) -> str:
    buf = io.StringIO()
    keys = list(cols)
    buf.write(",".join(keys) + "\n")
    for row in zip(*(np.asarray(cols[k]).tolist() for k in keys)):
        buf.write(",".join(format(float(x), ".17g") for x in row) + "\n")
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    """Execute one command; returns the process exit status."""
    try:
        cfg = _parse(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2
        return int(exc.code) if exc.code is not None else 0
    except ConfigError as exc:
        print(f"dclab: error: {exc}", file=sys.stderr)
        return 2
    o = cfg.options
    try:
        result = COMMANDS[cfg.command](o)
    except (ConfigError, ValueError, DegenerateDataError, UnreliableFitError) as exc:
        if isinstance(exc, (UnreliableFitError,)):
            print(f"dclab: numerical failure: {exc}", file=sys.stderr)
            return 1
        print(f"dclab: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, NonConvergentLimitError,
            RouteDisagreementError, np.linalg.LinAlgError) as exc:
        print(f"dclab: numerical failure: {exc}", file=sys.stderr)
        return 1
    if o["format"] == "csv":
        head = f"# format_version={FORMAT_VERSION}\n# config " + " ".join(
            f"{k}={v}" for k, v in cfg.as_dict().items()) + "\n"
        _emit(head + _to_csv(result), o["output"])
    else:
        _emit(dumps(_document(cfg, result)) + "\n", o["output"])
    if cfg.command == "selftest" and not result["passed"]:
        return 1
    return 0


def main(argv=None):
    sys.exit(run(argv))
