"""Command-line front end: ``garouter {spectrum,map,verify,period}``.

Every subcommand accepts ``--config FILE``: a flat ``key = value`` text file
whose keys are the long flag names (``e-min = -2``; ``#`` starts a comment).
Flags given on the command line win over the file.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical tolerance
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import Axis, SweepSpec, estimate_period_numeric, run_sweep
from .errors import (
    AtResolventPole,
    GARouterError,
    InsufficientResolution,
    PoleAtThirdState,
    SingularSystem,
    ValidationError,
)
from .model import ModelParams, validate
from .oracle import compare_with_closed_form
from .scattering import REDUCTIONS, scatter

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3

PROB_COLUMNS = ("R_A", "T_A", "T_B_back", "T_B_fwd")


class ConfigError(Exception):
    pass


# --- formatting ----------------------------------------------------------------


def fmt(value) -> str:
    """Locale-independent 17-significant-digit float; tiny values become 0."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if abs(value) < 1e-300:
        return "0"
    return f"{value:.17g}"


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _sidecar_path(args):
    if args.meta:
        return args.meta
    if args.out in (None, "-"):
        return None
    return str(Path(args.out).with_suffix(".meta.json"))


def _write_sidecar(args, extra):
    path = _sidecar_path(args)
    if path is None:
        return
    meta = {"tool": "garouter", "version": __version__, "config": _resolved(args)}
    meta.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_json_safe(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolved(args):
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


# --- configuration ---------------------------------------------------------------


def read_config(path):
    """Parse a flat ``key = value`` file into ``{dest_name: string}``."""
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def _add_model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--omega0", type=float, default=0.0, help="waveguide cavity frequency")
    g.add_argument("--xi", type=float, default=1.0, help="waveguide hopping")
    g.add_argument("--omega-e", type=float, default=0.0, help="atom excited-state frequency")
    g.add_argument("--omega-s", type=float, default=0.0, help="rotating-frame third-state frequency")
    g.add_argument("--omega-big", type=float, default=0.0, help="control-field Rabi frequency")
    g.add_argument("--j", type=float, default=0.01, help="atom-atom hopping")
    g.add_argument("--g", type=float, default=1.5, help="atom-waveguide coupling")
    g.add_argument("--n", type=int, default=8, help="second coupling site")
    g.add_argument("--m", type=int, default=None, help="number of atoms (default: n)")


def _add_io_flags(p):
    p.add_argument("--config", help="flat key = value file; flags win")
    p.add_argument("--out", default="-", help="output path (default stdout)")
    p.add_argument("--meta", default=None, help="JSON metadata sidecar path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_solver_flags(p, reduction="microscopic"):
    p.add_argument("--solver", choices=("closed-form", "oracle", "both"), default="closed-form")
    p.add_argument("--reduction", choices=REDUCTIONS, default=reduction)
    p.add_argument("--tol", type=float, default=1e-8, help="solver deviation tolerance")
    p.add_argument("--workers", type=int, default=None, help="worker processes")


def _params(args) -> ModelParams:
    return ModelParams(
        omega_0=args.omega0,
        xi=args.xi,
        omega_e=args.omega_e,
        omega_s_prime=args.omega_s,
        omega_big=args.omega_big,
        j_coupling=args.j,
        g=args.g,
        n_sites=args.n,
        m_atoms=args.n if args.m is None else args.m,
    )


def _values(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _axis(name, lo, hi, steps, values):
    try:
        if values:
            return Axis(name, tuple(_values(values)))
        return Axis.linspace(name, lo, hi, steps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_parser():
    parser = argparse.ArgumentParser(
        prog="garouter", description="Single-photon routing through an atom array."
    )
    parser.add_argument("--version", action="version", version=f"garouter {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="1D energy sweep")
    _add_model_flags(sp)
    _add_io_flags(sp)
    _add_solver_flags(sp)
    sp.add_argument("--e-min", type=float, default=-2.0)
    sp.add_argument("--e-max", type=float, default=2.0)
    sp.add_argument("--steps", type=int, default=401)
    sp.add_argument("--fixed-k", type=float, default=None, help="pin incident k (diagnostic)")
    sp.set_defaults(func=cmd_spectrum)

    mp = sub.add_parser("map", help="2D sweep, long-format output")
    _add_model_flags(mp)
    _add_io_flags(mp)
    _add_solver_flags(mp)
    for ax, default in (("axis1", "E"), ("axis2", "N")):
        mp.add_argument(f"--{ax}", choices=("E", "N", "J", "Omega", "g"), default=default)
        mp.add_argument(f"--{ax}-min", type=float, default=-2.0 if ax == "axis1" else 2)
        mp.add_argument(f"--{ax}-max", type=float, default=2.0 if ax == "axis1" else 20)
        mp.add_argument(f"--{ax}-steps", type=int, default=201 if ax == "axis1" else 19)
        mp.add_argument(f"--{ax}-values", default=None, help="comma list; overrides min/max/steps")
    mp.add_argument("--energy", type=float, default=0.0, help="energy when E is not an axis")
    mp.add_argument("--fixed-k", type=float, default=None)
    mp.set_defaults(func=cmd_map)

    vp = sub.add_parser("verify", help="closed form vs direct solve on random draws")
    _add_io_flags(vp)
    vp.add_argument("--draws", type=int, default=1000)
    vp.add_argument("--seed", type=int, default=42)
    vp.add_argument("--tol", type=float, default=1e-8)
    vp.add_argument("--reduction", choices=REDUCTIONS, default="microscopic")
    vp.add_argument("--n-max", type=int, default=12)
    vp.add_argument("--j-max", type=float, default=0.5)
    vp.add_argument("--g-max", type=float, default=3.0)
    vp.add_argument("--omega-big-max", type=float, default=1.0)
    vp.set_defaults(func=cmd_verify)

    pp = sub.add_parser("period", help="interference period of a fixed-k spectrum")
    _add_model_flags(pp)
    _add_io_flags(pp)
    pp.add_argument("--reduction", choices=REDUCTIONS, default="renormalized")
    pp.add_argument("--fixed-k", type=float, default=math.pi / 2)
    pp.add_argument("--e-min", type=float, default=-2.0)
    pp.add_argument("--e-max", type=float, default=2.0)
    pp.add_argument("--steps", type=int, default=8001)
    pp.add_argument("--workers", type=int, default=None)
    pp.set_defaults(func=cmd_period)
    return parser


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and argv and not argv[0].startswith("-"):
        file_values = read_config(known.config)
        subparser = parser._subparsers._group_actions[0].choices.get(argv[0])
        if subparser is not None:
            dests = {a.dest for a in subparser._actions}
            unknown = sorted(set(file_values) - dests)
            if unknown:
                raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
            subparser.set_defaults(**file_values)
    args = parser.parse_args(argv)
    # defaults set from the file are strings; coerce through each action's type
    sub = parser._subparsers._group_actions[0].choices[args.command]
    for action in sub._actions:
        val = getattr(args, action.dest, None)
        if isinstance(val, str) and action.type not in (None, str):
            try:
                setattr(args, action.dest, action.type(val))
            except ValueError as exc:
                raise ConfigError(f"bad value for {action.dest}: {val!r}") from exc
        if isinstance(val, str) and action.choices and val not in action.choices:
            raise ConfigError(f"{action.dest} must be one of {list(action.choices)}")
    return args


# --- subcommands -----------------------------------------------------------------


def _sweep_text(result, header, coord_count, with_dev, fmt_name, args):
    if fmt_name == "json":
        rows = []
        for i, coords in enumerate(result.coords):
            row = dict(zip(header[:coord_count], coords))
            row.update(zip(PROB_COLUMNS, result.probs[i].tolist()))
            row["residual"] = float(result.residual[i])
            if with_dev:
                row["dev"] = float(result.deviation[i])
            row["error"] = result.errors[i]
            rows.append(row)
        doc = {
            "columns": header,
            "mode": result.metadata["mode"],
            "config": _resolved(args),
            "version": __version__,
            "rows": rows,
        }
        return json.dumps(_json_safe(doc), indent=1, sort_keys=True) + "\n"
    lines = [",".join(header)]
    for i, coords in enumerate(result.coords):
        cells = [fmt(c) for c in coords]
        cells += [fmt(p) for p in result.probs[i]]
        cells.append(fmt(result.residual[i]))
        if with_dev:
            cells.append(fmt(result.deviation[i]))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _finish_sweep(args, spec, result, header, coord_count, with_dev):
    _emit(_sweep_text(result, header, coord_count, with_dev, args.format, args), args.out)
    n_err = sum(e is not None for e in result.errors)
    n_flag = sum(result.flagged)
    _write_sidecar(
        args,
        {
            "wall_time_s": result.metadata["wall_time_s"],
            "timestamp": result.metadata["timestamp"],
            "mode": result.metadata["mode"],
            "points": len(result),
            "errored_points": n_err,
            "flagged_points": n_flag,
        },
    )
    if n_err:
        print(f"{n_err} point(s) could not be evaluated (written as nan)", file=sys.stderr)
    if n_flag:
        print(f"{n_flag} point(s) breached tolerance", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def _check_params(params, solver):
    validate(params, closed_form=solver != "oracle")


def cmd_spectrum(args):
    params = _params(args)
    _check_params(params, args.solver)
    try:
        spec = SweepSpec(
            params,
            Axis.linspace("E", args.e_min, args.e_max, args.steps),
            fixed_k=args.fixed_k,
            solver=args.solver,
            reduction=args.reduction,
            deviation_tol=args.tol,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = run_sweep(spec, args.workers)
    with_dev = args.solver == "both"
    header = ["E", *PROB_COLUMNS, "residual"] + (["dev"] if with_dev else [])
    return _finish_sweep(args, spec, result, header, 1, with_dev)


def cmd_map(args):
    params = _params(args)
    _check_params(params, args.solver)
    ax1 = _axis(args.axis1, args.axis1_min, args.axis1_max, args.axis1_steps, args.axis1_values)
    ax2 = _axis(args.axis2, args.axis2_min, args.axis2_max, args.axis2_steps, args.axis2_values)
    try:
        spec = SweepSpec(
            params,
            ax1,
            ax2,
            energy=args.energy,
            fixed_k=args.fixed_k,
            solver=args.solver,
            reduction=args.reduction,
            deviation_tol=args.tol,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for axis in spec.axes:
        if axis.name == "N":
            for n in axis.values:
                _check_params(params.with_sites(n), args.solver)
    result = run_sweep(spec, args.workers)
    header = ["axis1", "axis2", *PROB_COLUMNS, "residual"]
    return _finish_sweep(args, spec, result, header, 2, False)


def random_draw(rng, n_max=12, j_max=0.5, g_max=3.0, omega_big_max=1.0):
    """One symmetric parameter set and in-band energy away from singular points."""
    n = int(rng.integers(2, n_max + 1))
    params = ModelParams(
        omega_0=0.0,
        xi=1.0,
        omega_e=float(rng.uniform(-1.0, 1.0)),
        omega_s_prime=float(rng.uniform(-1.0, 1.0)),
        omega_big=float(rng.uniform(0.0, omega_big_max)),
        j_coupling=float(rng.uniform(0.0, j_max)),
        g=float(rng.uniform(0.0, g_max)),
        n_sites=n,
        m_atoms=n,
    )
    energy = float(rng.uniform(-1.98, 1.98))
    return params, energy


def cmd_verify(args):
    if args.draws <= 0:
        raise ConfigError("draws must be positive")
    if args.tol <= 0:
        raise ConfigError("tol must be positive")
    rng = np.random.default_rng(args.seed)
    t0 = time.perf_counter()
    deviations, residuals, failures = [], [], []
    skipped = 0
    while len(deviations) < args.draws:
        params, energy = random_draw(rng, args.n_max, args.j_max, args.g_max, args.omega_big_max)
        try:
            rep = compare_with_closed_form(energy, params, args.reduction, args.tol)
        except (AtResolventPole, PoleAtThirdState, SingularSystem):
            skipped += 1
            if skipped > 100 * args.draws:
                raise ConfigError("almost every draw hits a singular point")
            continue
        deviations.append(rep.max_deviation)
        residuals.append(scatter(energy, params, reduction=args.reduction).conservation_residual)
        if not rep.passed:
            failures.append({"energy": energy, "params": asdict(params), "deviation": rep.max_deviation})
    dev = np.array(deviations)
    res = np.array(residuals)
    report = {
        "draws": args.draws,
        "seed": args.seed,
        "reduction": args.reduction,
        "tolerance": args.tol,
        "max_deviation": float(dev.max()),
        "median_deviation": float(np.median(dev)),
        "residual_median": float(np.median(res)),
        "residual_p99": float(np.quantile(res, 0.99)),
        "residual_max": float(res.max()),
        "skipped_singular": skipped,
        "failed": len(failures),
        "failures": failures[:20],
        "passed": not failures,
    }
    if args.format == "json":
        text = json.dumps(_json_safe(report), indent=2, sort_keys=True) + "\n"
    else:
        keys = [k for k in report if k != "failures"]
        text = "".join(f"{k}: {_scalar(report[k])}\n" for k in keys)
        for f in report["failures"]:
            text += f"failure: E={fmt(f['energy'])} N={f['params']['n_sites']} deviation={fmt(f['deviation'])}\n"
    _emit(text, args.out)
    _write_sidecar(args, {"wall_time_s": time.perf_counter() - t0})
    return EXIT_OK if not failures else EXIT_TOLERANCE


def _scalar(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def cmd_period(args):
    params = _params(args)
    validate(params, closed_form=True)
    try:
        spec = SweepSpec(
            params,
            Axis.linspace("E", args.e_min, args.e_max, args.steps),
            fixed_k=args.fixed_k,
            reduction=args.reduction,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    t0 = time.perf_counter()
    pa = estimate_period_numeric(spec, args.workers)
    report = {
        "mode": "diagnostic",
        "reduction": pa.reduction,
        "n_sites": pa.n_sites,
        "grid_points": pa.grid_points,
        "points_per_period": pa.points_per_period,
        "reference_energy": pa.reference_energy,
        "k_plus": pa.k_plus,
        "phi": pa.phi,
        "delta_e_exact": pa.delta_e_exact,
        "delta_e_taylor": pa.delta_e_taylor,
        "delta_e_leading_4pi_over_n": pa.delta_e_leading,
        "delta_e_4_over_n": pa.delta_e_four_over_n,
        "tau_4n": pa.tau_four_n,
        "tau_estimate": pa.tau_estimate,
        "autocorr_peak": pa.autocorr_peak,
    }
    if args.format == "json":
        text = json.dumps(_json_safe(report), indent=2, sort_keys=True) + "\n"
    else:
        lines = []
        for k, v in report.items():
            if v is None:
                v = "no finite period" if k in ("tau_estimate", "autocorr_peak") else "none"
            lines.append(f"{k}: {_scalar(v)}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    _write_sidecar(args, {"wall_time_s": time.perf_counter() - t0})
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientResolution as exc:
        print(f"tolerance error: InsufficientResolution: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except GARouterError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
