"""Command-line front end.

All positions and angles are in radians and all times in the
nondimensional units of the model (beta is the relaxation time).
Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .covariance import (
    LimitParams,
    NonNormalizableError,
    StationaryDensity,
    covariance_convergence,
    isotropic_fixed_point_trace,
    tail_exponent,
)
from .io import ReportWriteError, dumps_csv, dumps_json, read_csv_column, write_report
from .lagrangian_mc import IntegrationBlowup, SimParams, StepRejected, VelocityField, moment_ode_solve, run_ensemble
from .radial_fp import (
    CFLViolation,
    default_grid,
    fp_distance_to_stationary,
    fp_radial_checkpoints,
    gaussian_field,
)
from .shell_noise import InvalidParameterError, alpha_N, enumerate_shell
from .tail_stats import SWEEP_FRACTIONS, hill_fit

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers")
    return vals[0], vals[1]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", type=Path, help="output directory (default: print to stdout)")
    p.add_argument("--threads", type=int, default=0, help="worker threads, 0 = auto; results do not depend on it")
    p.add_argument("--config", type=Path, help="JSON file of option values; explicit flags take precedence")
    return p


def _physics(p: argparse.ArgumentParser):
    p.add_argument("--a", type=float, default=1.0, help="noise intensity a")
    p.add_argument("--kT-beta", dest="kT_beta", type=float, help="set a from the product k_T * beta instead")
    p.add_argument("--beta", type=float, default=1.0, help="relaxation time beta")
    p.add_argument("--sigma", type=float, default=1.0, help="thermal amplitude sigma")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="shellstretch", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("modes", parents=[common], help="dump the shell ensemble as CSV (k1,k2,theta,phase)")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--a", type=float, default=1.0)

    p = sub.add_parser("verify-covariance", parents=[common], help="lattice correctors against their limits")
    p.add_argument("--N-list", dest="N_list", type=_ints, default=[8, 16, 32, 64])
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--r-samples", dest="r_samples", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo ensemble of the pre-limit or limit SDE")
    _physics(p)
    p.add_argument("--N", type=int, help="shell index of the pre-limit system; omit for the limit SDE")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-final", dest="t_final", type=float, default=1.0)
    p.add_argument("--n-paths", dest="n_paths", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-out", dest="n_out", type=int, default=10)
    p.add_argument("--r0", type=_pair, default=(0.0, 0.0))
    p.add_argument("--x0", type=_pair, help="common initial centre (default: uniform on the torus)")
    p.add_argument("--flow", choices=["zero", "cellular"], default="zero", help="large-scale flow u_L")
    p.add_argument("--samples-csv", dest="samples_csv", action="store_true", help="also write final |R| samples")

    p = sub.add_parser("stationary", parents=[common], help="closed-form stationary density on a log grid")
    _physics(p)
    p.add_argument("--g0", type=float, default=1.0)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--rho-min", dest="rho_min", type=float, default=1e-2)
    p.add_argument("--rho-max", dest="rho_max", type=float, default=10.0)
    p.add_argument("--n-points", dest="n_points", type=int, default=200)

    p = sub.add_parser("fp-radial", parents=[common], help="evolve the radial Fokker-Planck equation")
    _physics(p)
    p.add_argument("--n-cells", dest="n_cells", type=int, default=1024)
    p.add_argument("--rho-max", dest="rho_max", type=float)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--scheme", choices=["implicit", "explicit"], default="implicit")
    p.add_argument("--checkpoints", type=_floats, default=[1.0, 5.0, 20.0])
    p.add_argument("--init-variance", dest="init_variance", type=float, default=0.5, help="per-component variance")

    p = sub.add_parser("fit-tail", parents=[common], help="Hill fit of a one-column CSV of |R| samples")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--k-fraction", dest="k_fraction", type=float, default=0.01)

    p = sub.add_parser("moments", parents=[common], help="structure-tensor moment ODE")
    _physics(p)
    p.add_argument("--T0", type=_floats, default=[0.0, 0.0, 0.0], help="xx,xy,yy")
    p.add_argument("--t-final", dest="t_final", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--n-out", dest="n_out", type=int, default=20)
    return parser


def _limit_params(args) -> LimitParams:
    a = args.a
    if getattr(args, "kT_beta", None) is not None:
        a = LimitParams.from_kT_beta(args.kT_beta, args.beta, args.sigma).a
    return LimitParams(a, args.beta, args.sigma)


def _config(args) -> dict:
    skip = {"out", "config", "func"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k not in skip}


# ---------------------------------------------------------------- commands


def cmd_modes(args):
    model = enumerate_shell(args.N, args.a)
    rows = [(int(k1), int(k2), float(t), "cos" if c else "sin") for (k1, k2), t, c in zip(model.k, model.theta, model.is_cos)]
    return {"modes.csv": {"header": ["k1", "k2", "theta", "phase"], "rows": rows}}


def cmd_verify_covariance(args):
    conv = covariance_convergence(args.N_list, args.a, args.r_samples, args.seed)
    alphas = []
    for N in args.N_list:
        al = alpha_N(enumerate_shell(N, args.a))
        lo, hi = math.pi / 64 * args.a**2 / N**3, math.pi / 4 * args.a**2 / N**3
        alphas.append({"N": N, "alpha_N": al, "lower": lo, "upper": hi, "within": lo <= al <= hi})
    conv["alpha"] = alphas
    return {"covariance.json": conv}


def cmd_simulate(args):
    lp = _limit_params(args)
    flow = VelocityField.cellular() if args.flow == "cellular" else VelocityField.zero()
    params = SimParams(
        beta=lp.beta, sigma=lp.sigma, a=lp.a, dt=args.dt, t_final=args.t_final, n_paths=args.n_paths,
        seed=args.seed, N=args.N, u_L=flow, r0=tuple(args.r0), x0=None if args.x0 is None else tuple(args.x0),
        n_out=args.n_out,
    )
    stats = run_ensemble(params, threads=args.threads)
    summary = {
        "params": {
            "model": "limit" if params.is_limit else "prelimit", "N": params.N, "a": lp.a, "beta": lp.beta,
            "sigma": lp.sigma, "kT_turb": lp.kT_turb, "dt": args.dt, "t_final": args.t_final,
            "n_paths": args.n_paths, "seed": args.seed, "flow": args.flow, "r0": list(params.r0),
        },
        "stats": stats.to_dict(),
    }
    out = {"summary.json": summary}
    if args.samples_csv:
        out["radii.csv"] = {"header": ["radius"], "rows": [(float(v),) for v in stats.final_radii]}
    return out


def cmd_stationary(args):
    lp = _limit_params(args)
    sd = StationaryDensity(lp, g0=args.g0, normalized=args.normalize)
    rho = np.geomspace(args.rho_min, args.rho_max, args.n_points)
    g = sd(rho)
    kb = lp.kT_turb * lp.beta
    header = {"p": tail_exponent(lp), "C": sd.C if lp.kT_turb > 0 else None, "g0": sd.g0,
              "normalized": sd.normalized, "kT_turb": lp.kT_turb, "normalizable": kb < 1.0}
    head = json.dumps(json.loads(dumps_json(header)), sort_keys=True)
    return {
        "stationary.csv": {"header": ["rho", "density"], "rows": list(zip(rho, g)), "comment": head},
        "stationary.json": header,
    }


def cmd_fp_radial(args):
    lp = _limit_params(args)
    grid = default_grid(lp, args.n_cells, args.rho_max)
    init = gaussian_field(grid, args.init_variance)
    fields = fp_radial_checkpoints(init, lp, args.dt, sorted(args.checkpoints), scheme=args.scheme)
    rows = [(f.time, c, v) for f in [init] + fields for c, v in zip(grid.centers, f.values)]
    normalizable = lp.kT_turb * lp.beta < 1.0
    report = {
        "times": [f.time for f in [init] + fields],
        "mass": [f.mass for f in [init] + fields],
        "second_moment": [f.second_moment for f in [init] + fields],
        "distance_to_stationary": [fp_distance_to_stationary(f, lp) for f in [init] + fields] if normalizable else None,
        "rho_max": grid.rho_max,
        "n_cells": grid.n_cells,
        "scheme": args.scheme,
        "note": "zero-flux outer boundary at rho_max truncates the stationary tail",
    }
    return {"fp_radial.csv": {"header": ["time", "rho", "g"], "rows": rows}, "convergence.json": report}


def cmd_fit_tail(args):
    samples = read_csv_column(args.input)
    fit = hill_fit(samples, args.k_fraction)
    sweep = []
    for frac in SWEEP_FRACTIONS:
        try:
            sweep.append(hill_fit(samples, frac).to_dict())
        except InvalidParameterError:
            sweep.append({"k_fraction": frac, "skipped": "too few order statistics"})
    return {"tail_fit.json": {"fit": fit.to_dict(), "sweep": sweep, "n_samples": int(samples.size)}}


def cmd_moments(args):
    lp = _limit_params(args)
    xx, xy, yy = args.T0
    times, T = moment_ode_solve(lp, [[xx, xy], [xy, yy]], args.t_final, args.dt)
    stride = max(1, (len(times) - 1) // args.n_out)
    idx = list(range(0, len(times), stride))
    if idx[-1] != len(times) - 1:
        idx.append(len(times) - 1)
    rows = [(times[i], T[i, 0, 0], T[i, 0, 1], T[i, 1, 1]) for i in idx]
    fixed = {"trace_fixed_point": isotropic_fixed_point_trace(lp), "kT_turb_beta": lp.kT_turb * lp.beta}
    return {"moments.csv": {"header": ["t", "Txx", "Txy", "Tyy"], "rows": rows}, "moments.json": fixed}


COMMANDS = {
    "modes": cmd_modes,
    "verify-covariance": cmd_verify_covariance,
    "simulate": cmd_simulate,
    "stationary": cmd_stationary,
    "fp-radial": cmd_fp_radial,
    "fit-tail": cmd_fit_tail,
    "moments": cmd_moments,
}


def _parse(parser, argv):
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = _parse(parser, argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    started = time.perf_counter()
    try:
        outputs = COMMANDS[args.command](args)
    except (IntegrationBlowup, CFLViolation, StepRejected, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidParameterError, NonNormalizableError, ValueError, ReportWriteError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    manifest = {
        "command": args.command,
        "config": _config(args),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "runtime_s": time.perf_counter() - started,
        "outputs": sorted(outputs),
    }
    try:
        if args.out is None:
            for name, payload in outputs.items():
                text = dumps_csv(payload["header"], payload["rows"], payload.get("comment")) if name.endswith(".csv") else dumps_json(payload)
                sys.stdout.write(text)
            sys.stderr.write(dumps_json(manifest))
        else:
            for name, payload in outputs.items():
                write_report(payload, args.out / name)
            write_report(manifest, args.out / "manifest.json")
    except ReportWriteError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())
