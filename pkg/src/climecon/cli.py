"""Command-line interface.

Subcommands mirror the experiment families: ``scenario`` (one run),
``sweep`` (Sobol parameter exploration), ``basin`` (initial-condition
grid), ``mc`` (Monte Carlo over fitted distributions plus sensitivity
analysis), ``summarize`` (recompute summary tables from a persisted MC
directory) and ``params dump`` (print effective parameter values as JSON).

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import runner
from .runner import jsonify
from .params import (ConfigError, ExperimentConfig, VARIANTS,
                     apply_param_overrides, effective_params_json, load_config)


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="PATH", help="TOML config file")
    sub.add_argument("--seed", type=int, metavar="N")
    sub.add_argument("--n", type=int, metavar="N", help="number of runs / samples")
    sub.add_argument("--variant", choices=VARIANTS)
    sub.add_argument("--out", metavar="DIR", help="output directory")
    sub.add_argument("--param", action="append", default=[], metavar="k=v",
                     help="override a model parameter or initial condition "
                          "(repeatable)")
    sub.add_argument("--save-trajectories", action="store_true", default=None)
    sub.add_argument("--workers", type=int, metavar="N")
    sub.add_argument("--horizon", type=float, metavar="YEARS")
    sub.add_argument("--steps-per-year", type=int, metavar="N")
    sub.add_argument("--rtol", type=float)
    sub.add_argument("--atol", type=float)
    sub.add_argument("--start", metavar="good|bad|L,O,D",
                     help="starting ratios (lambda, omega, d)")


def _parse_start(text: str):
    if text == "good":
        return runner.GOOD_START
    if text == "bad":
        return runner.BAD_START
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError("--start expects 'good', 'bad', or three numbers L,O,D")
    try:
        return tuple(float(v) for v in parts)
    except ValueError as exc:
        raise ConfigError(f"--start: {text!r} is not numeric") from exc


def _build_config(args: argparse.Namespace, basin_defaults: bool = False) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    if basin_defaults:
        # the basin experiment fixes the pricing parameters at the fitted
        # relaxation speed unless explicitly overridden
        cfg = cfg.replace(params=cfg.params.replace(eta=0.4, gamma=0.9))
    updates = {}
    for flag, key in (("seed", "seed"), ("n", "n"), ("variant", "variant"),
                      ("out", "out_dir"), ("workers", "workers"),
                      ("horizon", "horizon_years"),
                      ("steps_per_year", "steps_per_year"),
                      ("rtol", "rtol"), ("atol", "atol"),
                      ("save_trajectories", "save_trajectories")):
        value = getattr(args, flag, None)
        if value is not None:
            updates[key] = value
    if getattr(args, "start", None):
        updates["initial_ratios"] = _parse_start(args.start)
    cfg = cfg.replace(**updates)
    cfg = apply_param_overrides(cfg, args.param)
    problems = cfg.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="climecon",
        description="Coupled climate-economy simulations and sensitivity analysis",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    for name, descr in (
        ("scenario", "integrate a single configured run"),
        ("sweep", "Sobol sweep over pricing parameters"),
        ("basin", "grid over starting ratios at fixed parameters"),
        ("mc", "Monte Carlo over fitted parameter distributions"),
    ):
        sub = subs.add_parser(name, help=descr)
        _common_flags(sub)
        if name == "basin":
            sub.add_argument("--resolution", type=int, metavar="N",
                             help="grid points per axis (default 20)")

    sub = subs.add_parser("summarize", help="recompute MC summary tables")
    sub.add_argument("run_dir", metavar="DIR")

    sub = subs.add_parser("params", help="parameter inspection")
    sub.add_argument("action", choices=["dump"])
    sub.add_argument("--config", metavar="PATH")
    sub.add_argument("--param", action="append", default=[], metavar="k=v")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "params":
        cfg = ExperimentConfig()
        if args.config:
            cfg = load_config(args.config, base=cfg)
        cfg = apply_param_overrides(cfg, args.param)
        print(effective_params_json(cfg))
        return 0

    if args.command == "summarize":
        summary = runner.summarize(args.run_dir)
        print(json.dumps(jsonify(summary.as_dict()), indent=2))
        return 0

    if args.command == "scenario":
        cfg = _build_config(args)
        traj, outcome = runner.run_scenario(cfg)
        print(json.dumps(jsonify({
            "outcome": outcome.category,
            "end": {"lam": outcome.lam, "omega": outcome.omega,
                    "d": outcome.d, "temp": outcome.temp, "year": outcome.year},
            "termination": traj.termination.kind,
        }), indent=2))
        return 3 if traj.termination.kind == "step_failure" else 0

    if args.command == "sweep":
        cfg = _build_config(args)
        records = runner.run_sobol_sweep(cfg)
        print(json.dumps(runner.outcome_counts(records), indent=2))
        return 0

    if args.command == "basin":
        cfg = _build_config(args, basin_defaults=True)
        if args.resolution is not None:
            cfg = cfg.replace(basin_resolution=(args.resolution,) * 3)
        records = runner.run_basin_grid(cfg)
        print(json.dumps(runner.outcome_counts(records), indent=2))
        return 0

    if args.command == "mc":
        cfg = _build_config(args)
        summary, report = runner.run_monte_carlo(cfg)
        print(json.dumps(jsonify({
            "summary": summary.as_dict(),
            "sensitivity": report.as_dict(),
        }), indent=2))
        return 0

    raise ConfigError(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
