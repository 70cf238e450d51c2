"""Experiment orchestration: scenarios, Sobol sweeps, basin grids, Monte Carlo.

Each experiment writes one output directory: a copy of the effective
configuration, per-run CSV artefacts, and a JSON report, so every number in
the summaries can be recomputed from persisted data (see ``summarize``).
Runs are embarrassingly parallel; work is partitioned by run index and all
randomness is derived per run from ``(seed, run_index)``, so results do not
depend on the worker count.
"""

from __future__ import annotations

import dataclasses
import json
import multiprocessing
import os
import time
from dataclasses import dataclass

import numpy as np

from . import coupled, econ, sampling, sensitivity
from .coupled import (BAD, DIVERGENT, FEEDBACK_FULL, FEEDBACK_OFF, GOOD,
                      OUTSIDE_BOUNDS, FeedbackMode, Outcome, YearNotCovered)
from .ode import SolverSettings, Trajectory, integrate
from .params import ConfigError, ExperimentConfig, InitialConditions, ParamSet, dump_config
from .sensitivity import DesignMatrix, SensitivityReport, analyze_batch

GOOD_START = (0.9, 0.9, 0.3)    # favourable starting ratios (lam, omega, d)
BAD_START = (0.5, 0.6, 1.0)     # unfavourable starting ratios

MC_PARAMS_REDUCED = ("eta", "xi", "gamma", "alpha")
MC_PARAMS_FULL = ("eta", "xi", "gamma", "alpha", "ecs", "c_up")

SERIES_VARS_FULL = ("lam", "omega", "d", "temp", "y", "e_ind")
SERIES_VARS_REDUCED = ("lam", "omega", "d")


def feedback_mode(variant: str) -> FeedbackMode:
    if variant == "full":
        return FEEDBACK_FULL
    if variant in ("full-nofb", "reduced"):
        return FEEDBACK_OFF
    raise ConfigError(f"unknown variant {variant!r}")


def simulate_run(variant: str, params: ParamSet, initial: InitialConditions,
                 initial_ratios, horizon_years: float, steps_per_year: int,
                 rtol: float, atol: float, max_step: float,
                 max_steps: int) -> Trajectory:
    """Integrate one run on an absolute-year time axis and attach ratios."""
    mode = feedback_mode(variant)
    start = initial.start_year
    if variant == "reduced":
        if initial_ratios is None:
            y0 = coupled.reduced_state_from_initial(initial, mode, params)
        else:
            y0 = econ.EconState(*initial_ratios, initial.workforce)
        field = lambda t, y: econ.reduced_field(y, params)
        guard = coupled.reduced_divergence_guard()
    else:
        if initial_ratios is None:
            y0 = coupled.full_state_from_initial(initial)
        else:
            y0 = coupled.full_state_from_ratios(*initial_ratios, initial, mode, params)
        field = lambda t, y: coupled.full_field(y, t - start, mode, params)
        guard = coupled.full_divergence_guard(mode, params)

    settings = SolverSettings(rtol=rtol, atol=atol, max_step=max_step,
                              max_steps=max_steps, divergence=guard)
    traj = integrate(field, y0, start, start + horizon_years, settings,
                     steps_per_year)
    return coupled.attach_derived(traj, variant, mode, params, start)


def _simulate_cfg(cfg: ExperimentConfig, params: ParamSet,
                  initial_ratios) -> Trajectory:
    return simulate_run(cfg.variant, params, cfg.initial, initial_ratios,
                        cfg.horizon_years, cfg.steps_per_year, cfg.rtol,
                        cfg.atol, cfg.max_step, cfg.max_steps)


# ---------------------------------------------------------------------------
# worker-pool plumbing

_WORKER_CFG: ExperimentConfig | None = None
_WORKER_TASKS = None


def _init_worker(cfg, tasks):
    global _WORKER_CFG, _WORKER_TASKS
    _WORKER_CFG = cfg
    _WORKER_TASKS = tasks


def _run_indexed(args):
    kind, index = args
    if kind == "sweep":
        return _sweep_record(_WORKER_CFG, _WORKER_TASKS[index], index)
    if kind == "basin":
        return _basin_record(_WORKER_CFG, _WORKER_TASKS[index], index)
    if kind == "mc":
        return _mc_record(_WORKER_CFG, _WORKER_TASKS, index)
    raise ValueError(kind)


def _map_runs(cfg: ExperimentConfig, kind: str, tasks, n: int):
    """Evaluate runs 0..n-1, preserving index order regardless of workers."""
    args = [(kind, i) for i in range(n)]
    if cfg.workers <= 1:
        _init_worker(cfg, tasks)
        return [_run_indexed(a) for a in args]
    chunk = max(1, n // (cfg.workers * 8))
    with multiprocessing.Pool(cfg.workers, initializer=_init_worker,
                              initargs=(cfg, tasks)) as pool:
        return pool.map(_run_indexed, args, chunksize=chunk)


# ---------------------------------------------------------------------------
# scenario

def run_scenario(cfg: ExperimentConfig, out_dir: str | None = None):
    """Integrate one configured run; write trajectory CSV and outcome JSON."""
    problems = cfg.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    traj = _simulate_cfg(cfg, cfg.params, cfg.initial_ratios)
    outcome = coupled.classify_outcome(traj)
    out = out_dir if out_dir is not None else cfg.out_dir
    if out:
        os.makedirs(out, exist_ok=True)
        _write(out, "config.toml", dump_config(cfg))
        coupled.export_trajectory_csv(os.path.join(out, "trajectory.csv"), traj)
        meta = {
            "experiment": "scenario",
            "variant": cfg.variant,
            "outcome": dataclasses.asdict(outcome),
            "termination": {"kind": traj.termination.kind,
                            "time": traj.termination.time},
            "steps": {"accepted": traj.stats.accepted,
                      "rejected": traj.stats.rejected,
                      "rhs_evals": traj.stats.rhs_evals},
            "created_at": _now(),
        }
        _write(out, "meta.json", json.dumps(jsonify(meta), indent=2))
    return traj, outcome


# ---------------------------------------------------------------------------
# Sobol sweep

@dataclass(frozen=True)
class SweepRecord:
    index: int
    point: dict[str, float]
    outcome: Outcome


def _sweep_record(cfg, point: dict, index: int) -> SweepRecord:
    params = cfg.params.replace(**point)
    traj = _simulate_cfg(cfg, params, cfg.initial_ratios)
    return SweepRecord(index, point, coupled.classify_outcome(traj))


def run_sobol_sweep(cfg: ExperimentConfig, out_dir: str | None = None) -> list[SweepRecord]:
    """Classify the model over a Sobol exploration of parameter space."""
    problems = cfg.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    names = [name for name, _, _ in cfg.sweep_ranges]
    ranges = [(lo, hi) for _, lo, hi in cfg.sweep_ranges]
    points = sampling.scale_to_box(sampling.sobol_points(len(names), cfg.n), ranges)
    tasks = [dict(zip(names, map(float, row))) for row in points]
    records = _map_runs(cfg, "sweep", tasks, cfg.n)
    out = out_dir if out_dir is not None else cfg.out_dir
    if out:
        os.makedirs(out, exist_ok=True)
        _write(out, "config.toml", dump_config(cfg))
        _write_records_csv(os.path.join(out, "sweep.csv"), names, records)
        _write(out, "meta.json", json.dumps(jsonify({
            "experiment": "sweep", "variant": cfg.variant, "n": cfg.n,
            "parameters": names, "ranges": ranges,
            "counts": outcome_counts(records), "created_at": _now(),
        }), indent=2))
    return records


def outcome_counts(records) -> dict[str, int]:
    counts = {GOOD: 0, OUTSIDE_BOUNDS: 0, BAD: 0, DIVERGENT: 0}
    for rec in records:
        counts[rec.outcome.category] += 1
    return counts


# ---------------------------------------------------------------------------
# basin grid

def basin_axes(cfg: ExperimentConfig):
    rl, ro, rd = cfg.basin_resolution
    return (np.linspace(*cfg.basin_lam, rl), np.linspace(*cfg.basin_omega, ro),
            np.linspace(*cfg.basin_d, rd))


def _basin_record(cfg, start_point, index: int) -> SweepRecord:
    lam0, omega0, d0 = start_point
    traj = _simulate_cfg(cfg, cfg.params, (lam0, omega0, d0))
    point = {"lam0": lam0, "omega0": omega0, "d0": d0}
    return SweepRecord(index, point, coupled.classify_outcome(traj))


def run_basin_grid(cfg: ExperimentConfig, out_dir: str | None = None) -> list[SweepRecord]:
    """Classify a grid of starting ratios at fixed parameters."""
    problems = cfg.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    ax_lam, ax_omega, ax_d = basin_axes(cfg)
    tasks = [
        (float(l), float(o), float(d))
        for l in ax_lam for o in ax_omega for d in ax_d
    ]
    records = _map_runs(cfg, "basin", tasks, len(tasks))
    out = out_dir if out_dir is not None else cfg.out_dir
    if out:
        os.makedirs(out, exist_ok=True)
        _write(out, "config.toml", dump_config(cfg))
        _write_records_csv(os.path.join(out, "basin.csv"),
                           ["lam0", "omega0", "d0"], records)
        _write(out, "meta.json", json.dumps(jsonify({
            "experiment": "basin", "variant": cfg.variant,
            "resolution": list(cfg.basin_resolution),
            "xi": cfg.params.xi, "eta": cfg.params.eta, "gamma": cfg.params.gamma,
            "counts": outcome_counts(records), "created_at": _now(),
        }), indent=2))
    return records


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclass
class McSummary:
    """Per-year percentile tables and headline fractions of an MC batch.

    Percentiles (2.5, 50, 97.5) are taken over all runs still alive at each
    year; runs that terminated earlier contribute NaN and are excluded
    (``n_alive`` records the count).  Headline fractions count every run:
    a run that died before the readout year fails all thresholds.
    """

    years: np.ndarray
    variables: tuple[str, ...]
    percentiles: dict[str, np.ndarray]    # name -> (3, n_years)
    n_alive: np.ndarray
    n_runs: int
    readout_year: float
    medians_readout: dict[str, float]
    fractions: dict[str, float]

    def as_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "readout_year": self.readout_year,
            "medians_readout": self.medians_readout,
            "fractions": self.fractions,
        }


def mc_param_names(cfg: ExperimentConfig) -> tuple[str, ...]:
    if cfg.mc_params is not None:
        return cfg.mc_params
    return MC_PARAMS_REDUCED if cfg.variant == "reduced" else MC_PARAMS_FULL


def draw_mc_params(seed: int, index: int, names) -> dict[str, float]:
    """Fitted-distribution draws for one run, derived from (seed, run index)."""
    specs = sampling.fitted_distributions()
    rng = np.random.default_rng((seed, index))
    draws = {}
    for name in names:
        if name not in specs:
            raise ConfigError(f"no fitted distribution for parameter {name!r}")
        draws[name] = float(sampling.sample(specs[name], rng, 1)[0])
    return draws


def _mc_years(cfg: ExperimentConfig) -> np.ndarray:
    start = cfg.initial.start_year
    return np.arange(start, cfg.mc_end_year + 0.5)


def _mc_record(cfg: ExperimentConfig, names, index: int) -> dict:
    draws = draw_mc_params(cfg.seed, index, names)
    params = cfg.params.replace(**draws)
    horizon = cfg.mc_end_year - cfg.initial.start_year
    traj = simulate_run(cfg.variant, params, cfg.initial, cfg.initial_ratios,
                        horizon, cfg.steps_per_year, cfg.rtol, cfg.atol,
                        cfg.max_step, cfg.max_steps)
    outcome = coupled.classify_outcome(traj)

    def readout(col):
        try:
            return coupled.value_at_year(traj, col, cfg.readout_year)
        except (YearNotCovered, KeyError):
            return float("nan")

    variables = SERIES_VARS_REDUCED if cfg.variant == "reduced" else SERIES_VARS_FULL
    years = _mc_years(cfg)
    series = np.full((years.size, len(variables)), np.nan)
    spy = cfg.steps_per_year
    n_covered = len(traj.times)
    for row, year in enumerate(years):
        idx = int(round((year - cfg.initial.start_year) * spy))
        if idx < n_covered:
            for col, var in enumerate(variables):
                series[row, col] = traj.column(var)[idx]

    record = {
        "index": index,
        "draws": draws,
        "outcome": outcome,
        "lam_readout": readout("lam"),
        "temp_readout": readout("temp") if cfg.variant != "reduced" else float("nan"),
        "d_readout": readout("d"),
        "series": series,
    }
    if cfg.save_trajectories:
        tdir = os.path.join(cfg.out_dir, "trajectories")
        os.makedirs(tdir, exist_ok=True)
        coupled.export_trajectory_csv(
            os.path.join(tdir, f"run_{index:05d}.csv"), traj)
    return record


def _mc_summary(cfg: ExperimentConfig, years, variables, series_cube,
                temp_readout, d_readout) -> McSummary:
    percentiles = {}
    with np.errstate(all="ignore"):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for col, var in enumerate(variables):
                percentiles[var] = np.nanpercentile(
                    series_cube[:, :, col], [2.5, 50.0, 97.5], axis=0)
            n_alive = np.isfinite(series_cube[:, :, 0]).sum(axis=0)
            temp_ok = np.where(np.isfinite(temp_readout), temp_readout, np.inf) < 2.0
            d_ok = np.where(np.isfinite(d_readout), d_readout, np.inf) < 2.7
            medians = {
                "temp": float(np.nanmedian(temp_readout)) if np.isfinite(temp_readout).any() else float("nan"),
                "d": float(np.nanmedian(d_readout)) if np.isfinite(d_readout).any() else float("nan"),
            }
    n_runs = series_cube.shape[0]
    fractions = {
        "temp_below_2": float(temp_ok.sum()) / n_runs,
        "d_below_2.7": float(d_ok.sum()) / n_runs,
        "both": float((temp_ok & d_ok).sum()) / n_runs,
    }
    return McSummary(years=years, variables=tuple(variables),
                     percentiles=percentiles, n_alive=n_alive, n_runs=n_runs,
                     readout_year=cfg.readout_year, medians_readout=medians,
                     fractions=fractions)


def run_monte_carlo(cfg: ExperimentConfig, out_dir: str | None = None):
    """Draw parameters, run the batch, and compute summary + sensitivity report."""
    problems = cfg.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    names = mc_param_names(cfg)
    out = out_dir if out_dir is not None else cfg.out_dir
    if cfg.save_trajectories and out != cfg.out_dir:
        cfg = cfg.replace(out_dir=out)
    records = _map_runs(cfg, "mc", names, cfg.n)

    years = _mc_years(cfg)
    variables = SERIES_VARS_REDUCED if cfg.variant == "reduced" else SERIES_VARS_FULL
    draw_matrix = np.array([[rec["draws"][name] for name in names] for rec in records])
    lam_readout = np.array([rec["lam_readout"] for rec in records])
    temp_readout = np.array([rec["temp_readout"] for rec in records])
    d_readout = np.array([rec["d_readout"] for rec in records])
    series_cube = np.stack([rec["series"] for rec in records])

    report = analyze_batch(DesignMatrix(draw_matrix, tuple(names)), lam_readout,
                           threshold=cfg.good_threshold, year=cfg.readout_year,
                           seed=cfg.seed)
    summary = _mc_summary(cfg, years, variables, series_cube,
                          temp_readout, d_readout)

    if out:
        os.makedirs(out, exist_ok=True)
        _write(out, "config.toml", dump_config(cfg))
        _write_draws_csv(os.path.join(out, "draws.csv"), names, records)
        _write_mc_outcomes_csv(os.path.join(out, "outcomes.csv"), records)
        _write_series_csv(os.path.join(out, "series.csv"), years, variables, records)
        _write_percentiles_csv(os.path.join(out, "summary_percentiles.csv"), summary)
        _write(out, "report.csv", report.to_csv())
        payload = {
            "experiment": "mc", "variant": cfg.variant, "n": cfg.n,
            "seed": cfg.seed, "parameters": list(names),
            "summary": summary.as_dict(),
            "sensitivity": report.as_dict(),
            "outcome_counts": outcome_counts(
                [SweepRecord(r["index"], {}, r["outcome"]) for r in records]),
            "created_at": _now(),
        }
        _write(out, "report.json", json.dumps(jsonify(payload), indent=2))
    return summary, report


def summarize(run_dir: str) -> McSummary:
    """Recompute the MC summary tables from the persisted per-run CSVs."""
    cfg_path = os.path.join(run_dir, "config.toml")
    series_path = os.path.join(run_dir, "series.csv")
    outcomes_path = os.path.join(run_dir, "outcomes.csv")
    for path in (cfg_path, series_path, outcomes_path):
        if not os.path.exists(path):
            raise FileNotFoundError(path)
    from .params import load_config
    cfg = load_config(cfg_path)

    with open(series_path) as fh:
        header = fh.readline().strip().split(",")
    variables = tuple(header[2:])
    data = np.loadtxt(series_path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        raise ValueError(f"{series_path} contains no runs")
    runs = np.unique(data[:, 0]).astype(int)
    years = np.unique(data[:, 1])
    n_runs, n_years = runs.size, years.size
    series_cube = np.full((n_runs, n_years, len(variables)), np.nan)
    run_index = {r: i for i, r in enumerate(runs)}
    year_index = {y: i for i, y in enumerate(years)}
    for row in data:
        series_cube[run_index[int(row[0])], year_index[row[1]], :] = row[2:]

    out_head = open(outcomes_path).readline().strip().split(",")
    raw = np.genfromtxt(outcomes_path, delimiter=",", skip_header=1,
                        dtype=None, encoding="utf-8", names=out_head)
    temp_readout = np.atleast_1d(raw["temp_readout"]).astype(float)
    d_readout = np.atleast_1d(raw["d_readout"]).astype(float)
    return _mc_summary(cfg, years, variables, series_cube,
                       temp_readout, d_readout)


# ---------------------------------------------------------------------------
# file helpers

def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


def jsonify(obj):
    """Replace non-finite floats with None so output is strict JSON."""
    if isinstance(obj, float):
        return obj if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    return obj


def _write(out_dir: str, name: str, text: str) -> None:
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(text)


def _write_records_csv(path: str, point_names, records) -> None:
    lines = [",".join(["index"] + list(point_names)
                      + ["category", "lam_end", "omega_end", "d_end",
                         "temp_end", "year_end"])]
    for rec in records:
        o = rec.outcome
        vals = [str(rec.index)] + [repr(rec.point[n]) for n in point_names]
        vals += [o.category, repr(o.lam), repr(o.omega), repr(o.d),
                 repr(o.temp), repr(o.year)]
        lines.append(",".join(vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_draws_csv(path: str, names, records) -> None:
    lines = [",".join(["run"] + list(names))]
    for rec in records:
        lines.append(",".join([str(rec["index"])]
                              + [repr(rec["draws"][n]) for n in names]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_mc_outcomes_csv(path: str, records) -> None:
    header = ("run,category,lam_end,omega_end,d_end,temp_end,year_end,"
              "lam_readout,temp_readout,d_readout")
    lines = [header]
    for rec in records:
        o = rec["outcome"]
        lines.append(",".join([
            str(rec["index"]), o.category, repr(o.lam), repr(o.omega),
            repr(o.d), repr(o.temp), repr(o.year), repr(rec["lam_readout"]),
            repr(rec["temp_readout"]), repr(rec["d_readout"]),
        ]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_series_csv(path: str, years, variables, records) -> None:
    lines = [",".join(["run", "year"] + list(variables))]
    for rec in records:
        series = rec["series"]
        for row, year in enumerate(years):
            if np.isfinite(series[row, 0]):
                vals = [str(rec["index"]), repr(float(year))]
                vals += [repr(float(v)) for v in series[row]]
                lines.append(",".join(vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_percentiles_csv(path: str, summary: McSummary) -> None:
    cols = ["year"]
    for var in summary.variables:
        cols += [f"{var}_p2.5", f"{var}_p50", f"{var}_p97.5"]
    cols.append("n_alive")
    lines = [",".join(cols)]
    for i, year in enumerate(summary.years):
        vals = [repr(float(year))]
        for var in summary.variables:
            vals += [repr(float(summary.percentiles[var][q, i])) for q in range(3)]
        vals.append(str(int(summary.n_alive[i])))
        lines.append(",".join(vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
