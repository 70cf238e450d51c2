"""Model constants, initial conditions, and experiment configuration.

This module is the single source of truth for every calibrated constant of
the coupled climate-economy model, for the 2016 initial conditions of the
16-dimensional system, and for the knobs that define an experiment (variant,
horizon, solver tolerances, sweep ranges, sample counts).  Everything is an
immutable dataclass so configurations can be shared freely across worker
processes.

Unit conventions (used consistently by every module):

* time in years, all rates per year;
* monetary stocks and flows in trillions of 2010 USD ($T);
* wages and labour productivity in $ per worker-year;
* workforce in billions of workers;
* carbon reservoirs in GtC, emission flows and carbon prices in
  CO2-equivalent units (Gt CO2e per year, $ per tCO2e);
* temperatures in degrees C anomaly from preindustrial.
"""

from __future__ import annotations

import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from typing import Iterator, Mapping

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


class ConfigError(ValueError):
    """Raised for malformed configuration files or override strings."""


@dataclass(frozen=True)
class ParamSet:
    """All model constants with their calibrated default values.

    Defaults reproduce the standard calibration of the model; any field can
    be overridden through a TOML config file or ``--param name=value`` on
    the command line.
    """

    # -- economy
    alpha: float = 0.02          # productivity growth rate (1/yr)
    delta: float = 0.04          # capital depreciation rate (1/yr)
    nu: float = 2.7              # capital-to-output ratio
    delta_n: float = 0.031       # workforce growth parameter (1/yr)
    n_max: float = 7.065         # workforce equilibrium value (billions)
    phi0: float = -0.292         # Phillips curve intercept
    phi1: float = 0.469          # Phillips curve slope
    kappa0: float = 0.0318       # investment function intercept
    kappa1: float = 0.575        # investment function slope
    kappa_min: float = 0.0       # investment share lower clamp
    kappa_max: float = 0.3       # investment share upper clamp
    div0: float = -0.078         # dividend function intercept
    div1: float = 0.553          # dividend function slope
    div_min: float = 0.0         # dividend share lower clamp
    div_max: float = 0.3         # dividend share upper clamp
    r: float = 0.02              # interest rate on firm debt (1/yr)
    eta: float = 0.192           # price relaxation speed (1/yr)
    xi: float = 1.875            # price markup over unit labour cost
    gamma: float = 0.9           # inflation pass-through to wages (money illusion)

    # -- carbon cycle (preindustrial reservoirs in GtC, transfers 1/yr)
    c_at: float = 588.0
    c_up: float = 360.0
    c_lo: float = 1720.0
    phi12: float = 0.024
    phi23: float = 0.001

    # -- exogenous driver rates (1/yr except delta_pc in $/tCO2e/yr)
    delta_gsigma: float = -0.001   # decay of the carbon-intensity decline rate
    delta_eland: float = -0.022    # decline of land-use emissions
    delta_pbs: float = -0.005      # decline of the backstop price
    delta_pc: float = 1.0          # linear slope of the carbon price

    # -- radiative forcing and temperature
    f_dbl: float = 3.681           # forcing from doubled CO2 (W/m^2)
    f_exo_start: float = 0.5       # exogenous forcing at start year (W/m^2)
    f_exo_end: float = 1.0         # exogenous forcing at end of ramp (W/m^2)
    f_exo_ramp_years: float = 84.0  # ramp length; constant afterwards
    t_preind: float = 13.74        # preindustrial temperature (degC, reference only)
    heat_cap: float = 10.20        # heat capacity, atmosphere + upper ocean
    heat_cap_lo: float = 3.52      # heat capacity, lower ocean
    heat_exchange: float = 0.0176  # inter-layer heat exchange coefficient
    ecs: float = 3.1               # equilibrium climate sensitivity (degC)

    # -- damage function
    zeta1: float = 0.0
    zeta2: float = 0.00236
    zeta3: float = 4.48e-06
    zeta4: float = 7.0

    # -- abatement policy
    theta: float = 2.6             # abatement cost convexity
    s_a: float = 0.5               # subsidised fraction of abatement costs

    # Divisor applied to CO2e emission flows when they enter the carbon
    # reservoirs.  3.666^2 reproduces the climate trajectories of the
    # analyses this model is calibrated against; 3.666 is the plain
    # CO2e-to-carbon mass conversion and 1.0 adds the flows verbatim.
    emission_carbon_divisor: float = 3.666 ** 2

    def replace(self, **overrides: float) -> "ParamSet":
        return dataclasses.replace(self, **overrides)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class InitialConditions:
    """State of the 16-dimensional system at the start year (2016)."""

    capital: float = 161.3        # K, $T
    debt: float = 91.4            # D, $T
    wage: float = 10591.0         # w, $/worker-yr
    price: float = 1.0            # p, index (normalisation)
    productivity: float = 18323.0  # a, $/worker-yr
    workforce: float = 4.83       # N, billions
    sigma: float = 0.6187         # carbon intensity, GtCO2e per $T of output
    g_sigma: float = -0.0105      # growth rate of sigma (1/yr)
    e_land: float = 2.6           # land-use emissions, GtCO2e/yr
    p_bs: float = 547.22          # backstop price, $/tCO2e
    p_c: float = 2.0              # carbon price, $/tCO2e
    co2_at: float = 851.0         # atmospheric reservoir, GtC
    co2_up: float = 460.0         # upper ocean / biosphere reservoir, GtC
    co2_lo: float = 1740.0        # lower ocean reservoir, GtC
    temp: float = 0.85            # atmospheric temperature anomaly, degC
    temp_lo: float = 0.0068       # lower ocean temperature anomaly, degC
    start_year: float = 2016.0

    def replace(self, **overrides: float) -> "InitialConditions":
        return dataclasses.replace(self, **overrides)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


VARIANTS = ("reduced", "full-nofb", "full")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment run."""

    variant: str = "reduced"
    horizon_years: float = 180.0
    steps_per_year: int = 20
    seed: int = 0
    n: int = 512
    out_dir: str = "runs/experiment"
    workers: int = 1
    save_trajectories: bool = False

    # solver
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = 1.0
    max_steps: int = 1_000_000

    # starting point in ratio space (lambda, omega, d); None keeps the
    # ratios implied by the default initial conditions
    initial_ratios: tuple[float, float, float] | None = None

    # sweep: per-parameter (lo, hi) ranges explored with a Sobol sequence
    sweep_ranges: tuple[tuple[str, float, float], ...] = (
        ("eta", 0.05, 0.8),
        ("xi", 1.0, 2.2),
        ("gamma", 0.0, 1.0),
    )

    # basin grid over initial ratios, at fixed pricing parameters
    basin_resolution: tuple[int, int, int] = (20, 20, 20)
    basin_lam: tuple[float, float] = (0.2, 0.99)
    basin_omega: tuple[float, float] = (0.2, 0.99)
    basin_d: tuple[float, float] = (0.1, 2.7)

    # Monte Carlo: which parameters are drawn from fitted distributions;
    # None selects the standard set for the variant (4 economic parameters
    # for the reduced model, plus ecs and c_up for the full ones)
    mc_params: tuple[str, ...] | None = None
    mc_end_year: float = 2200.0
    readout_year: float = 2100.0
    good_threshold: float = 0.4

    params: ParamSet = ParamSet()
    initial: InitialConditions = InitialConditions()

    def replace(self, **overrides) -> "ExperimentConfig":
        return dataclasses.replace(self, **overrides)

    def validate(self) -> list[str]:
        problems = []
        if self.variant not in VARIANTS:
            problems.append(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not self.horizon_years > 0:
            problems.append("horizon_years must be > 0")
        if self.steps_per_year < 1:
            problems.append("steps_per_year must be >= 1")
        if self.n < 1:
            problems.append("n must be >= 1")
        if self.rtol <= 0 or self.atol <= 0:
            problems.append("solver tolerances must be > 0")
        if any(r < 2 for r in self.basin_resolution):
            problems.append("basin_resolution must be >= 2 per axis")
        for name, lo, hi in self.sweep_ranges:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                problems.append(f"sweep range for {name} must satisfy lo < hi")
        problems.extend(validate(self.params))
        return problems


def default_params() -> ParamSet:
    """Return the calibrated default constants."""
    return ParamSet()


def default_initial_conditions() -> InitialConditions:
    """Return the 2016 starting state of the 16-dimensional system."""
    return InitialConditions()


def validate(params: ParamSet) -> list[str]:
    """Check every structural invariant of a parameter set.

    Returns a list of human-readable violation messages, one per failed
    invariant; an empty list means the set is admissible.  Violations are
    data rather than exceptions so sweep machinery can inspect them.
    """
    p = params
    problems = []
    if not p.nu > 0:
        problems.append("nu must be > 0")
    if not p.eta > 0:
        problems.append("eta must be > 0")
    if not p.xi >= 1:
        problems.append("xi must be >= 1")
    if not 0 <= p.gamma <= 1:
        problems.append("gamma must lie in [0, 1]")
    if not 0 <= p.s_a < 1:
        problems.append("s_a must lie in [0, 1)")
    if not p.theta > 1:
        problems.append("theta > 1 required (abatement exponent 1/(theta-1))")
    if not p.kappa_min <= p.kappa_max:
        problems.append("kappa_min must be <= kappa_max")
    if not p.div_min <= p.div_max:
        problems.append("div_min must be <= div_max")
    for name in ("c_at", "c_up", "c_lo"):
        if not getattr(p, name) > 0:
            problems.append(f"{name} must be > 0")
    for name in ("heat_cap", "heat_cap_lo"):
        if not getattr(p, name) > 0:
            problems.append(f"{name} must be > 0")
    if not p.ecs > 0:
        problems.append("ecs must be > 0")
    if not p.emission_carbon_divisor > 0:
        problems.append("emission_carbon_divisor must be > 0")
    return problems


# ---------------------------------------------------------------------------
# config file I/O

_CONFIG_SECTIONS = ("run", "solver", "sweep", "basin", "mc", "params", "initial")

_RUN_KEYS = {
    "variant": str,
    "horizon_years": float,
    "steps_per_year": int,
    "seed": int,
    "n": int,
    "out_dir": str,
    "workers": int,
    "save_trajectories": bool,
    "initial_ratios": tuple,
    "readout_year": float,
    "mc_end_year": float,
    "good_threshold": float,
}


def load_config(path: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read an experiment configuration from a TOML file.

    Unknown keys are rejected so typos in parameter names fail loudly.
    """
    cfg = base if base is not None else ExperimentConfig()
    with open(path, "rb") as fh:
        try:
            raw = _toml.load(fh)
        except _toml.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    for section in raw:
        if section not in _CONFIG_SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")

    run = dict(raw.get("run", {}))
    updates = {}
    for key, value in run.items():
        if key not in _RUN_KEYS:
            raise ConfigError(f"{path}: unknown key run.{key}")
        if key == "initial_ratios":
            value = tuple(float(v) for v in value)
            if len(value) != 3:
                raise ConfigError("run.initial_ratios must have 3 entries")
        updates[key] = value
    solver = dict(raw.get("solver", {}))
    for key in solver:
        if key not in ("rtol", "atol", "max_step", "max_steps"):
            raise ConfigError(f"{path}: unknown key solver.{key}")
    updates.update(solver)

    if "sweep" in raw:
        sweep = raw["sweep"]
        ranges = sweep.get("ranges")
        if ranges is not None:
            updates["sweep_ranges"] = tuple(
                (str(name), float(lo), float(hi)) for name, (lo, hi) in ranges.items()
            )
        if "n" in sweep:
            updates["n"] = int(sweep["n"])
    if "basin" in raw:
        basin = raw["basin"]
        if "resolution" in basin:
            res = basin["resolution"]
            if isinstance(res, int):
                res = (res, res, res)
            updates["basin_resolution"] = tuple(int(v) for v in res)
        for axis in ("lam", "omega", "d"):
            if axis in basin:
                updates[f"basin_{axis}"] = tuple(float(v) for v in basin[axis])
    if "mc" in raw:
        mc = raw["mc"]
        if "params" in mc:
            updates["mc_params"] = tuple(str(s) for s in mc["params"])
        if "n" in mc:
            updates["n"] = int(mc["n"])

    updates["params"] = _merged_params(cfg.params, raw.get("params", {}), path)
    updates["initial"] = _merged_initial(cfg.initial, raw.get("initial", {}), path)
    return cfg.replace(**updates)


def _merged_params(base: ParamSet, overrides: Mapping[str, float], src: str) -> ParamSet:
    fields = {f.name for f in dataclasses.fields(ParamSet)}
    bad = set(overrides) - fields
    if bad:
        raise ConfigError(f"{src}: unknown parameter(s) {sorted(bad)}")
    return base.replace(**{k: float(v) for k, v in overrides.items()})


def _merged_initial(base: InitialConditions, overrides: Mapping[str, float], src: str) -> InitialConditions:
    fields = {f.name for f in dataclasses.fields(InitialConditions)}
    bad = set(overrides) - fields
    if bad:
        raise ConfigError(f"{src}: unknown initial condition(s) {sorted(bad)}")
    return base.replace(**{k: float(v) for k, v in overrides.items()})


def apply_param_overrides(cfg: ExperimentConfig, assignments: list[str]) -> ExperimentConfig:
    """Apply ``name=value`` strings (from repeated --param flags)."""
    param_fields = {f.name for f in dataclasses.fields(ParamSet)}
    ic_fields = {f.name for f in dataclasses.fields(InitialConditions)}
    params, initial = cfg.params, cfg.initial
    for item in assignments:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects name=value, got {item!r}")
        name = name.strip()
        try:
            val = float(value)
        except ValueError as exc:
            raise ConfigError(f"--param {name}: {value!r} is not a number") from exc
        if name in param_fields:
            params = params.replace(**{name: val})
        elif name in ic_fields:
            initial = initial.replace(**{name: val})
        else:
            raise ConfigError(f"--param {name}: no such parameter or initial condition")
    return cfg.replace(params=params, initial=initial)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialise {type(value)} to TOML")


def dump_config(cfg: ExperimentConfig) -> str:
    """Render a config as TOML text.

    Floats are written with ``repr`` so a load/dump round trip is lossless
    to full precision.
    """
    lines = ["[run]"]
    for key in ("variant", "horizon_years", "steps_per_year", "seed", "n", "out_dir",
                "workers", "save_trajectories", "readout_year", "mc_end_year",
                "good_threshold"):
        lines.append(f"{key} = {_toml_value(getattr(cfg, key))}")
    if cfg.initial_ratios is not None:
        lines.append(f"initial_ratios = {_toml_value(cfg.initial_ratios)}")
    lines += ["", "[solver]"]
    for key in ("rtol", "atol", "max_step", "max_steps"):
        lines.append(f"{key} = {_toml_value(getattr(cfg, key))}")
    lines += ["", "[sweep.ranges]"]
    for name, lo, hi in cfg.sweep_ranges:
        lines.append(f"{name} = [{lo!r}, {hi!r}]")
    lines += ["", "[basin]"]
    lines.append(f"resolution = {_toml_value(cfg.basin_resolution)}")
    lines.append(f"lam = {_toml_value(cfg.basin_lam)}")
    lines.append(f"omega = {_toml_value(cfg.basin_omega)}")
    lines.append(f"d = {_toml_value(cfg.basin_d)}")
    if cfg.mc_params is not None:
        lines += ["", "[mc]", f"params = {_toml_value(cfg.mc_params)}"]
    lines += ["", "[params]"]
    for key, value in cfg.params.as_dict().items():
        lines.append(f"{key} = {value!r}")
    lines += ["", "[initial]"]
    for key, value in cfg.initial.as_dict().items():
        lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"


def effective_params_json(cfg: ExperimentConfig) -> str:
    """JSON rendering of the effective parameter values (``params dump``)."""
    return json.dumps(
        {"params": cfg.params.as_dict(), "initial": cfg.initial.as_dict()},
        indent=2,
        sort_keys=True,
    )
