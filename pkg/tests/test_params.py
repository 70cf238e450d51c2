import dataclasses
import json
import math

import numpy as np
import pytest

from climecon.params import (ConfigError, ExperimentConfig, InitialConditions,
                             ParamSet, apply_param_overrides, default_params,
                             default_initial_conditions, dump_config,
                             effective_params_json, load_config, validate)
from climecon.coupled import FEEDBACK_FULL, full_state_from_initial, ratios


def test_default_values():
    p = default_params()
    assert p.xi == 1.875
    assert p.eta == 0.192
    assert p.gamma == 0.9
    assert p.ecs == 3.1
    assert p.c_up == 360.0
    assert (p.zeta1, p.zeta2, p.zeta3, p.zeta4) == (0.0, 0.00236, 4.48e-06, 7.0)
    assert p.nu == 2.7 and p.alpha == 0.02 and p.delta == 0.04
    assert p.theta == 2.6 and p.s_a == 0.5 and p.delta_pc == 1.0


def test_default_initial_conditions():
    ic = default_initial_conditions()
    assert ic.temp == 0.85
    assert ic.co2_at == 851.0
    assert ic.price == 1.0
    assert ic.start_year == 2016.0


def test_initial_ratios_match_quoted_values(params, initial):
    rat = ratios(full_state_from_initial(initial), FEEDBACK_FULL, params)
    for got, expected in zip((rat.lam, rat.omega, rat.d), (0.675, 0.578, 1.53)):
        assert abs(got - expected) / expected < 0.01


def test_validate_defaults_pass():
    assert validate(default_params()) == []


@pytest.mark.parametrize(
    "field,value,fragment",
    [
        ("theta", 1.0, "theta"),
        ("gamma", 1.5, "gamma"),
        ("eta", 0.0, "eta"),
        ("xi", 0.5, "xi"),
        ("kappa_min", 0.9, "kappa_min"),
        ("c_up", -1.0, "c_up"),
        ("s_a", 1.0, "s_a"),
    ],
)
def test_validate_reports_field(field, value, fragment):
    bad = default_params().replace(**{field: value})
    problems = validate(bad)
    assert problems, f"expected violation for {field}={value}"
    assert any(fragment in msg for msg in problems)


def test_config_roundtrip_lossless(tmp_path, rng):
    fields = [f.name for f in dataclasses.fields(ParamSet)]
    noisy = {name: float(v) for name, v in
             zip(fields, rng.uniform(0.1, 3.0, len(fields)) * (1 + 1e-13))}
    cfg = ExperimentConfig(params=ParamSet(**noisy),
                           initial=InitialConditions(capital=161.3 * (1 + 1e-15)))
    path = tmp_path / "config.toml"
    path.write_text(dump_config(cfg))
    loaded = load_config(str(path))
    for name in fields:
        assert getattr(loaded.params, name) == getattr(cfg.params, name)
    for f in dataclasses.fields(InitialConditions):
        assert getattr(loaded.initial, f.name) == getattr(cfg.initial, f.name)
    assert loaded.sweep_ranges == cfg.sweep_ranges
    assert loaded.basin_resolution == cfg.basin_resolution


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[params]\nnot_a_param = 1.0\n")
    with pytest.raises(ConfigError):
        load_config(str(path))
    path.write_text("[nonsense]\nx = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_param_overrides():
    cfg = ExperimentConfig()
    out = apply_param_overrides(cfg, ["xi=2.0", "capital=100.0"])
    assert out.params.xi == 2.0
    assert out.initial.capital == 100.0
    with pytest.raises(ConfigError):
        apply_param_overrides(cfg, ["nope=1"])
    with pytest.raises(ConfigError):
        apply_param_overrides(cfg, ["xi=abc"])
    with pytest.raises(ConfigError):
        apply_param_overrides(cfg, ["xi"])


def test_experiment_config_validation():
    assert ExperimentConfig().validate() == []
    assert ExperimentConfig(horizon_years=0.0).validate()
    assert ExperimentConfig(n=0).validate()
    assert ExperimentConfig(steps_per_year=0).validate()
    assert ExperimentConfig(variant="nope").validate()


def test_effective_params_json_parses():
    text = effective_params_json(ExperimentConfig())
    payload = json.loads(text)
    assert payload["params"]["xi"] == 1.875
    assert payload["initial"]["co2_at"] == 851.0
