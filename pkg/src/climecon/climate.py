"""Carbon cycle, radiative forcing, temperature dynamics, and climate policy.

The climate side of the model is a continuous-time three-reservoir carbon
cycle, a logarithmic forcing law, a two-layer energy balance for the
temperature anomalies, exponential/linear exogenous drivers, and the
abatement machinery (emission reduction rate, abatement costs, carbon tax
and subsidy) that couples policy back into firm profits.

Emission flows and carbon prices are expressed in CO2-equivalent units
while the reservoirs are in GtC; flows are divided by
``ParamSet.emission_carbon_divisor`` when they enter the reservoirs (see
``params`` for the convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .params import ParamSet

# stocks are $T and GtC while unit prices are $ per tonne: 1 GtC per $T of
# output equals 1e-3 tC per $
TONNES_PER_GT = 1.0e9
DOLLARS_PER_TRILLION = 1.0e12
TC_PER_DOLLAR = TONNES_PER_GT / DOLLARS_PER_TRILLION

_LN2 = math.log(2.0)


class ClimateState(NamedTuple):
    """Climate block of the full state vector."""

    sigma: float      # carbon intensity of gross output, GtCO2e/$T
    g_sigma: float    # growth rate of sigma (negative), 1/yr
    e_land: float     # land-use emissions, GtCO2e/yr
    co2_at: float     # atmospheric carbon, GtC
    co2_up: float     # upper ocean / biosphere carbon, GtC
    co2_lo: float     # lower ocean carbon, GtC
    temp: float       # atmosphere + upper ocean temperature anomaly, degC
    temp_lo: float    # lower ocean temperature anomaly, degC
    p_bs: float       # backstop technology price, $/tCO2e
    p_c: float        # carbon price, $/tCO2e


@dataclass(frozen=True)
class PolicyOutputs:
    """Abatement decision and the money flows it generates."""

    reduction: float    # n, fraction of potential emissions abated, [0, 1]
    abatement: float    # A, abatement cost per unit of gross production
    e_ind: float        # industrial emissions, GtCO2e/yr
    carbon_tax: float   # T^C, $T/yr (real)
    subsidy: float      # S^C, $T/yr (real)


def reduction_rate(p_c: float, p_bs: float, p: ParamSet) -> float:
    """Cost-minimising emission reduction rate.

    Minimises carbon tax plus abatement cost given the current carbon price
    and backstop price; saturates at 1 once the carbon price reaches the
    (subsidy-adjusted) backstop price.
    """
    if p_c <= 0.0:
        return 0.0
    base = p_c / ((1.0 - p.s_a) * p_bs)
    if base >= 1.0:
        return 1.0
    return min(base ** (1.0 / (p.theta - 1.0)), 1.0)


def abatement_cost(sigma_per_dollar: float, p_bs: float, n: float, p: ParamSet) -> float:
    """Abatement cost per unit of gross production.

    ``sigma_per_dollar`` is the carbon intensity in tCO2e per dollar of
    output (the state variable sigma times :data:`TC_PER_DOLLAR`), which
    makes the result dimensionless.
    """
    return sigma_per_dollar * p_bs * n ** p.theta / p.theta


def damage_fraction(temp: float, p: ParamSet) -> float:
    """Fraction of output destroyed at temperature anomaly ``temp``.

    Nonnegative by construction; negative anomalies return 0.
    """
    if temp <= 0.0:
        return 0.0
    poly = 1.0 + p.zeta1 * temp + p.zeta2 * temp * temp + p.zeta3 * temp ** p.zeta4
    return 1.0 - 1.0 / poly


def industrial_emissions(sigma: float, n: float, y_gross: float) -> float:
    """Industrial emissions (GtCO2e/yr) from gross production ``y_gross`` ($T/yr)."""
    return sigma * (1.0 - n) * y_gross


def policy_outputs(sigma: float, p_bs: float, p_c: float, y_gross: float,
                   p: ParamSet, enabled: bool = True) -> PolicyOutputs:
    """Evaluate the abatement decision and the resulting money flows."""
    if not enabled:
        return PolicyOutputs(0.0, 0.0, industrial_emissions(sigma, 0.0, y_gross), 0.0, 0.0)
    n = reduction_rate(p_c, p_bs, p)
    cost = abatement_cost(sigma * TC_PER_DOLLAR, p_bs, n, p)
    e_ind = industrial_emissions(sigma, n, y_gross)
    # $/tCO2e times GtCO2e/yr, expressed in $T/yr
    carbon_tax = p_c * e_ind * TONNES_PER_GT / DOLLARS_PER_TRILLION
    subsidy = p.s_a * cost * y_gross
    return PolicyOutputs(n, cost, e_ind, carbon_tax, subsidy)


def transfer_matrix(p: ParamSet) -> np.ndarray:
    """Carbon transfer matrix; columns sum to zero (mass conservation)."""
    r12 = p.c_at / p.c_up
    r23 = p.c_up / p.c_lo
    return np.array(
        [
            [-p.phi12, p.phi12 * r12, 0.0],
            [p.phi12, -p.phi12 * r12 - p.phi23, p.phi23 * r23],
            [0.0, p.phi23, -p.phi23 * r23],
        ]
    )


def carbon_flux(co2, e_t: float, p: ParamSet) -> np.ndarray:
    """Reservoir derivatives for total emission inflow ``e_t`` (GtC/yr).

    The preindustrial reservoir vector is an exact fixed point at zero
    emissions.
    """
    co2 = np.asarray(co2, dtype=float)
    flux = transfer_matrix(p) @ co2
    flux[0] += e_t
    return flux


def exogenous_forcing(t: float, p: ParamSet) -> float:
    """Non-CO2 forcing: linear ramp over the configured horizon, then flat."""
    if p.f_exo_ramp_years <= 0.0:
        return p.f_exo_end
    frac = min(t / p.f_exo_ramp_years, 1.0)
    return p.f_exo_start + (p.f_exo_end - p.f_exo_start) * frac


def radiative_forcing(co2_at: float, t: float, p: ParamSet) -> float:
    """Total forcing: logarithmic in the atmospheric reservoir plus exogenous."""
    return p.f_dbl / _LN2 * math.log(co2_at / p.c_at) + exogenous_forcing(t, p)


def temperature_flux(temp: float, temp_lo: float, forcing: float,
                     p: ParamSet) -> tuple[float, float]:
    """Two-layer energy balance derivatives (dT/dt, dT_lo/dt).

    The steady state under constant forcing ``f_dbl`` is
    ``temp = temp_lo = ecs`` by construction.
    """
    d_temp = (forcing - p.f_dbl / p.ecs * temp
              - p.heat_exchange * (temp - temp_lo)) / p.heat_cap
    d_temp_lo = p.heat_exchange * (temp - temp_lo) / p.heat_cap_lo
    return d_temp, d_temp_lo


def driver_flux(state: ClimateState, p: ParamSet) -> tuple[float, float, float, float, float]:
    """Derivatives of the exogenous drivers (sigma, g_sigma, e_land, p_bs, p_c).

    With both ``g_sigma`` and ``delta_gsigma`` negative the intensity
    decline decelerates: g_sigma -> 0 from below.
    """
    return (
        state.g_sigma * state.sigma,
        p.delta_gsigma * state.g_sigma,
        p.delta_eland * state.e_land,
        p.delta_pbs * state.p_bs,
        p.delta_pc,
    )
