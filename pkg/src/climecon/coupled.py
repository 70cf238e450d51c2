"""The full 16-dimensional climate-economy vector field and run outcomes.

The economy is integrated in extensive variables (capital, debt, wage,
price, productivity, workforce) to avoid differentiating the damage and
abatement terms; the ten climate states ride along.  Feedback from climate
to economy (damages, carbon tax + subsidy + abatement) is switchable so the
no-feedback variant of the analysis can be run with the same code path.

Ratios (employment rate, wage share, debt ratio, profit share) are derived
quantities; with feedback off their dynamics are exactly the reduced
4-dimensional system, which is the basis of the equivalence tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import climate, econ
from .climate import (DOLLARS_PER_TRILLION, TC_PER_DOLLAR, TONNES_PER_GT,
                      ClimateState, damage_fraction, policy_outputs)
from .ode import Trajectory
from .params import InitialConditions, ParamSet

# workforce is in billions while wages are per worker: 1e-3 $T per
# ($/worker-yr * billion workers)
_TRILLION_PER_WAGE_BILLION = 1.0e9 / DOLLARS_PER_TRILLION


class DegenerateOutput(ValueError):
    """Sold output is not positive; ratios are undefined."""


class YearNotCovered(ValueError):
    """The trajectory ends before (or starts after) the requested year."""


class FullState(NamedTuple):
    """Extensive economic block plus the climate block."""

    capital: float        # K, $T
    debt: float           # D, $T
    wage: float           # w, $/worker-yr
    price: float          # p, index
    productivity: float   # a, $/worker-yr
    workforce: float      # N, billions
    sigma: float
    g_sigma: float
    e_land: float
    co2_at: float
    co2_up: float
    co2_lo: float
    temp: float
    temp_lo: float
    p_bs: float
    p_c: float

    def climate_state(self) -> ClimateState:
        return ClimateState(*self[6:])


FULL_STATE_NAMES = FullState._fields
REDUCED_STATE_NAMES = econ.EconState._fields

DERIVED_NAMES = ("lam", "omega", "d", "pi", "y_gross", "y", "damage",
                 "abatement", "reduction", "e_ind")
REDUCED_DERIVED_NAMES = ("lam", "omega", "d", "pi")


@dataclass(frozen=True)
class FeedbackMode:
    damages_enabled: bool = True
    policy_enabled: bool = True

    @property
    def any_enabled(self) -> bool:
        return self.damages_enabled or self.policy_enabled


FEEDBACK_FULL = FeedbackMode(True, True)
FEEDBACK_OFF = FeedbackMode(False, False)

GOOD = "good"
OUTSIDE_BOUNDS = "outside_bounds"
BAD = "bad"
DIVERGENT = "divergent"


@dataclass(frozen=True)
class Outcome:
    category: str
    lam: float
    omega: float
    d: float
    temp: float
    year: float


class Ratios(NamedTuple):
    lam: float
    omega: float
    d: float
    pi: float
    y_gross: float    # Y0, $T/yr
    y: float          # sold output, $T/yr
    damage: float     # fraction of output destroyed
    abatement: float  # abatement cost per unit of gross production
    reduction: float  # emission reduction rate n


def labour(capital: float, productivity: float, p: ParamSet) -> float:
    """Employed workers (billions); labour demand uses gross output."""
    y_gross = capital / p.nu
    return y_gross * DOLLARS_PER_TRILLION / productivity / 1.0e9


def ratios(state: FullState, mode: FeedbackMode, p: ParamSet) -> Ratios:
    """Reduced-form ratios and feedback quantities of an extensive state.

    Raises :class:`DegenerateOutput` when sold output (or the price level)
    is not positive, in which case no ratio is defined.
    """
    state = FullState(*state)
    y_gross = state.capital / p.nu
    if y_gross <= 0.0 or state.price <= 0.0:
        raise DegenerateOutput("gross output and price must be positive")
    workers = labour(state.capital, state.productivity, p)
    lam = workers / state.workforce

    pol = policy_outputs(state.sigma, state.p_bs, state.p_c, y_gross, p,
                         enabled=mode.policy_enabled)
    dmg = damage_fraction(state.temp, p) if mode.damages_enabled else 0.0
    y_sold = (1.0 - dmg) * (1.0 - pol.abatement) * y_gross
    if y_sold <= 0.0:
        raise DegenerateOutput("sold output is not positive")

    nominal_output = state.price * y_sold
    wage_bill = state.wage * workers * _TRILLION_PER_WAGE_BILLION
    omega = wage_bill / nominal_output
    d = state.debt / nominal_output
    profit_nominal = (nominal_output - wage_bill - p.r * state.debt
                      + state.price * (pol.subsidy - pol.carbon_tax))
    pi = profit_nominal / nominal_output
    return Ratios(lam, omega, d, pi, y_gross, y_sold, dmg, pol.abatement,
                  pol.reduction)


def profit(state: FullState, mode: FeedbackMode, p: ParamSet) -> float:
    """Nominal firm profits ($T/yr); reduces to p*Y - wL - r*D without feedback."""
    rat = ratios(state, mode, p)
    return rat.pi * FullState(*state).price * rat.y


def full_field(state, t: float, mode: FeedbackMode, p: ParamSet) -> np.ndarray:
    """Time derivative of the 16-dimensional state at ``t`` years from start.

    Investment and dividends scale with sold output; the debt equation is
    the nominal accounting identity D' = p*I - Pi + div*p*Y.  Non-positive
    output or price produces a NaN vector, which integrators treat as a
    divergence signal.
    """
    s = FullState(*state)
    try:
        rat = ratios(s, mode, p)
    except DegenerateOutput:
        return np.full(16, np.nan)

    i_rate = econ.inflation(rat.omega, p)
    kappa = econ.investment_share(rat.pi, p)
    div = econ.dividend_share(rat.pi, p)
    investment = kappa * rat.y
    nominal_output = s.price * rat.y
    profit_nominal = rat.pi * nominal_output

    cli = s.climate_state()
    drivers = climate.driver_flux(cli, p)
    e_ind = climate.industrial_emissions(s.sigma, rat.reduction, rat.y_gross)
    e_total = (e_ind + s.e_land) / p.emission_carbon_divisor
    co2_flux = climate.carbon_flux((s.co2_at, s.co2_up, s.co2_lo), e_total, p)
    forcing = climate.radiative_forcing(s.co2_at, t, p)
    d_temp, d_temp_lo = climate.temperature_flux(s.temp, s.temp_lo, forcing, p)

    return np.array(
        [
            investment - p.delta * s.capital,
            s.price * investment - profit_nominal + div * nominal_output,
            s.wage * (econ.phillips(rat.lam, p) + p.gamma * i_rate),
            s.price * i_rate,
            p.alpha * s.productivity,
            p.delta_n * s.workforce * (1.0 - s.workforce / p.n_max),
            drivers[0],
            drivers[1],
            drivers[2],
            co2_flux[0],
            co2_flux[1],
            co2_flux[2],
            d_temp,
            d_temp_lo,
            drivers[3],
            drivers[4],
        ]
    )


def full_state_from_initial(ic: InitialConditions) -> FullState:
    return FullState(
        capital=ic.capital, debt=ic.debt, wage=ic.wage, price=ic.price,
        productivity=ic.productivity, workforce=ic.workforce, sigma=ic.sigma,
        g_sigma=ic.g_sigma, e_land=ic.e_land, co2_at=ic.co2_at,
        co2_up=ic.co2_up, co2_lo=ic.co2_lo, temp=ic.temp, temp_lo=ic.temp_lo,
        p_bs=ic.p_bs, p_c=ic.p_c,
    )


def full_state_from_ratios(lam: float, omega: float, d: float,
                           ic: InitialConditions, mode: FeedbackMode,
                           p: ParamSet) -> FullState:
    """Extensive state matching target starting ratios.

    Capital, price, workforce and the climate block keep their configured
    initial values; productivity, wage and debt are solved so that
    ``ratios`` returns exactly (lam, omega, d).
    """
    base = full_state_from_initial(ic)
    y_gross = base.capital / p.nu
    workers = lam * base.workforce
    productivity = y_gross * DOLLARS_PER_TRILLION / (workers * 1.0e9)

    pol = policy_outputs(base.sigma, base.p_bs, base.p_c, y_gross, p,
                         enabled=mode.policy_enabled)
    dmg = damage_fraction(base.temp, p) if mode.damages_enabled else 0.0
    y_sold = (1.0 - dmg) * (1.0 - pol.abatement) * y_gross
    nominal_output = base.price * y_sold
    wage = omega * nominal_output / (workers * _TRILLION_PER_WAGE_BILLION)
    debt = d * nominal_output
    return base._replace(productivity=productivity, wage=wage, debt=debt)


def reduced_state_from_initial(ic: InitialConditions, mode: FeedbackMode,
                               p: ParamSet) -> econ.EconState:
    """Starting ratios implied by the extensive initial conditions."""
    rat = ratios(full_state_from_initial(ic), mode, p)
    return econ.EconState(rat.lam, rat.omega, rat.d, ic.workforce)


# ---------------------------------------------------------------------------
# derived columns, classification, divergence guards

def derived_full(states: np.ndarray, times: np.ndarray, mode: FeedbackMode,
                 p: ParamSet) -> np.ndarray:
    """Vectorised ratio columns for a matrix of full states (one row per time)."""
    K, D, w, price, a, N = (states[:, j] for j in range(6))
    sigma, p_bs, p_c = states[:, 6], states[:, 14], states[:, 15]
    temp = states[:, 12]
    y_gross = K / p.nu
    workers = y_gross * DOLLARS_PER_TRILLION / a / 1.0e9
    lam = workers / N

    if mode.policy_enabled:
        ratio = p_c / ((1.0 - p.s_a) * p_bs)
        n_red = np.minimum(np.maximum(ratio, 0.0) ** (1.0 / (p.theta - 1.0)), 1.0)
        n_red = np.where(ratio >= 1.0, 1.0, n_red)
        abat = sigma * TC_PER_DOLLAR * p_bs * n_red ** p.theta / p.theta
    else:
        n_red = np.zeros_like(K)
        abat = np.zeros_like(K)
    if mode.damages_enabled:
        tpos = np.maximum(temp, 0.0)
        dmg = 1.0 - 1.0 / (1.0 + p.zeta1 * tpos + p.zeta2 * tpos ** 2
                           + p.zeta3 * tpos ** p.zeta4)
    else:
        dmg = np.zeros_like(K)

    y_sold = (1.0 - dmg) * (1.0 - abat) * y_gross
    nominal = price * y_sold
    wage_bill = w * workers * _TRILLION_PER_WAGE_BILLION
    omega = wage_bill / nominal
    d_ratio = D / nominal
    e_ind = sigma * (1.0 - n_red) * y_gross
    carbon_tax = p_c * e_ind * TONNES_PER_GT / DOLLARS_PER_TRILLION
    subsidy = p.s_a * abat * y_gross
    pi = (nominal - wage_bill - p.r * D + price * (subsidy - carbon_tax)) / nominal
    return np.column_stack(
        [lam, omega, d_ratio, pi, y_gross, y_sold, dmg, abat, n_red, e_ind]
    )


def derived_reduced(states: np.ndarray, p: ParamSet) -> np.ndarray:
    lam, omega, d = states[:, 0], states[:, 1], states[:, 2]
    pi = 1.0 - omega - p.r * d
    return np.column_stack([lam, omega, d, pi])


def attach_derived(traj: Trajectory, variant: str, mode: FeedbackMode,
                   p: ParamSet, start_year: float) -> Trajectory:
    """Fill the derived-ratio matrix of a finished trajectory in place."""
    if variant == "reduced":
        traj.state_names = REDUCED_STATE_NAMES
        traj.derived = derived_reduced(traj.states, p)
        traj.derived_names = REDUCED_DERIVED_NAMES
    else:
        traj.state_names = FULL_STATE_NAMES
        traj.derived = derived_full(traj.states, traj.times - start_year, mode, p)
        traj.derived_names = DERIVED_NAMES
    return traj


def classify_outcome(traj: Trajectory) -> Outcome:
    """Categorise a finished run from its ending ratio values.

    Good requires employment rate and wage share in [0.4, 0.99] and a debt
    ratio at most 2.7; a run ending with employment or wage share above
    0.99 is outside bounds; anything else is bad.  Early-terminated runs
    are divergent.
    """
    if traj.derived is None or len(traj.times) == 0:
        raise ValueError("trajectory has no derived ratios to classify")
    lam = float(traj.column("lam")[-1])
    omega = float(traj.column("omega")[-1])
    d = float(traj.column("d")[-1])
    temp = float(traj.column("temp")[-1]) if "temp" in traj.state_names else math.nan
    year = float(traj.times[-1])
    if not traj.completed:
        category = DIVERGENT
    elif 0.4 <= lam <= 0.99 and 0.4 <= omega <= 0.99 and d <= 2.7:
        category = GOOD
    elif lam > 0.99 or omega > 0.99:
        category = OUTSIDE_BOUNDS
    else:
        category = BAD
    return Outcome(category, lam, omega, d, temp, year)


def value_at_year(traj: Trajectory, column: str, year: float) -> float:
    times = traj.times
    idx = int(np.searchsorted(times, year))
    if idx >= len(times) or abs(times[idx] - year) > 1e-9:
        raise YearNotCovered(f"trajectory does not cover year {year}")
    return float(traj.column(column)[idx])


def mc_good(traj: Trajectory, year: float = 2100.0, threshold: float = 0.4) -> bool:
    """Strict employment-rate test at the readout year."""
    return value_at_year(traj, "lam", year) > threshold


def reduced_divergence_guard(limit: float = 1e6):
    def guard(t: float, y: np.ndarray) -> bool:
        return not np.all(np.isfinite(y)) or abs(y[2]) > limit
    return guard


def full_divergence_guard(mode: FeedbackMode, p: ParamSet, limit: float = 1e6):
    def guard(t: float, y: np.ndarray) -> bool:
        if not np.all(np.isfinite(y)):
            return True
        try:
            rat = ratios(FullState(*y), mode, p)
        except DegenerateOutput:
            return True
        return abs(rat.d) > limit
    return guard


def export_trajectory_csv(path, traj: Trajectory) -> None:
    """Write one row per grid point: year, state columns, derived columns."""
    header = ",".join(("year",) + tuple(traj.state_names) + tuple(traj.derived_names))
    blocks = [traj.times[:, None], traj.states]
    if traj.derived is not None:
        blocks.append(traj.derived)
    data = np.column_stack(blocks)
    np.savetxt(path, data, fmt="%.12g", delimiter=",", header=header, comments="")
