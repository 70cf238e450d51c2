"""Coupled climate-economy model with a global sensitivity-analysis pipeline.

The economic core is a debt-cycle (Goodwin-Keen family) model with markup
pricing; the climate side is a three-reservoir carbon cycle with a
two-layer energy balance and an abatement/carbon-price policy block.  The
package integrates the coupled system, maps basins of attraction, sweeps
parameter space with Sobol sequences, propagates fitted parameter
distributions by Monte Carlo, and quantifies parameter influence with
logistic regression and partial rank correlation coefficients.
"""

from .params import (ExperimentConfig, InitialConditions, ParamSet,
                     default_initial_conditions, default_params, validate)
from .econ import (EconState, EquilibriumSet, interior_equilibria,
                   reduced_field, secondary_wage_equilibrium)
from .climate import ClimateState, PolicyOutputs
from .coupled import (FeedbackMode, FullState, Outcome, Trajectory,
                      classify_outcome, full_field, mc_good, ratios)
from .ode import SolverSettings, integrate
from .sampling import DistributionSpec, SobolSequence, fitted_distributions
from .sensitivity import (DesignMatrix, SensitivityReport, analyze_batch,
                          logistic_fit, prcc, rank_transform, standardize)
from .runner import (run_basin_grid, run_monte_carlo, run_scenario,
                     run_sobol_sweep, summarize)

__version__ = "0.1.0"
