"""Adaptive Dormand-Prince 5(4) integrator with dense output.

The integrator reports states on a fixed grid of ``steps_per_year`` points
per year, interpolated from the method's own continuous extension, and
supports early termination through a per-step divergence predicate.  All
control logic is deterministic: identical inputs produce bit-identical
trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# 5th-order minus embedded 4th-order weights (local error estimate)
_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                 -17253 / 339200, 22 / 525, -1 / 40])
# continuous-extension coefficients for the 4th-order interpolant
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
    -10690763975 / 1880347072, 701980252875 / 199316789632,
    -1453857185 / 822651844, 69997945 / 29380423,
])

_ORDER_EXPONENT = 0.2      # 1/(order of the embedded pair)
_PI_BETA = 0.04            # PI stabilisation (Gustafsson/Hairer)
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_MIN_STEP = 1e-12


@dataclass(frozen=True)
class SolverSettings:
    rtol: float = 1e-8
    atol: float = 1e-10
    initial_step: float | None = None
    max_step: float = 1.0
    max_steps: int = 1_000_000
    divergence: Callable[[float, np.ndarray], bool] | None = None

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Termination:
    kind: str                 # "completed" | "diverged" | "step_failure"
    time: float | None = None

    @property
    def completed(self) -> bool:
        return self.kind == "completed"


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    rhs_evals: int = 0


@dataclass
class Trajectory:
    """Integration output on the reporting grid.

    ``times`` and ``states`` only contain grid points actually reached;
    early-terminated runs return the reached prefix.  ``derived`` is filled
    by the model layer (ratio columns etc.), not by the integrator.
    """

    times: np.ndarray
    states: np.ndarray
    termination: Termination
    stats: StepStats
    state_names: tuple[str, ...] = ()
    derived: np.ndarray | None = None
    derived_names: tuple[str, ...] = ()

    @property
    def completed(self) -> bool:
        return self.termination.completed

    def column(self, name: str) -> np.ndarray:
        if name in self.state_names:
            return self.states[:, self.state_names.index(name)]
        if name in self.derived_names:
            return self.derived[:, self.derived_names.index(name)]
        raise KeyError(name)

    def end_state(self) -> np.ndarray:
        return self.states[-1]


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray,
                rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f, t0, y0, f0, t_end, settings: SolverSettings) -> float:
    """Hairer's starting-step heuristic (order 5), deterministic."""
    scale = settings.atol + settings.rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, abs(t_end - t0))
    y1 = y0 + h0 * f0
    f1 = np.asarray(f(t0 + h0, y1), dtype=float)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** _ORDER_EXPONENT
    return min(100 * h0, h1, settings.max_step, abs(t_end - t0))


def integrate(f, y0: Sequence[float], t0: float, t_end: float,
              settings: SolverSettings = SolverSettings(),
              steps_per_year: int = 20) -> Trajectory:
    """Integrate ``y' = f(t, y)`` and report on the fixed grid.

    Grid times are ``t0 + k / steps_per_year`` computed by integer
    multiplication.  The divergence predicate (if any) is evaluated once per
    accepted step; when it fires, grid points inside the final step are
    still reported and the trajectory is marked diverged.  A step size
    underflow or step budget exhaustion yields a ``step_failure``
    termination with the partial trajectory.
    """
    y = np.asarray(y0, dtype=float).copy()
    dim = y.size
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state contains non-finite values")

    n_grid = int(round((t_end - t0) * steps_per_year))
    if n_grid < 1 or abs(t0 + n_grid / steps_per_year - t_end) > 1e-9:
        raise ValueError("t_end - t0 must be a positive multiple of 1/steps_per_year")
    grid = t0 + np.arange(n_grid + 1) * (1.0 / steps_per_year)
    grid[-1] = t_end

    out = np.empty((n_grid + 1, dim))
    out[0] = y
    next_grid = 1

    stats = StepStats()
    with np.errstate(all="ignore"):
        f0 = np.asarray(f(t0, y), dtype=float)
    stats.rhs_evals += 1
    if not np.all(np.isfinite(f0)):
        raise ValueError("field is not finite at the initial state")

    h = settings.initial_step
    if h is None:
        with np.errstate(all="ignore"):
            h = _initial_step(f, t0, y, f0, t_end, settings)
        stats.rhs_evals += 1
    h = min(h, settings.max_step, t_end - t0)

    t = t0
    k = np.empty((7, dim))
    k[0] = f0
    err_old = 1e-4
    factor_cap = _MAX_FACTOR

    def finish(kind: str, when: float | None) -> Trajectory:
        return Trajectory(
            times=grid[:next_grid],
            states=out[:next_grid],
            termination=Termination(kind, when),
            stats=stats,
        )

    while t < t_end:
        if stats.accepted + stats.rejected >= settings.max_steps:
            return finish("step_failure", t)
        h = min(h, t_end - t)
        if h < _MIN_STEP:
            return finish("step_failure", t)

        with np.errstate(all="ignore"):
            for i in range(1, 7):
                yi = y + h * (k[:i].T @ _A[i])
                k[i] = f(t + _C[i] * h, yi)
            stats.rhs_evals += 6
            y1 = y + h * (k.T @ _B5)
            err_vec = h * (k.T @ _ERR)

        if not np.all(np.isfinite(y1)):
            # treat like a failed step first: maybe the step overshot
            stats.rejected += 1
            h *= _MIN_FACTOR
            factor_cap = 1.0
            if h < _MIN_STEP:
                return finish("diverged", t)
            continue

        err = _error_norm(err_vec, y, y1, settings.rtol, settings.atol)
        if err > 1.0:
            stats.rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** -_ORDER_EXPONENT)
            factor_cap = 1.0
            continue

        # accepted: fill all grid points inside (t, t+h] from the
        # continuous extension
        stats.accepted += 1
        t_new = t + h
        if t_end - t_new < 1e-13 * (1.0 + abs(t_end)):
            t_new = t_end
        if next_grid <= n_grid and grid[next_grid] <= t_new + 1e-13:
            hi = next_grid
            while hi <= n_grid and grid[hi] <= t_new + 1e-13:
                hi += 1
            theta = (grid[next_grid:hi] - t) / h
            dy = y1 - y
            c3 = h * k[0] - dy
            c4 = dy - h * k[6] - c3
            c5 = h * (k.T @ _D)
            th = theta[:, None]
            out[next_grid:hi] = (
                y + th * (dy + (1.0 - th) * (c3 + th * (c4 + (1.0 - th) * c5)))
            )
            next_grid = hi

        diverged = settings.divergence is not None and settings.divergence(t_new, y1)
        y = y1
        t = t_new
        k[0] = k[6]  # FSAL

        if diverged:
            return finish("diverged", t)

        factor = _SAFETY * err ** -_ORDER_EXPONENT * err_old ** _PI_BETA
        h = min(h * min(factor_cap, max(_MIN_FACTOR, factor)), settings.max_step)
        err_old = max(err, 1e-4)
        factor_cap = _MAX_FACTOR

    return Trajectory(
        times=grid,
        states=out,
        termination=Termination("completed"),
        stats=stats,
    )
