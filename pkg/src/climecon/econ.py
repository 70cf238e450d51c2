"""Behavioural closures and the reduced 4-D debt-cycle economy.

The reduced model tracks the employment rate ``lam``, the wage share
``omega``, the debt-to-output ratio ``d`` and the workforce ``n`` (billions).
Wage bargaining follows a linear Phillips curve, prices relax toward a
markup over unit labour cost, and investment and dividends are truncated
linear functions of the profit share.  The module also provides the
closed-form interior equilibria of the system and the secondary equilibrium
wage share reached when employment collapses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .params import ParamSet


class EconError(ValueError):
    """Base class for equilibrium computation failures."""


class KappaNotInvertible(EconError):
    """The required investment share lies outside the clamp interval."""


class NoInteriorEquilibrium(EconError):
    """The equilibrium quadratic has no admissible (omega > 0) root."""


class MoneyIllusionSingular(EconError):
    """gamma = 1 makes the secondary wage equilibrium undefined."""


class EconState(NamedTuple):
    """Reduced state (employment rate, wage share, debt ratio, workforce)."""

    lam: float
    omega: float
    d: float
    workforce: float


@dataclass(frozen=True)
class Equilibrium:
    """One interior equilibrium, verified by substitution into the field."""

    lam: float
    omega: float
    d: float
    workforce: float
    economic: bool       # lam in (0, 1]; non-economic roots are kept, flagged
    residual: float      # max-norm of the reduced field at the equilibrium

    def as_state(self) -> EconState:
        return EconState(self.lam, self.omega, self.d, self.workforce)


@dataclass(frozen=True)
class SecondaryEquilibrium:
    """Zero-employment equilibrium wage share with its admissibility flag."""

    omega: float
    admissible: bool


@dataclass(frozen=True)
class EquilibriumSet:
    interior: tuple[Equilibrium, ...]
    secondary: SecondaryEquilibrium | None
    # The collapse state (lam, omega) -> (0, 0) with unbounded debt ratio is
    # reached only asymptotically; simulations flag it via the divergence
    # guard rather than as a closed-form point.
    collapse_note: str = "collapse equilibrium (0, 0, inf) detected dynamically"


def phillips(lam: float, p: ParamSet) -> float:
    """Wage growth from bargaining at employment rate ``lam`` (1/yr)."""
    return p.phi0 + p.phi1 * lam


def inflation(omega: float, p: ParamSet) -> float:
    """Price inflation from the markup pricing rule (1/yr)."""
    return p.eta * (p.xi * omega - 1.0)


def profit_share(omega: float, d: float, p: ParamSet) -> float:
    """Profit share of nominal output."""
    return 1.0 - omega - p.r * d


def investment_share(pi: float, p: ParamSet) -> float:
    """Investment as a share of output: truncated linear in the profit share."""
    return min(max(p.kappa0 + p.kappa1 * pi, p.kappa_min), p.kappa_max)


def dividend_share(pi: float, p: ParamSet) -> float:
    """Dividends as a share of nominal output: truncated linear."""
    return min(max(p.div0 + p.div1 * pi, p.div_min), p.div_max)


def reduced_field(state, p: ParamSet) -> np.ndarray:
    """Time derivative of the reduced state ``(lam, omega, d, n)``.

    The debt equation is implemented in non-divided form,
    ``d' = kappa - pi + div - d*(i + kappa/nu - delta)``, which is smooth
    through d = 0.  Non-finite inputs propagate to non-finite outputs, which
    integrators treat as a divergence signal.
    """
    lam, omega, d, n = float(state[0]), float(state[1]), float(state[2]), float(state[3])
    i = p.eta * (p.xi * omega - 1.0)
    pi = 1.0 - omega - p.r * d
    kappa = min(max(p.kappa0 + p.kappa1 * pi, p.kappa_min), p.kappa_max)
    div = min(max(p.div0 + p.div1 * pi, p.div_min), p.div_max)
    growth = kappa / p.nu - p.delta
    n_growth = p.delta_n * (1.0 - n / p.n_max)
    return np.array(
        [
            lam * (growth - p.alpha - n_growth),
            omega * (p.phi0 + p.phi1 * lam - p.alpha - (1.0 - p.gamma) * i),
            kappa - pi + div - d * (i + growth),
            n * n_growth,
        ]
    )


def _kappa_inverse(target: float, p: ParamSet) -> float:
    """Invert the investment function strictly inside its clamp interval."""
    if not (p.kappa_min < target < p.kappa_max):
        raise KappaNotInvertible(
            f"required investment share {target:.6g} outside "
            f"({p.kappa_min}, {p.kappa_max})"
        )
    return (target - p.kappa0) / p.kappa1


def _phillips_inverse(target: float, p: ParamSet) -> float:
    return (target - p.phi0) / p.phi1


def secondary_wage_equilibrium(p: ParamSet) -> SecondaryEquilibrium:
    """Equilibrium wage share of the zero-employment states.

    Admissible only when positive; at gamma = 1 the defining balance
    degenerates and the value does not exist.
    """
    if p.gamma == 1.0:
        raise MoneyIllusionSingular("gamma = 1 leaves no secondary wage equilibrium")
    omega = 1.0 / p.xi + (phillips(0.0, p) - p.alpha) / (p.xi * p.eta * (1.0 - p.gamma))
    return SecondaryEquilibrium(omega=omega, admissible=omega > 0.0)


def interior_equilibria(p: ParamSet, verify_tol: float = 1e-9) -> EquilibriumSet:
    """Closed-form interior equilibria of the reduced system.

    The equilibrium profit share solves ``kappa(pi*) = nu*(alpha + delta)``;
    substituting the debt expression into the wage-share identity
    ``omega* = 1 - pi* - r d*`` yields a quadratic in ``d*``.  Real roots
    with positive wage share are returned (0 admissible roots raise
    :class:`NoInteriorEquilibrium`).  Every returned point is verified by
    substitution into :func:`reduced_field`.
    """
    pi_star = _kappa_inverse(p.nu * (p.alpha + p.delta), p)
    kappa_star = p.nu * (p.alpha + p.delta)
    borrow = kappa_star - pi_star + dividend_share(pi_star, p)

    # d*(alpha + i(omega*)) = borrow with omega* = 1 - pi* - r d* gives
    # a2 d^2 + b2 d + c2 = 0
    a2 = p.eta * p.xi * p.r
    b2 = -(p.alpha - p.eta + p.eta * p.xi * (1.0 - pi_star))
    c2 = borrow

    roots: list[float] = []
    if a2 == 0.0:
        if b2 != 0.0:
            roots.append(-c2 / b2)
    else:
        disc = b2 * b2 - 4.0 * a2 * c2
        if disc > 1e-12:
            sq = math.sqrt(disc)
            roots.extend([(-b2 - sq) / (2.0 * a2), (-b2 + sq) / (2.0 * a2)])
        elif disc > -1e-12:   # tangency: one double root
            roots.append(-b2 / (2.0 * a2))

    interior: list[Equilibrium] = []
    for d_star in roots:
        omega_star = 1.0 - pi_star - p.r * d_star
        if omega_star <= 0.0:
            continue
        lam_star = _phillips_inverse(
            p.alpha + (1.0 - p.gamma) * inflation(omega_star, p), p
        )
        field = reduced_field((lam_star, omega_star, d_star, p.n_max), p)
        residual = float(np.max(np.abs(field)))
        if residual > verify_tol:
            continue
        interior.append(
            Equilibrium(
                lam=lam_star,
                omega=omega_star,
                d=d_star,
                workforce=p.n_max,
                economic=0.0 < lam_star <= 1.0,
                residual=residual,
            )
        )
    if not interior:
        raise NoInteriorEquilibrium(
            "no quadratic root with positive wage share passes verification"
        )

    try:
        secondary = secondary_wage_equilibrium(p)
    except MoneyIllusionSingular:
        secondary = None
    return EquilibriumSet(interior=tuple(interior), secondary=secondary)
