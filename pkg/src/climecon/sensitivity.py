"""Statistical post-processing of batch runs.

Given parameter draws and per-run outputs, this module standardises the
design matrix, fits a logistic regression of the binary outcome by
iteratively reweighted least squares, and computes partial rank correlation
coefficients (PRCC) of each parameter with the continuous output on the
subset of good runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class SensitivityError(ValueError):
    pass


class ZeroVariance(SensitivityError):
    def __init__(self, column: str):
        super().__init__(f"column {column!r} has zero variance")
        self.column = column


class SingleClass(SensitivityError):
    pass


class Separation(SensitivityError):
    pass


class InsufficientData(SensitivityError):
    pass


@dataclass(frozen=True)
class DesignMatrix:
    """Run-by-parameter matrix with column names and standardisation info."""

    values: np.ndarray
    names: tuple[str, ...]
    means: tuple[float, ...] | None = None
    sds: tuple[float, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise ValueError("design matrix must be 2-D")
        if values.shape[1] != len(self.names):
            raise ValueError("number of names must match number of columns")
        if not np.all(np.isfinite(values)):
            raise ValueError("design matrix contains non-finite entries")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


def standardize(dm: DesignMatrix) -> DesignMatrix:
    """Centre each column to mean 0 and scale to sample standard deviation 1."""
    means = dm.values.mean(axis=0)
    sds = dm.values.std(axis=0, ddof=1)
    for j, sd in enumerate(sds):
        if sd == 0.0 or not math.isfinite(sd):
            raise ZeroVariance(dm.names[j])
    return DesignMatrix(
        values=(dm.values - means) / sds,
        names=dm.names,
        means=tuple(means),
        sds=tuple(sds),
    )


@dataclass(frozen=True)
class LogisticFit:
    """Maximum-likelihood logistic coefficients; index 0 is the intercept."""

    coef: np.ndarray
    stderr: np.ndarray
    n_iter: int
    converged: bool

    @property
    def z_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coef / self.stderr


def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    return float(np.dot(y, eta) - np.logaddexp(0.0, eta).sum())


def logistic_fit(X: np.ndarray, y: np.ndarray, tol: float = 1e-8,
                 max_iter: int = 100, separation_norm: float = 25.0) -> LogisticFit:
    """Fit P(y=1) = sigmoid(b0 + X b) by iteratively reweighted least squares.

    Standard errors come from the inverse observed information at the
    optimum.  A coefficient norm exceeding ``separation_norm`` while the
    likelihood is still improving is reported as :class:`Separation`
    (complete or quasi-complete separation has no finite MLE); a response
    with only one class is :class:`SingleClass`.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, k) with matching y")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise ValueError("y must be binary 0/1")
    if classes.size < 2:
        raise SingleClass("response contains a single class")

    n = X.shape[0]
    Xd = np.column_stack([np.ones(n), X])
    beta = np.zeros(Xd.shape[1])
    loglik = _log_likelihood(Xd @ beta, y)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = Xd @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = np.clip(mu * (1.0 - mu), 1e-12, None)
        score = Xd.T @ (y - mu)
        if np.max(np.abs(score)) < tol:
            converged = True
            break
        sqrt_w = np.sqrt(w)
        z = eta + (y - mu) / w
        beta, *_ = np.linalg.lstsq(sqrt_w[:, None] * Xd, sqrt_w * z, rcond=None)
        new_loglik = _log_likelihood(Xd @ beta, y)
        if np.linalg.norm(beta) > separation_norm and new_loglik > loglik:
            raise Separation(
                "coefficients diverging with improving likelihood; "
                "classes are (quasi-)separated"
            )
        loglik = new_loglik

    eta = Xd @ beta
    mu = 1.0 / (1.0 + np.exp(-eta))
    w = np.clip(mu * (1.0 - mu), 1e-12, None)
    info = Xd.T @ (w[:, None] * Xd)
    cov = np.linalg.pinv(info)
    stderr = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return LogisticFit(coef=beta, stderr=stderr, n_iter=it, converged=converged)


def rank_transform(values) -> np.ndarray:
    """Ranks 1..n with ties given the average of their positional ranks."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError("rank_transform expects a vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("rank_transform requires finite entries")
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    ranks[order] = np.arange(1, x.size + 1, dtype=float)
    uniq, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    sums = np.zeros(uniq.size)
    np.add.at(sums, inverse, ranks)
    return sums[inverse] / counts[inverse]


def prcc(X: np.ndarray, y: np.ndarray, names: Sequence[str] | None = None) -> np.ndarray:
    """Partial rank correlation of each column of X with y.

    All columns and the output are rank-transformed; each PRCC is the
    Pearson correlation of the residuals of rank(x_j) and rank(y) after
    regressing both on the remaining rank columns (with intercept).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    if names is None:
        names = [f"x{j}" for j in range(k)]
    if n <= k + 2:
        raise InsufficientData(f"need n > k + 2, got n={n}, k={k}")
    for j in range(k):
        if np.all(X[:, j] == X[0, j]):
            raise ZeroVariance(str(names[j]))
    if np.all(y == y[0]):
        raise ZeroVariance("output")

    ranks = np.column_stack([rank_transform(X[:, j]) for j in range(k)])
    rank_y = rank_transform(y)
    out = np.empty(k)
    for j in range(k):
        others = np.column_stack([np.ones(n), np.delete(ranks, j, axis=1)])
        coef_x, *_ = np.linalg.lstsq(others, ranks[:, j], rcond=None)
        coef_y, *_ = np.linalg.lstsq(others, rank_y, rcond=None)
        res_x = ranks[:, j] - others @ coef_x
        res_y = rank_y - others @ coef_y
        denom = math.sqrt(float(res_x @ res_x) * float(res_y @ res_y))
        if denom == 0.0:
            raise ZeroVariance(str(names[j]))
        out[j] = float(res_x @ res_y) / denom
    return out


@dataclass
class SensitivityReport:
    """Per-parameter logistic coefficients and PRCC values with metadata.

    A failed stage leaves its arrays as None and records the reason, so a
    report is always produced even for degenerate batches.
    """

    names: tuple[str, ...]
    n_total: int
    n_good: int
    threshold: float
    year: float
    seed: int | None = None
    logit_coef: np.ndarray | None = None
    logit_stderr: np.ndarray | None = None
    logit_z: np.ndarray | None = None
    logit_intercept: float | None = None
    logit_intercept_stderr: float | None = None
    logit_converged: bool | None = None
    logit_error: str | None = None
    prcc: np.ndarray | None = None
    prcc_error: str | None = None

    def as_dict(self) -> dict:
        def arr(a):
            return None if a is None else [float(v) for v in a]

        return {
            "parameters": list(self.names),
            "n_total": self.n_total,
            "n_good": self.n_good,
            "threshold": self.threshold,
            "year": self.year,
            "seed": self.seed,
            "logistic": {
                "intercept": self.logit_intercept,
                "intercept_stderr": self.logit_intercept_stderr,
                "coefficients": arr(self.logit_coef),
                "stderr": arr(self.logit_stderr),
                "z_values": arr(self.logit_z),
                "converged": self.logit_converged,
                "error": self.logit_error,
            },
            "prcc": {"values": arr(self.prcc), "error": self.prcc_error},
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def to_csv(self) -> str:
        lines = ["parameter,logit_coef,logit_stderr,prcc,n_good,n_total"]
        for j, name in enumerate(self.names):
            coef = "" if self.logit_coef is None else f"{self.logit_coef[j]!r}"
            se = "" if self.logit_stderr is None else f"{self.logit_stderr[j]!r}"
            pr = "" if self.prcc is None else f"{self.prcc[j]!r}"
            lines.append(f"{name},{coef},{se},{pr},{self.n_good},{self.n_total}")
        return "\n".join(lines) + "\n"


def analyze_batch(draws: DesignMatrix, lam_readout: np.ndarray,
                  threshold: float = 0.4, year: float = 2100.0,
                  seed: int | None = None) -> SensitivityReport:
    """Run the full statistical pipeline on one batch of runs.

    The binary outcome is ``lam_readout > threshold`` (non-finite readouts,
    i.e. runs that died before the readout year, count as failures).  The
    logistic regression uses all runs on standardised draws; PRCC uses the
    good-run subset with the employment readout as output.  Stage failures
    (single class, separation, too few good runs) are captured in the
    report instead of raised.
    """
    lam_readout = np.asarray(lam_readout, dtype=float)
    if lam_readout.shape[0] != draws.n:
        raise ValueError("lam_readout length must match number of draws")
    good = np.isfinite(lam_readout) & (lam_readout > threshold)
    y = good.astype(float)
    report = SensitivityReport(
        names=draws.names, n_total=draws.n, n_good=int(good.sum()),
        threshold=threshold, year=year, seed=seed,
    )

    try:
        std = standardize(draws)
        fit = logistic_fit(std.values, y)
        report.logit_intercept = float(fit.coef[0])
        report.logit_intercept_stderr = float(fit.stderr[0])
        report.logit_coef = fit.coef[1:].copy()
        report.logit_stderr = fit.stderr[1:].copy()
        report.logit_z = fit.z_values[1:].copy()
        report.logit_converged = fit.converged
    except SensitivityError as exc:
        report.logit_error = f"{type(exc).__name__}: {exc}"

    try:
        if report.n_good < 2:
            raise InsufficientData("fewer than 2 good runs for PRCC")
        report.prcc = prcc(draws.values[good], lam_readout[good], names=draws.names)
    except SensitivityError as exc:
        report.prcc_error = f"{type(exc).__name__}: {exc}"
    return report
