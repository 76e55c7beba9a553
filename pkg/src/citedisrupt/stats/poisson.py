"""Poisson regression with exposure by IRLS, with HC0 sandwich standard errors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from ..errors import ConvergenceError, ValidationError

CONSTANT = "constant"
SEPARATION_MU = 1e-10


@dataclass
class RegressionFit:
    names: list
    coef: np.ndarray
    robust_se: np.ndarray
    model_se: np.ndarray
    loglik: float
    deviance: float
    null_deviance: float
    predictor_sd: np.ndarray
    percentage_change: np.ndarray
    iterations: int
    converged: bool
    mu: np.ndarray = field(repr=False)
    trace: list = field(default_factory=list, repr=False)

    @property
    def t(self) -> np.ndarray:
        return self.coef / self.robust_se

    def coefficient(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])


def percentage_change(beta, sd):
    """Percent change in the expected count for a one-sd increase of the predictor."""
    return 100.0 * np.expm1(np.asarray(beta, dtype=np.float64) * np.asarray(sd, dtype=np.float64))


def poisson_deviance(y, mu) -> float:
    y = np.asarray(y, dtype=np.float64)
    return float(2.0 * np.sum(xlogy(y, y) - xlogy(y, mu) - (y - mu)))


def _check_rank(x, names):
    for k in range(1, x.shape[1] + 1):
        if np.linalg.matrix_rank(x[:, :k]) < k:
            raise ValidationError(f"design matrix is rank deficient: column {names[k - 1]!r} is collinear")


def poisson_fit(y, X=None, exposure=None, names: Optional[Sequence[str]] = None,
                add_intercept: bool = True, tol: float = 1e-10, max_iter: int = 100) -> RegressionFit:
    """Fit ``log E[y] = log(exposure) + X @ beta`` by iteratively reweighted least squares.

    Iteration stops when ``|dev - dev_prev| / (|dev| + 0.1) < tol``. The
    first coefficient is the intercept when ``add_intercept``.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.size
    if n == 0:
        raise ValidationError("empty response")
    if np.isnan(y).any() or (y < 0).any() or (y != np.round(y)).any():
        raise ValidationError("response must be non-negative integer counts")
    if X is None:
        X = np.zeros((n, 0))
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != n:
        raise ValidationError(f"X has {X.shape[0]} rows, y has {n}")
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise ValidationError("names must match the predictor columns")
    predictor_sd = X.std(axis=0, ddof=1) if n > 1 else np.zeros(X.shape[1])
    if add_intercept:
        X = np.column_stack([np.ones(n), X])
        names = [CONSTANT, *names]
    if np.isnan(X).any():
        raise ValidationError("predictors contain NA")
    _check_rank(X, names)

    if exposure is None:
        exposure = np.ones(n)
    exposure = np.asarray(exposure, dtype=np.float64).ravel()
    if exposure.size != n or not (exposure > 0).all():
        raise ValidationError("exposure must be positive with one value per observation")
    offset = np.log(exposure)
    if y.sum() == 0:
        raise ConvergenceError("all responses are zero; the maximum-likelihood estimate does not exist")

    mu = (y + y.mean()) / 2.0
    eta = np.log(mu)
    dev_prev = poisson_deviance(y, mu)
    trace = [dev_prev]
    beta = np.zeros(X.shape[1])
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z = eta - offset + (y - mu) / mu
        w = np.sqrt(mu)
        beta, *_ = np.linalg.lstsq(X * w[:, None], z * w, rcond=None)
        eta = X @ beta + offset
        if not np.isfinite(eta).all() or eta.max() > 700:
            raise ConvergenceError(f"IRLS diverged at iteration {it}", trace)
        mu = np.exp(eta)
        dev = poisson_deviance(y, mu)
        trace.append(dev)
        if abs(dev - dev_prev) / (abs(dev) + 0.1) < tol:
            converged = True
            break
        dev_prev = dev
    if not converged:
        raise ConvergenceError(f"IRLS did not converge in {max_iter} iterations", trace)
    # the deviance settles while coefficients run off to -inf under separation
    vanished = mu < SEPARATION_MU * exposure
    if vanished.any():
        raise ConvergenceError(
            f"fitted rates numerically zero for {int(vanished.sum())} observation(s); "
            "the data are separated and the estimate does not exist", trace,
        )

    xtwx = X.T @ (X * mu[:, None])
    bread = np.linalg.inv(xtwx)
    resid = y - mu
    meat = X.T @ (X * (resid ** 2)[:, None])
    robust_cov = bread @ meat @ bread
    robust_se = np.sqrt(np.diag(robust_cov))
    model_se = np.sqrt(np.diag(bread))

    rate = y.sum() / exposure.sum()
    null_dev = poisson_deviance(y, rate * exposure) if add_intercept else math.nan
    loglik = float(np.sum(xlogy(y, mu) - mu - gammaln(y + 1.0)))

    pc_beta = beta[1:] if add_intercept else beta
    pc = percentage_change(pc_beta, predictor_sd)
    if add_intercept:
        predictor_sd = np.r_[math.nan, predictor_sd]
        pc = np.r_[math.nan, pc]
    return RegressionFit(
        names=names, coef=beta, robust_se=robust_se, model_se=model_se, loglik=loglik,
        deviance=trace[-1], null_deviance=null_dev, predictor_sd=predictor_sd,
        percentage_change=pc, iterations=it, converged=converged, mu=mu, trace=trace,
    )


def score_gradient(fit: RegressionFit, y, X, add_intercept: bool = True) -> np.ndarray:
    """Gradient of the log-likelihood at the fitted coefficients."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if add_intercept:
        X = np.column_stack([np.ones(X.shape[0]), X])
    return X.T @ (np.asarray(y, dtype=np.float64) - fit.mu)
