"""Principal-component factor analysis with varimax rotation and factor scores."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

import numpy as np

from ..errors import ConvergenceError, ValidationError
from ..tsvio import fmt_fixed, write_table
from .correlation import CorrelationMatrix, correlation_matrix, transformed_columns

PSD_TOLERANCE = -1e-8


@dataclass
class FactorModel:
    variables: list
    eigenvalues: np.ndarray
    n_factors: int
    loadings: np.ndarray
    rotated: np.ndarray
    uniqueness: np.ndarray
    rotation: np.ndarray
    corr: np.ndarray
    transform: bool = True
    criterion_trace: list = field(default_factory=list)

    @property
    def communality(self) -> np.ndarray:
        return (self.rotated ** 2).sum(axis=1)

    @property
    def explained(self) -> np.ndarray:
        return (self.rotated ** 2).sum(axis=0)

    def factor_names(self) -> list:
        return [f"factor_{k + 1}" for k in range(self.n_factors)]

    def write(self, stream: TextIO) -> None:
        """Rotated loadings with uniqueness, then explained variance and eigenvalues."""
        k = self.n_factors
        header = ["row_type", "name", *self.factor_names(), "uniqueness", "value"]
        na = ["NA"] * k
        rows = []
        for v, load, u in zip(self.variables, self.rotated, self.uniqueness):
            rows.append(["loading", v, *(fmt_fixed(x) for x in load), fmt_fixed(u), "NA"])
        rows.append(["explained", "variance", *(fmt_fixed(x) for x in self.explained), "NA", "NA"])
        for i, ev in enumerate(self.eigenvalues, 1):
            rows.append(["eigenvalue", str(i), *na, "NA", fmt_fixed(ev)])
        write_table(stream, header, rows)


def varimax_criterion(loadings) -> float:
    """Sum over factors of the variance of the squared loadings."""
    sq = np.asarray(loadings, dtype=np.float64) ** 2
    if sq.size == 0:
        return 0.0
    return float(((sq ** 2).mean(axis=0) - sq.mean(axis=0) ** 2).sum())


def _pair_angle(x, y):
    p = x.size
    u = x * x - y * y
    v = 2.0 * x * y
    a = u.sum()
    b = v.sum()
    c = (u * u - v * v).sum()
    d = 2.0 * (u * v).sum()
    return math.atan2(d - 2.0 * a * b / p, c - (a * a - b * b) / p) / 4.0


def varimax_sweeps(loadings, kaiser: bool = True, tol: float = 1e-8, max_sweeps: int = 1000):
    """Kaiser's pairwise-rotation varimax.

    Returns ``(rotated, rotation, criterion_trace)`` where
    ``rotated = loadings @ rotation`` and the trace holds the criterion
    (of the normalized loadings when ``kaiser``) before the first sweep and
    after each sweep.
    """
    a = np.array(loadings, dtype=np.float64, copy=True)
    p, k = a.shape
    rot = np.eye(k)
    if k < 2:
        return a, rot, [varimax_criterion(a)]
    if kaiser:
        h = np.sqrt((a ** 2).sum(axis=1))
        h[h == 0.0] = 1.0
        a = a / h[:, None]
    crit = varimax_criterion(a)
    trace = [crit]
    for _ in range(max_sweeps):
        for i in range(k - 1):
            for j in range(i + 1, k):
                theta = _pair_angle(a[:, i], a[:, j])
                if theta == 0.0:
                    continue
                c, s = math.cos(theta), math.sin(theta)
                g = np.array([[c, -s], [s, c]])
                a[:, [i, j]] = a[:, [i, j]] @ g
                rot[:, [i, j]] = rot[:, [i, j]] @ g
        new = varimax_criterion(a)
        trace.append(new)
        if new - crit < tol:
            break
        crit = new
    else:
        raise ConvergenceError(
            f"varimax did not converge in {max_sweeps} sweeps (criterion {trace[-1]!r})", trace
        )
    rotated = np.asarray(loadings, dtype=np.float64) @ rot
    return rotated, rot, trace


def varimax(loadings, kaiser: bool = True, tol: float = 1e-8, max_sweeps: int = 1000):
    """Varimax-rotate ``loadings``; returns ``(rotated, rotation)``."""
    rotated, rot, _ = varimax_sweeps(loadings, kaiser, tol, max_sweeps)
    return rotated, rot


def _orient(loadings, rotation=None):
    """Order columns by explained variance and make each column's largest
    |loading| positive. Applies the same permutation/signs to ``rotation``."""
    k = loadings.shape[1]
    if k == 0:
        return loadings, rotation
    explained = (loadings ** 2).sum(axis=0)
    order = np.argsort(-explained, kind="stable")
    loadings = loadings[:, order]
    signs = np.sign(loadings[np.argmax(np.abs(loadings), axis=0), np.arange(k)])
    signs[signs == 0] = 1.0
    loadings = loadings * signs
    if rotation is not None:
        rotation = rotation[:, order] * signs
    return loadings, rotation


def _as_corr(corr):
    if isinstance(corr, CorrelationMatrix):
        return list(corr.names), corr.values
    arr = np.asarray(corr, dtype=np.float64)
    return [f"v{i + 1}" for i in range(arr.shape[0])], arr


def factor_analysis(corr, n_factors: Optional[int] = None, kaiser: bool = True,
                    rotate: bool = True, transform: bool = True) -> FactorModel:
    """Principal-component factors of a correlation matrix.

    Factors with eigenvalue strictly above 1 are retained unless
    ``n_factors`` fixes the count. ``transform`` only records whether the
    correlation came from log(x+1) data, for :func:`factor_scores`.
    """
    names, r = _as_corr(corr)
    p = r.shape[0]
    if r.shape != (p, p) or not np.allclose(r, r.T, atol=1e-12):
        raise ValidationError("correlation matrix must be square and symmetric")
    if np.isnan(r).any():
        raise ValidationError("correlation matrix contains NA entries")
    vals, vecs = np.linalg.eigh(r)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    if p and vals[-1] < PSD_TOLERANCE:
        raise ValidationError(f"correlation matrix is not positive semi-definite (eigenvalue {vals[-1]!r})")
    if n_factors is None:
        k = int(np.count_nonzero(vals > 1.0))
    else:
        k = int(n_factors)
        if not 0 <= k <= p:
            raise ValidationError(f"n_factors must lie in [0, {p}], got {n_factors}")
    unrotated = vecs[:, :k] * np.sqrt(np.clip(vals[:k], 0.0, None))
    unrotated, _ = _orient(unrotated)
    trace = []
    if rotate and k >= 2:
        rotated, rot, trace = varimax_sweeps(unrotated, kaiser=kaiser)
        rotated, rot = _orient(rotated, rot)
    else:
        rotated, rot = unrotated.copy(), np.eye(k)
    uniqueness = 1.0 - (rotated ** 2).sum(axis=1)
    return FactorModel(names, vals, k, unrotated, rotated, uniqueness, rot, r, transform, trace)


def factor_scores(model: FactorModel, data, ridge: float = 0.0) -> np.ndarray:
    """Regression-method scores: standardized data @ inv(corr) @ rotated loadings.

    ``data`` provides the model's variables (matrix, mapping, or 2-D array in
    variable order); it is log-transformed when the model was fit that way.
    """
    cols = transformed_columns(data, model.variables, model.transform)
    z = np.column_stack(cols) if cols else np.zeros((0, 0))
    if np.isnan(z).any():
        raise ValidationError("factor scores need complete data (NA present)")
    sd = z.std(axis=0, ddof=1)
    if (sd == 0).any():
        bad = [model.variables[i] for i in np.flatnonzero(sd == 0)]
        raise ValidationError(f"zero-variance variable(s) {bad}")
    z = (z - z.mean(axis=0)) / sd
    r = model.corr + ridge * np.eye(model.corr.shape[0])
    if np.linalg.cond(r) > 1e12:
        raise ValidationError("correlation matrix is singular; pass a small ridge (e.g. 1e-8)")
    weights = np.linalg.solve(r, model.rotated)
    return z @ weights


def fit_from_data(data, variables: Sequence[str], n_factors: Optional[int] = None,
                  transform: bool = True, kaiser: bool = True) -> FactorModel:
    """Factor model on the Pearson correlation of (log-transformed) columns."""
    corr = correlation_matrix(data, variables, transform=transform, method="pearson")
    return factor_analysis(corr, n_factors=n_factors, kaiser=kaiser, transform=transform)
